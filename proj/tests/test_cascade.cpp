#include <doctest.h>

#include <algorithm>
#include <set>

#include "sscc/cascade.hpp"
#include "sscc/scores.hpp"
#include "sscc/rng.hpp"
#include "testutil.hpp"

using namespace sscc;

namespace {

Hyperparameters blob_hp() {
    Hyperparameters hp;
    hp.lambda_cs = 0.5;
    hp.lambda_cem = 0.8;
    hp.lambda_ol = 0.05;
    hp.seed = 1;
    return hp;
}

/// Two well-separated Gaussian blobs with exactly `flips` labels swapped in
/// each blob (stratified flipping keeps the contingency counts fixed).
Dataset flipped_blobs(std::size_t per_blob, std::size_t flips, std::uint64_t seed) {
    Dataset data = testutil::make_blobs(
        {{{0.0, 0.0}, per_blob, 0.5}, {{8.0, 8.0}, per_blob, 0.5}}, seed);
    Rng rng(derive_seed(seed, 0xf11b));
    for (int label = 0; label < 2; ++label) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < data.n_rows(); ++r)
            if (data.labels[r] == label) rows.push_back(r);
        const std::vector<std::size_t> picked = rng.sample_indices(rows.size(), flips);
        for (const std::size_t p : picked) data.labels[rows[p]] = 1 - label;
    }
    return data;
}

}  // namespace

TEST_CASE("enumerate_feature_subsets orders by size then lexicographically") {
    Hyperparameters hp;
    hp.subset_min_size = 2;
    hp.subset_max_size = 0;

    const auto subsets = enumerate_feature_subsets(3, hp, 0);
    REQUIRE(subsets.size() == 4);
    CHECK(subsets[0] == std::vector<std::size_t>{0, 1});
    CHECK(subsets[1] == std::vector<std::size_t>{0, 2});
    CHECK(subsets[2] == std::vector<std::size_t>{1, 2});
    CHECK(subsets[3] == std::vector<std::size_t>{0, 1, 2});

    SUBCASE("13 features, sizes 2..13") {
        hp.subset_budget = 0;
        CHECK(enumerate_feature_subsets(13, hp, 0).size() == 8178);  // 2^13 - 13 - 1
    }
    SUBCASE("budget sampling keeps the full subset and is deterministic") {
        hp.subset_budget = 10;
        const auto a = enumerate_feature_subsets(13, hp, 42);
        const auto b = enumerate_feature_subsets(13, hp, 42);
        const auto c = enumerate_feature_subsets(13, hp, 43);
        REQUIRE(a.size() == 10);
        CHECK(a == b);
        CHECK(a != c);
        std::vector<std::size_t> full(13);
        for (std::size_t i = 0; i < 13; ++i) full[i] = i;
        CHECK(std::find(a.begin(), a.end(), full) != a.end());
        for (std::size_t i = 1; i < a.size(); ++i) {
            const bool ordered = a[i - 1].size() < a[i].size() ||
                                 (a[i - 1].size() == a[i].size() && a[i - 1] < a[i]);
            CHECK(ordered);
        }
    }
    SUBCASE("empty policy range rejected") {
        hp.subset_min_size = 4;
        hp.subset_max_size = 3;
        CHECK_THROWS_AS(enumerate_feature_subsets(5, hp, 0), InputError);
    }
}

TEST_CASE("evaluate_subset clusters with k capped by the label count") {
    const Dataset blobs = testutil::make_blobs(
        {{{0.0, 0.0, 0.0}, 20, 0.4}, {{9.0, 9.0, 0.0}, 20, 0.4}}, 3);
    Hyperparameters hp = blob_hp();

    const SubsetEvaluation eval =
        evaluate_subset(blobs.features, blobs.labels, {0, 1}, hp, 5);
    CHECK(eval.clustering.k == 2);  // two labels -> k_max = 2 regardless of rows
    CHECK(eval.completeness == 1.0);
    CHECK(eval.clustering.feature_subset == std::vector<std::size_t>{0, 1});

    SUBCASE("uninformative labels score near the balanced-random floor") {
        Dataset shuffled = blobs;
        Rng rng(9);
        // Random labels over one blob's geometry: clustering cannot track
        // them, so completeness sits near 1 - log(K)/log(C*K) (about 0.5 for
        // 2x2), safely below every preset's lambda_cs.
        for (std::size_t r = 0; r < shuffled.n_rows(); ++r)
            shuffled.labels[r] = static_cast<int>(rng.uniform_index(2));
        const SubsetEvaluation noisy =
            evaluate_subset(shuffled.features, shuffled.labels, {2}, hp, 5);
        CHECK(noisy.completeness < 0.65);
        const double replayed = completeness_score(
            contingency(shuffled.labels, noisy.clustering.assignments));
        CHECK(noisy.completeness == replayed);
    }
    SUBCASE("preconditions") {
        const Dataset tiny = blobs.subset({0, 1});
        CHECK_THROWS_AS(evaluate_subset(tiny.features, tiny.labels, {0}, hp, 1), InputError);
        Dataset single = blobs;
        std::fill(single.labels.begin(), single.labels.end(), 0);
        CHECK_THROWS_AS(evaluate_subset(single.features, single.labels, {0}, hp, 1), InputError);
    }
}

TEST_CASE("select_best_subset tie rules") {
    auto eval = [](double cs, std::size_t subset_size, double silhouette, std::size_t index) {
        SubsetEvaluation e;
        e.completeness = cs;
        e.clustering.silhouette = silhouette;
        e.clustering.feature_subset.resize(subset_size);
        e.subset_index = index;
        return e;
    };

    // CS [0.7, 0.9, 0.9] with sizes [2, 4, 2]: the third wins on size.
    CHECK(select_best_subset({eval(0.7, 2, 0.5, 0), eval(0.9, 4, 0.5, 1), eval(0.9, 2, 0.5, 2)}) ==
          2);
    // single candidate
    CHECK(select_best_subset({eval(0.3, 5, 0.1, 0)}) == 0);
    // all equal: first by enumeration order
    CHECK(select_best_subset({eval(0.8, 3, 0.4, 0), eval(0.8, 3, 0.4, 1), eval(0.8, 3, 0.4, 2)}) ==
          0);
    // equal CS and size: higher silhouette
    CHECK(select_best_subset({eval(0.8, 3, 0.4, 0), eval(0.8, 3, 0.9, 1)}) == 1);
    CHECK_THROWS_AS(select_best_subset({}), InputError);
}

TEST_CASE("partition_node applies the threshold rules") {
    // Hand-built winner: cluster 0 holds 9 of label 0 plus 1 of label 1,
    // cluster 1 holds 1 of label 0 plus 4 of label 1. CEM(0, label1) is the
    // 0.04493 example value.
    std::vector<int> labels, assignments;
    for (int i = 0; i < 9; ++i) { labels.push_back(0); assignments.push_back(0); }
    labels.push_back(1); assignments.push_back(0);
    labels.push_back(0); assignments.push_back(1);
    for (int i = 0; i < 4; ++i) { labels.push_back(1); assignments.push_back(1); }

    SubsetEvaluation winner;
    winner.clustering.assignments = assignments;
    winner.clustering.k = 2;
    winner.completeness = 0.9;
    winner.clustering.feature_subset = {0};

    Hyperparameters hp = blob_hp();  // lambda_ol = 0.05, lambda_cem = 0.8

    SUBCASE("low completeness collapses the node") {
        SubsetEvaluation weak = winner;
        weak.completeness = 0.6;
        Hyperparameters strict = hp;
        strict.lambda_cs = 0.9;
        const NodePartition p = partition_node(weak, labels, 0, strict);
        CHECK(p.collapse);
    }
    SUBCASE("sub-lambda_ol cells are removed as noisy") {
        const NodePartition p = partition_node(winner, labels, 0, hp);
        REQUIRE(!p.collapse);
        REQUIRE(p.clusters.size() == 2);
        // the single label-1 row in cluster 0 (entry 0.04493 < 0.05)
        REQUIRE(p.clusters[0].removed_rows.size() == 1);
        CHECK(labels[p.clusters[0].removed_rows[0]] == 1);
        // cluster 1's label-0 row scores (1/5)*max(log2/log11, e^-0.9) = 0.0813, kept
        CHECK(p.clusters[1].removed_rows.empty());
    }
    SUBCASE("cem above lambda_cem designates a class") {
        Hyperparameters lax = hp;
        lax.lambda_cem = 0.85;  // cluster 0 max entry is 0.86423
        const NodePartition p = partition_node(winner, labels, 0, lax);
        CHECK(p.clusters[0].action == ClusterDecision::Action::make_class);
    }
    SUBCASE("forced-leaf guards convert degenerate recursion into leaves") {
        Hyperparameters strict = hp;
        strict.lambda_cem = 0.99;  // nothing qualifies as a class by CEM
        const NodePartition p = partition_node(winner, labels, 0, strict);
        // cluster 0 keeps 9 rows of a single label -> leaf; cluster 1 keeps
        // 5 rows < min_node_rows -> leaf
        CHECK(p.clusters[0].action == ClusterDecision::Action::make_class);
        CHECK(p.clusters[1].action == ClusterDecision::Action::make_class);

        Hyperparameters depth_capped = strict;
        depth_capped.max_depth = 0;
        const NodePartition pd = partition_node(winner, labels, 0, depth_capped);
        CHECK(pd.clusters[0].action == ClusterDecision::Action::make_class);
    }
}

TEST_CASE("fit on separable blobs builds a depth-1 two-class tree") {
    const Dataset blobs = testutil::make_blobs(
        {{{0.0, 0.0}, 25, 0.5}, {{8.0, 8.0}, 25, 0.5}}, 7);
    const FitResult result = fit(blobs, blob_hp());

    CHECK(result.tree.nodes.size() == 1);
    CHECK(result.tree.classes.size() == 2);
    CHECK(result.tree.removed_total.empty());
    CHECK(result.tree.nodes[0].completeness == 1.0);
    CHECK(result.tree.nodes[0].depth == 0);
    const std::set<int> dominants{result.tree.classes[0].dominant_label,
                                  result.tree.classes[1].dominant_label};
    CHECK(dominants == std::set<int>{0, 1});
}

TEST_CASE("fit removes stratified flipped labels via the CEM") {
    const Dataset data = flipped_blobs(50, 5, 3);  // 10% flips per blob
    const FitResult result = fit(data, blob_hp());

    // All ten flipped rows sit in sub-lambda_ol cells: entry 0.0456 < 0.05.
    CHECK(result.tree.removed_total.size() == 10);
    for (const RemovedRow& r : result.tree.removed_total) {
        // a removed row's recorded label disagrees with its blob of origin
        const bool in_first_blob = r.row_id < 50;
        CHECK(r.label == (in_first_blob ? 1 : 0));
    }
    CHECK(result.tree.classes.size() == 2);
}

TEST_CASE("fit conserves rows across classes and removals") {
    const Dataset data = flipped_blobs(40, 4, 11);
    const FitResult result = fit(data, blob_hp());

    std::int64_t class_rows = 0;
    for (const ClassInfo& c : result.tree.classes) class_rows += c.size;
    CHECK(class_rows + static_cast<std::int64_t>(result.tree.removed_total.size()) ==
          static_cast<std::int64_t>(data.n_rows()));

    // report row lists match the class sizes
    for (const ClassReport& c : result.report.classes)
        CHECK(static_cast<std::int64_t>(c.row_ids.size()) ==
              result.tree.classes[static_cast<std::size_t>(c.class_id)].size);

    // every node's k stays within the labels present there
    for (const NodeReport& n : result.report.nodes) CHECK(n.k <= n.labels_at_node);
}

TEST_CASE("fit is deterministic and the model round-trips bit-exactly") {
    const Dataset data = flipped_blobs(30, 3, 19);
    Hyperparameters hp = blob_hp();
    hp.seed = 99;

    const FitResult a = fit(data, hp);
    const FitResult b = fit(data, hp);
    const std::string json_a = model_to_json(a.tree);
    CHECK(json_a == model_to_json(b.tree));

    testutil::TempDir dir;
    save_model(a.tree, dir.file("model.json"));
    const CascadeTree loaded = load_model(dir.file("model.json"));
    CHECK(model_to_json(loaded) == json_a);
    CHECK(testutil::read_file(dir.file("model.json")) == json_a);
}

TEST_CASE("model loading rejects corrupt and invalid files") {
    const Dataset data = testutil::make_blobs(
        {{{0.0, 0.0}, 15, 0.4}, {{7.0, 7.0}, 15, 0.4}}, 2);
    const FitResult result = fit(data, blob_hp());
    const std::string good = model_to_json(result.tree);
    testutil::TempDir dir;

    SUBCASE("truncated file") {
        testutil::write_file(dir.file("truncated.json"), good.substr(0, good.size() / 2));
        CHECK_THROWS_AS(load_model(dir.file("truncated.json")), SchemaError);
    }
    SUBCASE("wrong format marker") {
        std::string wrong = good;
        const auto pos = wrong.find("sscc-model");
        wrong.replace(pos, 10, "not-a-model");
        CHECK_THROWS_AS(model_from_json(wrong), SchemaError);
    }
    SUBCASE("children length diverging from k fails validation") {
        std::string tampered = good;
        const auto pos = tampered.find("\"k\": 2");
        REQUIRE(pos != std::string::npos);
        tampered.replace(pos, 6, "\"k\": 3");
        CHECK_THROWS_AS(model_from_json(tampered), SchemaError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_model(dir.file("absent.json")), InputError); }
}

TEST_CASE("fit handles degenerate inputs") {
    SUBCASE("single-label input yields a trivial one-class tree with a warning") {
        Dataset data = testutil::make_blobs({{{0.0, 0.0}, 12, 0.5}}, 4);
        const FitResult result = fit(data, blob_hp());
        CHECK(result.report.single_label_warning);
        CHECK(result.tree.root_node == -1);
        CHECK(result.tree.root_class == 0);
        CHECK(result.tree.classes.size() == 1);
        CHECK(result.tree.classes[0].size == 12);
    }
    SUBCASE("too few rows") {
        const Dataset two = testutil::make_blobs({{{0.0}, 1, 0.1}, {{5.0}, 1, 0.1}}, 4);
        CHECK_THROWS_AS(fit(two, blob_hp()), InputError);
    }
    SUBCASE("invalid hyperparameters") {
        const Dataset data = testutil::make_blobs({{{0.0}, 5, 0.1}, {{5.0}, 5, 0.1}}, 4);
        Hyperparameters bad = blob_hp();
        bad.lambda_ol = 0.95;  // must stay below lambda_cem
        CHECK_THROWS_AS(fit(data, bad), InputError);
    }
}

TEST_CASE("fit report renders a class table") {
    const Dataset data = flipped_blobs(30, 3, 23);
    const FitResult result = fit(data, blob_hp());
    const std::string table = render_class_table(result.report, result.tree);
    CHECK(table.find("classes: 2") != std::string::npos);
    CHECK(table.find("blob_0") != std::string::npos);
    CHECK(table.find("removed as noisy: 6") != std::string::npos);

    const std::string json = fit_report_to_json(result.report, result.tree);
    CHECK(json.find("\"cs_max\"") != std::string::npos);
    CHECK(json.find("\"winning_subset_names\"") != std::string::npos);
}
