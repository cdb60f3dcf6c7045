#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "sscc/classify.hpp"
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

/// Hand-built single-node tree over 3 features: the node splits on features
/// {0, 1} with centers (0,0) and (4,4); feature 2 is never consulted.
CascadeTree toy_tree() {
    CascadeTree tree;
    tree.training_rows = 2;
    tree.normalization.mean = {0.0, 0.0, 0.0};
    tree.normalization.scale = {1.0, 1.0, 1.0};
    tree.feature_names = {"f0", "f1", "f2"};
    tree.label_names = {"a", "b"};
    tree.hyperparameters = blob_hp();

    CascadeNode node;
    node.node_id = 0;
    node.depth = 0;
    node.feature_subset = {0, 1};
    node.k = 2;
    node.centers = Matrix(2, 2);
    node.centers(1, 0) = 4.0;
    node.centers(1, 1) = 4.0;
    node.completeness = 1.0;
    node.cem.label_ids = {0, 1};
    node.cem.values = Matrix(2, 2);
    node.cem.values(0, 0) = 1.0;
    node.cem.values(1, 1) = 1.0;
    node.children = {{ChildOutcome::Kind::leaf, 0}, {ChildOutcome::Kind::leaf, 1}};
    node.cluster_radii = {1.0, 1.0};
    tree.nodes.push_back(node);
    tree.root_node = 0;

    ClassInfo a;
    a.class_id = 0;
    a.size = 1;
    a.dominant_label = 0;
    a.label_composition[0] = 1;
    a.origin_node = 0;
    ClassInfo b = a;
    b.class_id = 1;
    b.dominant_label = 1;
    b.label_composition.clear();
    b.label_composition[1] = 1;
    tree.classes = {a, b};
    tree.validate();
    return tree;
}

}  // namespace

TEST_CASE("classify descends to the nearest center") {
    const CascadeTree tree = toy_tree();

    const Classification at_center = classify(std::vector<double>{0.0, 0.0, 123.0}, tree);
    CHECK(at_center.class_id == 0);
    REQUIRE(at_center.path.size() == 1);
    CHECK(at_center.path[0].distance == 0.0);  // identity case: distance 0 at the final hop

    const Classification other = classify(std::vector<double>{4.2, 3.9, -7.0}, tree);
    CHECK(other.class_id == 1);

    SUBCASE("unused features cannot influence the outcome") {
        const double poison = 1e18;
        const Classification poisoned = classify(std::vector<double>{4.2, 3.9, poison}, tree);
        CHECK(poisoned.class_id == other.class_id);
        CHECK(poisoned.path[0].distance == other.path[0].distance);
    }
    SUBCASE("ties break toward the lowest cluster index") {
        const Classification mid = classify(std::vector<double>{2.0, 2.0, 0.0}, tree);
        CHECK(mid.class_id == 0);
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(classify(std::vector<double>{1.0}, tree), InputError);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(classify(std::vector<double>{nan, 0.0, 0.0}, tree), InputError);
    }
}

TEST_CASE("novelty flag fires beyond the scaled cluster radius") {
    const CascadeTree tree = toy_tree();
    NoveltyPolicy policy;
    policy.enabled = true;
    policy.radius_multiplier = 2.0;

    // radius 1, multiplier 2: a point 10 units out is novel
    const Classification far = classify(std::vector<double>{10.0, 0.0, 0.0}, tree, policy);
    CHECK(far.novel);
    CHECK(far.novelty_node == 0);
    CHECK(far.class_id == -1);

    const Classification near = classify(std::vector<double>{0.5, 0.5, 0.0}, tree, policy);
    CHECK(!near.novel);
    CHECK(near.class_id == 0);

    // policy off: the same far point classifies normally
    const Classification off = classify(std::vector<double>{10.0, 0.0, 0.0}, tree);
    CHECK(!off.novel);
    CHECK(off.class_id == 1);
}

TEST_CASE("every non-removed training row classifies into its fit-time leaf") {
    const Dataset data = testutil::make_blobs(
        {{{0.0, 0.0, 2.0}, 40, 0.6}, {{7.0, 7.0, -1.0}, 40, 0.6}, {{-7.0, 7.0, 0.5}, 40, 0.6}},
        13);
    Dataset noisy = data;
    Rng rng(31);
    for (int i = 0; i < 12; ++i) {  // 10% arbitrary flips
        const std::size_t r = rng.uniform_index(noisy.n_rows());
        noisy.labels[r] = static_cast<int>((noisy.labels[r] + 1) % 3);
    }

    const FitResult result = fit(noisy, blob_hp());
    std::unordered_map<std::int64_t, int> fit_class;
    for (const ClassReport& c : result.report.classes)
        for (const std::int64_t id : c.row_ids) fit_class[id] = c.class_id;

    std::size_t replayed = 0;
    for (std::size_t r = 0; r < noisy.n_rows(); ++r) {
        const auto it = fit_class.find(noisy.row_ids[r]);
        if (it == fit_class.end()) continue;  // removed as noisy
        const Classification c = classify(noisy.features.row(r), result.tree);
        CHECK(c.class_id == it->second);
        ++replayed;
    }
    CHECK(replayed + result.tree.removed_total.size() == noisy.n_rows());

    SUBCASE("paths are root-to-leaf walks") {
        for (std::size_t r = 0; r < 10; ++r) {
            const Classification c = classify(noisy.features.row(r), result.tree);
            REQUIRE(!c.path.empty());
            CHECK(c.path.front().node_id == result.tree.root_node);
            for (std::size_t s = 0; s + 1 < c.path.size(); ++s) {
                const CascadeNode& node =
                    result.tree.nodes[static_cast<std::size_t>(c.path[s].node_id)];
                const ChildOutcome& child =
                    node.children[static_cast<std::size_t>(c.path[s].cluster)];
                REQUIRE(child.kind == ChildOutcome::Kind::subtree);
                CHECK(child.id == c.path[s + 1].node_id);
            }
            const CascadeNode& last =
                result.tree.nodes[static_cast<std::size_t>(c.path.back().node_id)];
            const ChildOutcome& leaf =
                last.children[static_cast<std::size_t>(c.path.back().cluster)];
            CHECK(leaf.kind == ChildOutcome::Kind::leaf);
            CHECK(leaf.id == c.class_id);
        }
    }
}

TEST_CASE("classify_batch collects per-row errors and matches single calls") {
    const CascadeTree tree = toy_tree();

    SUBCASE("empty input, empty output") {
        CHECK(classify_batch(Matrix(0, 3), tree).empty());
    }
    SUBCASE("batch equals element-wise classify") {
        Rng rng(8);
        const Matrix rows = testutil::random_points(20, 3, rng);
        const std::vector<Classification> batch = classify_batch(rows, tree);
        for (std::size_t r = 0; r < rows.rows(); ++r) {
            const Classification single = classify(rows.row(r), tree);
            CHECK(batch[r].class_id == single.class_id);
            CHECK(batch[r].novel == single.novel);
        }
    }
    SUBCASE("one malformed row becomes an error slot") {
        Matrix rows(3, 3);
        rows(1, 1) = std::numeric_limits<double>::quiet_NaN();
        const std::vector<Classification> batch = classify_batch(rows, tree);
        REQUIRE(batch.size() == 3);
        CHECK(!batch[0].error);
        CHECK(batch[1].error);
        CHECK(!batch[1].error_message.empty());
        CHECK(!batch[2].error);
    }
}

TEST_CASE("evaluate_accuracy scores dominant labels against truth") {
    const CascadeTree tree = toy_tree();
    std::vector<Classification> preds(4);
    preds[0].class_id = 0;
    preds[1].class_id = 0;
    preds[2].class_id = 1;
    preds[3].class_id = 1;

    SUBCASE("all match") {
        const AccuracyReport r = evaluate_accuracy(preds, {0, 0, 1, 1}, tree);
        CHECK(r.accuracy == 1.0);
        CHECK(r.confusion[0][0] == 2);
        CHECK(r.confusion[1][1] == 2);
    }
    SUBCASE("half match on 4 rows") {
        const AccuracyReport r = evaluate_accuracy(preds, {0, 1, 0, 1}, tree);
        CHECK(r.accuracy == 0.5);
    }
    SUBCASE("novel rows count as errors unless excluded") {
        preds[3].class_id = -1;
        preds[3].novel = true;
        const AccuracyReport counted = evaluate_accuracy(preds, {0, 0, 1, 1}, tree);
        CHECK(counted.evaluated == 4);
        CHECK(counted.correct == 3);
        CHECK(counted.novel == 1);
        const AccuracyReport excluded = evaluate_accuracy(preds, {0, 0, 1, 1}, tree, true);
        CHECK(excluded.evaluated == 3);
        CHECK(excluded.accuracy == 1.0);
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(evaluate_accuracy(preds, {0, 1}, tree), InputError);
    }
}

TEST_CASE("trivial one-class trees classify everything to that class") {
    Dataset data = testutil::make_blobs({{{0.0, 0.0}, 10, 0.5}}, 4);
    const FitResult result = fit(data, blob_hp());
    const Classification c = classify(std::vector<double>{100.0, -100.0}, result.tree);
    CHECK(c.class_id == 0);
    CHECK(c.path.empty());
}
