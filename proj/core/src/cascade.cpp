#include "sscc/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "sscc/parallel.hpp"
#include "sscc/rng.hpp"

namespace sscc {

namespace {

constexpr std::size_t kMaxFeaturesForEnumeration = 62;  // binomial sums stay in uint64

std::uint64_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t result = 1;
    for (std::size_t i = 1; i <= k; ++i) result = result * (n - k + i) / i;
    return result;
}

/// Subset with the given rank within the lexicographic enumeration of
/// size-s combinations of {0..n-1}.
std::vector<std::size_t> unrank_combination(std::size_t n, std::size_t s, std::uint64_t rank) {
    std::vector<std::size_t> out;
    out.reserve(s);
    std::size_t value = 0;
    for (std::size_t pos = 0; pos < s; ++pos) {
        for (; value < n; ++value) {
            const std::uint64_t with_value = binomial(n - 1 - value, s - 1 - pos);
            if (rank < with_value) {
                out.push_back(value);
                ++value;
                break;
            }
            rank -= with_value;
        }
    }
    return out;
}

int distinct_labels(const std::vector<int>& labels) {
    std::set<int> s(labels.begin(), labels.end());
    return static_cast<int>(s.size());
}

int dominant_label_of(const std::map<int, std::int64_t>& composition) {
    int best = -1;
    std::int64_t best_count = -1;
    for (const auto& [label, count] : composition) {
        if (count > best_count) {  // map iterates ascending: ties go to the lowest code
            best_count = count;
            best = label;
        }
    }
    return best;
}

}  // namespace

void Hyperparameters::validate(std::size_t n_features) const {
    if (!(lambda_cem > 0.0 && lambda_cem <= 1.0))
        throw InputError("hyperparameters: lambda_cem must be in (0, 1]");
    if (!(lambda_cs > 0.0 && lambda_cs <= 1.0))
        throw InputError("hyperparameters: lambda_cs must be in (0, 1]");
    if (!(lambda_ol >= 0.0 && lambda_ol < 1.0))
        throw InputError("hyperparameters: lambda_ol must be in [0, 1)");
    if (!(lambda_ol < lambda_cem))
        throw InputError("hyperparameters: lambda_ol must be below lambda_cem");
    if (subset_min_size < 1) throw InputError("hyperparameters: subset_min_size must be >= 1");
    const std::size_t max_size =
        subset_max_size == 0 ? n_features : static_cast<std::size_t>(subset_max_size);
    if (max_size > n_features)
        throw InputError("hyperparameters: subset_max_size exceeds the feature count");
    if (static_cast<std::size_t>(subset_min_size) > max_size)
        throw InputError("hyperparameters: empty subset size range");
    if (subset_budget < 0) throw InputError("hyperparameters: subset_budget must be >= 0");
    if (min_node_rows < 1) throw InputError("hyperparameters: min_node_rows must be >= 1");
    if (max_depth < 0) throw InputError("hyperparameters: max_depth must be >= 0");
    if (restarts < 1) throw InputError("hyperparameters: restarts must be >= 1");
}

void CascadeTree::validate() const {
    if (root_node < 0) {
        if (nodes.size() != 0 || classes.size() != 1 || root_class != 0)
            throw InvariantError("tree: trivial tree must hold exactly one class and no nodes");
    } else {
        if (static_cast<std::size_t>(root_node) >= nodes.size())
            throw InvariantError("tree: root_node out of range");
        if (root_class >= 0) throw InvariantError("tree: both root_node and root_class set");
    }

    std::vector<int> node_refs(nodes.size(), 0);
    std::vector<int> class_refs(classes.size(), 0);
    if (root_node >= 0) ++node_refs[static_cast<std::size_t>(root_node)];
    if (root_class >= 0) ++class_refs[static_cast<std::size_t>(root_class)];

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const CascadeNode& n = nodes[i];
        if (n.node_id != static_cast<int>(i)) throw InvariantError("tree: node_id mismatch");
        if (n.k < 2) throw InvariantError("tree: node with fewer than 2 clusters");
        if (n.children.size() != static_cast<std::size_t>(n.k))
            throw InvariantError("tree: children length differs from k");
        if (n.centers.rows() != static_cast<std::size_t>(n.k) ||
            n.centers.cols() != n.feature_subset.size())
            throw InvariantError("tree: centers shape mismatch");
        if (n.cluster_radii.size() != static_cast<std::size_t>(n.k))
            throw InvariantError("tree: cluster_radii length differs from k");
        for (const double r : n.cluster_radii)
            if (!(r >= 0.0)) throw InvariantError("tree: negative cluster radius");
        if (n.depth > hyperparameters.max_depth) throw InvariantError("tree: depth exceeds max_depth");
        for (const std::size_t f : n.feature_subset)
            if (f >= feature_names.size()) throw InvariantError("tree: feature index out of range");
        if (n.cem.cluster_count() != static_cast<std::size_t>(n.k))
            throw InvariantError("tree: CEM cluster count differs from k");
        for (const ChildOutcome& c : n.children) {
            if (c.kind == ChildOutcome::Kind::leaf) {
                if (c.id < 0 || static_cast<std::size_t>(c.id) >= classes.size())
                    throw InvariantError("tree: leaf references unknown class");
                ++class_refs[static_cast<std::size_t>(c.id)];
            } else {
                if (c.id < 0 || static_cast<std::size_t>(c.id) >= nodes.size())
                    throw InvariantError("tree: child references unknown node");
                if (c.id <= n.node_id)
                    throw InvariantError("tree: child node id not greater than parent (cycle)");
                ++node_refs[static_cast<std::size_t>(c.id)];
            }
        }
    }
    for (std::size_t i = 0; i < node_refs.size(); ++i)
        if (node_refs[i] != 1) throw InvariantError("tree: node not referenced exactly once");
    for (std::size_t i = 0; i < class_refs.size(); ++i)
        if (class_refs[i] != 1) throw InvariantError("tree: class not referenced exactly once");

    std::int64_t accounted = static_cast<std::int64_t>(removed_total.size());
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const ClassInfo& c = classes[i];
        if (c.class_id != static_cast<int>(i)) throw InvariantError("tree: class_id mismatch");
        std::int64_t composition_total = 0;
        for (const auto& [label, count] : c.label_composition) {
            if (label < 0 || static_cast<std::size_t>(label) >= label_names.size())
                throw InvariantError("tree: composition label out of range");
            composition_total += count;
        }
        if (composition_total != c.size) throw InvariantError("tree: class size != composition total");
        if (c.size > 0 && (c.dominant_label < 0 ||
                           static_cast<std::size_t>(c.dominant_label) >= label_names.size()))
            throw InvariantError("tree: dominant label out of range");
        accounted += c.size;
    }
    if (accounted != training_rows)
        throw InvariantError("tree: rows not conserved across classes and removals");
}

std::vector<std::vector<std::size_t>> enumerate_feature_subsets(std::size_t n_features,
                                                                const Hyperparameters& hp,
                                                                std::uint64_t seed) {
    hp.validate(n_features);
    if (n_features > kMaxFeaturesForEnumeration)
        throw InputError("enumerate_feature_subsets: more than 62 features is unsupported");
    const std::size_t min_size = static_cast<std::size_t>(hp.subset_min_size);
    const std::size_t max_size =
        hp.subset_max_size == 0 ? n_features : static_cast<std::size_t>(hp.subset_max_size);

    std::uint64_t total = 0;
    for (std::size_t s = min_size; s <= max_size; ++s) total += binomial(n_features, s);

    const std::uint64_t budget = hp.subset_budget == 0
                                     ? total
                                     : static_cast<std::uint64_t>(hp.subset_budget);

    auto subset_at = [&](std::uint64_t rank) {
        std::size_t s = min_size;
        for (; s < max_size; ++s) {
            const std::uint64_t c = binomial(n_features, s);
            if (rank < c) break;
            rank -= c;
        }
        return unrank_combination(n_features, s, rank);
    };

    std::vector<std::vector<std::size_t>> out;
    if (total <= budget) {
        out.reserve(static_cast<std::size_t>(total));
        for (std::uint64_t g = 0; g < total; ++g) out.push_back(subset_at(g));
        return out;
    }

    // Seeded uniform sample in enumeration order. The full-feature subset is
    // the last rank when it is inside the size range; keep it unconditionally.
    const bool keep_full = max_size == n_features;
    const std::uint64_t pool = keep_full ? total - 1 : total;
    const std::uint64_t draws = keep_full ? budget - 1 : budget;
    Rng rng(derive_seed(seed, 0x737562736574));
    std::vector<std::size_t> picks =
        rng.sample_indices(static_cast<std::size_t>(pool), static_cast<std::size_t>(draws));
    out.reserve(static_cast<std::size_t>(budget));
    for (const std::size_t g : picks) out.push_back(subset_at(g));
    if (keep_full) out.push_back(subset_at(total - 1));
    return out;
}

SubsetEvaluation evaluate_subset(const Matrix& node_points, const std::vector<int>& node_labels,
                                 const std::vector<std::size_t>& subset, const Hyperparameters& hp,
                                 std::uint64_t seed) {
    if (node_points.rows() < 3) throw InputError("evaluate_subset: need at least 3 rows");
    const int labels_here = distinct_labels(node_labels);
    if (labels_here < 2) throw InputError("evaluate_subset: need at least 2 distinct labels");

    const Matrix columns = node_points.gather_cols(subset);
    // The cluster count may not exceed the number of labels present here.
    SubsetEvaluation eval;
    eval.clustering = best_k_clustering(columns, labels_here, hp.algorithm, seed, hp.restarts);
    eval.clustering.feature_subset = subset;
    eval.completeness = completeness_score(contingency(node_labels, eval.clustering.assignments));
    return eval;
}

std::size_t select_best_subset(const std::vector<SubsetEvaluation>& evaluations) {
    if (evaluations.empty()) throw InputError("select_best_subset: no evaluations");
    auto better = [](const SubsetEvaluation& a, const SubsetEvaluation& b) {
        if (a.completeness != b.completeness) return a.completeness > b.completeness;
        const std::size_t sa = a.clustering.feature_subset.size();
        const std::size_t sb = b.clustering.feature_subset.size();
        if (sa != sb) return sa < sb;
        if (a.clustering.silhouette != b.clustering.silhouette)
            return a.clustering.silhouette > b.clustering.silhouette;
        return a.subset_index < b.subset_index;
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < evaluations.size(); ++i)
        if (better(evaluations[i], evaluations[best])) best = i;
    return best;
}

NodePartition partition_node(const SubsetEvaluation& winner, const std::vector<int>& node_labels,
                             int depth, const Hyperparameters& hp) {
    NodePartition part;
    part.table = contingency(node_labels, winner.clustering.assignments);
    if (winner.completeness < hp.lambda_cs) {
        part.collapse = true;
        return part;
    }
    part.cem = cem(part.table);

    std::unordered_map<int, std::size_t> label_pos;
    for (std::size_t c = 0; c < part.table.label_ids.size(); ++c)
        label_pos[part.table.label_ids[c]] = c;

    const auto k = static_cast<std::size_t>(winner.clustering.k);
    part.clusters.resize(k);

    // Removal first, matching the statement order of the per-cluster loop;
    // class designation below uses the CEM as computed, not recomputed.
    for (std::size_t i = 0; i < node_labels.size(); ++i) {
        const auto j = static_cast<std::size_t>(winner.clustering.assignments[i]);
        const std::size_t c = label_pos.at(node_labels[i]);
        if (part.cem.at(j, c) < hp.lambda_ol)
            part.clusters[j].removed_rows.push_back(i);
        else
            part.clusters[j].kept_rows.push_back(i);
    }

    const auto min_rows = static_cast<std::size_t>(std::max(hp.min_node_rows, 3));
    for (std::size_t j = 0; j < k; ++j) {
        ClusterDecision& d = part.clusters[j];
        bool make_class = part.cem.cluster_max(j) >= hp.lambda_cem;
        if (!make_class) {
            // Forced-leaf guards: recursion needs enough rows, label
            // diversity, and remaining depth.
            std::set<int> labels_kept;
            for (const std::size_t i : d.kept_rows) labels_kept.insert(node_labels[i]);
            if (d.kept_rows.size() < min_rows || labels_kept.size() < 2 ||
                depth + 1 > hp.max_depth)
                make_class = true;
        }
        d.action = make_class ? ClusterDecision::Action::make_class
                              : ClusterDecision::Action::recurse;
    }
    return part;
}

namespace {

struct FitContext {
    const Dataset& train;
    const Matrix& normalized;
    const Hyperparameters& hp;
    CascadeTree& tree;
    FitReport& report;
    std::uint64_t node_counter = 0;
};

int make_class(FitContext& ctx, const std::vector<std::size_t>& rows, int origin_node,
               const std::vector<std::size_t>& fallback_rows) {
    ClassInfo info;
    info.class_id = static_cast<int>(ctx.tree.classes.size());
    info.origin_node = origin_node;
    info.size = static_cast<std::int64_t>(rows.size());
    for (const std::size_t r : rows) ++info.label_composition[ctx.train.labels[r]];
    if (!rows.empty()) {
        info.dominant_label = dominant_label_of(info.label_composition);
    } else {
        // Every row of the cluster was removed as noisy; fall back to the
        // pre-removal majority so the class still names a label.
        std::map<int, std::int64_t> fallback;
        for (const std::size_t r : fallback_rows) ++fallback[ctx.train.labels[r]];
        info.dominant_label = dominant_label_of(fallback);
    }

    ClassReport report;
    report.class_id = info.class_id;
    for (const std::size_t r : rows) report.row_ids.push_back(ctx.train.row_ids[r]);

    ctx.tree.classes.push_back(std::move(info));
    ctx.report.classes.push_back(std::move(report));
    return ctx.tree.classes.back().class_id;
}

ChildOutcome build_node(FitContext& ctx, const std::vector<std::size_t>& rows, int depth) {
    const std::uint64_t node_seed = derive_seed(ctx.hp.seed, ctx.node_counter++);
    const Matrix node_points = ctx.normalized.gather_rows(rows);
    std::vector<int> node_labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) node_labels[i] = ctx.train.labels[rows[i]];

    const std::vector<std::vector<std::size_t>> subsets =
        enumerate_feature_subsets(ctx.train.n_features(), ctx.hp, node_seed);

    std::vector<SubsetEvaluation> evaluations(subsets.size());
    parallel_for(subsets.size(), [&](std::size_t i) {
        evaluations[i] = evaluate_subset(node_points, node_labels, subsets[i], ctx.hp,
                                         derive_seed(node_seed, i + 1));
        evaluations[i].subset_index = i;
    });

    const std::size_t winner_pos = select_best_subset(evaluations);
    const SubsetEvaluation& winner = evaluations[winner_pos];
    NodePartition part = partition_node(winner, node_labels, depth, ctx.hp);

    NodeReport node_report;
    node_report.depth = depth;
    node_report.rows = static_cast<std::int64_t>(rows.size());
    node_report.labels_at_node = distinct_labels(node_labels);
    node_report.subsets_evaluated = subsets.size();
    node_report.winning_subset = winner.clustering.feature_subset;
    node_report.k = winner.clustering.k;
    node_report.cs_max = winner.completeness;
    node_report.silhouette = winner.clustering.silhouette;
    node_report.table = part.table;

    if (part.collapse) {
        const int class_id = make_class(ctx, rows, -1, rows);
        node_report.collapsed = true;
        node_report.collapsed_class = class_id;
        ctx.report.nodes.push_back(std::move(node_report));
        return {ChildOutcome::Kind::leaf, class_id};
    }

    const int node_id = static_cast<int>(ctx.tree.nodes.size());
    {
        CascadeNode node;
        node.node_id = node_id;
        node.depth = depth;
        node.feature_subset = winner.clustering.feature_subset;
        node.k = winner.clustering.k;
        node.centers = winner.clustering.centers;
        node.completeness = winner.completeness;
        node.silhouette = winner.clustering.silhouette;
        node.cem = part.cem;
        node.children.resize(static_cast<std::size_t>(node.k));
        node.cluster_radii.assign(static_cast<std::size_t>(node.k), 0.0);
        ctx.tree.nodes.push_back(std::move(node));
    }
    node_report.node_id = node_id;
    node_report.cem = part.cem;

    // Record removals and cluster radii (over the rows the cluster keeps,
    // measured on this node's feature subset in normalized space).
    const Matrix columns = node_points.gather_cols(winner.clustering.feature_subset);
    for (std::size_t j = 0; j < part.clusters.size(); ++j) {
        for (const std::size_t local : part.clusters[j].removed_rows) {
            RemovedRow removed;
            removed.row_id = ctx.train.row_ids[rows[local]];
            removed.label = node_labels[local];
            removed.cluster = static_cast<int>(j);
            removed.node_id = node_id;
            ctx.tree.nodes[static_cast<std::size_t>(node_id)].removed_rows.push_back(removed);
            ctx.tree.removed_total.push_back(removed);
            ctx.report.removals.push_back(removed);
        }
        double radius = 0.0;
        for (const std::size_t local : part.clusters[j].kept_rows) {
            const double d = std::sqrt(squared_distance(
                columns.row(local),
                ctx.tree.nodes[static_cast<std::size_t>(node_id)].centers.row(j)));
            radius = std::max(radius, d);
        }
        ctx.tree.nodes[static_cast<std::size_t>(node_id)].cluster_radii[j] = radius;
    }

    for (std::size_t j = 0; j < part.clusters.size(); ++j) {
        const ClusterDecision& decision = part.clusters[j];
        std::vector<std::size_t> kept_global, all_global;
        kept_global.reserve(decision.kept_rows.size());
        for (const std::size_t local : decision.kept_rows) kept_global.push_back(rows[local]);
        for (const std::size_t local : decision.kept_rows) all_global.push_back(rows[local]);
        for (const std::size_t local : decision.removed_rows) all_global.push_back(rows[local]);

        ClusterReport cluster_report;
        cluster_report.cluster = static_cast<int>(j);
        cluster_report.size = static_cast<std::int64_t>(all_global.size());
        cluster_report.removed = static_cast<std::int64_t>(decision.removed_rows.size());
        cluster_report.cem_max = part.cem.cluster_max(j);

        ChildOutcome outcome;
        if (decision.action == ClusterDecision::Action::make_class) {
            outcome = {ChildOutcome::Kind::leaf, make_class(ctx, kept_global, node_id, all_global)};
            cluster_report.action = "class";
        } else {
            outcome = build_node(ctx, kept_global, depth + 1);
            cluster_report.action = outcome.kind == ChildOutcome::Kind::leaf ? "class" : "recurse";
        }
        cluster_report.target_id = outcome.id;
        ctx.tree.nodes[static_cast<std::size_t>(node_id)].children[j] = outcome;
        node_report.clusters.push_back(cluster_report);
    }

    ctx.report.nodes.push_back(std::move(node_report));
    return {ChildOutcome::Kind::subtree, node_id};
}

}  // namespace

FitResult fit(const Dataset& train, const Hyperparameters& hp) {
    train.validate();
    hp.validate(train.n_features());
    if (train.n_rows() < 3) throw InputError("fit: need at least 3 rows");

    FitResult result;
    CascadeTree& tree = result.tree;
    tree.hyperparameters = hp;
    tree.label_names = train.label_names;
    tree.feature_names = train.feature_names;
    tree.training_rows = static_cast<std::int64_t>(train.n_rows());
    tree.normalization = fit_normalization(train);
    result.report.training_rows = tree.training_rows;

    const Matrix normalized = apply_normalization(train.features, tree.normalization);

    std::vector<std::size_t> all_rows(train.n_rows());
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;

    FitContext ctx{train, normalized, hp, tree, result.report};

    if (distinct_labels(train.labels) < 2) {
        // Single-label input: a trivial one-class tree rather than a failure.
        result.report.single_label_warning = true;
        tree.root_class = make_class(ctx, all_rows, -1, all_rows);
        tree.validate();
        return result;
    }

    const ChildOutcome root = build_node(ctx, all_rows, 0);
    if (root.kind == ChildOutcome::Kind::leaf) {
        tree.root_class = root.id;
    } else {
        tree.root_node = root.id;
    }
    tree.validate();
    return result;
}

}  // namespace sscc
