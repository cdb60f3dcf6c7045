#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sscc/clustering.hpp"
#include "sscc/dataset.hpp"
#include "sscc/scores.hpp"
#include "sscc/types.hpp"

namespace sscc {

/// Thresholds and engine settings for one cascade fit.
///
/// lambda_cs gates whether a level's best clustering is meaningful at all,
/// lambda_cem designates clusters as classes, lambda_ol removes probable
/// noisy-label cells. subset_max_size 0 means "all features".
struct Hyperparameters {
    double lambda_cem = 0.9;
    double lambda_cs = 0.85;
    double lambda_ol = 0.01;
    ClusterAlgo algorithm = ClusterAlgo::kmeans;
    int subset_min_size = 2;
    int subset_max_size = 0;
    int subset_budget = 2000;  // max subsets evaluated per node; 0 = unbounded
    int min_node_rows = 6;
    int max_depth = 10;
    int restarts = 8;
    std::uint64_t seed = 0;

    void validate(std::size_t n_features) const;
};

struct RemovedRow {
    std::int64_t row_id = 0;
    int label = 0;
    int cluster = 0;
    int node_id = -1;
};

/// Per-cluster outcome of a node: a leaf class or a deeper node.
struct ChildOutcome {
    enum class Kind { leaf, subtree };
    Kind kind = Kind::leaf;
    int id = -1;  // class_id or node_id
};

struct CascadeNode {
    int node_id = -1;
    int depth = 0;  // cascade level v
    std::vector<std::size_t> feature_subset;
    int k = 0;
    Matrix centers;  // k x |feature_subset|, in normalized space
    double completeness = 0.0;
    double silhouette = 0.0;
    CemMatrix cem;
    std::vector<ChildOutcome> children;       // one per cluster
    std::vector<RemovedRow> removed_rows;     // judged noisy at this node
    std::vector<double> cluster_radii;        // max member distance to center, per cluster
};

struct ClassInfo {
    int class_id = -1;
    std::int64_t size = 0;
    int dominant_label = -1;
    std::map<int, std::int64_t> label_composition;  // original label code -> count
    int origin_node = -1;                           // node whose cluster became this class
};

/// The fitted model: a tree of nearest-center decisions plus everything a
/// classifier needs (normalization, per-node subsets/centers, leaf classes).
struct CascadeTree {
    int schema_version = 1;
    NormalizationParams normalization;
    Hyperparameters hyperparameters;
    std::int64_t training_rows = 0;
    int root_node = -1;   // -1 when the whole dataset collapsed to one class
    int root_class = -1;  // set only when root_node == -1
    std::vector<CascadeNode> nodes;
    std::vector<ClassInfo> classes;
    std::vector<RemovedRow> removed_total;
    std::vector<std::string> label_names;
    std::vector<std::string> feature_names;

    /// Full structural check: child wiring, class accounting, row
    /// conservation, matrix shapes. Throws InvariantError on any breach.
    void validate() const;
};

/// One subset's evaluation at a node: the silhouette-selected clustering on
/// those columns and its completeness against the node's labels.
struct SubsetEvaluation {
    ClusteringResult clustering;
    double completeness = 0.0;
    std::size_t subset_index = 0;
};

struct ClusterDecision {
    enum class Action { make_class, recurse };
    Action action = Action::make_class;
    std::vector<std::size_t> kept_rows;     // node-local positions, post removal
    std::vector<std::size_t> removed_rows;  // node-local positions judged noisy
};

struct NodePartition {
    bool collapse = false;  // CS_max < lambda_cs: the whole node is one class
    ContingencyTable table;
    CemMatrix cem;
    std::vector<ClusterDecision> clusters;
};

/// All feature subsets with sizes in the policy range, ordered by size then
/// lexicographically. When a budget applies, a seeded uniform sample of that
/// many subsets is returned (still in enumeration order), always keeping the
/// full-feature subset when it is in range.
std::vector<std::vector<std::size_t>> enumerate_feature_subsets(std::size_t n_features,
                                                                const Hyperparameters& hp,
                                                                std::uint64_t seed);

/// Cluster one subset's columns with k_max = distinct labels at the node and
/// score the outcome's completeness.
SubsetEvaluation evaluate_subset(const Matrix& node_points, const std::vector<int>& node_labels,
                                 const std::vector<std::size_t>& subset, const Hyperparameters& hp,
                                 std::uint64_t seed);

/// Position of the winner: max completeness, ties toward fewer features,
/// then higher silhouette, then enumeration order.
std::size_t select_best_subset(const std::vector<SubsetEvaluation>& evaluations);

/// Apply the CEM decision rules to the winning clustering: collapse the node
/// when CS_max is below lambda_cs; otherwise remove sub-lambda_ol cells as
/// noisy, then designate each cluster a class (any entry >= lambda_cem, or a
/// forced-leaf guard fires) or queue it for recursion.
NodePartition partition_node(const SubsetEvaluation& winner, const std::vector<int>& node_labels,
                             int depth, const Hyperparameters& hp);

// ---- fit report ----------------------------------------------------------

struct ClusterReport {
    int cluster = 0;
    std::int64_t size = 0;     // before removal
    std::int64_t removed = 0;  // rows judged noisy
    std::string action;        // "class" | "recurse"
    int target_id = -1;        // class_id or node_id
    double cem_max = 0.0;
};

struct NodeReport {
    int node_id = -1;  // -1 for a collapsed level (no tree node created)
    int depth = 0;
    std::int64_t rows = 0;
    int labels_at_node = 0;
    std::size_t subsets_evaluated = 0;
    std::vector<std::size_t> winning_subset;
    int k = 0;
    double cs_max = 0.0;
    double silhouette = 0.0;
    bool collapsed = false;
    int collapsed_class = -1;
    ContingencyTable table;
    CemMatrix cem;
    std::vector<ClusterReport> clusters;
};

struct ClassReport {
    int class_id = -1;
    std::vector<std::int64_t> row_ids;  // fit-time membership
};

struct FitReport {
    std::vector<NodeReport> nodes;
    std::vector<ClassReport> classes;
    std::vector<RemovedRow> removals;
    std::int64_t training_rows = 0;
    bool single_label_warning = false;
};

struct FitResult {
    CascadeTree tree;
    FitReport report;
};

/// Algorithm entry point: normalize once, then recursively
/// enumerate / evaluate / select / partition until every branch terminates.
/// Deterministic for a given (data, hyperparameters).
FitResult fit(const Dataset& train, const Hyperparameters& hp);

// ---- persistence (model_io.cpp) ------------------------------------------

void save_model(const CascadeTree& tree, const std::string& path);
CascadeTree load_model(const std::string& path);
std::string model_to_json(const CascadeTree& tree);
CascadeTree model_from_json(const std::string& text);

std::string fit_report_to_json(const FitReport& report, const CascadeTree& tree);
/// Human-readable class table (one line per class with its label makeup).
std::string render_class_table(const FitReport& report, const CascadeTree& tree);

}  // namespace sscc
