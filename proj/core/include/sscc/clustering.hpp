#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sscc/types.hpp"

namespace sscc {

enum class ClusterAlgo { kmeans, kmedoids };

const char* to_string(ClusterAlgo algo);
ClusterAlgo parse_cluster_algo(const std::string& name);

/// One fitted clustering of a point set.
///
/// Invariants: assignments cover [0, k) with no empty cluster; for k-means
/// each center is the mean of its members at convergence, for k-medoids each
/// center is an actual member row. Reassigning every point to its nearest
/// center (ties toward the lowest index) reproduces `assignments`; tree
/// traversal at classification time relies on exactly that property.
struct ClusteringResult {
    std::vector<int> assignments;
    Matrix centers;  // k x d
    int k = 0;
    double objective = 0.0;   // kmeans: sum of squared distances; kmedoids: sum of distances
    double silhouette = 0.0;  // 0 when k < 2 (score undefined there)
    std::vector<std::size_t> feature_subset;  // column indices in the parent feature space
};

struct KmeansOptions {
    std::uint64_t seed = 0;
    int restarts = 8;
    int max_iter = 300;
    double tol = 1e-6;  // convergence threshold on the largest center shift
};

struct KmedoidsOptions {
    std::uint64_t seed = 0;  // kept for interface symmetry; BUILD/SWAP is deterministic
    int max_iter = 300;
};

/// Lloyd iterations from k-means++ seeding, best of `restarts` by objective.
/// Empty clusters are repaired by reseeding to the point farthest from its
/// center. When `objective_trace` is given it receives, per restart, the
/// objective after every iteration (used to check monotone descent).
ClusteringResult kmeans_fit(const Matrix& points, int k, const KmeansOptions& options = {},
                            std::vector<std::vector<double>>* objective_trace = nullptr);

/// PAM: greedy BUILD then repeated best-improvement SWAP until no swap
/// reduces the total Euclidean distance (or max_iter swaps were applied).
ClusteringResult kmedoids_fit(const Matrix& points, int k, const KmedoidsOptions& options = {});

/// Mean over points of (b - a) / max(a, b); a point alone in its cluster
/// contributes 0. Requires k >= 2.
double silhouette_score(const Matrix& points, const std::vector<int>& assignments);

/// Fit k = 2..k_max and keep the result with the best silhouette (ties
/// toward smaller k). k_max is lowered to n_rows - 1 when infeasible; fewer
/// than 3 rows is an error since no k >= 2 admits a silhouette.
ClusteringResult best_k_clustering(const Matrix& points, int k_max, ClusterAlgo algorithm,
                                   std::uint64_t seed, int restarts = 8);

/// Diagnostic JSON dump (assignments, centers, k, silhouette, objective).
std::string clustering_to_json(const ClusteringResult& result);

}  // namespace sscc
