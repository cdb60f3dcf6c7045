#include "sscc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sscc/rng.hpp"

namespace sscc {

namespace {

Matrix pairwise_distances(const Matrix& points) {
    const std::size_t n = points.rows();
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = std::sqrt(squared_distance(points.row(i), points.row(j)));
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

/// Nearest center per point, ties toward the lowest cluster index.
void assign_nearest(const Matrix& points, const Matrix& centers, std::vector<int>& out) {
    const std::size_t n = points.rows();
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.rows(); ++c) {
            const double d = squared_distance(points.row(i), centers.row(c));
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        out[i] = best;
    }
}

double kmeans_objective(const Matrix& points, const Matrix& centers, const std::vector<int>& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i)
        s += squared_distance(points.row(i), centers.row(static_cast<std::size_t>(a[i])));
    return s;
}

Matrix kmeanspp_init(const Matrix& points, int k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centers(static_cast<std::size_t>(k), points.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    std::size_t first = rng.uniform_index(n);
    std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points.row(i), centers.row(c - 1)));
            total += d2[i];
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.uniform_index(n);  // all remaining points coincide with a center
        } else {
            const double r = rng.next_double() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > r) {
                    pick = i;
                    break;
                }
            }
        }
        std::copy(points.row(pick).begin(), points.row(pick).end(), centers.row(c).begin());
    }
    return centers;
}

/// Move each empty cluster's center onto the point currently farthest from
/// its assigned center, then reassign. Returns true if a repair happened.
bool repair_empty_clusters(const Matrix& points, Matrix& centers, std::vector<int>& assign, int k) {
    bool repaired = false;
    for (int round = 0; round < k; ++round) {
        std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), 0);
        for (const int a : assign) ++sizes[static_cast<std::size_t>(a)];
        std::vector<std::size_t> empties;
        for (std::size_t c = 0; c < sizes.size(); ++c)
            if (sizes[c] == 0) empties.push_back(c);
        if (empties.empty()) break;
        repaired = true;

        std::vector<bool> taken(points.rows(), false);
        for (const std::size_t c : empties) {
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < points.rows(); ++i) {
                if (taken[i]) continue;
                const double d =
                    squared_distance(points.row(i), centers.row(static_cast<std::size_t>(assign[i])));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            taken[far] = true;
            std::copy(points.row(far).begin(), points.row(far).end(), centers.row(c).begin());
        }
        assign_nearest(points, centers, assign);
    }
    return repaired;
}

struct LloydRun {
    std::vector<int> assignments;
    Matrix centers;
    double objective = 0.0;
};

LloydRun lloyd(const Matrix& points, int k, std::uint64_t seed, int max_iter, double tol,
               std::vector<double>* trace) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    Rng rng(seed);

    LloydRun run;
    run.centers = kmeanspp_init(points, k, rng);
    assign_nearest(points, run.centers, run.assignments);
    repair_empty_clusters(points, run.centers, run.assignments, k);

    double prev_obj = std::numeric_limits<double>::infinity();
    std::vector<int> prev_assign = run.assignments;
    for (int iter = 0; iter < max_iter; ++iter) {
        // Update step: centers become the means of their members.
        Matrix new_centers(static_cast<std::size_t>(k), d);
        std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(run.assignments[i]);
            ++sizes[c];
            for (std::size_t j = 0; j < d; ++j) new_centers(c, j) += points(i, j);
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (sizes[c] > 0) {
                for (std::size_t j = 0; j < d; ++j) new_centers(c, j) /= static_cast<double>(sizes[c]);
            } else {
                // Only reachable on fully degenerate (all-duplicate) input.
                std::copy(run.centers.row(c).begin(), run.centers.row(c).end(),
                          new_centers.row(c).begin());
            }
            shift = std::max(shift,
                             std::sqrt(squared_distance(new_centers.row(c), run.centers.row(c))));
        }
        run.centers = new_centers;

        prev_assign = run.assignments;
        assign_nearest(points, run.centers, run.assignments);
        const bool repaired = repair_empty_clusters(points, run.centers, run.assignments, k);

        run.objective = kmeans_objective(points, run.centers, run.assignments);
        if (trace) trace->push_back(run.objective);
        if (!repaired && run.objective > prev_obj + 1e-9 * (1.0 + prev_obj))
            throw InvariantError("kmeans: objective increased across a Lloyd iteration");
        prev_obj = repaired ? std::numeric_limits<double>::infinity() : run.objective;

        // A stable assignment is an exact fixed point: centers are the means
        // of the current clusters and every point sits with its nearest
        // center, which classification-time traversal depends on.
        if (!repaired && (run.assignments == prev_assign || shift < tol)) break;
    }
    run.objective = kmeans_objective(points, run.centers, run.assignments);
    return run;
}

double silhouette_from_distances(const Matrix& dist, const std::vector<int>& assignments) {
    const std::size_t n = assignments.size();
    std::map<int, std::size_t> cluster_pos;
    for (const int a : assignments) cluster_pos.try_emplace(a, 0);
    std::size_t next = 0;
    for (auto& [id, pos] : cluster_pos) pos = next++;
    const std::size_t k = cluster_pos.size();
    if (k < 2) throw InputError("silhouette: need at least 2 clusters");

    std::vector<std::size_t> compact(n);
    std::vector<std::int64_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        compact[i] = cluster_pos[assignments[i]];
        ++sizes[compact[i]];
    }

    double total = 0.0;
    std::vector<double> sum_to_cluster(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[compact[i]] <= 1) continue;  // singleton contributes 0
        std::fill(sum_to_cluster.begin(), sum_to_cluster.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) sum_to_cluster[compact[j]] += dist(i, j);
        const double a =
            sum_to_cluster[compact[i]] / static_cast<double>(sizes[compact[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
            if (c != compact[i]) b = std::min(b, sum_to_cluster[c] / static_cast<double>(sizes[c]));
        const double m = std::max(a, b);
        if (m > 0.0) total += (b - a) / m;
    }
    return total / static_cast<double>(n);
}

struct PamRun {
    std::vector<std::size_t> medoids;
    std::vector<int> assignments;
    double objective = 0.0;
};

void pam_nearest(const Matrix& dist, const std::vector<std::size_t>& medoids,
                 std::vector<double>& dn, std::vector<double>& ds, std::vector<int>& nearest) {
    const std::size_t n = dist.rows();
    dn.assign(n, std::numeric_limits<double>::infinity());
    ds.assign(n, std::numeric_limits<double>::infinity());
    nearest.assign(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t m = 0; m < medoids.size(); ++m) {
            const double d = dist(j, medoids[m]);
            if (d < dn[j]) {
                ds[j] = dn[j];
                dn[j] = d;
                nearest[j] = static_cast<int>(m);
            } else if (d < ds[j]) {
                ds[j] = d;
            }
        }
    }
}

PamRun pam_fit(const Matrix& dist, int k, int max_iter) {
    const std::size_t n = dist.rows();
    const auto ku = static_cast<std::size_t>(k);
    PamRun run;

    std::vector<bool> is_medoid(n, false);
    auto duplicates_kept_medoid = [&](std::size_t h, std::size_t skip_medoid) {
        for (const std::size_t m : run.medoids)
            if (m != skip_medoid && dist(h, m) == 0.0) return true;
        return false;
    };

    // BUILD: start from the 1-medoid optimum, then greedily add the point
    // with the largest total-distance reduction.
    {
        std::size_t best = 0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            double cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) cost += dist(i, j);
            if (cost < best_cost) {
                best_cost = cost;
                best = j;
            }
        }
        run.medoids.push_back(best);
        is_medoid[best] = true;
    }
    std::vector<double> dn(n), ds(n);
    std::vector<int> nearest(n);
    while (run.medoids.size() < ku) {
        for (std::size_t j = 0; j < n; ++j) dn[j] = dist(j, run.medoids[0]);
        for (std::size_t m = 1; m < run.medoids.size(); ++m)
            for (std::size_t j = 0; j < n; ++j) dn[j] = std::min(dn[j], dist(j, run.medoids[m]));

        std::size_t best = n;
        double best_gain = -1.0;
        for (int pass = 0; pass < 2 && best == n; ++pass) {
            for (std::size_t h = 0; h < n; ++h) {
                if (is_medoid[h]) continue;
                if (pass == 0 && duplicates_kept_medoid(h, n)) continue;  // avoid duplicate medoids
                double gain = 0.0;
                for (std::size_t j = 0; j < n; ++j) gain += std::max(dn[j] - dist(j, h), 0.0);
                if (gain > best_gain) {
                    best_gain = gain;
                    best = h;
                }
            }
        }
        if (best == n) throw InvariantError("kmedoids: BUILD could not select a medoid");
        run.medoids.push_back(best);
        is_medoid[best] = true;
    }

    // SWAP: all (medoid, candidate) deltas per sweep in O(n^2), apply the
    // best strictly improving swap, stop when none improves.
    std::vector<double> delta(ku);
    for (int iter = 0; iter < max_iter; ++iter) {
        pam_nearest(dist, run.medoids, dn, ds, nearest);
        double best_delta = -1e-12;
        std::size_t best_m = ku, best_h = n;
        for (std::size_t h = 0; h < n; ++h) {
            if (is_medoid[h]) continue;
            double shared = 0.0;
            std::fill(delta.begin(), delta.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const double djh = dist(j, h);
                const double capture = std::min(djh - dn[j], 0.0);
                shared += capture;
                // Correction for losing the nearest medoid of j.
                delta[static_cast<std::size_t>(nearest[j])] +=
                    std::min(ds[j], djh) - dn[j] - capture;
            }
            for (std::size_t m = 0; m < ku; ++m) {
                if (duplicates_kept_medoid(h, run.medoids[m])) continue;
                const double total = shared + delta[m];
                if (total < best_delta) {
                    best_delta = total;
                    best_m = m;
                    best_h = h;
                }
            }
        }
        if (best_h == n) break;
        const double before = [&] {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += dn[j];
            return s;
        }();
        is_medoid[run.medoids[best_m]] = false;
        run.medoids[best_m] = best_h;
        is_medoid[best_h] = true;
        pam_nearest(dist, run.medoids, dn, ds, nearest);
        double after = 0.0;
        for (std::size_t j = 0; j < n; ++j) after += dn[j];
        if (after > before + 1e-9 * (1.0 + before))
            throw InvariantError("kmedoids: accepted SWAP increased the total distance");
    }

    pam_nearest(dist, run.medoids, dn, ds, nearest);
    run.assignments.assign(n, 0);
    for (std::size_t j = 0; j < n; ++j) run.assignments[j] = nearest[j];
    for (std::size_t m = 0; m < ku; ++m) run.assignments[run.medoids[m]] = static_cast<int>(m);
    run.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        run.objective += dist(j, run.medoids[static_cast<std::size_t>(run.assignments[j])]);
    return run;
}

void check_fit_args(const Matrix& points, int k) {
    if (k < 1) throw InputError("clustering: k must be >= 1");
    if (points.rows() < static_cast<std::size_t>(k))
        throw InputError("clustering: k exceeds the number of points");
}

}  // namespace

const char* to_string(ClusterAlgo algo) {
    return algo == ClusterAlgo::kmeans ? "kmeans" : "kmedoids";
}

ClusterAlgo parse_cluster_algo(const std::string& name) {
    if (name == "kmeans") return ClusterAlgo::kmeans;
    if (name == "kmedoids") return ClusterAlgo::kmedoids;
    throw InputError("unknown clustering algorithm: " + name);
}

ClusteringResult kmeans_fit(const Matrix& points, int k, const KmeansOptions& options,
                            std::vector<std::vector<double>>* objective_trace) {
    check_fit_args(points, k);
    const int restarts = std::max(options.restarts, 1);

    LloydRun best;
    bool have_best = false;
    for (int r = 0; r < restarts; ++r) {
        std::vector<double> trace;
        LloydRun run = lloyd(points, k, derive_seed(options.seed, static_cast<std::uint64_t>(r)),
                             options.max_iter, options.tol, objective_trace ? &trace : nullptr);
        if (objective_trace) objective_trace->push_back(std::move(trace));
        if (!have_best || run.objective < best.objective) {
            best = std::move(run);
            have_best = true;
        }
    }

    ClusteringResult result;
    result.assignments = std::move(best.assignments);
    result.centers = std::move(best.centers);
    result.k = k;
    result.objective = best.objective;
    result.feature_subset.resize(points.cols());
    for (std::size_t i = 0; i < points.cols(); ++i) result.feature_subset[i] = i;
    if (k >= 2) result.silhouette = silhouette_score(points, result.assignments);
    return result;
}

ClusteringResult kmedoids_fit(const Matrix& points, int k, const KmedoidsOptions& options) {
    check_fit_args(points, k);
    const Matrix dist = pairwise_distances(points);
    PamRun run = pam_fit(dist, k, std::max(options.max_iter, 1));

    ClusteringResult result;
    result.assignments = std::move(run.assignments);
    std::vector<std::size_t> medoid_rows(run.medoids.begin(), run.medoids.end());
    result.centers = points.gather_rows(medoid_rows);
    result.k = k;
    result.objective = run.objective;
    result.feature_subset.resize(points.cols());
    for (std::size_t i = 0; i < points.cols(); ++i) result.feature_subset[i] = i;
    if (k >= 2) result.silhouette = silhouette_from_distances(dist, result.assignments);
    return result;
}

double silhouette_score(const Matrix& points, const std::vector<int>& assignments) {
    if (points.rows() != assignments.size())
        throw InputError("silhouette: points/assignments length mismatch");
    return silhouette_from_distances(pairwise_distances(points), assignments);
}

ClusteringResult best_k_clustering(const Matrix& points, int k_max, ClusterAlgo algorithm,
                                   std::uint64_t seed, int restarts) {
    if (k_max < 2) throw InputError("best_k_clustering: k_max must be >= 2");
    const std::size_t n = points.rows();
    // A silhouette needs at least one non-singleton cluster: k <= n - 1.
    const int k_cap = n >= 3 ? static_cast<int>(n - 1) : 1;
    const int k_eff = std::min(k_max, k_cap);
    if (k_eff < 2)
        throw InputError("best_k_clustering: fewer than 3 rows, no k >= 2 admits a silhouette");

    const Matrix dist = algorithm == ClusterAlgo::kmedoids ? pairwise_distances(points) : Matrix();

    ClusteringResult best;
    bool have_best = false;
    for (int k = 2; k <= k_eff; ++k) {
        ClusteringResult cand;
        if (algorithm == ClusterAlgo::kmeans) {
            KmeansOptions opt;
            opt.seed = derive_seed(seed, static_cast<std::uint64_t>(k));
            opt.restarts = restarts;
            cand = kmeans_fit(points, k, opt);
        } else {
            PamRun run = pam_fit(dist, k, 300);
            cand.assignments = std::move(run.assignments);
            std::vector<std::size_t> medoid_rows(run.medoids.begin(), run.medoids.end());
            cand.centers = points.gather_rows(medoid_rows);
            cand.k = k;
            cand.objective = run.objective;
            cand.feature_subset.resize(points.cols());
            for (std::size_t i = 0; i < points.cols(); ++i) cand.feature_subset[i] = i;
            cand.silhouette = silhouette_from_distances(dist, cand.assignments);
        }
        if (!have_best || cand.silhouette > best.silhouette) {
            best = std::move(cand);
            have_best = true;
        }
    }
    return best;
}

std::string clustering_to_json(const ClusteringResult& result) {
    nlohmann::ordered_json j;
    j["k"] = result.k;
    j["objective"] = result.objective;
    j["silhouette"] = result.silhouette;
    j["feature_subset"] = result.feature_subset;
    j["assignments"] = result.assignments;
    nlohmann::ordered_json centers = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < result.centers.rows(); ++r) {
        auto row = result.centers.row(r);
        centers.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["centers"] = std::move(centers);
    return j.dump(2) + "\n";
}

}  // namespace sscc
