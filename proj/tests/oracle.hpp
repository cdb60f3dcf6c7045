// Test-only brute-force evaluators, written directly from the score and
// clustering definitions. They deliberately take different evaluation routes
// than the library (base-2 logs, long double accumulation, exhaustive
// enumeration) so agreement is meaningful.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sscc/types.hpp"

namespace oracle {

using Table = std::vector<std::vector<std::int64_t>>;  // [labels][clusters]

inline long double completeness(const Table& counts) {
    long double total = 0.0L;
    for (const auto& row : counts)
        for (const std::int64_t v : row) total += static_cast<long double>(v);

    long double h_cond = 0.0L;   // H(K|C)
    long double h_joint = 0.0L;  // H(K,C)
    for (const auto& row : counts) {
        long double row_sum = 0.0L;
        for (const std::int64_t v : row) row_sum += static_cast<long double>(v);
        for (const std::int64_t v : row) {
            if (v == 0) continue;
            const long double n = static_cast<long double>(v);
            h_cond -= n / total * log2l(n / row_sum);
            h_joint -= n / total * log2l(n / total);
        }
    }
    if (h_joint == 0.0L) return 1.0L;
    return 1.0L - h_cond / h_joint;
}

inline long double cem_entry(const Table& counts, std::size_t cluster, std::size_t label) {
    const std::int64_t n = counts[label][cluster];
    if (n == 0) return 0.0L;
    long double cluster_sum = 0.0L;
    for (const auto& row : counts) cluster_sum += static_cast<long double>(row[cluster]);
    long double label_sum = 0.0L;
    for (const std::int64_t v : counts[label]) label_sum += static_cast<long double>(v);

    const long double nl = static_cast<long double>(n);
    const long double log_part = log2l(nl + 1.0L) / log2l(label_sum + 1.0L);
    const long double exp_part = expl(nl / label_sum - 1.0L);
    return nl / cluster_sum * (log_part > exp_part ? log_part : exp_part);
}

inline long double silhouette(const sscc::Matrix& points, const std::vector<int>& assign) {
    const std::size_t n = points.rows();
    int k = 0;
    for (const int a : assign) k = a > k ? a : k;
    ++k;

    long double total = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<long double> sum(static_cast<std::size_t>(k), 0.0L);
        std::vector<std::int64_t> cnt(static_cast<std::size_t>(k), 0);
        for (std::size_t j = 0; j < n; ++j) {
            sum[static_cast<std::size_t>(assign[j])] +=
                sqrtl(static_cast<long double>(sscc::squared_distance(points.row(i), points.row(j))));
            ++cnt[static_cast<std::size_t>(assign[j])];
        }
        const auto own = static_cast<std::size_t>(assign[i]);
        if (cnt[own] <= 1) continue;
        const long double a = sum[own] / static_cast<long double>(cnt[own] - 1);
        long double b = std::numeric_limits<long double>::infinity();
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (c == own || cnt[c] == 0) continue;
            const long double mean = sum[c] / static_cast<long double>(cnt[c]);
            if (mean < b) b = mean;
        }
        const long double m = a > b ? a : b;
        if (m > 0.0L) total += (b - a) / m;
    }
    return total / static_cast<long double>(n);
}

/// Exhaustive best k-means objective over every partition of n points into
/// at most k non-empty groups (feasible for tiny n only).
inline double best_kmeans_objective(const sscc::Matrix& points, int k) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    std::vector<int> assign(n, 0);
    double best = std::numeric_limits<double>::infinity();

    const auto evaluate = [&] {
        std::vector<std::vector<double>> centers(static_cast<std::size_t>(k),
                                                 std::vector<double>(d, 0.0));
        std::vector<std::int64_t> sizes(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(assign[i]);
            ++sizes[c];
            for (std::size_t j = 0; j < d; ++j) centers[c][j] += points(i, j);
        }
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (sizes[c] == 0) return;  // only full k-partitions
            for (std::size_t j = 0; j < d; ++j) centers[c][j] /= static_cast<double>(sizes[c]);
        }
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            obj += sscc::squared_distance(points.row(i),
                                          std::span<const double>(centers[static_cast<std::size_t>(assign[i])]));
        if (obj < best) best = obj;
    };

    for (;;) {
        evaluate();
        std::size_t pos = 0;
        while (pos < n && assign[pos] == k - 1) assign[pos++] = 0;
        if (pos == n) break;
        ++assign[pos];
    }
    return best;
}

/// Exhaustive best k-medoids cost over every k-subset of points as medoids.
inline double best_kmedoids_cost(const sscc::Matrix& points, int k) {
    const std::size_t n = points.rows();
    std::vector<std::size_t> medoids(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < medoids.size(); ++i) medoids[i] = i;
    double best = std::numeric_limits<double>::infinity();

    const auto evaluate = [&] {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const std::size_t m : medoids)
                nearest = std::min(nearest,
                                   std::sqrt(sscc::squared_distance(points.row(i), points.row(m))));
            cost += nearest;
        }
        best = std::min(best, cost);
    };

    for (;;) {
        evaluate();
        bool advanced = false;
        std::size_t i = medoids.size();
        while (i-- > 0) {
            if (medoids[i] < n - (medoids.size() - 1 - i) - 1) {
                ++medoids[i];
                for (std::size_t j = i + 1; j < medoids.size(); ++j) medoids[j] = medoids[j - 1] + 1;
                advanced = true;
                break;
            }
        }
        if (!advanced) break;
    }
    return best;
}

}  // namespace oracle
