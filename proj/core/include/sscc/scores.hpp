#pragma once

#include <cstdint>
#include <vector>

#include "sscc/types.hpp"

namespace sscc {

/// Counts n[c][k] of label c in cluster k for one clustering outcome.
/// Labels with zero rows are dropped, so label_ids lists only the label
/// codes actually present; cluster columns are never empty by construction.
struct ContingencyTable {
    std::vector<std::vector<std::int64_t>> counts;  // [labels][clusters]
    std::vector<int> label_ids;                     // original label codes, ascending
    std::vector<int> cluster_ids;                   // cluster indices, ascending
    std::int64_t total = 0;                         // N

    std::size_t label_count() const { return counts.size(); }
    std::size_t cluster_count() const { return counts.empty() ? 0 : counts[0].size(); }

    std::int64_t label_total(std::size_t label_pos) const;    // sum over clusters
    std::int64_t cluster_total(std::size_t cluster_pos) const;  // sum over labels
};

/// Cluster Evaluation Matrix. Stored clusters-major ([K x C], matching the
/// matrix dimensions it is defined with); all access goes through
/// (cluster, label) pairs so the storage order never leaks.
struct CemMatrix {
    Matrix values;               // K x C
    std::vector<int> label_ids;  // same order as the source table

    std::size_t cluster_count() const { return values.rows(); }
    std::size_t label_count() const { return values.cols(); }

    double at(std::size_t cluster_pos, std::size_t label_pos) const {
        return values(cluster_pos, label_pos);
    }
    /// Largest entry in one cluster's row.
    double cluster_max(std::size_t cluster_pos) const;
};

/// Tabulate labels against cluster assignments (equal-length sequences).
ContingencyTable contingency(const std::vector<int>& labels, const std::vector<int>& assignments);

/// Completeness score in [0, 1]: 1 - H(K|C)/H(K,C), with 1 when the joint
/// entropy is zero. High values mean each label's rows land together.
double completeness_score(const ContingencyTable& table);

/// Cluster Evaluation Matrix entries in [0, 1]:
///   (n/cluster_total) * max(log(n+1)/log(label_total+1), exp(n/label_total - 1))
/// Zero counts give exactly zero via the leading factor.
CemMatrix cem(const ContingencyTable& table);

}  // namespace sscc
