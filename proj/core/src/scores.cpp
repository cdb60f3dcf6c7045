#include "sscc/scores.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sscc {

std::int64_t ContingencyTable::label_total(std::size_t label_pos) const {
    std::int64_t s = 0;
    for (const std::int64_t v : counts[label_pos]) s += v;
    return s;
}

std::int64_t ContingencyTable::cluster_total(std::size_t cluster_pos) const {
    std::int64_t s = 0;
    for (const auto& row : counts) s += row[cluster_pos];
    return s;
}

double CemMatrix::cluster_max(std::size_t cluster_pos) const {
    double m = 0.0;
    for (std::size_t c = 0; c < label_count(); ++c) m = std::max(m, values(cluster_pos, c));
    return m;
}

ContingencyTable contingency(const std::vector<int>& labels, const std::vector<int>& assignments) {
    if (labels.size() != assignments.size())
        throw InputError("contingency: labels and assignments differ in length");
    if (labels.empty()) throw InputError("contingency: empty input");

    std::map<int, std::size_t> label_pos;
    std::map<int, std::size_t> cluster_pos;
    for (const int l : labels) label_pos.try_emplace(l, 0);
    for (const int k : assignments) cluster_pos.try_emplace(k, 0);

    ContingencyTable t;
    for (auto& [id, pos] : label_pos) {
        pos = t.label_ids.size();
        t.label_ids.push_back(id);
    }
    for (auto& [id, pos] : cluster_pos) {
        pos = t.cluster_ids.size();
        t.cluster_ids.push_back(id);
    }
    t.counts.assign(t.label_ids.size(), std::vector<std::int64_t>(t.cluster_ids.size(), 0));
    for (std::size_t i = 0; i < labels.size(); ++i)
        ++t.counts[label_pos[labels[i]]][cluster_pos[assignments[i]]];
    t.total = static_cast<std::int64_t>(labels.size());
    return t;
}

double completeness_score(const ContingencyTable& table) {
    if (table.total < 1) throw InputError("completeness_score: empty table");
    const double n_total = static_cast<double>(table.total);

    // H(K|C) and H(K,C) under the 0*log(0) = 0 convention; natural log
    // (both scores are base-invariant, being ratios of entropies).
    double h_cond = 0.0;
    double h_joint = 0.0;
    for (std::size_t c = 0; c < table.label_count(); ++c) {
        const double label_total = static_cast<double>(table.label_total(c));
        for (std::size_t k = 0; k < table.cluster_count(); ++k) {
            const double n = static_cast<double>(table.counts[c][k]);
            if (n <= 0.0) continue;
            h_cond -= n / n_total * std::log(n / label_total);
            h_joint -= n / n_total * std::log(n / n_total);
        }
    }
    if (h_joint == 0.0) return 1.0;
    return 1.0 - h_cond / h_joint;
}

CemMatrix cem(const ContingencyTable& table) {
    if (table.total < 1) throw InputError("cem: empty table");
    const std::size_t n_labels = table.label_count();
    const std::size_t n_clusters = table.cluster_count();

    CemMatrix m;
    m.label_ids = table.label_ids;
    m.values = Matrix(n_clusters, n_labels);

    for (std::size_t k = 0; k < n_clusters; ++k) {
        const double cluster_total = static_cast<double>(table.cluster_total(k));
        if (cluster_total <= 0.0)
            throw InvariantError("cem: empty cluster column (upstream clustering bug)");
        for (std::size_t c = 0; c < n_labels; ++c) {
            const double n = static_cast<double>(table.counts[c][k]);
            if (n <= 0.0) continue;  // leading factor is zero
            const double label_total = static_cast<double>(table.label_total(c));
            const double log_term = std::log(n + 1.0) / std::log(label_total + 1.0);
            const double exp_term = std::exp(n / label_total - 1.0);
            m.values(k, c) = n / cluster_total * std::max(log_term, exp_term);
        }
    }
    return m;
}

}  // namespace sscc
