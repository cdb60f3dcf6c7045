#include "sscc/classify.hpp"

#include <cmath>
#include <limits>

namespace sscc {

Classification classify(std::span<const double> x, const CascadeTree& tree,
                        const NoveltyPolicy& policy) {
    if (x.size() != tree.feature_names.size())
        throw InputError("classify: observation has " + std::to_string(x.size()) +
                         " features, model expects " + std::to_string(tree.feature_names.size()));
    for (const double v : x)
        if (!std::isfinite(v)) throw InputError("classify: non-finite input value");

    std::vector<double> normalized(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        normalized[i] = (x[i] - tree.normalization.mean[i]) / tree.normalization.scale[i];

    Classification out;
    if (tree.root_node < 0) {
        out.class_id = tree.root_class;
        return out;
    }

    std::vector<double> projected;
    int current = tree.root_node;
    for (;;) {
        const CascadeNode& node = tree.nodes[static_cast<std::size_t>(current)];
        projected.resize(node.feature_subset.size());
        for (std::size_t i = 0; i < node.feature_subset.size(); ++i)
            projected[i] = normalized[node.feature_subset[i]];

        int best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < node.centers.rows(); ++c) {
            const double d2 = squared_distance(projected, node.centers.row(c));
            if (d2 < best_d2) {
                best_d2 = d2;
                best = static_cast<int>(c);
            }
        }
        const double distance = std::sqrt(best_d2);
        out.path.push_back({node.node_id, best, distance});

        if (policy.enabled &&
            distance > policy.radius_multiplier * node.cluster_radii[static_cast<std::size_t>(best)]) {
            out.novel = true;
            out.novelty_node = node.node_id;
            return out;
        }

        const ChildOutcome& child = node.children[static_cast<std::size_t>(best)];
        if (child.kind == ChildOutcome::Kind::leaf) {
            out.class_id = child.id;
            return out;
        }
        current = child.id;
    }
}

std::vector<Classification> classify_batch(const Matrix& rows, const CascadeTree& tree,
                                           const NoveltyPolicy& policy) {
    if (rows.rows() > 0 && rows.cols() != tree.feature_names.size())
        throw InputError("classify_batch: feature count mismatch");
    std::vector<Classification> out;
    out.reserve(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        try {
            out.push_back(classify(rows.row(r), tree, policy));
        } catch (const Error& e) {
            Classification failed;
            failed.error = true;
            failed.error_message = e.what();
            out.push_back(std::move(failed));
        }
    }
    return out;
}

std::vector<Classification> classify_batch(const Dataset& data, const CascadeTree& tree,
                                           const NoveltyPolicy& policy) {
    return classify_batch(data.features, tree, policy);
}

AccuracyReport evaluate_accuracy(const std::vector<Classification>& predictions,
                                 const std::vector<int>& truth, const CascadeTree& tree,
                                 bool exclude_novel) {
    if (predictions.size() != truth.size())
        throw InputError("evaluate_accuracy: predictions/truth length mismatch");

    AccuracyReport report;
    report.novel_excluded = exclude_novel;
    const std::size_t n_labels = tree.label_names.size();
    report.confusion.assign(n_labels, std::vector<std::int64_t>(n_labels, 0));

    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const Classification& p = predictions[i];
        if (p.error) {
            ++report.errors;
            ++report.evaluated;  // a row that failed cannot be counted correct
            continue;
        }
        if (p.novel) {
            ++report.novel;
            if (!exclude_novel) ++report.evaluated;
            continue;
        }
        const int predicted = tree.classes[static_cast<std::size_t>(p.class_id)].dominant_label;
        ++report.evaluated;
        if (predicted == truth[i]) ++report.correct;
        if (truth[i] >= 0 && static_cast<std::size_t>(truth[i]) < n_labels && predicted >= 0)
            ++report.confusion[static_cast<std::size_t>(truth[i])]
                              [static_cast<std::size_t>(predicted)];
    }
    report.accuracy = report.evaluated > 0
                          ? static_cast<double>(report.correct) / static_cast<double>(report.evaluated)
                          : 0.0;
    return report;
}

}  // namespace sscc
