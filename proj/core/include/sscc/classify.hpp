#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sscc/cascade.hpp"
#include "sscc/dataset.hpp"

namespace sscc {

/// Optional novelty rule: an observation whose chosen-cluster distance at
/// some node exceeds radius_multiplier times that cluster's fit-time radius
/// is flagged instead of classified. Off by default.
struct NoveltyPolicy {
    bool enabled = false;
    double radius_multiplier = 3.0;
};

struct PathStep {
    int node_id = -1;
    int cluster = -1;
    double distance = 0.0;
};

struct Classification {
    int class_id = -1;  // valid exactly when neither novel nor error
    bool novel = false;
    int novelty_node = -1;
    std::vector<PathStep> path;  // root-to-leaf walk
    bool error = false;
    std::string error_message;
};

/// Classify one observation: normalize with the tree's stored parameters,
/// then descend by nearest center on each node's feature subset (ties toward
/// the lowest cluster index) until a leaf class is reached.
Classification classify(std::span<const double> x, const CascadeTree& tree,
                        const NoveltyPolicy& policy = {});

/// Element-wise classify; per-row failures become error slots instead of
/// aborting the batch.
std::vector<Classification> classify_batch(const Matrix& rows, const CascadeTree& tree,
                                           const NoveltyPolicy& policy = {});
std::vector<Classification> classify_batch(const Dataset& data, const CascadeTree& tree,
                                           const NoveltyPolicy& policy = {});

struct AccuracyReport {
    double accuracy = 0.0;
    std::int64_t correct = 0;
    std::int64_t evaluated = 0;  // denominator used for accuracy
    std::int64_t novel = 0;
    std::int64_t errors = 0;
    bool novel_excluded = false;
    /// confusion[true_label][predicted_label]; novel/error rows excluded.
    std::vector<std::vector<std::int64_t>> confusion;
};

/// Accuracy = fraction of rows whose predicted class's dominant label equals
/// the true label. Novel rows count as errors unless exclude_novel is set,
/// in which case they leave the denominator.
AccuracyReport evaluate_accuracy(const std::vector<Classification>& predictions,
                                 const std::vector<int>& truth, const CascadeTree& tree,
                                 bool exclude_novel = false);

}  // namespace sscc
