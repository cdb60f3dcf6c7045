#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sscc/types.hpp"

namespace sscc {

/// Labeled tabular data: the unit of ingestion, corruption and splitting.
///
/// Label codes are a contiguous range 0..L-1 indexing label_names, assigned
/// in first-appearance order so that runs are reproducible from the same
/// file. row_ids are stable identifiers that survive subsetting.
struct Dataset {
    Matrix features;                         // n_rows x n_features
    std::vector<int> labels;                 // one code per row
    std::vector<std::string> feature_names;  // n_features entries
    std::vector<std::string> label_names;    // L entries
    std::vector<std::int64_t> row_ids;       // n_rows entries, unique

    std::size_t n_rows() const { return features.rows(); }
    std::size_t n_features() const { return features.cols(); }
    std::size_t n_labels() const { return label_names.size(); }

    /// Rows selected by position, preserving row_ids.
    Dataset subset(const std::vector<std::size_t>& positions) const;

    /// Throws InvariantError if any structural invariant is broken.
    void validate() const;
};

/// Feature-only table for prediction inputs that carry no label column.
struct FeatureFrame {
    Matrix features;
    std::vector<std::string> feature_names;
    std::vector<std::int64_t> row_ids;
};

/// Per-feature centering/scaling constants. scale is always > 0: features
/// with zero variance get scale 1 and become constant 0 after normalization.
struct NormalizationParams {
    std::vector<double> mean;
    std::vector<double> scale;
};

struct NoiseSpec {
    double fraction = 0.0;  // in [0, 1]
    std::uint64_t seed = 0;
};

struct SplitResult {
    Dataset train;
    Dataset test;
};

/// Load a CSV file (UTF-8, header row, comma delimiter, '.' decimals).
/// label_column names the label column by header name, or by 0-based index
/// when it parses as an integer that matches no header. A "__row_id" column
/// produced by save_csv is recognized and restored instead of renumbering.
Dataset load_csv(const std::string& path, const std::string& label_column);

/// Load a CSV file that has no label column (all columns are features).
FeatureFrame load_features_csv(const std::string& path);

/// Re-emit a dataset as CSV with the original header; optionally prepends a
/// "__row_id" column so stable ids survive a save/load round trip.
void save_csv(const Dataset& data, const std::string& path, bool with_row_ids = false);

/// Per-feature mean and population standard deviation.
NormalizationParams fit_normalization(const Dataset& data);

/// (x - mean) / scale per cell; labels and row_ids unchanged.
Dataset apply_normalization(const Dataset& data, const NormalizationParams& params);
Matrix apply_normalization(const Matrix& features, const NormalizationParams& params);

/// Relabel round(fraction * n_rows) distinct rows, chosen uniformly, each to
/// a label drawn uniformly from the other L-1 labels. Returns the corrupted
/// dataset and the affected row_ids (ascending) for ground-truth bookkeeping.
std::pair<Dataset, std::vector<std::int64_t>> inject_label_noise(const Dataset& data,
                                                                 const NoiseSpec& spec);

/// Disjoint train/test partition covering all rows. Stratified mode keeps the
/// per-label proportions within rounding while still hitting the rounded
/// global test size, and never drains a label completely out of train.
SplitResult train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed,
                             bool stratified = true);

}  // namespace sscc
