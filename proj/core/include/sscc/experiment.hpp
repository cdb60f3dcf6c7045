#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sscc/cascade.hpp"
#include "sscc/classify.hpp"
#include "sscc/presets.hpp"

namespace sscc {

/// One robustness grid: noise fractions x kernels x seeds, each cell fitted
/// on a corrupted copy of the train split and scored on the pristine test
/// split of the same seed.
struct ExperimentSpec {
    std::vector<double> noise_fractions = {0.0, 0.1, 0.2, 0.3};
    std::vector<ClusterAlgo> algorithms = {ClusterAlgo::kmeans, ClusterAlgo::kmedoids};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::optional<Preset> preset;  // when set, lambdas come from the preset per cell
    Hyperparameters base;          // engine settings, and lambdas when no preset
    double test_fraction = 0.10;
    bool stratified = true;
    bool save_models = true;
    std::string out_dir;  // empty = no files written
};

struct CellResult {
    double noise_fraction = 0.0;
    ClusterAlgo algorithm = ClusterAlgo::kmeans;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    std::int64_t test_rows = 0;
    std::int64_t removed = 0;
    std::int64_t classes = 0;
    std::string model_file;  // when models are saved
    std::string error;       // non-empty when the cell failed
};

struct ExperimentResult {
    std::vector<CellResult> cells;

    /// Mean accuracy over seeds for one (noise, algorithm) cell; failed
    /// seeds are skipped. Returns false if every seed failed.
    bool cell_mean(double noise_fraction, ClusterAlgo algorithm, double& mean_out,
                   double& spread_out) const;
};

/// Run the grid. Cells are independent and may execute in parallel; every
/// cell derives its random streams from (seed, noise index, algorithm), so
/// results do not depend on scheduling.
ExperimentResult run_experiment(const ExperimentSpec& spec, const Dataset& data);

/// Emit cells.csv (one row per cell), grid.csv (noise rows x kernel columns,
/// mean and spread across seeds) and grid.json under spec.out_dir.
void write_experiment_outputs(const ExperimentResult& result, const ExperimentSpec& spec);

}  // namespace sscc
