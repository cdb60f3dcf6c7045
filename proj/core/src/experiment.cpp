#include "sscc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sscc/parallel.hpp"
#include "sscc/rng.hpp"

namespace sscc {

namespace {

std::string noise_tag(double fraction) {
    const int pct = static_cast<int>(std::lround(fraction * 100.0));
    return std::to_string(pct);
}

std::string format_accuracy(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

bool ExperimentResult::cell_mean(double noise_fraction, ClusterAlgo algorithm, double& mean_out,
                                 double& spread_out) const {
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (const CellResult& c : cells) {
        if (c.algorithm != algorithm || c.noise_fraction != noise_fraction || !c.error.empty())
            continue;
        sum += c.accuracy;
        sum_sq += c.accuracy * c.accuracy;
        ++n;
    }
    if (n == 0) return false;
    mean_out = sum / static_cast<double>(n);
    const double var = std::max(sum_sq / static_cast<double>(n) - mean_out * mean_out, 0.0);
    spread_out = std::sqrt(var);
    return true;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const Dataset& data) {
    if (spec.noise_fractions.empty()) throw InputError("experiment: empty noise fraction list");
    if (spec.algorithms.empty()) throw InputError("experiment: empty algorithm list");
    if (spec.seeds.empty()) throw InputError("experiment: need at least one seed");
    for (const double f : spec.noise_fractions)
        if (!(f >= 0.0 && f < 1.0))
            throw InputError("experiment: noise fractions must be in [0, 1)");

    if (!spec.out_dir.empty()) std::filesystem::create_directories(spec.out_dir);

    struct Cell {
        std::size_t noise_idx, algo_idx, seed_idx;
    };
    std::vector<Cell> grid;
    for (std::size_t a = 0; a < spec.algorithms.size(); ++a)
        for (std::size_t f = 0; f < spec.noise_fractions.size(); ++f)
            for (std::size_t s = 0; s < spec.seeds.size(); ++s) grid.push_back({f, a, s});

    // Pristine labels by row id, to assert the test split stays uncorrupted.
    std::unordered_map<std::int64_t, int> pristine;
    for (std::size_t r = 0; r < data.n_rows(); ++r) pristine[data.row_ids[r]] = data.labels[r];

    ExperimentResult result;
    result.cells.resize(grid.size());

    parallel_for(grid.size(), [&](std::size_t g) {
        const Cell& cell = grid[g];
        const double noise = spec.noise_fractions[cell.noise_idx];
        const ClusterAlgo algo = spec.algorithms[cell.algo_idx];
        const std::uint64_t seed = spec.seeds[cell.seed_idx];

        CellResult& out = result.cells[g];
        out.noise_fraction = noise;
        out.algorithm = algo;
        out.seed = seed;
        try {
            // The split depends on the seed only, so the test set is the
            // same across noise levels and kernels for a given seed.
            SplitResult split = train_test_split(data, spec.test_fraction, seed, spec.stratified);

            for (std::size_t i = 0; i < split.test.n_rows(); ++i)
                if (pristine.at(split.test.row_ids[i]) != split.test.labels[i])
                    throw InvariantError("experiment: test labels diverged from the pristine file");

            Dataset train = std::move(split.train);
            if (noise > 0.0) {
                NoiseSpec noise_spec;
                noise_spec.fraction = noise;
                noise_spec.seed = derive_seed(seed, cell.noise_idx, 0xc0ffee);
                train = inject_label_noise(train, noise_spec).first;
            }

            Hyperparameters hp = spec.base;
            if (spec.preset) {
                const Hyperparameters lambdas = preset_hyperparameters(*spec.preset, algo, noise);
                hp.lambda_cem = lambdas.lambda_cem;
                hp.lambda_cs = lambdas.lambda_cs;
                hp.lambda_ol = lambdas.lambda_ol;
            }
            hp.algorithm = algo;
            hp.seed = derive_seed(seed, cell.noise_idx, cell.algo_idx);

            FitResult fitted = fit(train, hp);
            const std::vector<Classification> predictions = classify_batch(split.test, fitted.tree);
            const AccuracyReport report =
                evaluate_accuracy(predictions, split.test.labels, fitted.tree);

            out.accuracy = report.accuracy;
            out.test_rows = static_cast<std::int64_t>(split.test.n_rows());
            out.removed = static_cast<std::int64_t>(fitted.tree.removed_total.size());
            out.classes = static_cast<std::int64_t>(fitted.tree.classes.size());

            if (spec.save_models && !spec.out_dir.empty()) {
                std::ostringstream name;
                name << "model_" << to_string(algo) << "_noise" << noise_tag(noise) << "_seed"
                     << seed << ".json";
                const std::filesystem::path path = std::filesystem::path(spec.out_dir) / name.str();
                save_model(fitted.tree, path.string());
                out.model_file = path.string();
            }
        } catch (const std::exception& e) {
            out.error = e.what();  // partial failures stay in the grid
        }
    });

    return result;
}

void write_experiment_outputs(const ExperimentResult& result, const ExperimentSpec& spec) {
    if (spec.out_dir.empty()) throw InputError("experiment: no output directory configured");
    std::filesystem::create_directories(spec.out_dir);
    const std::filesystem::path dir(spec.out_dir);

    {
        std::ofstream cells(dir / "cells.csv");
        cells << "noise_pct,algorithm,seed,accuracy,test_rows,removed,classes,error\n";
        for (const CellResult& c : result.cells) {
            cells << noise_tag(c.noise_fraction) << ',' << to_string(c.algorithm) << ',' << c.seed
                  << ',' << (c.error.empty() ? format_accuracy(c.accuracy) : "") << ','
                  << c.test_rows << ',' << c.removed << ',' << c.classes << ',' << c.error << '\n';
        }
    }

    {
        // Table-3 layout: one row per noise level, one column pair per kernel.
        std::ofstream grid(dir / "grid.csv");
        grid << "noise_pct";
        for (const ClusterAlgo algo : spec.algorithms)
            grid << ',' << to_string(algo) << "_mean," << to_string(algo) << "_spread";
        grid << '\n';
        for (const double noise : spec.noise_fractions) {
            grid << noise_tag(noise);
            for (const ClusterAlgo algo : spec.algorithms) {
                double mean = 0.0, spread = 0.0;
                if (result.cell_mean(noise, algo, mean, spread))
                    grid << ',' << format_accuracy(mean) << ',' << format_accuracy(spread);
                else
                    grid << ",,";
            }
            grid << '\n';
        }
    }

    {
        nlohmann::ordered_json j;
        j["test_fraction"] = spec.test_fraction;
        j["stratified"] = spec.stratified;
        j["preset"] = spec.preset ? to_string(*spec.preset) : "";
        nlohmann::ordered_json cells = nlohmann::ordered_json::array();
        for (const CellResult& c : result.cells) {
            nlohmann::ordered_json cj;
            cj["noise_pct"] = noise_tag(c.noise_fraction);
            cj["algorithm"] = to_string(c.algorithm);
            cj["seed"] = c.seed;
            if (c.error.empty()) {
                cj["accuracy"] = c.accuracy;
                cj["test_rows"] = c.test_rows;
                cj["removed"] = c.removed;
                cj["classes"] = c.classes;
                if (!c.model_file.empty()) cj["model_file"] = c.model_file;
            } else {
                cj["error"] = c.error;
            }
            cells.push_back(std::move(cj));
        }
        j["cells"] = std::move(cells);
        std::ofstream out(dir / "grid.json");
        out << j.dump(2) << '\n';
    }
}

}  // namespace sscc
