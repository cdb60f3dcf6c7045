// Command-line front end: fit models, classify, corrupt labels, and run the
// noise-robustness experiment grid.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sscc/cascade.hpp"
#include "sscc/classify.hpp"
#include "sscc/dataset.hpp"
#include "sscc/experiment.hpp"
#include "sscc/presets.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;

std::string iso_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

/// Timestamps live here and only here; primary outputs stay byte-identical
/// across reruns with the same arguments.
void write_meta_sidecar(const std::string& primary_path, int argc, char** argv) {
    json meta;
    meta["tool"] = "sscc";
    meta["created_at"] = iso_timestamp();
    std::vector<std::string> args(argv, argv + argc);
    meta["argv"] = args;
    std::ofstream out(primary_path + ".meta.json");
    out << meta.dump(2) << '\n';
}

struct HyperFlags {
    std::string preset;
    std::string algo = "kmeans";
    double lambda_cs = -1.0, lambda_cem = -1.0, lambda_ol = -1.0;
    std::uint64_t seed = 0;
    int subset_min = -1, subset_max = -1, subset_budget = -1;
    int min_node_rows = -1, max_depth = -1, restarts = -1;

    void attach(CLI::App* cmd, bool with_algo = true) {
        cmd->add_option("--preset", preset, "Named threshold preset: coal|ecoli|wine|eucalyptus")
            ->check(CLI::IsMember({"coal", "ecoli", "wine", "eucalyptus"}));
        if (with_algo)
            cmd->add_option("--algo", algo, "Clustering kernel: kmeans|kmedoids")
                ->check(CLI::IsMember({"kmeans", "kmedoids"}));
        cmd->add_option("--lambda-cs", lambda_cs, "Completeness threshold, (0, 1]");
        cmd->add_option("--lambda-cem", lambda_cem, "Class-designation threshold, (0, 1]");
        cmd->add_option("--lambda-ol", lambda_ol, "Outlier-removal threshold, [0, 1)");
        cmd->add_option("--seed", seed, "Random seed");
        cmd->add_option("--subset-min", subset_min, "Smallest feature-subset size");
        cmd->add_option("--subset-max", subset_max, "Largest feature-subset size (0 = all features)");
        cmd->add_option("--subset-budget", subset_budget,
                        "Max subsets evaluated per node (0 = unbounded)");
        cmd->add_option("--min-node-rows", min_node_rows, "Smallest node eligible for recursion");
        cmd->add_option("--max-depth", max_depth, "Deepest cascade level");
        cmd->add_option("--restarts", restarts, "k-means restarts per fit");
    }

    sscc::Hyperparameters resolve(double noise_fraction = 0.0) const {
        sscc::Hyperparameters hp;
        const sscc::ClusterAlgo algorithm = sscc::parse_cluster_algo(algo);
        if (!preset.empty()) {
            hp = sscc::preset_hyperparameters(*sscc::parse_preset(preset), algorithm,
                                              noise_fraction);
        }
        hp.algorithm = algorithm;
        if (lambda_cs >= 0.0) hp.lambda_cs = lambda_cs;
        if (lambda_cem >= 0.0) hp.lambda_cem = lambda_cem;
        if (lambda_ol >= 0.0) hp.lambda_ol = lambda_ol;
        if (subset_min >= 0) hp.subset_min_size = subset_min;
        if (subset_max >= 0) hp.subset_max_size = subset_max;
        if (subset_budget >= 0) hp.subset_budget = subset_budget;
        if (min_node_rows >= 0) hp.min_node_rows = min_node_rows;
        if (max_depth >= 0) hp.max_depth = max_depth;
        if (restarts >= 0) hp.restarts = restarts;
        hp.seed = seed;
        return hp;
    }
};

std::string stem_of(const std::string& path) {
    std::filesystem::path p(path);
    return (p.parent_path() / p.stem()).string();
}

int cmd_fit(const std::string& data_path, const std::string& label_col, const HyperFlags& flags,
            const std::string& out_path, int argc, char** argv) {
    const sscc::Dataset data = sscc::load_csv(data_path, label_col);
    const sscc::Hyperparameters hp = flags.resolve();
    const sscc::FitResult result = sscc::fit(data, hp);
    if (result.report.single_label_warning)
        std::cerr << "warning: single-label input, fitted a trivial one-class model\n";

    sscc::save_model(result.tree, out_path);
    const std::string stem = stem_of(out_path);
    {
        std::ofstream report(stem + ".report.json");
        report << sscc::fit_report_to_json(result.report, result.tree);
    }
    {
        std::ofstream table(stem + ".classes.txt");
        table << sscc::render_class_table(result.report, result.tree);
    }
    write_meta_sidecar(out_path, argc, argv);

    std::cout << "model: " << out_path << "\n"
              << "classes: " << result.tree.classes.size()
              << "  removed: " << result.tree.removed_total.size()
              << "  nodes: " << result.tree.nodes.size() << "\n";
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& label_col, bool with_truth, bool novelty, double radius_mult,
                const std::string& out_path, const std::string& paths_json, int argc, char** argv) {
    const sscc::CascadeTree tree = sscc::load_model(model_path);

    sscc::Matrix features;
    std::vector<std::int64_t> row_ids;
    std::vector<int> truth;
    std::vector<std::string> truth_names;
    if (!label_col.empty()) {
        sscc::Dataset data = sscc::load_csv(data_path, label_col);
        features = std::move(data.features);
        row_ids = std::move(data.row_ids);
        truth = std::move(data.labels);
        truth_names = std::move(data.label_names);
    } else {
        sscc::FeatureFrame frame = sscc::load_features_csv(data_path);
        features = std::move(frame.features);
        row_ids = std::move(frame.row_ids);
    }
    if (features.cols() != tree.feature_names.size())
        throw sscc::InputError("predict: data has " + std::to_string(features.cols()) +
                               " features, model expects " +
                               std::to_string(tree.feature_names.size()));

    sscc::NoveltyPolicy policy;
    policy.enabled = novelty;
    policy.radius_multiplier = radius_mult;
    const std::vector<sscc::Classification> predictions =
        sscc::classify_batch(features, tree, policy);

    std::ofstream out(out_path);
    if (!out) throw sscc::InputError("cannot write " + out_path);
    out << "row_id,predicted_class,dominant_label,novelty_flag,leaf_node_id\n";
    std::size_t errors = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const sscc::Classification& p = predictions[i];
        out << row_ids[i] << ',';
        if (p.error) {
            ++errors;
            out << "ERROR,,0,-1\n";
        } else if (p.novel) {
            out << "NOVEL,,1," << p.novelty_node << '\n';
        } else {
            const sscc::ClassInfo& cls = tree.classes[static_cast<std::size_t>(p.class_id)];
            const int leaf_node = p.path.empty() ? -1 : p.path.back().node_id;
            out << p.class_id << ','
                << (cls.dominant_label >= 0
                        ? tree.label_names[static_cast<std::size_t>(cls.dominant_label)]
                        : "")
                << ",0," << leaf_node << '\n';
        }
    }
    if (errors > 0) std::cerr << "warning: " << errors << " rows failed to classify\n";

    if (!paths_json.empty()) {
        json j = json::array();
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const sscc::Classification& p = predictions[i];
            json pj;
            pj["row_id"] = row_ids[i];
            if (p.error) {
                pj["error"] = p.error_message;
            } else {
                pj["novel"] = p.novel;
                if (p.novel)
                    pj["novelty_node"] = p.novelty_node;
                else
                    pj["class_id"] = p.class_id;
                json steps = json::array();
                for (const sscc::PathStep& s : p.path)
                    steps.push_back(
                        {{"node", s.node_id}, {"cluster", s.cluster}, {"distance", s.distance}});
                pj["path"] = std::move(steps);
            }
            j.push_back(std::move(pj));
        }
        std::ofstream pout(paths_json);
        pout << j.dump(2) << '\n';
    }

    if (with_truth) {
        // Map the prediction-file label coding onto the model's coding.
        std::vector<int> mapped(truth.size(), -1);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const std::string& name = truth_names[static_cast<std::size_t>(truth[i])];
            for (std::size_t l = 0; l < tree.label_names.size(); ++l)
                if (tree.label_names[l] == name) mapped[i] = static_cast<int>(l);
        }
        const sscc::AccuracyReport report = sscc::evaluate_accuracy(predictions, mapped, tree);
        std::cout << "accuracy: " << report.accuracy << "  (" << report.correct << "/"
                  << report.evaluated << ", novel: " << report.novel
                  << ", errors: " << report.errors << ")\n";
        json aj;
        aj["accuracy"] = report.accuracy;
        aj["correct"] = report.correct;
        aj["evaluated"] = report.evaluated;
        aj["novel"] = report.novel;
        aj["errors"] = report.errors;
        aj["confusion"] = report.confusion;
        std::ofstream aout(stem_of(out_path) + ".accuracy.json");
        aout << aj.dump(2) << '\n';
    }

    write_meta_sidecar(out_path, argc, argv);
    return kExitOk;
}

int cmd_noise(const std::string& data_path, const std::string& label_col, double fraction,
              std::uint64_t seed, const std::string& out_path, const std::string& manifest_path,
              int argc, char** argv) {
    const sscc::Dataset data = sscc::load_csv(data_path, label_col);
    sscc::NoiseSpec spec;
    spec.fraction = fraction;
    spec.seed = seed;
    const auto [corrupted, corrupted_ids] = sscc::inject_label_noise(data, spec);

    // Splice the new labels into the original text so untouched cells stay
    // byte-identical (fraction 0 reproduces the input file exactly).
    std::ifstream in(data_path);
    if (!in) throw sscc::InputError("cannot open file: " + data_path);
    std::ofstream out(out_path);
    if (!out) throw sscc::InputError("cannot write " + out_path);

    std::string header;
    std::getline(in, header);
    while (!header.empty() && header.back() == '\r') header.pop_back();
    std::vector<std::string> columns;
    {
        std::stringstream ss(header);
        std::string field;
        while (std::getline(ss, field, ',')) columns.push_back(field);
    }
    std::size_t label_idx = columns.size();
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == label_col) label_idx = i;
    if (label_idx == columns.size()) {
        int idx = -1;
        try {
            idx = std::stoi(label_col);
        } catch (...) {
        }
        if (idx >= 0 && static_cast<std::size_t>(idx) < columns.size())
            label_idx = static_cast<std::size_t>(idx);
    }
    out << header << '\n';

    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        while (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        fields[label_idx] =
            corrupted.label_names[static_cast<std::size_t>(corrupted.labels[row])];
        for (std::size_t i = 0; i < fields.size(); ++i)
            out << fields[i] << (i + 1 < fields.size() ? "," : "");
        out << '\n';
        ++row;
    }

    json manifest;
    manifest["fraction"] = fraction;
    manifest["seed"] = seed;
    manifest["relabeled"] = corrupted_ids.size();
    json rows = json::array();
    for (const std::int64_t id : corrupted_ids) {
        for (std::size_t r = 0; r < data.n_rows(); ++r) {
            if (data.row_ids[r] != id) continue;
            rows.push_back(
                {{"row_id", id},
                 {"original", data.label_names[static_cast<std::size_t>(data.labels[r])]},
                 {"new", corrupted.label_names[static_cast<std::size_t>(corrupted.labels[r])]}});
        }
    }
    manifest["rows"] = std::move(rows);
    const std::string manifest_out =
        manifest_path.empty() ? stem_of(out_path) + ".manifest.json" : manifest_path;
    std::ofstream mout(manifest_out);
    mout << manifest.dump(2) << '\n';

    write_meta_sidecar(out_path, argc, argv);
    std::cout << "relabeled " << corrupted_ids.size() << " of " << data.n_rows() << " rows\n";
    return kExitOk;
}

int cmd_experiment(const std::string& data_path, const std::string& label_col,
                   const HyperFlags& flags, const std::vector<double>& noise_fractions,
                   const std::vector<std::string>& algos, const std::vector<std::uint64_t>& seeds,
                   double test_fraction, bool no_stratify, const std::string& out_dir, int argc,
                   char** argv) {
    const sscc::Dataset data = sscc::load_csv(data_path, label_col);

    sscc::ExperimentSpec spec;
    spec.base = flags.resolve();
    if (!flags.preset.empty()) spec.preset = sscc::parse_preset(flags.preset);
    if (!noise_fractions.empty()) spec.noise_fractions = noise_fractions;
    if (!algos.empty()) {
        spec.algorithms.clear();
        for (const std::string& a : algos) spec.algorithms.push_back(sscc::parse_cluster_algo(a));
    }
    if (!seeds.empty()) spec.seeds = seeds;
    spec.test_fraction = test_fraction;
    spec.stratified = !no_stratify;
    spec.out_dir = out_dir;

    const sscc::ExperimentResult result = sscc::run_experiment(spec, data);
    sscc::write_experiment_outputs(result, spec);
    write_meta_sidecar((std::filesystem::path(out_dir) / "grid.csv").string(), argc, argv);

    std::cout << "noise_pct";
    for (const sscc::ClusterAlgo algo : spec.algorithms) std::cout << '\t' << to_string(algo);
    std::cout << '\n';
    for (const double noise : spec.noise_fractions) {
        std::cout << static_cast<int>(std::lround(noise * 100));
        for (const sscc::ClusterAlgo algo : spec.algorithms) {
            double mean = 0.0, spread = 0.0;
            if (result.cell_mean(noise, algo, mean, spread))
                std::cout << '\t' << mean;
            else
                std::cout << "\t-";
        }
        std::cout << '\n';
    }
    std::size_t failed = 0;
    for (const sscc::CellResult& c : result.cells)
        if (!c.error.empty()) ++failed;
    if (failed > 0) std::cerr << "warning: " << failed << " cells failed; see cells.csv\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-supervised cascaded clustering for noisy-label tabular data"};
    app.require_subcommand(1);

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit a cascade model on labeled data");
    std::string fit_data, fit_label, fit_out = "model.json";
    HyperFlags fit_flags;
    fit_cmd->add_option("--data", fit_data, "Training CSV")->required();
    fit_cmd->add_option("--label-col", fit_label, "Label column (name or index)")->required();
    fit_flags.attach(fit_cmd);
    fit_cmd->add_option("--out", fit_out, "Model output path");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Classify rows with a fitted model");
    std::string pr_model, pr_data, pr_label, pr_out = "predictions.csv", pr_paths;
    bool pr_truth = false, pr_novelty = false;
    double pr_radius = 3.0;
    predict_cmd->add_option("--model", pr_model, "Model JSON")->required();
    predict_cmd->add_option("--data", pr_data, "Input CSV")->required();
    predict_cmd->add_option("--label-col", pr_label,
                            "Label column to strip from the input (required with --truth)");
    predict_cmd->add_flag("--truth", pr_truth, "Score predictions against the label column");
    predict_cmd->add_flag("--novelty", pr_novelty, "Enable the novelty rule");
    predict_cmd->add_option("--radius-mult", pr_radius, "Novelty radius multiplier");
    predict_cmd->add_option("--out", pr_out, "Predictions CSV path");
    predict_cmd->add_option("--paths", pr_paths, "Optional JSON with full traversal paths");

    // noise
    auto* noise_cmd = app.add_subcommand("noise", "Inject uniform label noise into a CSV");
    std::string no_data, no_label, no_out = "noisy.csv", no_manifest;
    double no_fraction = 0.1;
    std::uint64_t no_seed = 0;
    noise_cmd->add_option("--data", no_data, "Input CSV")->required();
    noise_cmd->add_option("--label-col", no_label, "Label column (name or index)")->required();
    noise_cmd->add_option("--fraction", no_fraction, "Fraction of rows to relabel")->required();
    noise_cmd->add_option("--seed", no_seed, "Random seed");
    noise_cmd->add_option("--out", no_out, "Corrupted CSV path");
    noise_cmd->add_option("--manifest", no_manifest, "Manifest JSON path");

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "Noise-robustness grid on one dataset");
    std::string ex_data, ex_label, ex_out = "experiment";
    HyperFlags ex_flags;
    std::vector<double> ex_noise;
    std::vector<std::string> ex_algos;
    std::vector<std::uint64_t> ex_seeds;
    double ex_test_fraction = 0.10;
    bool ex_no_stratify = false;
    exp_cmd->add_option("--data", ex_data, "Input CSV")->required();
    exp_cmd->add_option("--label-col", ex_label, "Label column (name or index)")->required();
    ex_flags.attach(exp_cmd, /*with_algo=*/false);
    exp_cmd->add_option("--algo", ex_algos, "Kernels to run (comma separated)")
        ->delimiter(',')
        ->check(CLI::IsMember({"kmeans", "kmedoids"}));
    exp_cmd->add_option("--noise-fractions", ex_noise, "Noise fractions (comma separated)")
        ->delimiter(',');
    exp_cmd->add_option("--seeds", ex_seeds, "Seeds (comma separated)")->delimiter(',');
    exp_cmd->add_option("--test-fraction", ex_test_fraction, "Test split fraction");
    exp_cmd->add_flag("--no-stratify", ex_no_stratify, "Disable stratified splitting");
    exp_cmd->add_option("--out", ex_out, "Output directory");

    try {
        app.parse(argc, argv);
        if (fit_cmd->parsed())
            return cmd_fit(fit_data, fit_label, fit_flags, fit_out, argc, argv);
        if (predict_cmd->parsed()) {
            if (pr_truth && pr_label.empty())
                throw sscc::InputError("predict: --truth requires --label-col");
            return cmd_predict(pr_model, pr_data, pr_label, pr_truth, pr_novelty, pr_radius,
                               pr_out, pr_paths, argc, argv);
        }
        if (noise_cmd->parsed())
            return cmd_noise(no_data, no_label, no_fraction, no_seed, no_out, no_manifest, argc,
                             argv);
        if (exp_cmd->parsed())
            return cmd_experiment(ex_data, ex_label, ex_flags, ex_noise, ex_algos, ex_seeds,
                                  ex_test_fraction, ex_no_stratify, ex_out, argc, argv);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    } catch (const sscc::InvariantError& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const sscc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return kExitInternal;
    }
}
