#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sscc/cascade.hpp"

namespace sscc {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kModelFormat = "sscc-model";
constexpr int kSchemaVersion = 1;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, std::size_t expected_cols) {
    if (!j.is_array()) throw SchemaError("model: matrix field is not an array");
    const std::size_t rows = j.size();
    Matrix m(rows, expected_cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != expected_cols)
            throw SchemaError("model: ragged matrix row");
        for (std::size_t c = 0; c < expected_cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

json removed_to_json(const RemovedRow& r, bool with_node) {
    json j;
    j["row_id"] = r.row_id;
    j["label"] = r.label;
    j["cluster"] = r.cluster;
    if (with_node) j["node"] = r.node_id;
    return j;
}

RemovedRow removed_from_json(const json& j, int default_node) {
    RemovedRow r;
    r.row_id = j.at("row_id").get<std::int64_t>();
    r.label = j.at("label").get<int>();
    r.cluster = j.at("cluster").get<int>();
    r.node_id = j.contains("node") ? j.at("node").get<int>() : default_node;
    return r;
}

json contingency_to_json(const ContingencyTable& t) {
    json j;
    j["label_ids"] = t.label_ids;
    j["cluster_ids"] = t.cluster_ids;
    j["counts"] = t.counts;
    j["total"] = t.total;
    return j;
}

json cem_to_json(const CemMatrix& m) {
    json j;
    j["label_ids"] = m.label_ids;
    j["values"] = matrix_to_json(m.values);
    return j;
}

CemMatrix cem_from_json(const json& j) {
    CemMatrix m;
    m.label_ids = j.at("label_ids").get<std::vector<int>>();
    m.values = matrix_from_json(j.at("values"), m.label_ids.size());
    return m;
}

}  // namespace

std::string model_to_json(const CascadeTree& tree) {
    json j;
    j["format"] = kModelFormat;
    j["version"] = kSchemaVersion;
    j["training_rows"] = tree.training_rows;
    j["normalization"] = {{"mean", tree.normalization.mean}, {"scale", tree.normalization.scale}};

    const Hyperparameters& hp = tree.hyperparameters;
    json hp_json;
    hp_json["lambda_cem"] = hp.lambda_cem;
    hp_json["lambda_cs"] = hp.lambda_cs;
    hp_json["lambda_ol"] = hp.lambda_ol;
    hp_json["algorithm"] = to_string(hp.algorithm);
    hp_json["subset_min_size"] = hp.subset_min_size;
    hp_json["subset_max_size"] = hp.subset_max_size;
    hp_json["subset_budget"] = hp.subset_budget;
    hp_json["min_node_rows"] = hp.min_node_rows;
    hp_json["max_depth"] = hp.max_depth;
    hp_json["restarts"] = hp.restarts;
    hp_json["seed"] = hp.seed;
    j["hyperparameters"] = std::move(hp_json);

    j["label_names"] = tree.label_names;
    j["feature_names"] = tree.feature_names;
    j["root_node"] = tree.root_node;
    j["root_class"] = tree.root_class;

    json nodes = json::array();
    for (const CascadeNode& n : tree.nodes) {
        json nj;
        nj["id"] = n.node_id;
        nj["depth"] = n.depth;
        nj["feature_subset"] = n.feature_subset;
        nj["k"] = n.k;
        nj["completeness"] = n.completeness;
        nj["silhouette"] = n.silhouette;
        nj["centers"] = matrix_to_json(n.centers);
        nj["cem"] = cem_to_json(n.cem);
        nj["cluster_radii"] = n.cluster_radii;
        json children = json::array();
        for (const ChildOutcome& c : n.children)
            children.push_back(
                {{"type", c.kind == ChildOutcome::Kind::leaf ? "leaf" : "node"}, {"id", c.id}});
        nj["children"] = std::move(children);
        json removed = json::array();
        for (const RemovedRow& r : n.removed_rows) removed.push_back(removed_to_json(r, false));
        nj["removed"] = std::move(removed);
        nodes.push_back(std::move(nj));
    }
    j["nodes"] = std::move(nodes);

    json classes = json::array();
    for (const ClassInfo& c : tree.classes) {
        json cj;
        cj["id"] = c.class_id;
        cj["size"] = c.size;
        cj["dominant_label"] = c.dominant_label;
        cj["origin_node"] = c.origin_node;
        json comp = json::object();
        for (const auto& [label, count] : c.label_composition) comp[std::to_string(label)] = count;
        cj["composition"] = std::move(comp);
        classes.push_back(std::move(cj));
    }
    j["classes"] = std::move(classes);

    json removed = json::array();
    for (const RemovedRow& r : tree.removed_total) removed.push_back(removed_to_json(r, true));
    j["removed"] = std::move(removed);

    return j.dump(2) + "\n";
}

CascadeTree model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model: corrupt file: ") + e.what());
    }
    try {
        if (!j.contains("format") || j.at("format").get<std::string>() != kModelFormat)
            throw SchemaError("model: not an sscc model file");
        if (j.at("version").get<int>() != kSchemaVersion)
            throw SchemaError("model: unsupported schema version " +
                              j.at("version").dump());

        CascadeTree tree;
        tree.schema_version = kSchemaVersion;
        tree.training_rows = j.at("training_rows").get<std::int64_t>();
        tree.normalization.mean = j.at("normalization").at("mean").get<std::vector<double>>();
        tree.normalization.scale = j.at("normalization").at("scale").get<std::vector<double>>();

        const json& hj = j.at("hyperparameters");
        Hyperparameters& hp = tree.hyperparameters;
        hp.lambda_cem = hj.at("lambda_cem").get<double>();
        hp.lambda_cs = hj.at("lambda_cs").get<double>();
        hp.lambda_ol = hj.at("lambda_ol").get<double>();
        hp.algorithm = parse_cluster_algo(hj.at("algorithm").get<std::string>());
        hp.subset_min_size = hj.at("subset_min_size").get<int>();
        hp.subset_max_size = hj.at("subset_max_size").get<int>();
        hp.subset_budget = hj.at("subset_budget").get<int>();
        hp.min_node_rows = hj.at("min_node_rows").get<int>();
        hp.max_depth = hj.at("max_depth").get<int>();
        hp.restarts = hj.at("restarts").get<int>();
        hp.seed = hj.at("seed").get<std::uint64_t>();

        tree.label_names = j.at("label_names").get<std::vector<std::string>>();
        tree.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        tree.root_node = j.at("root_node").get<int>();
        tree.root_class = j.at("root_class").get<int>();

        for (const json& nj : j.at("nodes")) {
            CascadeNode n;
            n.node_id = nj.at("id").get<int>();
            n.depth = nj.at("depth").get<int>();
            n.feature_subset = nj.at("feature_subset").get<std::vector<std::size_t>>();
            n.k = nj.at("k").get<int>();
            n.completeness = nj.at("completeness").get<double>();
            n.silhouette = nj.at("silhouette").get<double>();
            n.centers = matrix_from_json(nj.at("centers"), n.feature_subset.size());
            n.cem = cem_from_json(nj.at("cem"));
            n.cluster_radii = nj.at("cluster_radii").get<std::vector<double>>();
            for (const json& cj : nj.at("children")) {
                ChildOutcome c;
                const std::string type = cj.at("type").get<std::string>();
                if (type == "leaf")
                    c.kind = ChildOutcome::Kind::leaf;
                else if (type == "node")
                    c.kind = ChildOutcome::Kind::subtree;
                else
                    throw SchemaError("model: unknown child type '" + type + "'");
                c.id = cj.at("id").get<int>();
                n.children.push_back(c);
            }
            for (const json& rj : nj.at("removed"))
                n.removed_rows.push_back(removed_from_json(rj, n.node_id));
            tree.nodes.push_back(std::move(n));
        }

        for (const json& cj : j.at("classes")) {
            ClassInfo c;
            c.class_id = cj.at("id").get<int>();
            c.size = cj.at("size").get<std::int64_t>();
            c.dominant_label = cj.at("dominant_label").get<int>();
            c.origin_node = cj.at("origin_node").get<int>();
            for (const auto& [key, value] : cj.at("composition").items())
                c.label_composition[std::stoi(key)] = value.get<std::int64_t>();
            tree.classes.push_back(std::move(c));
        }

        for (const json& rj : j.at("removed"))
            tree.removed_total.push_back(removed_from_json(rj, -1));

        tree.validate();
        return tree;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model: malformed field: ") + e.what());
    } catch (const InvariantError& e) {
        throw SchemaError(std::string("model: invariant violation: ") + e.what());
    }
}

void save_model(const CascadeTree& tree, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write model file: " + path);
    out << model_to_json(tree);
}

CascadeTree load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return model_from_json(buffer.str());
}

std::string fit_report_to_json(const FitReport& report, const CascadeTree& tree) {
    json j;
    j["training_rows"] = report.training_rows;
    j["single_label_warning"] = report.single_label_warning;
    j["classes_total"] = tree.classes.size();
    j["removed_total"] = report.removals.size();

    json nodes = json::array();
    for (const NodeReport& n : report.nodes) {
        json nj;
        nj["node_id"] = n.node_id;
        nj["depth"] = n.depth;
        nj["rows"] = n.rows;
        nj["labels_at_node"] = n.labels_at_node;
        nj["subsets_evaluated"] = n.subsets_evaluated;
        nj["winning_subset"] = n.winning_subset;
        json names = json::array();
        for (const std::size_t f : n.winning_subset) names.push_back(tree.feature_names[f]);
        nj["winning_subset_names"] = std::move(names);
        nj["k"] = n.k;
        nj["cs_max"] = n.cs_max;
        nj["silhouette"] = n.silhouette;
        nj["collapsed"] = n.collapsed;
        if (n.collapsed) nj["collapsed_class"] = n.collapsed_class;
        nj["contingency"] = contingency_to_json(n.table);
        if (!n.collapsed) nj["cem"] = cem_to_json(n.cem);
        json clusters = json::array();
        for (const ClusterReport& c : n.clusters) {
            json cj;
            cj["cluster"] = c.cluster;
            cj["size"] = c.size;
            cj["removed"] = c.removed;
            cj["action"] = c.action;
            cj["target_id"] = c.target_id;
            cj["cem_max"] = c.cem_max;
            clusters.push_back(std::move(cj));
        }
        nj["clusters"] = std::move(clusters);
        nodes.push_back(std::move(nj));
    }
    j["nodes"] = std::move(nodes);

    json classes = json::array();
    for (const ClassReport& c : report.classes) {
        json cj;
        cj["class_id"] = c.class_id;
        cj["size"] = c.row_ids.size();
        const ClassInfo& info = tree.classes[static_cast<std::size_t>(c.class_id)];
        cj["dominant_label"] =
            info.dominant_label >= 0 ? tree.label_names[static_cast<std::size_t>(info.dominant_label)]
                                     : "";
        cj["row_ids"] = c.row_ids;
        classes.push_back(std::move(cj));
    }
    j["classes"] = std::move(classes);

    json removals = json::array();
    for (const RemovedRow& r : report.removals) removals.push_back(removed_to_json(r, true));
    j["removals"] = std::move(removals);

    return j.dump(2) + "\n";
}

std::string render_class_table(const FitReport& report, const CascadeTree& tree) {
    std::ostringstream out;
    out << "classes: " << tree.classes.size() << "   training rows: " << report.training_rows
        << "   removed as noisy: " << report.removals.size() << "\n\n";
    out << std::left << std::setw(8) << "class" << std::setw(7) << "size" << std::setw(18)
        << "dominant" << "labels\n";
    out << std::string(60, '-') << "\n";
    for (const ClassInfo& c : tree.classes) {
        std::ostringstream comp;
        bool first = true;
        for (const auto& [label, count] : c.label_composition) {
            if (!first) comp << ", ";
            comp << tree.label_names[static_cast<std::size_t>(label)] << ":" << count;
            first = false;
        }
        const std::string dominant =
            c.dominant_label >= 0 ? tree.label_names[static_cast<std::size_t>(c.dominant_label)]
                                  : "-";
        out << std::left << std::setw(8) << ("C" + std::to_string(c.class_id)) << std::setw(7)
            << c.size << std::setw(18) << dominant << comp.str() << "\n";
    }
    if (!report.removals.empty()) {
        out << "\nremoved rows (row_id, label, node, cluster):\n";
        for (const RemovedRow& r : report.removals)
            out << "  " << r.row_id << "  "
                << tree.label_names[static_cast<std::size_t>(r.label)] << "  node " << r.node_id
                << "  cluster " << r.cluster << "\n";
    }
    return out.str();
}

}  // namespace sscc
