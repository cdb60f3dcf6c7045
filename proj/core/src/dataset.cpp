#include "sscc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "sscc/rng.hpp"

namespace sscc {

namespace {

constexpr const char* kRowIdColumn = "__row_id";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end && begin != end;
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::int64_t round_half_up(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

}  // namespace

Dataset Dataset::subset(const std::vector<std::size_t>& positions) const {
    Dataset out;
    out.features = features.gather_rows(positions);
    out.feature_names = feature_names;
    out.label_names = label_names;
    out.labels.reserve(positions.size());
    out.row_ids.reserve(positions.size());
    for (const std::size_t p : positions) {
        out.labels.push_back(labels[p]);
        out.row_ids.push_back(row_ids[p]);
    }
    return out;
}

void Dataset::validate() const {
    const std::size_t n = n_rows();
    if (labels.size() != n || row_ids.size() != n)
        throw InvariantError("dataset: ragged labels or row_ids");
    if (feature_names.size() != n_features())
        throw InvariantError("dataset: feature_names length mismatch");
    std::vector<bool> seen(label_names.size(), false);
    for (const int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= label_names.size())
            throw InvariantError("dataset: label code out of range");
        seen[static_cast<std::size_t>(l)] = true;
    }
    std::unordered_set<std::int64_t> ids(row_ids.begin(), row_ids.end());
    if (ids.size() != row_ids.size()) throw InvariantError("dataset: duplicate row_ids");
    for (const double v : features.storage())
        if (!std::isfinite(v)) throw InvariantError("dataset: non-finite feature value");
    (void)seen;  // labels absent after subsetting are allowed; codes stay valid
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line) || line.empty()) throw InputError("empty file: " + path);
    const std::vector<std::string> header = split_csv_line(line);

    // Resolve the label column: name match first, then numeric index.
    std::size_t label_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == label_column) label_idx = i;
    if (label_idx == header.size()) {
        int idx = -1;
        const auto [ptr, ec] =
            std::from_chars(label_column.data(), label_column.data() + label_column.size(), idx);
        if (ec == std::errc{} && ptr == label_column.data() + label_column.size() && idx >= 0 &&
            static_cast<std::size_t>(idx) < header.size())
            label_idx = static_cast<std::size_t>(idx);
    }
    if (label_idx == header.size())
        throw InputError("label column '" + label_column + "' not found in " + path);

    std::size_t row_id_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == kRowIdColumn) row_id_idx = i;
    if (row_id_idx == label_idx) throw InputError("label column cannot be " + std::string(kRowIdColumn));

    Dataset out;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != label_idx && i != row_id_idx) out.feature_names.push_back(header[i]);

    std::unordered_map<std::string, int> label_codes;
    std::vector<double> values;
    std::size_t n_read = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        ++n_read;
        if (fields.size() != header.size())
            throw InputError(path + ": row " + std::to_string(n_read) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == label_idx) {
                const auto [it, inserted] =
                    label_codes.try_emplace(fields[i], static_cast<int>(out.label_names.size()));
                if (inserted) out.label_names.push_back(fields[i]);
                out.labels.push_back(it->second);
            } else if (i == row_id_idx) {
                std::int64_t id = 0;
                const auto [ptr, ec] =
                    std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), id);
                if (ec != std::errc{} || ptr != fields[i].data() + fields[i].size())
                    throw InputError(path + ": row " + std::to_string(n_read) +
                                     ": bad __row_id value '" + fields[i] + "'");
                out.row_ids.push_back(id);
            } else {
                double v = 0.0;
                if (!parse_double(fields[i], v) || !std::isfinite(v))
                    throw InputError(path + ": row " + std::to_string(n_read) + ", column '" +
                                     header[i] + "': non-numeric value '" + fields[i] + "'");
                values.push_back(v);
            }
        }
    }
    if (n_read == 0) throw InputError("no data rows in " + path);

    const std::size_t d = out.feature_names.size();
    out.features = Matrix(n_read, d);
    std::copy(values.begin(), values.end(), out.features.storage().begin());
    if (out.row_ids.empty())
        for (std::size_t i = 0; i < n_read; ++i) out.row_ids.push_back(static_cast<std::int64_t>(i));
    out.validate();
    return out;
}

FeatureFrame load_features_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw InputError("empty file: " + path);
    const std::vector<std::string> header = split_csv_line(line);

    std::size_t row_id_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == kRowIdColumn) row_id_idx = i;

    FeatureFrame out;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != row_id_idx) out.feature_names.push_back(header[i]);

    std::vector<double> values;
    std::size_t n_read = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        ++n_read;
        if (fields.size() != header.size())
            throw InputError(path + ": row " + std::to_string(n_read) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == row_id_idx) {
                std::int64_t id = 0;
                const auto [ptr, ec] =
                    std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), id);
                if (ec != std::errc{} || ptr != fields[i].data() + fields[i].size())
                    throw InputError(path + ": row " + std::to_string(n_read) + ": bad __row_id");
                out.row_ids.push_back(id);
            } else {
                double v = 0.0;
                if (!parse_double(fields[i], v) || !std::isfinite(v))
                    throw InputError(path + ": row " + std::to_string(n_read) + ", column '" +
                                     header[i] + "': non-numeric value '" + fields[i] + "'");
                values.push_back(v);
            }
        }
    }
    if (n_read == 0) throw InputError("no data rows in " + path);
    out.features = Matrix(n_read, out.feature_names.size());
    std::copy(values.begin(), values.end(), out.features.storage().begin());
    if (out.row_ids.empty())
        for (std::size_t i = 0; i < n_read; ++i) out.row_ids.push_back(static_cast<std::int64_t>(i));
    return out;
}

void save_csv(const Dataset& data, const std::string& path, bool with_row_ids) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    if (with_row_ids) out << kRowIdColumn << ',';
    for (const auto& name : data.feature_names) out << name << ',';
    out << "label\n";
    // The label header is only used when the dataset was built in memory;
    // load_csv callers typically re-save with the original header intact.
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        if (with_row_ids) out << data.row_ids[r] << ',';
        for (std::size_t c = 0; c < data.n_features(); ++c) out << format_double(data.features(r, c)) << ',';
        out << data.label_names[static_cast<std::size_t>(data.labels[r])] << '\n';
    }
}

NormalizationParams fit_normalization(const Dataset& data) {
    const std::size_t n = data.n_rows();
    if (n == 0) throw InputError("fit_normalization: empty dataset");
    const std::size_t d = data.n_features();
    NormalizationParams p;
    p.mean.assign(d, 0.0);
    p.scale.assign(d, 1.0);
    for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += data.features(r, c);
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double dv = data.features(r, c) - mean;
            ss += dv * dv;
        }
        const double sigma = std::sqrt(ss / static_cast<double>(n));  // population form
        p.mean[c] = mean;
        p.scale[c] = sigma > 0.0 ? sigma : 1.0;
    }
    return p;
}

Matrix apply_normalization(const Matrix& features, const NormalizationParams& params) {
    if (features.cols() != params.mean.size())
        throw InputError("apply_normalization: feature count mismatch");
    Matrix out = features;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
            out(r, c) = (out(r, c) - params.mean[c]) / params.scale[c];
    return out;
}

Dataset apply_normalization(const Dataset& data, const NormalizationParams& params) {
    Dataset out = data;
    out.features = apply_normalization(data.features, params);
    return out;
}

std::pair<Dataset, std::vector<std::int64_t>> inject_label_noise(const Dataset& data,
                                                                 const NoiseSpec& spec) {
    if (spec.fraction < 0.0 || spec.fraction > 1.0)
        throw InputError("inject_label_noise: fraction must be in [0, 1]");
    const std::size_t n = data.n_rows();
    const std::size_t m = static_cast<std::size_t>(round_half_up(spec.fraction * static_cast<double>(n)));
    Dataset out = data;
    if (m == 0) return {std::move(out), {}};
    const std::size_t L = data.n_labels();
    if (L < 2) throw InputError("inject_label_noise: need at least 2 labels to corrupt");

    Rng rng(derive_seed(spec.seed, 0x6e6f697365));  // dedicated noise stream
    const std::vector<std::size_t> rows = rng.sample_indices(n, m);
    std::vector<std::int64_t> corrupted;
    corrupted.reserve(rows.size());
    for (const std::size_t r : rows) {
        const int old_label = out.labels[r];
        // Uniform over the other L-1 labels.
        int pick = static_cast<int>(rng.uniform_index(L - 1));
        if (pick >= old_label) ++pick;
        out.labels[r] = pick;
        corrupted.push_back(out.row_ids[r]);
    }
    return {std::move(out), std::move(corrupted)};
}

SplitResult train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed,
                             bool stratified) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw InputError("train_test_split: test_fraction must be in (0, 1)");
    const std::size_t n = data.n_rows();
    if (n < 2) throw InputError("train_test_split: need at least 2 rows");

    const std::size_t target =
        static_cast<std::size_t>(round_half_up(test_fraction * static_cast<double>(n)));
    Rng rng(derive_seed(seed, 0x73706c6974));

    std::vector<std::size_t> test_positions;
    if (!stratified) {
        test_positions = rng.sample_indices(n, target);
    } else {
        // Per-label quotas: floor of the proportional share, remainders
        // distributed largest-first until the global target is met, and a
        // label is never drained completely into test.
        const std::size_t L = data.n_labels();
        std::vector<std::vector<std::size_t>> by_label(L);
        for (std::size_t r = 0; r < n; ++r)
            by_label[static_cast<std::size_t>(data.labels[r])].push_back(r);
        for (const auto& rows : by_label)
            if (rows.empty())
                throw InputError("train_test_split: stratification impossible, a label has no rows");

        std::vector<std::size_t> quota(L, 0);
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t l = 0; l < L; ++l) {
            const double share = test_fraction * static_cast<double>(by_label[l].size());
            quota[l] = std::min(static_cast<std::size_t>(share), by_label[l].size() - 1);
            assigned += quota[l];
            remainders.emplace_back(share - std::floor(share), l);
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::size_t cursor = 0;
        std::size_t stalled = 0;
        while (assigned < target && stalled < L) {
            const std::size_t l = remainders[cursor % L].second;
            if (quota[l] + 1 < by_label[l].size()) {
                ++quota[l];
                ++assigned;
                stalled = 0;
            } else {
                ++stalled;  // label fully capped; when all are, accept a smaller test set
            }
            ++cursor;
        }
        for (std::size_t l = 0; l < L; ++l) {
            std::vector<std::size_t> picked = rng.sample_indices(by_label[l].size(), quota[l]);
            for (const std::size_t p : picked) test_positions.push_back(by_label[l][p]);
        }
        std::sort(test_positions.begin(), test_positions.end());
    }

    std::vector<bool> in_test(n, false);
    for (const std::size_t p : test_positions) in_test[p] = true;
    std::vector<std::size_t> train_positions;
    train_positions.reserve(n - test_positions.size());
    for (std::size_t r = 0; r < n; ++r)
        if (!in_test[r]) train_positions.push_back(r);

    return {data.subset(train_positions), data.subset(test_positions)};
}

}  // namespace sscc
