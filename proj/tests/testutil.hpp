// Shared generators for tests: Gaussian blobs, random contingency tables,
// random rotations, temp-file helpers.
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "sscc/dataset.hpp"
#include "sscc/rng.hpp"
#include "sscc/types.hpp"

namespace testutil {

struct BlobSpec {
    std::vector<double> center;
    std::size_t rows = 0;
    double sigma = 0.5;
};

/// Labeled dataset with one Gaussian blob per spec entry (label = blob index).
inline sscc::Dataset make_blobs(const std::vector<BlobSpec>& blobs, std::uint64_t seed) {
    sscc::Rng rng(sscc::derive_seed(seed, 0xb10b5));
    const std::size_t d = blobs.front().center.size();
    std::size_t n = 0;
    for (const BlobSpec& b : blobs) n += b.rows;

    sscc::Dataset data;
    data.features = sscc::Matrix(n, d);
    std::size_t r = 0;
    for (std::size_t b = 0; b < blobs.size(); ++b) {
        for (std::size_t i = 0; i < blobs[b].rows; ++i, ++r) {
            for (std::size_t j = 0; j < d; ++j)
                data.features(r, j) = blobs[b].center[j] + blobs[b].sigma * rng.gaussian();
            data.labels.push_back(static_cast<int>(b));
        }
    }
    for (std::size_t j = 0; j < d; ++j) data.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t b = 0; b < blobs.size(); ++b)
        data.label_names.push_back("blob_" + std::to_string(b));
    for (std::size_t i = 0; i < n; ++i) data.row_ids.push_back(static_cast<std::int64_t>(i));
    return data;
}

/// Random contingency table with no all-zero label row and no empty cluster
/// column (the invariants real tables carry).
inline std::vector<std::vector<std::int64_t>> random_table(sscc::Rng& rng, std::size_t max_labels,
                                                           std::size_t max_clusters,
                                                           std::int64_t max_count = 40) {
    for (;;) {
        const std::size_t labels = 1 + rng.uniform_index(max_labels);
        const std::size_t clusters = 1 + rng.uniform_index(max_clusters);
        std::vector<std::vector<std::int64_t>> t(labels, std::vector<std::int64_t>(clusters, 0));
        for (auto& row : t)
            for (auto& v : row)
                v = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::size_t>(max_count)));
        bool ok = true;
        for (const auto& row : t) {
            std::int64_t s = 0;
            for (const std::int64_t v : row) s += v;
            if (s == 0) ok = false;
        }
        for (std::size_t c = 0; c < clusters && ok; ++c) {
            std::int64_t s = 0;
            for (const auto& row : t) s += row[c];
            if (s == 0) ok = false;
        }
        if (ok) return t;
    }
}

/// Random d-dimensional rotation as a product of Givens rotations.
inline sscc::Matrix random_rotation(std::size_t d, sscc::Rng& rng) {
    sscc::Matrix rot(d, d);
    for (std::size_t i = 0; i < d; ++i) rot(i, i) = 1.0;
    const std::size_t sweeps = 3 * d;
    for (std::size_t s = 0; s < sweeps; ++s) {
        const std::size_t i = rng.uniform_index(d);
        std::size_t j = rng.uniform_index(d - 1);
        if (j >= i) ++j;
        const double theta = rng.next_double() * 6.283185307179586;
        const double c = std::cos(theta), sn = std::sin(theta);
        for (std::size_t col = 0; col < d; ++col) {
            const double a = rot(i, col), b = rot(j, col);
            rot(i, col) = c * a - sn * b;
            rot(j, col) = sn * a + c * b;
        }
    }
    return rot;
}

inline sscc::Matrix rotate_points(const sscc::Matrix& points, const sscc::Matrix& rot) {
    sscc::Matrix out(points.rows(), points.cols());
    for (std::size_t r = 0; r < points.rows(); ++r)
        for (std::size_t i = 0; i < rot.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < rot.cols(); ++j) s += rot(i, j) * points(r, j);
            out(r, i) = s;
        }
    return out;
}

/// Matrix of uniform random points in [-1, 1]^d.
inline sscc::Matrix random_points(std::size_t n, std::size_t d, sscc::Rng& rng) {
    sscc::Matrix m(n, d);
    for (auto& v : m.storage()) v = 2.0 * rng.next_double() - 1.0;
    return m;
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("sscc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace testutil
