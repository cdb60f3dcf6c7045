#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sscc {

/// Base class for every error reported by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: files, arguments, malformed data.
class InputError : public Error {
public:
    using Error::Error;
};

/// A persisted model that fails schema or invariant validation.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// An internal invariant was violated; indicates a bug, not bad input.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Dense row-major matrix of doubles. Small and deliberately minimal:
/// every algorithm in this library works on contiguous rows.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    /// New matrix holding the given rows (in the given order).
    Matrix gather_rows(std::span<const std::size_t> row_indices) const {
        Matrix out(row_indices.size(), cols_);
        for (std::size_t i = 0; i < row_indices.size(); ++i) {
            auto src = row(row_indices[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    /// New matrix holding the given columns (in the given order).
    Matrix gather_cols(std::span<const std::size_t> col_indices) const {
        Matrix out(rows_, col_indices.size());
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t j = 0; j < col_indices.size(); ++j)
                out(r, j) = (*this)(r, col_indices[j]);
        return out;
    }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Squared Euclidean distance between two equal-length vectors.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace sscc
