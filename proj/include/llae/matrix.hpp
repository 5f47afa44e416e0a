#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llae/error.hpp"

namespace llae {

/**
 * Dense real matrix, row-major: element (i, j) lives at data[i * cols + j].
 *
 * Every kernel in the library assumes this layout. Zero-sized dimensions are
 * allowed (e.g. the k x 0 subspace selected when the target rank equals k).
 * Constructors reject non-finite entries.
 */
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                                 std::to_string(rows_) + "x" + std::to_string(cols_));
        }
        for (double v : data_) {
            if (!std::isfinite(v)) throw InvalidArgument("matrix entries must be finite");
        }
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw DimensionError("ragged initializer list");
            for (double v : r) {
                if (!std::isfinite(v)) throw InvalidArgument("matrix entries must be finite");
                data_.push_back(v);
            }
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> values) {
        Matrix m(values.size(), values.size());
        for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
        return out;
    }

    std::string shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

// a * b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out = c.row(i);
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            auto brow = b.row(p);
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += aip * brow[j];
        }
    }
    return c;
}

// a * b^T, with both operands traversed along contiguous rows.
inline Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_transposed: cannot multiply " + a.shape() + " by transpose of " + b.shape());
    }
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ar = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto br = b.row(j);
            double s = 0.0;
            for (std::size_t p = 0; p < ar.size(); ++p) s += ar[p] * br[p];
            c(i, j) = s;
        }
    }
    return c;
}

// a^T * b
inline Matrix transposed_matmul(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("transposed_matmul: cannot multiply transpose of " + a.shape() + " by " + b.shape());
    }
    Matrix c(a.cols(), b.cols());
    for (std::size_t p = 0; p < a.rows(); ++p) {
        auto ar = a.row(p);
        auto br = b.row(p);
        for (std::size_t i = 0; i < ar.size(); ++i) {
            const double aip = ar[i];
            if (aip == 0.0) continue;
            auto out = c.row(i);
            for (std::size_t j = 0; j < br.size(); ++j) out[j] += aip * br[j];
        }
    }
    return c;
}

// a * a^T, symmetric by construction.
inline Matrix gram(const Matrix& a) {
    Matrix g(a.rows(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        for (std::size_t j = i; j < a.rows(); ++j) {
            auto aj = a.row(j);
            double s = 0.0;
            for (std::size_t p = 0; p < ai.size(); ++p) s += ai[p] * aj[p];
            g(i, j) = s;
            g(j, i) = s;
        }
    }
    return g;
}

namespace detail {

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
    }
}

}  // namespace detail

inline Matrix operator+(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "add");
    Matrix c = a;
    auto cd = c.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
    return c;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "subtract");
    Matrix c = a;
    auto cd = c.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
    return c;
}

inline Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (double& v : c.data()) v *= s;
    return c;
}

inline Matrix operator*(const Matrix& a, const Matrix& b) { return matmul(a, b); }

// Frobenius inner product <a, b> = tr(a^T b).
inline double inner(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "inner");
    auto ad = a.data();
    auto bd = b.data();
    double s = 0.0;
    for (std::size_t i = 0; i < ad.size(); ++i) s += ad[i] * bd[i];
    return s;
}

inline double squared_frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return s;
}

// Scaled accumulation so very large or very small entries do not overflow/underflow.
inline double frobenius_norm(const Matrix& m) {
    double scale = 0.0;
    double ssq = 1.0;
    for (double v : m.data()) {
        if (v == 0.0) continue;
        const double a = std::abs(v);
        if (scale < a) {
            ssq = 1.0 + ssq * (scale / a) * (scale / a);
            scale = a;
        } else {
            ssq += (a / scale) * (a / scale);
        }
    }
    return scale * std::sqrt(ssq);
}

inline double trace(const Matrix& m) {
    if (!m.is_square()) throw DimensionError("trace: matrix " + m.shape() + " is not square");
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
    return s;
}

inline double max_abs_difference(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "max_abs_difference");
    double worst = 0.0;
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < ad.size(); ++i) worst = std::max(worst, std::abs(ad[i] - bd[i]));
    return worst;
}

// Columns [first, first + count) of m.
inline Matrix column_block(const Matrix& m, std::size_t first, std::size_t count) {
    if (first + count > m.cols()) throw DimensionError("column_block out of range for " + m.shape());
    Matrix out(m.rows(), count);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = m(i, first + j);
    return out;
}

// Columns of m picked by index, in the given order.
inline Matrix select_columns(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(m.rows(), indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
        if (indices[j] >= m.cols()) throw DimensionError("select_columns: index out of range for " + m.shape());
        for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = m(i, indices[j]);
    }
    return out;
}

// Scales each nonzero column to unit Euclidean length.
inline Matrix l2_normalize_columns(const Matrix& m) {
    Matrix out = m;
    std::vector<double> norms(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) norms[j] += m(i, j) * m(i, j);
    for (double& n : norms) n = std::sqrt(n);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (norms[j] > 0.0) out(i, j) /= norms[j];
    return out;
}

}  // namespace llae
