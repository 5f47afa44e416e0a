#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "llae/matrix.hpp"
#include "llae/schur.hpp"

namespace llae {

namespace detail {

// Solves t_blk * y + y * u_blk = rhs for a p x q block (p, q in {1, 2}) through
// its (p*q) x (p*q) Kronecker system. y and rhs are row-major p x q.
inline void solve_block(const Matrix& t, std::size_t r0, std::size_t p, const Matrix& u, std::size_t c0,
                        std::size_t q, std::array<double, 4>& y, double pivot_tol) {
    const std::size_t n = p * q;
    std::array<double, 16> sys{};
    // Unknown (a, b) sits at index a * q + b.
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < q; ++b) {
            const std::size_t row = a * q + b;
            for (std::size_t c = 0; c < p; ++c) sys[row * n + c * q + b] += t(r0 + a, r0 + c);
            for (std::size_t e = 0; e < q; ++e) sys[row * n + a * q + e] += u(c0 + e, c0 + b);
        }
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(sys[r * n + col]) > std::abs(sys[piv * n + col])) piv = r;
        if (std::abs(sys[piv * n + col]) <= pivot_tol) {
            throw SpectralOverlapError(
                "solve_sylvester: spectral overlap between A and -B (local pivot " +
                std::to_string(std::abs(sys[piv * n + col])) + "); increase the ridge on A slightly");
        }
        if (piv != col) {
            for (std::size_t k = 0; k < n; ++k) std::swap(sys[piv * n + k], sys[col * n + k]);
            std::swap(y[piv], y[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = sys[r * n + col] / sys[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) sys[r * n + k] -= f * sys[col * n + k];
            y[r] -= f * y[col];
        }
    }
    for (std::size_t r = n; r-- > 0;) {
        double acc = y[r];
        for (std::size_t k = r + 1; k < n; ++k) acc -= sys[r * n + k] * y[k];
        y[r] = acc / sys[r * n + r];
    }
}

}  // namespace detail

/**
 * Solves A W + W B = C with the Bartels-Stewart algorithm.
 *
 * A (k x k) and B (d x d) are reduced to real Schur form, the transformed
 * system T Y + Y U = Q_a^T C Q_b is solved block by block (columns of U left
 * to right, rows of T bottom to top, 2x2 blocks through local Kronecker
 * solves), and W = Q_a Y Q_b^T. B need not be symmetric.
 *
 * Throws SpectralOverlapError when an eigenvalue of A meets an eigenvalue of
 * -B within 1e-12 * max(1, ||A||_F + ||B||_F).
 */
inline Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c) {
    if (!a.is_square() || !b.is_square() || c.rows() != a.rows() || c.cols() != b.rows()) {
        throw DimensionError("solve_sylvester: incompatible shapes A " + a.shape() + ", B " + b.shape() + ", C " +
                             c.shape());
    }
    const std::size_t k = a.rows();
    const std::size_t d = b.rows();
    if (k == 0 || d == 0) return Matrix(k, d);

    const RealSchur sa = real_schur(a);
    const RealSchur sb = real_schur(b);
    const Matrix& t = sa.t;
    const Matrix& u = sb.t;
    const double pivot_tol = 1e-12 * std::max(1.0, frobenius_norm(a) + frobenius_norm(b));

    Matrix y = transposed_matmul(sa.q, matmul(c, sb.q));  // becomes the solution in Schur coordinates
    const SchurBlocks rows = schur_blocks(t);
    const SchurBlocks cols = schur_blocks(u);

    for (std::size_t cb = 0; cb < cols.starts.size(); ++cb) {
        const std::size_t c0 = cols.starts[cb];
        const std::size_t q = cols.sizes[cb];
        // Remove contributions of already solved columns: F_J - Y_{<J} U_{<J, J}.
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t jj = 0; jj < q; ++jj) {
                double acc = 0.0;
                for (std::size_t p = 0; p < c0; ++p) acc += y(i, p) * u(p, c0 + jj);
                y(i, c0 + jj) -= acc;
            }
        }
        for (std::size_t rb = rows.starts.size(); rb-- > 0;) {
            const std::size_t r0 = rows.starts[rb];
            const std::size_t p = rows.sizes[rb];
            std::array<double, 4> blk{};
            for (std::size_t ii = 0; ii < p; ++ii) {
                for (std::size_t jj = 0; jj < q; ++jj) {
                    double acc = y(r0 + ii, c0 + jj);
                    for (std::size_t kk = r0 + p; kk < k; ++kk) acc -= t(r0 + ii, kk) * y(kk, c0 + jj);
                    blk[ii * q + jj] = acc;
                }
            }
            detail::solve_block(t, r0, p, u, c0, q, blk, pivot_tol);
            for (std::size_t ii = 0; ii < p; ++ii)
                for (std::size_t jj = 0; jj < q; ++jj) y(r0 + ii, c0 + jj) = blk[ii * q + jj];
        }
    }

    Matrix w = matmul_transposed(matmul(sa.q, y), sb.q);
    if (!w.all_finite()) throw NumericError("solve_sylvester: non-finite solution");
    return w;
}

/// Largest k * d the Kronecker oracle accepts.
inline constexpr std::size_t kKronOracleMaxUnknowns = 4096;

/**
 * Reference solver: forms (I_d (x) A + B^T (x) I_k) vec(W) = vec(C) densely and
 * solves it by Gaussian elimination with partial pivoting. Only meant for
 * cross-checking solve_sylvester on small problems.
 */
inline Matrix kron_oracle_solve(const Matrix& a, const Matrix& b, const Matrix& c) {
    if (!a.is_square() || !b.is_square() || c.rows() != a.rows() || c.cols() != b.rows()) {
        throw DimensionError("kron_oracle_solve: incompatible shapes A " + a.shape() + ", B " + b.shape() + ", C " +
                             c.shape());
    }
    const std::size_t k = a.rows();
    const std::size_t d = b.rows();
    const std::size_t n = k * d;
    if (n > kKronOracleMaxUnknowns) {
        throw InvalidArgument("kron_oracle_solve: " + std::to_string(n) + " unknowns exceeds the cap of " +
                              std::to_string(kKronOracleMaxUnknowns));
    }
    // Column-major vec: W(i, j) -> i + k * j.
    std::vector<double> m(n * n, 0.0);
    std::vector<double> rhs(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t row = i + k * j;
            rhs[row] = c(i, j);
            for (std::size_t ip = 0; ip < k; ++ip) m[row * n + ip + k * j] += a(i, ip);
            for (std::size_t jp = 0; jp < d; ++jp) m[row * n + i + k * jp] += b(jp, j);
        }
    }
    double scale = 0.0;
    for (double v : m) scale = std::max(scale, std::abs(v));
    const double tol = 1e-13 * std::max(1.0, scale);

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(m[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(m[r * n + col]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best <= tol) throw NumericError("kron_oracle_solve: singular Kronecker system");
        if (piv != col) {
            std::swap_ranges(m.begin() + static_cast<long>(piv * n), m.begin() + static_cast<long>((piv + 1) * n),
                             m.begin() + static_cast<long>(col * n));
            std::swap(rhs[piv], rhs[col]);
        }
        const double* prow = m.data() + col * n;
        for (std::size_t r = col + 1; r < n; ++r) {
            double* row = m.data() + r * n;
            const double f = row[col] / prow[col];
            if (f == 0.0) continue;
            for (std::size_t kk = col; kk < n; ++kk) row[kk] -= f * prow[kk];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double acc = rhs[r];
        for (std::size_t kk = r + 1; kk < n; ++kk) acc -= m[r * n + kk] * x[kk];
        x[r] = acc / m[r * n + r];
    }
    Matrix w(k, d);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t i = 0; i < k; ++i) w(i, j) = x[i + k * j];
    return w;
}

/// ||A W + W B - C||_F
inline double sylvester_residual(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& w) {
    return frobenius_norm(matmul(a, w) + matmul(w, b) - c);
}

}  // namespace llae
