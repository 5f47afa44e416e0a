#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "llae/matrix.hpp"

namespace llae {

/// m = q * t * q^T, q orthogonal, t quasi-upper-triangular with 1x1 and 2x2 diagonal blocks.
struct RealSchur {
    Matrix q;
    Matrix t;
};

/// Diagonal block layout of a quasi-triangular matrix: block b starts at
/// starts[b] and has size 1 or 2.
struct SchurBlocks {
    std::vector<std::size_t> starts;
    std::vector<std::size_t> sizes;
};

inline SchurBlocks schur_blocks(const Matrix& t) {
    SchurBlocks blocks;
    const std::size_t n = t.rows();
    for (std::size_t i = 0; i < n;) {
        const std::size_t size = (i + 1 < n && t(i + 1, i) != 0.0) ? 2 : 1;
        blocks.starts.push_back(i);
        blocks.sizes.push_back(size);
        i += size;
    }
    return blocks;
}

namespace detail {

// Orthogonal Hessenberg reduction (EISPACK orthes + ortran).
inline void hessenberg(Matrix& h, Matrix& v) {
    const std::size_t n = h.rows();
    std::vector<double> ort(n, 0.0);
    if (n >= 3) {
        const std::size_t high = n - 1;
        for (std::size_t m = 1; m + 1 <= high; ++m) {
            double scale = 0.0;
            for (std::size_t i = m; i <= high; ++i) scale += std::abs(h(i, m - 1));
            if (scale == 0.0) continue;

            double hsum = 0.0;
            for (std::size_t i = high + 1; i-- > m;) {
                ort[i] = h(i, m - 1) / scale;
                hsum += ort[i] * ort[i];
            }
            double g = std::sqrt(hsum);
            if (ort[m] > 0) g = -g;
            hsum -= ort[m] * g;
            ort[m] -= g;

            for (std::size_t j = m; j < n; ++j) {
                double f = 0.0;
                for (std::size_t i = high + 1; i-- > m;) f += ort[i] * h(i, j);
                f /= hsum;
                for (std::size_t i = m; i <= high; ++i) h(i, j) -= f * ort[i];
            }
            for (std::size_t i = 0; i <= high; ++i) {
                double f = 0.0;
                for (std::size_t j = high + 1; j-- > m;) f += ort[j] * h(i, j);
                f /= hsum;
                for (std::size_t j = m; j <= high; ++j) h(i, j) -= f * ort[j];
            }
            ort[m] *= scale;
            h(m, m - 1) = scale * g;
        }
    }

    v = Matrix::identity(n);
    if (n < 3) return;
    const std::size_t high = n - 1;
    for (std::size_t m = high - 1; m >= 1; --m) {
        if (h(m, m - 1) != 0.0 && ort[m] != 0.0) {
            // Reflector tails were left below the subdiagonal of h.
            for (std::size_t i = m + 1; i <= high; ++i) ort[i] = h(i, m - 1);
            for (std::size_t j = m; j <= high; ++j) {
                double g = 0.0;
                for (std::size_t i = m; i <= high; ++i) g += ort[i] * v(i, j);
                g = (g / ort[m]) / h(m, m - 1);
                for (std::size_t i = m; i <= high; ++i) v(i, j) += g * ort[i];
            }
        }
        if (m == 1) break;
    }
    for (std::size_t i = 2; i < n; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j) h(i, j) = 0.0;
}

}  // namespace detail

/**
 * Real Schur decomposition via Hessenberg reduction and Francis double-shift
 * QR (EISPACK hqr2, Schur-form part only).
 *
 * Negligible subdiagonal entries are set to exactly zero on deflation, so the
 * block structure of t can be read off its subdiagonal. Throws NumericError
 * if a single eigenvalue needs more than 100 QR sweeps.
 */
inline RealSchur real_schur(const Matrix& m) {
    if (!m.is_square()) throw DimensionError("real_schur: matrix " + m.shape() + " is not square");
    const std::size_t nn = m.rows();
    RealSchur out{Matrix(), m};
    Matrix& h = out.t;
    detail::hessenberg(h, out.q);
    if (nn <= 1) return out;
    Matrix& v = out.q;
    constexpr int kMaxSweeps = 100;

    const double eps = std::ldexp(1.0, -52);
    double exshift = 0.0;
    double p = 0, q = 0, r = 0, s = 0, z = 0, w, x, y;

    double norm = 0.0;
    for (std::size_t i = 0; i < nn; ++i)
        for (std::size_t j = (i == 0 ? 0 : i - 1); j < nn; ++j) norm += std::abs(h(i, j));
    if (norm == 0.0) return out;

    // Signed indices keep the EISPACK index arithmetic readable.
    auto H = [&h](long i, long j) -> double& { return h(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); };
    auto V = [&v](long i, long j) -> double& { return v(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); };
    const long size = static_cast<long>(nn);
    long n = size - 1;
    const long low = 0;
    const long high = size - 1;
    int iter = 0;

    while (n >= low) {
        long l = n;
        while (l > low) {
            s = std::abs(H(l - 1, l - 1)) + std::abs(H(l, l));
            if (s == 0.0) s = norm;
            if (std::abs(H(l, l - 1)) <= eps * s) {
                H(l, l - 1) = 0.0;
                break;
            }
            --l;
        }

        if (l == n) {
            H(n, n) += exshift;
            --n;
            iter = 0;
        } else if (l == n - 1) {
            w = H(n, n - 1) * H(n - 1, n);
            p = (H(n - 1, n - 1) - H(n, n)) / 2.0;
            q = p * p + w;
            z = std::sqrt(std::abs(q));
            H(n, n) += exshift;
            H(n - 1, n - 1) += exshift;

            if (q >= 0) {
                // Real pair: rotate the block to upper-triangular form.
                z = p >= 0 ? p + z : p - z;
                x = H(n, n - 1);
                s = std::abs(x) + std::abs(z);
                p = x / s;
                q = z / s;
                r = std::sqrt(p * p + q * q);
                p /= r;
                q /= r;
                for (long j = n - 1; j < size; ++j) {
                    z = H(n - 1, j);
                    H(n - 1, j) = q * z + p * H(n, j);
                    H(n, j) = q * H(n, j) - p * z;
                }
                for (long i = 0; i <= n; ++i) {
                    z = H(i, n - 1);
                    H(i, n - 1) = q * z + p * H(i, n);
                    H(i, n) = q * H(i, n) - p * z;
                }
                for (long i = low; i <= high; ++i) {
                    z = V(i, n - 1);
                    V(i, n - 1) = q * z + p * V(i, n);
                    V(i, n) = q * V(i, n) - p * z;
                }
                H(n, n - 1) = 0.0;
            }
            n -= 2;
            iter = 0;
        } else {
            x = H(n, n);
            y = 0.0;
            w = 0.0;
            if (l < n) {
                y = H(n - 1, n - 1);
                w = H(n, n - 1) * H(n - 1, n);
            }

            // Exceptional shifts.
            if (iter == 10) {
                exshift += x;
                for (long i = low; i <= n; ++i) H(i, i) -= x;
                s = std::abs(H(n, n - 1)) + std::abs(H(n - 1, n - 2));
                x = y = 0.75 * s;
                w = -0.4375 * s * s;
            }
            if (iter == 30) {
                s = (y - x) / 2.0;
                s = s * s + w;
                if (s > 0) {
                    s = std::sqrt(s);
                    if (y < x) s = -s;
                    s = x - w / ((y - x) / 2.0 + s);
                    for (long i = low; i <= n; ++i) H(i, i) -= s;
                    exshift += s;
                    x = y = w = 0.964;
                }
            }

            if (++iter > kMaxSweeps) {
                throw NumericError("real_schur: QR iteration did not converge for " + m.shape() +
                                   " matrix (subdiagonal residual " + std::to_string(std::abs(H(n, n - 1))) + ")");
            }

            long mm = n - 2;
            while (mm >= l) {
                z = H(mm, mm);
                r = x - z;
                s = y - z;
                p = (r * s - w) / H(mm + 1, mm) + H(mm, mm + 1);
                q = H(mm + 1, mm + 1) - z - r - s;
                r = H(mm + 2, mm + 1);
                s = std::abs(p) + std::abs(q) + std::abs(r);
                p /= s;
                q /= s;
                r /= s;
                if (mm == l) break;
                if (std::abs(H(mm, mm - 1)) * (std::abs(q) + std::abs(r)) <
                    eps * (std::abs(p) * (std::abs(H(mm - 1, mm - 1)) + std::abs(z) + std::abs(H(mm + 1, mm + 1))))) {
                    break;
                }
                --mm;
            }

            for (long i = mm + 2; i <= n; ++i) {
                H(i, i - 2) = 0.0;
                if (i > mm + 2) H(i, i - 3) = 0.0;
            }

            for (long k = mm; k <= n - 1; ++k) {
                const bool notlast = (k != n - 1);
                if (k != mm) {
                    p = H(k, k - 1);
                    q = H(k + 1, k - 1);
                    r = notlast ? H(k + 2, k - 1) : 0.0;
                    x = std::abs(p) + std::abs(q) + std::abs(r);
                    if (x == 0.0) continue;
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = std::sqrt(p * p + q * q + r * r);
                if (p < 0) s = -s;
                if (s != 0) {
                    if (k != mm) {
                        H(k, k - 1) = -s * x;
                    } else if (l != mm) {
                        H(k, k - 1) = -H(k, k - 1);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for (long j = k; j < size; ++j) {
                        p = H(k, j) + q * H(k + 1, j);
                        if (notlast) {
                            p += r * H(k + 2, j);
                            H(k + 2, j) -= p * z;
                        }
                        H(k, j) -= p * x;
                        H(k + 1, j) -= p * y;
                    }
                    for (long i = 0; i <= std::min(n, k + 3); ++i) {
                        p = x * H(i, k) + y * H(i, k + 1);
                        if (notlast) {
                            p += z * H(i, k + 2);
                            H(i, k + 2) -= p * r;
                        }
                        H(i, k) -= p;
                        H(i, k + 1) -= p * q;
                    }
                    for (long i = low; i <= high; ++i) {
                        p = x * V(i, k) + y * V(i, k + 1);
                        if (notlast) {
                            p += z * V(i, k + 2);
                            V(i, k + 2) -= p * r;
                        }
                        V(i, k) -= p;
                        V(i, k + 1) -= p * q;
                    }
                }
            }
        }
    }

    // Everything below the first subdiagonal is structurally zero.
    for (std::size_t i = 2; i < nn; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j) h(i, j) = 0.0;
    return out;
}

/// Eigenvalues (real, imaginary) of a quasi-triangular Schur factor, block by block.
inline std::vector<std::pair<double, double>> schur_eigenvalues(const Matrix& t) {
    std::vector<std::pair<double, double>> out;
    const SchurBlocks blocks = schur_blocks(t);
    for (std::size_t b = 0; b < blocks.starts.size(); ++b) {
        const std::size_t i = blocks.starts[b];
        if (blocks.sizes[b] == 1) {
            out.emplace_back(t(i, i), 0.0);
            continue;
        }
        const double a = t(i, i), bb = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
        const double half_tr = 0.5 * (a + d);
        const double disc = 0.25 * (a - d) * (a - d) + bb * c;
        if (disc >= 0) {
            const double root = std::sqrt(disc);
            out.emplace_back(half_tr - root, 0.0);
            out.emplace_back(half_tr + root, 0.0);
        } else {
            const double root = std::sqrt(-disc);
            out.emplace_back(half_tr, -root);
            out.emplace_back(half_tr, root);
        }
    }
    return out;
}

}  // namespace llae
