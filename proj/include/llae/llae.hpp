#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "llae/eigen.hpp"
#include "llae/matrix.hpp"
#include "llae/sylvester.hpp"

namespace llae {

enum class ColumnNormalization : std::uint8_t { none = 0, l2 = 1 };

/// Which operand pairs with W on the right-hand side of the Sylvester system.
enum class SylvesterRhsForm : std::uint8_t {
    /// B = lambda * Xhat Xhat^T: the exact minimizer of the relaxed objective for fixed V.
    corrupted_gram = 0,
    /// B = lambda * X Xhat^T, clean data on the left. W no longer minimizes the objective exactly.
    printed = 1,
};

struct ModelConfig {
    double lambda = 1.0;
    double beta = 1.0;
    std::size_t rank_r = 0;
    double corruption_rate = 0.10;
    std::size_t max_iters = 50;
    double rel_tol = 1e-5;
    std::uint64_t seed = 0;
    ColumnNormalization normalization = ColumnNormalization::none;
    SylvesterRhsForm b_form = SylvesterRhsForm::corrupted_gram;

    // Checks the scalar ranges; `attributes` is k, the row count of S.
    void validate(std::size_t attributes) const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive");
        if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be nonnegative");
        if (rank_r > attributes) {
            throw InvalidArgument("rank_r " + std::to_string(rank_r) + " exceeds attribute count " +
                                  std::to_string(attributes));
        }
        if (!(corruption_rate >= 0.0 && corruption_rate < 1.0)) {
            throw InvalidArgument("corruption_rate must lie in [0, 1)");
        }
        if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol must be positive");
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Encoder W (k x d); the decoder is W^T.
struct TrainedModel {
    Matrix w;
    ModelConfig config;
    std::vector<double> objective_trace;  // one value per outer iteration
    ColumnNormalization column_normalization = ColumnNormalization::none;
    bool converged = false;               // stopped by rel_tol rather than max_iters
    std::uint64_t corrupted_entries = 0;  // entries of X zeroed to form Xhat
    double ridge = 0.0;                   // diagonal shift added to A by the last solve, 0 if none

    std::size_t attributes() const noexcept { return w.rows(); }
    std::size_t features() const noexcept { return w.cols(); }

    friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// Number of entries corrupt() zeroes for a d x n input.
inline std::size_t corrupted_count(std::size_t entries, double rate) {
    return static_cast<std::size_t>(std::floor(rate * static_cast<double>(entries) + 1e-9));
}

/**
 * Denoising corruption: zeroes exactly floor(rate * d * n) entry positions
 * drawn uniformly without replacement (partial Fisher-Yates driven by a
 * mt19937_64 seeded with `seed`).
 */
inline Matrix corrupt(const Matrix& x, double rate, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("corrupt: rate must lie in [0, 1)");
    Matrix out = x;
    const std::size_t total = x.size();
    const std::size_t count = corrupted_count(total, rate);
    if (count == 0) return out;
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> positions(total);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    auto data = out.data();
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, total - 1);
        std::swap(positions[i], positions[pick(rng)]);
        data[positions[i]] = 0.0;
    }
    return out;
}

/**
 * Orthonormal basis of the (k - rank_r) smallest-eigenvalue eigenvectors of
 * W W^T, ascending by eigenvalue. tr(V^T W W^T V) is then the sum of the
 * trailing squared singular values of W.
 */
inline Matrix compute_v(const Matrix& w, std::size_t rank_r) {
    const std::size_t k = w.rows();
    if (rank_r > k) {
        throw InvalidArgument("compute_v: rank_r " + std::to_string(rank_r) + " exceeds k = " + std::to_string(k));
    }
    if (rank_r == k) return Matrix(k, 0);
    const SymmetricEigenResult eig = symmetric_eigen(gram(w));
    return column_block(eig.eigenvectors, 0, k - rank_r);
}

/// tr(V^T G V) for symmetric G.
inline double projected_trace(const Matrix& g, const Matrix& v) {
    if (v.cols() == 0) return 0.0;
    return inner(v, matmul(g, v));
}

namespace detail {

inline void check_objective_shapes(const Matrix& w, const Matrix& x, const Matrix& x_hat, const Matrix& s) {
    if (x.rows() != w.cols() || s.rows() != w.rows() || x.cols() != s.cols() || x_hat.rows() != x.rows() ||
        x_hat.cols() != x.cols()) {
        throw DimensionError("objective: incompatible shapes W " + w.shape() + ", X " + x.shape() + ", Xhat " +
                             x_hat.shape() + ", S " + s.shape());
    }
}

}  // namespace detail

/// ||X - W^T S||^2 + lambda ||W Xhat - S||^2 + beta tr(V^T W W^T V) for a given V.
inline double objective_fixed_v(const Matrix& w, const Matrix& v, const Matrix& x, const Matrix& x_hat,
                                const Matrix& s, const ModelConfig& config) {
    detail::check_objective_shapes(w, x, x_hat, s);
    if (v.rows() != w.rows()) throw DimensionError("objective: V " + v.shape() + " does not match W " + w.shape());
    const double recon = squared_frobenius_norm(x - transposed_matmul(w, s));
    const double embed = squared_frobenius_norm(matmul(w, x_hat) - s);
    return recon + config.lambda * embed + config.beta * projected_trace(gram(w), v);
}

/// The relaxed training objective, with V recomputed from w.
inline double objective(const Matrix& w, const Matrix& x, const Matrix& x_hat, const Matrix& s,
                        const ModelConfig& config) {
    detail::check_objective_shapes(w, x, x_hat, s);
    return objective_fixed_v(w, compute_v(w, config.rank_r), x, x_hat, s, config);
}

/// Exact gradient in W of objective_fixed_v:
/// 2 [ -S (X^T - S^T W) + lambda (W Xhat - S) Xhat^T + beta V V^T W ].
inline Matrix objective_gradient(const Matrix& w, const Matrix& v, const Matrix& x, const Matrix& x_hat,
                                 const Matrix& s, const ModelConfig& config) {
    detail::check_objective_shapes(w, x, x_hat, s);
    const Matrix recon = -1.0 * matmul(s, transpose(x) - transposed_matmul(s, w));
    const Matrix embed = config.lambda * matmul_transposed(matmul(w, x_hat) - s, x_hat);
    Matrix g = recon + embed;
    if (v.cols() > 0 && config.beta != 0.0) g = g + config.beta * matmul(matmul_transposed(v, v), w);
    return 2.0 * g;
}

/// Second-order statistics of the training data; everything an iteration needs.
struct GramStatistics {
    Matrix ss;         // S S^T        (k x k)
    Matrix xhat_gram;  // Xhat Xhat^T  (d x d)
    Matrix b;          // Sylvester B  (d x d), already scaled by lambda
    Matrix c;          // S X^T + lambda S Xhat^T (k x d)
    Matrix sx;         // S X^T
    Matrix sxhat;      // S Xhat^T
    double x_sq = 0.0;
    double s_sq = 0.0;
};

inline GramStatistics gram_statistics(const Matrix& x, const Matrix& x_hat, const Matrix& s,
                                      const ModelConfig& config) {
    GramStatistics g;
    g.ss = gram(s);
    g.xhat_gram = gram(x_hat);
    g.sx = matmul_transposed(s, x);
    g.sxhat = matmul_transposed(s, x_hat);
    g.c = g.sx + config.lambda * g.sxhat;
    g.b = config.b_form == SylvesterRhsForm::printed ? config.lambda * matmul_transposed(x, x_hat)
                                                     : config.lambda * g.xhat_gram;
    g.x_sq = squared_frobenius_norm(x);
    g.s_sq = squared_frobenius_norm(s);
    return g;
}

/// objective_fixed_v evaluated from Gram statistics, at a cost independent of n.
inline double objective_from_statistics(const Matrix& w, const Matrix& v, const GramStatistics& g,
                                        const ModelConfig& config) {
    const Matrix wwt = gram(w);
    const double recon = g.x_sq - 2.0 * inner(w, g.sx) + inner(wwt, g.ss);
    const double embed = inner(matmul(w, g.xhat_gram), w) - 2.0 * inner(w, g.sxhat) + g.s_sq;
    const double low_rank = config.beta != 0.0 ? projected_trace(wwt, v) : 0.0;
    return recon + config.lambda * embed + config.beta * low_rank;
}

/// A W + W B - C for A = S S^T + beta V V^T, i.e. the stationarity residual of the W-update.
inline Matrix stationarity_residual(const Matrix& w, const Matrix& v, const GramStatistics& g,
                                    const ModelConfig& config) {
    Matrix a = g.ss;
    if (v.cols() > 0 && config.beta != 0.0) a = a + config.beta * matmul_transposed(v, v);
    return matmul(a, w) + matmul(w, g.b) - g.c;
}

/// Result of a ridge-guarded Sylvester solve.
struct GuardedSolve {
    Matrix w;
    double ridge = 0.0;
};

/**
 * solve_sylvester, retrying with A + eps I on spectral overlap.
 * eps starts at 1e-10 * max(||A||_F, ||B||_F, 1) and doubles up to 3 times.
 */
inline GuardedSolve solve_with_ridge(const Matrix& a, const Matrix& b, const Matrix& c) {
    try {
        return {solve_sylvester(a, b, c), 0.0};
    } catch (const SpectralOverlapError&) {
    }
    double eps = 1e-10 * std::max({frobenius_norm(a), frobenius_norm(b), 1.0});
    for (int attempt = 0;; ++attempt) {
        Matrix shifted = a;
        for (std::size_t i = 0; i < shifted.rows(); ++i) shifted(i, i) += eps;
        try {
            return {solve_sylvester(shifted, b, c), eps};
        } catch (const SpectralOverlapError&) {
            if (attempt == 3) throw;
        }
        eps *= 2.0;
    }
}

/**
 * Alternating closed-form training.
 *
 * Xhat is drawn once. W starts at the beta = 0 solution, then each outer
 * iteration sets V from the current W and re-solves A W + W B = C with
 * A = S S^T + beta V V^T. The objective (V recomputed from the new W) is
 * recorded after every W update; the loop stops once
 * |J_t - J_{t-1}| <= rel_tol * max(1, |J_{t-1}|), J_0 being the warm start.
 */
inline TrainedModel train(const Matrix& x_in, const Matrix& s_in, const ModelConfig& config) {
    if (x_in.empty() || s_in.empty()) {
        throw InvalidArgument("train: empty input (X " + x_in.shape() + ", S " + s_in.shape() + ")");
    }
    if (x_in.cols() != s_in.cols()) {
        throw DimensionError("train: X " + x_in.shape() + " and S " + s_in.shape() + " disagree on sample count");
    }
    config.validate(s_in.rows());

    const bool l2 = config.normalization == ColumnNormalization::l2;
    const Matrix x = l2 ? l2_normalize_columns(x_in) : x_in;
    const Matrix s = l2 ? l2_normalize_columns(s_in) : s_in;
    const Matrix x_hat = corrupt(x, config.corruption_rate, config.seed);
    const GramStatistics stats = gram_statistics(x, x_hat, s, config);

    TrainedModel model;
    model.config = config;
    model.column_normalization = config.normalization;
    model.corrupted_entries = corrupted_count(x.size(), config.corruption_rate);

    GuardedSolve step = solve_with_ridge(stats.ss, stats.b, stats.c);
    Matrix w = std::move(step.w);
    model.ridge = step.ridge;
    double previous = objective_from_statistics(w, compute_v(w, config.rank_r), stats, config);

    for (std::size_t it = 0; it < config.max_iters; ++it) {
        const Matrix v = compute_v(w, config.rank_r);
        Matrix a = stats.ss;
        if (config.beta != 0.0 && v.cols() > 0) a = a + config.beta * matmul_transposed(v, v);
        step = solve_with_ridge(a, stats.b, stats.c);
        w = std::move(step.w);
        model.ridge = step.ridge;

        const double current = objective_from_statistics(w, compute_v(w, config.rank_r), stats, config);
        model.objective_trace.push_back(current);
        if (std::abs(current - previous) <= config.rel_tol * std::max(1.0, std::abs(previous))) {
            model.converged = true;
            break;
        }
        previous = current;
    }
    if (!w.all_finite()) throw NumericError("train: encoder has non-finite entries");
    model.w = std::move(w);
    return model;
}

/// S_new = W X_new, after the column normalization used in training.
inline Matrix encode(const TrainedModel& model, const Matrix& x_new) {
    if (x_new.rows() != model.features()) {
        throw DimensionError("encode: input " + x_new.shape() + " does not have " +
                             std::to_string(model.features()) + " rows");
    }
    if (model.column_normalization == ColumnNormalization::l2) return matmul(model.w, l2_normalize_columns(x_new));
    return matmul(model.w, x_new);
}

/// X_new = W^T S_new, after the column normalization used in training.
inline Matrix decode(const TrainedModel& model, const Matrix& s_new) {
    if (s_new.rows() != model.attributes()) {
        throw DimensionError("decode: input " + s_new.shape() + " does not have " +
                             std::to_string(model.attributes()) + " rows");
    }
    if (model.column_normalization == ColumnNormalization::l2) {
        return transposed_matmul(model.w, l2_normalize_columns(s_new));
    }
    return transposed_matmul(model.w, s_new);
}

}  // namespace llae
