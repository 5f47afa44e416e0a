#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "llae/dataset.hpp"
#include "llae/llae.hpp"

namespace llae {

/// Top items for one user, best first.
struct RankedList {
    std::string user_id;
    std::vector<std::size_t> item_indices;
    std::vector<double> scores;  // sigmoid of the decoded score
};

/// Held-out items of one user, sorted and unique.
struct RelevanceSet {
    std::string user_id;
    std::vector<std::size_t> relevant_items;

    RelevanceSet() = default;
    RelevanceSet(std::string id, std::vector<std::size_t> items) : user_id(std::move(id)), relevant_items(std::move(items)) {
        std::sort(relevant_items.begin(), relevant_items.end());
        relevant_items.erase(std::unique(relevant_items.begin(), relevant_items.end()), relevant_items.end());
    }

    bool contains(std::size_t item) const {
        return std::binary_search(relevant_items.begin(), relevant_items.end(), item);
    }
    std::size_t size() const noexcept { return relevant_items.size(); }
    bool empty() const noexcept { return relevant_items.empty(); }
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Ranks items per column of `scores` (d x m) by raw score, ties to the lower index.
inline std::vector<RankedList> rank_scores(const Matrix& scores, std::size_t top_k,
                                           const std::vector<std::string>& user_ids = {}) {
    const std::size_t d = scores.rows();
    if (top_k < 1) throw InvalidArgument("top_k must be at least 1");
    if (top_k > d) {
        throw InvalidArgument("top_k " + std::to_string(top_k) + " exceeds catalog size " + std::to_string(d));
    }
    if (!user_ids.empty() && user_ids.size() != scores.cols()) {
        throw DimensionError("rank_scores: " + std::to_string(user_ids.size()) + " user ids for " +
                             std::to_string(scores.cols()) + " users");
    }
    std::vector<RankedList> out(scores.cols());
    std::vector<std::size_t> order(d);
    for (std::size_t u = 0; u < scores.cols(); ++u) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double sa = scores(a, u), sb = scores(b, u);
                              return sa > sb || (sa == sb && a < b);
                          });
        RankedList& r = out[u];
        if (!user_ids.empty()) r.user_id = user_ids[u];
        r.item_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k));
        r.scores.reserve(top_k);
        for (std::size_t i : r.item_indices) r.scores.push_back(sigmoid(scores(i, u)));
    }
    return out;
}

/// Decodes the new users' attributes (k x m) and returns each user's top_k items.
inline std::vector<RankedList> recommend(const TrainedModel& model, const Matrix& s_new, std::size_t top_k,
                                         const std::vector<std::string>& user_ids = {}) {
    if (top_k > model.features()) {
        throw InvalidArgument("top_k " + std::to_string(top_k) + " exceeds catalog size " +
                              std::to_string(model.features()));
    }
    return rank_scores(decode(model, s_new), top_k, user_ids);
}

namespace detail {

inline std::size_t hits_in_top(const RankedList& ranked, const RelevanceSet& rel, std::size_t k) {
    if (k < 1) throw InvalidArgument("k must be at least 1");
    if (ranked.item_indices.size() < k) {
        throw InvalidArgument("ranked list of " + std::to_string(ranked.item_indices.size()) +
                              " items is shorter than k = " + std::to_string(k));
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) hits += rel.contains(ranked.item_indices[i]);
    return hits;
}

}  // namespace detail

inline double precision_at_k(const RankedList& ranked, const RelevanceSet& rel, std::size_t k) {
    return static_cast<double>(detail::hits_in_top(ranked, rel, k)) / static_cast<double>(k);
}

inline double recall_at_k(const RankedList& ranked, const RelevanceSet& rel, std::size_t k) {
    if (rel.empty()) throw InvalidArgument("recall_at_k: empty relevance set for user '" + rel.user_id + "'");
    return static_cast<double>(detail::hits_in_top(ranked, rel, k)) / static_cast<double>(rel.size());
}

/// AP@n with denominator min(|relevant|, n); lists shorter than n are scored as far as they go.
inline double average_precision(const RankedList& ranked, const RelevanceSet& rel, std::size_t n) {
    if (n < 1) throw InvalidArgument("n must be at least 1");
    if (rel.empty()) throw InvalidArgument("average_precision: empty relevance set for user '" + rel.user_id + "'");
    const std::size_t depth = std::min(n, ranked.item_indices.size());
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (rel.contains(ranked.item_indices[i])) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(std::min(rel.size(), n));
}

namespace detail {

inline void check_aligned(const std::vector<RankedList>& rankeds, const std::vector<RelevanceSet>& rels) {
    if (rankeds.size() != rels.size()) {
        throw DimensionError(std::to_string(rankeds.size()) + " ranked lists for " + std::to_string(rels.size()) +
                             " relevance sets");
    }
    for (std::size_t u = 0; u < rels.size(); ++u) {
        if (!rankeds[u].user_id.empty() && !rels[u].user_id.empty() && rankeds[u].user_id != rels[u].user_id) {
            throw InvalidArgument("user " + std::to_string(u) + ": ranked list is for '" + rankeds[u].user_id +
                                  "' but relevance is for '" + rels[u].user_id + "'");
        }
    }
}

}  // namespace detail

/// Mean AP@n over users with non-empty relevance.
inline double map_at_n(const std::vector<RankedList>& rankeds, const std::vector<RelevanceSet>& rels,
                       std::size_t n = 100) {
    detail::check_aligned(rankeds, rels);
    double sum = 0.0;
    std::size_t users = 0;
    for (std::size_t u = 0; u < rels.size(); ++u) {
        if (rels[u].empty()) continue;
        sum += average_precision(rankeds[u], rels[u], n);
        ++users;
    }
    if (users == 0) throw DataError("map_at_n: no user has held-out items");
    return sum / static_cast<double>(users);
}

struct RankingReport {
    std::vector<std::size_t> ks;
    std::vector<double> precision;  // mean over included users, aligned with ks
    std::vector<double> recall;
    double map = 0.0;
    std::size_t map_n = 100;
    std::size_t users = 0;     // included in the means
    std::size_t excluded = 0;  // empty relevance
};

inline RankingReport evaluate_rankings(const std::vector<RankedList>& rankeds, const std::vector<RelevanceSet>& rels,
                                       const std::vector<std::size_t>& ks, std::size_t map_n = 100) {
    detail::check_aligned(rankeds, rels);
    RankingReport r;
    r.ks = ks;
    r.map_n = map_n;
    r.precision.assign(ks.size(), 0.0);
    r.recall.assign(ks.size(), 0.0);
    for (std::size_t u = 0; u < rels.size(); ++u) {
        if (rels[u].empty()) {
            ++r.excluded;
            continue;
        }
        ++r.users;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            r.precision[i] += precision_at_k(rankeds[u], rels[u], ks[i]);
            r.recall[i] += recall_at_k(rankeds[u], rels[u], ks[i]);
        }
    }
    if (r.users == 0) throw DataError("no user has held-out items");
    for (std::size_t i = 0; i < ks.size(); ++i) {
        r.precision[i] /= static_cast<double>(r.users);
        r.recall[i] /= static_cast<double>(r.users);
    }
    r.map = map_at_n(rankeds, rels, map_n);
    return r;
}

/// Items with a positive behavior entry, per user column of x.
inline std::vector<RelevanceSet> relevance_from_behavior(const Matrix& x, const std::vector<std::string>& user_ids = {}) {
    std::vector<RelevanceSet> out;
    out.reserve(x.cols());
    for (std::size_t u = 0; u < x.cols(); ++u) {
        std::vector<std::size_t> items;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (x(i, u) > 0.0) items.push_back(i);
        }
        out.emplace_back(user_ids.empty() ? std::string{} : user_ids.at(u), std::move(items));
    }
    return out;
}

struct ColdSplit {
    InteractionDataset train;
    InteractionDataset test;
    std::vector<std::size_t> train_users;  // original column indices, ascending
    std::vector<std::size_t> test_users;
};

/// Number of cold users: round(fraction * n), kept within [1, n - 1].
inline std::size_t cold_user_count(std::size_t users, double fraction) {
    const auto raw = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(users)));
    return std::clamp<std::size_t>(raw, 1, users - 1);
}

/// User-level partition: cold users contribute no columns to the training side.
inline ColdSplit cold_split(const InteractionDataset& data, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test fraction must lie in (0, 1)");
    const std::size_t n = data.users();
    if (n < 2) throw InvalidArgument("cold_split needs at least 2 users, got " + std::to_string(n));
    if (data.x.cols() != n || data.s.cols() != n) throw DimensionError("cold_split: dataset columns do not match users");

    const std::size_t m = cold_user_count(n, test_fraction);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(perm[i], perm[pick(rng)]);
    }
    ColdSplit out;
    out.test_users.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
    out.train_users.assign(perm.begin() + static_cast<std::ptrdiff_t>(m), perm.end());
    std::sort(out.test_users.begin(), out.test_users.end());
    std::sort(out.train_users.begin(), out.train_users.end());
    out.train = select_users(data, out.train_users);
    out.test = select_users(data, out.test_users);
    return out;
}

struct HyperparameterGrid {
    std::vector<double> lambdas;
    std::vector<double> betas;
    std::vector<std::size_t> ranks;

    std::size_t size() const noexcept { return lambdas.size() * betas.size() * ranks.size(); }
};

struct GridPoint {
    ModelConfig config;
    double validation_map = 0.0;
};

struct GridSearchResult {
    ModelConfig best;
    double best_map = 0.0;
    std::vector<GridPoint> evaluated;  // lexicographic (lambda, beta, rank) order
};

/**
 * Holds out 1/9 of `data` as cold validation users (10% of the original
 * data when `data` is the 90% side of cold_split), fits every grid point on
 * the rest and keeps the one with the best validation mAP@min(100, d). Ties
 * go to the lexicographically smallest (lambda, beta, rank).
 */
inline GridSearchResult grid_search(const InteractionDataset& data, const HyperparameterGrid& grid,
                                    std::uint64_t folds_seed, const ModelConfig& base = {}) {
    if (grid.size() == 0) throw InvalidArgument("grid_search: empty grid");
    auto lambdas = grid.lambdas;
    auto betas = grid.betas;
    auto ranks = grid.ranks;
    std::sort(lambdas.begin(), lambdas.end());
    std::sort(betas.begin(), betas.end());
    std::sort(ranks.begin(), ranks.end());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
    betas.erase(std::unique(betas.begin(), betas.end()), betas.end());
    ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());

    const ColdSplit fold = cold_split(data, 1.0 / 9.0, folds_seed);
    const auto rels = relevance_from_behavior(fold.test.x);
    const std::size_t depth = std::min<std::size_t>(100, data.items());

    GridSearchResult result;
    bool have = false;
    for (double lambda : lambdas) {
        for (double beta : betas) {
            for (std::size_t rank : ranks) {
                ModelConfig cfg = base;
                cfg.lambda = lambda;
                cfg.beta = beta;
                cfg.rank_r = rank;
                const TrainedModel model = train(fold.train.x, fold.train.s, cfg);
                const double score = map_at_n(recommend(model, fold.test.s, depth), rels, depth);
                result.evaluated.push_back({cfg, score});
                if (!have || score > result.best_map) {
                    have = true;
                    result.best = cfg;
                    result.best_map = score;
                }
            }
        }
    }
    return result;
}

}  // namespace llae
