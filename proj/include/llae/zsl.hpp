#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include "llae/llae.hpp"

namespace llae {

enum class DistanceMetric { cosine, euclidean };

/// Class labels and their attribute vectors, one prototype per column (k x c).
struct PrototypeSet {
    std::vector<std::string> labels;
    Matrix prototypes;

    std::size_t classes() const noexcept { return labels.size(); }

    void validate(DistanceMetric metric) const {
        if (labels.empty()) throw InvalidArgument("prototype set is empty");
        if (labels.size() != prototypes.cols()) {
            throw DimensionError("prototype set: " + std::to_string(labels.size()) + " labels for " +
                                 prototypes.shape() + " prototypes");
        }
        std::unordered_set<std::string> seen;
        for (const auto& l : labels) {
            if (!seen.insert(l).second) throw InvalidArgument("duplicate prototype label '" + l + "'");
        }
        if (metric == DistanceMetric::cosine) {
            for (std::size_t j = 0; j < prototypes.cols(); ++j) {
                bool zero = true;
                for (std::size_t i = 0; i < prototypes.rows() && zero; ++i) zero = prototypes(i, j) == 0.0;
                if (zero) throw InvalidArgument("prototype '" + labels[j] + "' is all zero under cosine distance");
            }
        }
    }
};

/// dis(column a of `a`, column b of `b`). A zero vector has cosine distance 1 to everything.
inline double column_distance(const Matrix& a, std::size_t ca, const Matrix& b, std::size_t cb, DistanceMetric metric) {
    double dot = 0.0, na = 0.0, nb = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double x = a(i, ca), y = b(i, cb);
        dot += x * y;
        na += x * x;
        nb += y * y;
        sq += (x - y) * (x - y);
    }
    if (metric == DistanceMetric::euclidean) return std::sqrt(sq);
    if (na == 0.0 || nb == 0.0) return 1.0;
    return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Index of the nearest prototype for every column of `embedded` (k x m).
inline std::vector<std::size_t> nearest_prototypes(const Matrix& embedded, const PrototypeSet& protos,
                                                   DistanceMetric metric) {
    protos.validate(metric);
    if (embedded.rows() != protos.prototypes.rows()) {
        throw DimensionError("embedding " + embedded.shape() + " does not match prototypes " +
                             protos.prototypes.shape());
    }
    std::vector<std::size_t> out(embedded.cols());
    for (std::size_t j = 0; j < embedded.cols(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < protos.classes(); ++c) {
            const double dist = column_distance(embedded, j, protos.prototypes, c, metric);
            if (dist < best) {
                best = dist;
                arg = c;
            }
        }
        out[j] = arg;
    }
    return out;
}

/// Encodes each column of x_new and returns the label of the nearest prototype.
inline std::vector<std::string> classify(const TrainedModel& model, const Matrix& x_new, const PrototypeSet& protos,
                                         DistanceMetric metric = DistanceMetric::cosine) {
    protos.validate(metric);
    const auto idx = nearest_prototypes(encode(model, x_new), protos, metric);
    std::vector<std::string> labels;
    labels.reserve(idx.size());
    for (std::size_t i : idx) labels.push_back(protos.labels[i]);
    return labels;
}

inline double accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& truth) {
    if (predicted.size() != truth.size()) {
        throw DimensionError("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                             std::to_string(truth.size()) + " labels");
    }
    if (predicted.empty()) throw InvalidArgument("accuracy: no labels");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace llae
