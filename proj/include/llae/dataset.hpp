#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "llae/matrix.hpp"

namespace llae {

/// Behavior X (d items x n users) and attributes S (k x n) sharing user columns.
struct InteractionDataset {
    Matrix x;
    Matrix s;
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
    std::vector<std::string> attribute_ids;

    std::size_t users() const noexcept { return user_ids.size(); }
    std::size_t items() const noexcept { return item_ids.size(); }
    std::size_t attributes() const noexcept { return attribute_ids.size(); }

    void validate() const {
        if (x.cols() != user_ids.size() || s.cols() != user_ids.size()) {
            throw DimensionError("dataset: X " + x.shape() + " / S " + s.shape() + " do not have " +
                                 std::to_string(user_ids.size()) + " user columns");
        }
        if (x.rows() != item_ids.size() || s.rows() != attribute_ids.size()) {
            throw DimensionError("dataset: id lists do not match X " + x.shape() + " / S " + s.shape());
        }
        for (double v : x.data()) {
            if (v < 0.0) throw DataError("dataset: behavior entries must be nonnegative");
        }
    }
};

/// The dataset restricted to the given user columns, in that order.
inline InteractionDataset select_users(const InteractionDataset& data, std::span<const std::size_t> users) {
    InteractionDataset out;
    out.x = select_columns(data.x, users);
    out.s = select_columns(data.s, users);
    out.item_ids = data.item_ids;
    out.attribute_ids = data.attribute_ids;
    out.user_ids.reserve(users.size());
    for (std::size_t u : users) out.user_ids.push_back(data.user_ids.at(u));
    return out;
}

}  // namespace llae
