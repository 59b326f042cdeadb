#include "chac/nns.hpp"

#include <cmath>
#include <limits>

#include "chac/kernels.hpp"

namespace chac {

void ExactNns::insert(const Centroid& u) {
    if (u.coords.size() != dim_) {
        throw std::invalid_argument("ExactNns::insert: dimension mismatch");
    }
    if (!slot_of_.emplace(u.id, ids_.size()).second) {
        throw std::invalid_argument("ExactNns::insert: duplicate id " + std::to_string(u.id));
    }
    coords_.insert(coords_.end(), u.coords.begin(), u.coords.end());
    ids_.push_back(u.id);
    weights_.push_back(u.weight);
}

void ExactNns::erase(const Centroid& u) {
    auto it = slot_of_.find(u.id);
    if (it == slot_of_.end()) {
        throw std::invalid_argument("ExactNns::erase: missing id " + std::to_string(u.id));
    }
    const std::size_t slot = it->second;
    const std::size_t last = ids_.size() - 1;
    if (slot != last) {
        std::copy_n(coords_.data() + last * dim_, dim_, coords_.data() + slot * dim_);
        ids_[slot] = ids_[last];
        weights_[slot] = weights_[last];
        slot_of_[ids_[slot]] = slot;
    }
    coords_.resize(last * dim_);
    ids_.pop_back();
    weights_.pop_back();
    slot_of_.erase(it);
}

QueryResult ExactNns::query(std::span<const double> u,
                            std::optional<std::uint64_t> excluded) const {
    if (u.size() != dim_) {
        throw std::invalid_argument("ExactNns::query: dimension mismatch");
    }
    double best_dist = std::numeric_limits<double>::infinity();
    std::size_t best_slot = ids_.size();
    for (std::size_t slot = 0; slot < ids_.size(); ++slot) {
        if (excluded && ids_[slot] == *excluded) {
            continue;
        }
        const double dist = std::sqrt(simd::l2_sq(u.data(), coords_.data() + slot * dim_, dim_));
        if (dist < best_dist ||
            (dist == best_dist && best_slot < ids_.size() && ids_[slot] < ids_[best_slot])) {
            best_dist = dist;
            best_slot = slot;
        }
    }
    if (best_slot == ids_.size()) {
        throw EmptyStoreError();
    }
    QueryResult r;
    r.neighbor.id = ids_[best_slot];
    r.neighbor.weight = weights_[best_slot];
    r.neighbor.coords.assign(coords_.data() + best_slot * dim_,
                             coords_.data() + (best_slot + 1) * dim_);
    r.distance = best_dist;
    return r;
}

}  // namespace chac
