#include "chac/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chac/rng.hpp"

namespace chac {

CoveringNet::CoveringNet(Point center, double radius, double spacing)
    : center_(std::move(center)), radius_(radius), spacing_(spacing) {
    const std::size_t d = center_.size();
    if (d == 0) throw std::invalid_argument("CoveringNet: dimension must be >= 1");
    if (!(radius_ > 0.0) || !(spacing_ > 0.0)) {
        throw std::invalid_argument("CoveringNet: radius and spacing must be positive");
    }
    const double raw_step = spacing_ / std::sqrt(static_cast<double>(d));
    step_ = std::ldexp(1.0, static_cast<int>(std::floor(std::log2(raw_step))));
    if (!(step_ > 0.0) || !std::isfinite(step_)) {
        throw std::invalid_argument("CoveringNet: spacing out of range");
    }
    if (radius_ / step_ >= 0x1p51) {
        throw std::invalid_argument("CoveringNet: spacing too fine relative to the radius");
    }
    lo_.resize(d);
    const double steps_in_radius = std::floor(radius_ / step_) + 1.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double cells = std::nearbyint(center_[i] / step_);
        if (std::abs(cells) >= 0x1p51) {
            throw std::invalid_argument("CoveringNet: spacing too fine relative to the center");
        }
        center_[i] = cells * step_;  // align the center so grid points are exact
        lo_[i] = center_[i] - steps_in_radius * step_;
    }
}

Point CoveringNet::snap(std::span<const double> u) const {
    const std::size_t d = center_.size();
    if (u.size() != d) throw std::invalid_argument("CoveringNet::snap: dimension mismatch");
    Point out(d);
    bool clamped = false;
    for (std::size_t i = 0; i < d; ++i) {
        double x = u[i];
        const double hi = center_[i] + radius_;
        if (x < lo_[i]) {
            x = lo_[i];
            clamped = true;
        } else if (x > hi) {
            x = hi;
            clamped = true;
        }
        double k = std::floor((x - center_[i]) / step_);
        double y = center_[i] + k * step_;
        // exact floor correction: grid points and comparisons are exact, the
        // division above may be off by one ulp
        if (y > x) {
            y = center_[i] + (k - 1.0) * step_;
        } else if (x >= y + step_) {
            y = center_[i] + (k + 1.0) * step_;
        }
        out[i] = y;
    }
    if (clamped) clamps_.fetch_add(1, std::memory_order_relaxed);
    return out;
}

double hac_query_beta(double c, double lambda, double delta) {
    if (!(lambda > 1.0) || !(lambda < c)) {
        throw std::invalid_argument("hac_query_beta: need 1 < lambda < c");
    }
    if (!(delta > 0.0)) {
        throw std::invalid_argument("hac_query_beta: need delta > 0");
    }
    return delta * (lambda - 1.0) / ((1.0 + c) * lambda);
}

AdaptiveNns::AdaptiveNns(std::size_t dim, std::size_t capacity, const CoveringNet& net,
                         NnsFactory factory, NnsApproxSpec level_spec, std::uint64_t seed)
    : dim_(dim),
      capacity_(capacity),
      net_(net),
      factory_(std::move(factory)),
      level_spec_(level_spec),
      seed_base_(seed) {
    if (dim_ == 0 || capacity_ == 0) {
        throw std::invalid_argument("AdaptiveNns: dimension and capacity must be >= 1");
    }
    if (net_.dim() != dim_) {
        throw std::invalid_argument("AdaptiveNns: net dimension mismatch");
    }
    std::size_t top = 0;
    while ((std::size_t{1} << top) < capacity_) ++top;
    levels_.resize(top + 1);
}

std::uint64_t AdaptiveNns::next_seed() { return splitmix64(seed_base_ ^ ++rebuilds_); }

void AdaptiveNns::insert(const Centroid& u) {
    if (u.coords.size() != dim_) {
        throw std::invalid_argument("AdaptiveNns::insert: dimension mismatch");
    }
    if (live_count_ >= capacity_) {
        throw std::invalid_argument("AdaptiveNns::insert: capacity exceeded");
    }
    if (where_.contains(u.id)) {
        throw std::invalid_argument("AdaptiveNns::insert: duplicate id " + std::to_string(u.id));
    }
    levels_[0].members.push_back(u);
    where_[u.id] = {0, static_cast<std::uint32_t>(levels_[0].members.size() - 1)};
    ++live_count_;

    std::size_t i = 0;
    while (levels_[i].members.size() > (std::size_t{1} << i)) {
        if (i + 1 >= levels_.size()) {
            throw std::logic_error("AdaptiveNns: cascade past the top level");
        }
        Level& from = levels_[i];
        Level& to = levels_[i + 1];
        moves_ += from.members.size();
        for (Centroid& c : from.members) {
            where_[c.id] = {static_cast<std::uint32_t>(i + 1),
                            static_cast<std::uint32_t>(to.members.size())};
            to.members.push_back(std::move(c));
        }
        from.members.clear();
        from.store.reset();
        to.store = factory_(to.members, next_seed());
        ++i;
    }
    if (i == 0) {
        // no spill: level 0 is instantiated fresh on its single point
        levels_[0].store = factory_(levels_[0].members, next_seed());
    }
}

void AdaptiveNns::remove_from_level(std::size_t level, std::size_t slot) {
    Level& lv = levels_[level];
    const std::size_t last = lv.members.size() - 1;
    if (slot != last) {
        lv.members[slot] = std::move(lv.members[last]);
        where_[lv.members[slot].id] = {static_cast<std::uint32_t>(level),
                                       static_cast<std::uint32_t>(slot)};
    }
    lv.members.pop_back();
    if (lv.members.empty()) {
        lv.store.reset();
    }
}

void AdaptiveNns::erase(const Centroid& u) {
    auto it = where_.find(u.id);
    if (it == where_.end()) {
        throw std::invalid_argument("AdaptiveNns::erase: missing id " + std::to_string(u.id));
    }
    const auto [level, slot] = it->second;
    if (levels_[level].store) {
        levels_[level].store->erase(u);
    }
    remove_from_level(level, slot);
    where_.erase(it);
    --live_count_;
}

QueryResult AdaptiveNns::query(std::span<const double> u,
                               std::optional<std::uint64_t> excluded) const {
    const Point snapped = net_.snap(u);
    bool found = false;
    QueryResult best;
    for (const Level& lv : levels_) {
        if (!lv.store || lv.members.empty()) continue;
        if (excluded && lv.members.size() == 1 && lv.members.front().id == *excluded) continue;
        QueryResult r = lv.store->query(snapped, excluded);
        if (!found || r.distance < best.distance ||
            (r.distance == best.distance && r.neighbor.id < best.neighbor.id)) {
            best = std::move(r);
            found = true;
        }
    }
    if (!found) {
        throw EmptyStoreError();
    }
    best.distance = euclidean_dist(u, best.neighbor.coords);
    return best;
}

NnsApproxSpec AdaptiveNns::approx_spec() const {
    return {level_spec_.alpha,
            level_spec_.beta + (level_spec_.alpha + 1.0) * net_.spacing()};
}

void AdaptiveNns::check_invariants() const {
    std::size_t total = 0;
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        const Level& lv = levels_[i];
        if (lv.members.size() > (std::size_t{1} << i)) {
            throw std::logic_error("AdaptiveNns: level " + std::to_string(i) + " overflows");
        }
        if (!lv.members.empty() && !lv.store) {
            throw std::logic_error("AdaptiveNns: level " + std::to_string(i) + " has no store");
        }
        for (std::size_t s = 0; s < lv.members.size(); ++s) {
            auto it = where_.find(lv.members[s].id);
            if (it == where_.end() || it->second.first != i || it->second.second != s) {
                throw std::logic_error("AdaptiveNns: membership index out of sync");
            }
        }
        total += lv.members.size();
    }
    if (total != live_count_ || where_.size() != live_count_) {
        throw std::logic_error("AdaptiveNns: levels do not partition the live set");
    }
}

}  // namespace chac
