#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "chac/nns.hpp"

namespace chac {

/// Implicit hypergrid around `center`: any point of the radius ball snaps to a
/// grid point at distance < spacing. The grid step is the largest power of two
/// <= spacing/sqrt(d) and the center is aligned to it, which makes snapping
/// exactly idempotent in floating point. The grid itself is never materialized.
class CoveringNet {
public:
    CoveringNet(Point center, double radius, double spacing);
    CoveringNet(const CoveringNet& other)
        : center_(other.center_),
          radius_(other.radius_),
          spacing_(other.spacing_),
          step_(other.step_),
          lo_(other.lo_),
          clamps_(other.clamps_.load(std::memory_order_relaxed)) {}
    CoveringNet& operator=(const CoveringNet& other) {
        center_ = other.center_;
        radius_ = other.radius_;
        spacing_ = other.spacing_;
        step_ = other.step_;
        lo_ = other.lo_;
        clamps_.store(other.clamps_.load(std::memory_order_relaxed),
                      std::memory_order_relaxed);
        return *this;
    }

    /// O(d). Coordinates outside the radius box are clamped first (counted).
    Point snap(std::span<const double> u) const;

    std::size_t dim() const { return center_.size(); }
    double spacing() const { return spacing_; }
    double radius() const { return radius_; }
    double grid_step() const { return step_; }
    const Point& center() const { return center_; }
    std::uint64_t clamp_count() const { return clamps_.load(std::memory_order_relaxed); }

private:
    Point center_;  // grid-aligned
    double radius_ = 0.0;
    double spacing_ = 0.0;
    double step_ = 0.0;
    std::vector<double> lo_;  // grid-aligned lower clamp bound per coordinate
    mutable std::atomic<std::uint64_t> clamps_{0};
};

/// Additive slack beta0 = delta*(lambda-1)/((1+c)*lambda): a (c/lambda, beta0)
/// store answers every engine query as well as a purely multiplicative
/// c-approximate one would.
double hac_query_beta(double c, double lambda, double delta);

/// Builds an oblivious store over a fixed point set with the given randomness.
using NnsFactory =
    std::function<std::unique_ptr<DynamicNns>(std::span<const Centroid>, std::uint64_t seed)>;

/// Wraps an oblivious-update ANNS so its guarantees survive updates that
/// depend on earlier answers. Points live in level sets S_0, S_1, ... with
/// |S_i| <= 2^i; an overflowing level spills wholesale into the next and both
/// stores are rebuilt from scratch with fresh randomness. Queries are snapped
/// onto the covering net before they reach any level store, so the stores
/// only ever see points from a fixed finite set.
class AdaptiveNns final : public DynamicNns {
public:
    AdaptiveNns(std::size_t dim, std::size_t capacity, const CoveringNet& net,
                NnsFactory factory, NnsApproxSpec level_spec, std::uint64_t seed);

    void insert(const Centroid& u) override;
    void erase(const Centroid& u) override;
    QueryResult query(std::span<const double> u,
                      std::optional<std::uint64_t> excluded) const override;
    std::size_t size() const override { return live_count_; }
    /// Level spec (a, b) combined with the net detour of at most spacing:
    /// (a, b + (a + 1) * spacing).
    NnsApproxSpec approx_spec() const override;

    std::size_t level_count() const { return levels_.size(); }
    std::size_t level_size(std::size_t i) const { return levels_[i].members.size(); }
    std::uint64_t total_moves() const { return moves_; }
    std::uint64_t rebuild_count() const { return rebuilds_; }
    const CoveringNet& net() const { return net_; }

    /// Checks |S_i| <= 2^i, disjointness, and that the union is the live set.
    void check_invariants() const;

private:
    struct Level {
        std::vector<Centroid> members;
        std::unique_ptr<DynamicNns> store;
    };

    std::uint64_t next_seed();
    void remove_from_level(std::size_t level, std::size_t slot);

    std::size_t dim_;
    std::size_t capacity_;
    CoveringNet net_;
    NnsFactory factory_;
    NnsApproxSpec level_spec_;
    std::uint64_t seed_base_;
    std::uint64_t rebuilds_ = 0;
    std::uint64_t moves_ = 0;
    std::size_t live_count_ = 0;
    std::vector<Level> levels_;
    std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> where_;
};

}  // namespace chac
