#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "chac/geometry.hpp"

namespace chac {

/// Returned neighbor satisfies D(u, v) <= alpha * D(u, S \ excluded) + beta.
struct NnsApproxSpec {
    double alpha = 1.0;
    double beta = 0.0;
};

struct QueryResult {
    Centroid neighbor;
    double distance = 0.0;  // euclidean_dist(query, neighbor.coords)
};

struct EmptyStoreError : std::runtime_error {
    EmptyStoreError() : std::runtime_error("nns query: no candidate besides the excluded id") {}
};

/// Dynamic nearest-neighbor store. Queries exclude by id, not by coordinates,
/// so self-exclusion works even when two live centroids momentarily share a
/// position. Single writer, multiple readers, no reader during a write.
class DynamicNns {
public:
    virtual ~DynamicNns() = default;

    /// Adds u; duplicate id is a hard error.
    virtual void insert(const Centroid& u) = 0;
    /// Removes u by id; missing id is a hard error.
    virtual void erase(const Centroid& u) = 0;
    /// Nearest live centroid to u with id != excluded, per approx_spec().
    /// Throws EmptyStoreError when no candidate exists.
    virtual QueryResult query(std::span<const double> u,
                              std::optional<std::uint64_t> excluded) const = 0;
    virtual std::size_t size() const = 0;
    virtual NnsApproxSpec approx_spec() const = 0;
};

/// Exact backend: flat coordinate matrix with a full kernel scan per query.
/// alpha = 1, beta = 0; ties broken by smallest id. Doubles as the oracle the
/// approximate backends are tested against.
class ExactNns final : public DynamicNns {
public:
    explicit ExactNns(std::size_t dim) : dim_(dim) {}

    void insert(const Centroid& u) override;
    void erase(const Centroid& u) override;
    QueryResult query(std::span<const double> u,
                      std::optional<std::uint64_t> excluded) const override;
    std::size_t size() const override { return ids_.size(); }
    NnsApproxSpec approx_spec() const override { return {1.0, 0.0}; }

private:
    std::size_t dim_;
    std::vector<double> coords_;  // row-major, one row per live slot
    std::vector<std::uint64_t> ids_;
    std::vector<std::uint64_t> weights_;
    std::unordered_map<std::uint64_t, std::size_t> slot_of_;
};

}  // namespace chac
