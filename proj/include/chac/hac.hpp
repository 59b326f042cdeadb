#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>

#include "chac/adaptive.hpp"
#include "chac/geometry.hpp"
#include "chac/nns.hpp"

namespace chac {

enum class HacMode { exact, heap_approx, bucket_approx };
enum class NnsBackend { exact, lsh_adaptive };

struct HacConfig {
    double epsilon = 0.1;
    HacMode mode = HacMode::heap_approx;
    NnsBackend backend = NnsBackend::exact;
    double c_target = 2.0;   // end-to-end approximation target (lsh_adaptive)
    double lambda = 1.5;     // additive-to-multiplicative slack split, in (1, c/(1+eps))
    std::optional<DistanceBounds> bounds;
    std::uint64_t seed = 0;
    // lsh knobs; 0 means derive at build time
    std::uint32_t lsh_k = 0;
    std::uint32_t lsh_l = 0;
    std::uint32_t lsh_gamma = 1;
    // per-operation queue assertions: at most one live entry below delta, one
    // live entry per source centroid; costs a map update per queue operation
    bool debug_checks = false;

    void validate() const;
};

struct RunStats {
    std::uint64_t merges = 0;
    std::uint64_t stale_dequeues = 0;  // dequeued tuples whose target was already merged
    std::uint64_t requeues = 0;
    std::uint64_t nns_queries = 0;
    std::uint64_t nns_inserts = 0;
    std::uint64_t nns_deletes = 0;
    std::uint64_t identical_centroid_merges = 0;
    std::uint64_t max_requeues_per_centroid = 0;
    double init_seconds = 0.0;
    double loop_seconds = 0.0;
    double total_seconds = 0.0;

    double gamma() const {
        return merges == 0 ? 0.0
                           : static_cast<double>(stale_dequeues) / static_cast<double>(merges);
    }
};

/// Live centroids plus a coordinate index for spotting coordinate-identical
/// centroids in O(1).
class ActiveSet {
public:
    void insert(const Centroid& c);
    void erase(std::uint64_t id);
    const Centroid* find(std::uint64_t id) const;
    const Centroid* find_by_coords(std::span<const double> coords) const;
    std::size_t size() const { return by_id_.size(); }

    template <class F>
    void for_each(F&& f) const {
        for (const auto& [id, c] : by_id_) f(c);
    }

private:
    std::unordered_map<std::uint64_t, Centroid> by_id_;
    std::unordered_map<std::string, std::uint64_t> by_coords_;
};

/// Instrumentation for invariant checks: on_merge fires right before `a` and
/// `b` are retired. For identical-centroid absorptions `a` is the in-flight
/// centroid and is not yet (and never was) in the active set. backend_factory,
/// when set, replaces the configured store (deduplicated points and live-set
/// capacity are passed in).
struct EngineHooks {
    std::function<void(const Centroid& a, const Centroid& b, double distance,
                       const ActiveSet& active)>
        on_merge;
    std::function<std::unique_ptr<DynamicNns>(const Dataset& points, std::size_t capacity)>
        backend_factory;
};

struct HacResult {
    Dendrogram dendrogram;
    RunStats stats;
    std::vector<std::uint32_t> leaf_of_input;  // original row -> dendrogram leaf
    std::optional<DistanceBounds> bounds_used;
};

/// The heap engine: queue seeded with one approximate-nearest-neighbor entry
/// per point, then dequeue-merge-or-requeue until done. mode=exact pins
/// epsilon=0 and the exact backend. Duplicate input rows are folded into
/// initial weights first. Dispatches to the bucket engine when
/// config.mode == bucket_approx.
HacResult run_hac(const Dataset& points, const HacConfig& config,
                  const EngineHooks* hooks = nullptr);

/// Round-based baseline: the merge threshold grows by (1+epsilon) per round;
/// each round every active centroid whose approximate nearest neighbor lies
/// within the threshold is merged, and each new centroid is re-checked against
/// the threshold until its neighbor falls outside.
HacResult run_hac_bucket(const Dataset& points, const HacConfig& config,
                         const EngineHooks* hooks = nullptr);

/// Deterministic exact centroid HAC (epsilon = 0, exact backend).
Dendrogram exact_hac(const Dataset& points);

const char* to_string(HacMode m);
const char* to_string(NnsBackend b);

}  // namespace chac
