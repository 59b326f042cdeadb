#pragma once

#include <atomic>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "chac/nns.hpp"

namespace chac {

/// Multi-scale Euclidean LSH configuration. Collision radii are the powers of
/// two in [beta, 2*big_delta]; each scale carries l_ors tables whose composite
/// key is k_ands quantized Gaussian projections (an "L ors of K ands"),
/// replicated `repetitions` times.
struct LshParams {
    double c = 2.0;            // multiplicative approximation target, > 1
    double beta = 1e-3;        // additive slack; smallest collision radius
    double big_delta = 1.0;    // upper bound on point/query distances
    double bucket_width = 4.0; // quantization width in units of the scale radius
    std::uint32_t k_ands = 0;  // 0 = derive from n at build time
    std::uint32_t l_ors = 0;   // 0 = derive from n at build time
    std::uint32_t repetitions = 1;  // independent table sets (gamma)
    double kappa_k = 1.0;      // multipliers inside the derivations of K and L
    double kappa_l = 1.0;
    std::uint32_t max_probe_factor = 64;  // candidate cap per scale = factor * L
    double p2_hint = 0.0;      // 0 = estimate by Monte Carlo at build time
    std::uint64_t seed = 0;

    void validate() const;
};

/// Monte-Carlo estimate of the collision probability of one hash atom
/// h(x) = floor((a.x + b) / width) for two points at the given distance.
double estimate_collision_prob(double dist, double width, std::size_t samples,
                               std::uint64_t seed);

/// Oblivious-update dynamic ANNS. Hash atoms are sampled once at construction
/// and never resampled, so correctness holds only for updates that do not
/// depend on the structure's randomness; the adaptive wrapper restores
/// adaptive safety.
class LshNns final : public DynamicNns {
public:
    LshNns(std::size_t dim, LshParams params, std::span<const Centroid> points = {});

    void insert(const Centroid& u) override;
    void erase(const Centroid& u) override;
    /// Scans scales in increasing radius; returns the closest candidate found
    /// at the first scale with any collision. Falls back to a linear scan over
    /// the live set when nothing collides at any scale.
    QueryResult query(std::span<const double> u,
                      std::optional<std::uint64_t> excluded) const override;
    std::size_t size() const override { return live_.size(); }
    NnsApproxSpec approx_spec() const override {
        return {2.0 * params_.c, 2.0 * params_.c * params_.beta};
    }

    std::uint32_t k_ands() const { return k_; }
    std::uint32_t l_ors() const { return l_; }
    int scale_min() const { return scale_min_; }
    int scale_max() const { return scale_max_; }
    std::size_t scale_count() const { return static_cast<std::size_t>(scale_max_ - scale_min_) + 1; }
    double p2_hat() const { return p2_hat_; }
    std::uint64_t seed() const { return params_.seed; }
    std::size_t table_count() const { return tables_.size(); }
    std::vector<std::size_t> buckets_per_table() const;
    std::size_t total_bucket_entries() const;
    std::uint64_t fallback_queries() const { return fallbacks_.load(std::memory_order_relaxed); }

private:
    using Bucket = std::vector<std::uint64_t>;
    using Table = std::unordered_map<std::uint64_t, Bucket>;

    std::size_t table_index(std::uint32_t rep, std::size_t scale, std::uint32_t l) const;
    double scale_width(std::size_t scale) const;
    std::uint64_t composite_key(std::uint32_t rep, std::size_t scale, std::uint32_t l,
                                const double* x) const;

    std::size_t dim_;
    LshParams params_;
    std::uint32_t k_ = 1;
    std::uint32_t l_ = 1;
    int scale_min_ = 0;
    int scale_max_ = 0;
    double p2_hat_ = 0.0;
    std::vector<double> directions_;  // [rep][scale][l][k][dim]
    std::vector<double> offsets_;     // [rep][scale][l][k]
    std::vector<Table> tables_;       // [rep][scale][l]
    std::unordered_map<std::uint64_t, Centroid> live_;
    mutable std::atomic<std::uint64_t> fallbacks_{0};
};

}  // namespace chac
