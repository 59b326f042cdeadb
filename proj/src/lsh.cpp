#include "chac/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "chac/kernels.hpp"
#include "chac/rng.hpp"

namespace chac {

void LshParams::validate() const {
    if (!(c > 1.0)) throw std::invalid_argument("LshParams: c must exceed 1");
    if (!(beta > 0.0)) throw std::invalid_argument("LshParams: beta must be positive");
    if (!(big_delta > 0.0)) throw std::invalid_argument("LshParams: big_delta must be positive");
    if (!(bucket_width > 0.0)) throw std::invalid_argument("LshParams: bucket_width must be positive");
    if (repetitions < 1) throw std::invalid_argument("LshParams: repetitions must be >= 1");
    if (!(kappa_k > 0.0) || !(kappa_l > 0.0)) {
        throw std::invalid_argument("LshParams: kappa multipliers must be positive");
    }
    if (max_probe_factor < 1) throw std::invalid_argument("LshParams: max_probe_factor must be >= 1");
}

double estimate_collision_prob(double dist, double width, std::size_t samples,
                               std::uint64_t seed) {
    if (!(width > 0.0) || !(dist >= 0.0) || samples == 0) {
        throw std::invalid_argument("estimate_collision_prob: bad arguments");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> shift(0.0, width);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double projected_gap = gauss(rng) * dist;
        const double b = shift(rng);
        // both points land in bucket 0 of this atom iff the shifted gap stays inside
        if (std::floor((projected_gap + b) / width) == 0.0) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(samples);
}

LshNns::LshNns(std::size_t dim, LshParams params, std::span<const Centroid> points)
    : dim_(dim), params_(params) {
    params_.validate();
    if (dim_ == 0) throw std::invalid_argument("LshNns: dimension must be >= 1");

    scale_min_ = static_cast<int>(std::ceil(std::log2(params_.beta)));
    scale_max_ = static_cast<int>(std::ceil(std::log2(params_.big_delta)));
    if (scale_max_ < scale_min_) scale_max_ = scale_min_;

    const double n_eff = std::max<double>(static_cast<double>(points.size()), 2.0);
    if (params_.p2_hint > 0.0) {
        p2_hat_ = params_.p2_hint;
    } else {
        // scale-free: the atom collision probability depends only on dist/width
        p2_hat_ = estimate_collision_prob(params_.c, params_.bucket_width, 10000,
                                          splitmix64(params_.seed ^ 0x70325748ull));
    }
    p2_hat_ = std::clamp(p2_hat_, 1e-6, 1.0 - 1e-6);

    if (params_.l_ors > 0) {
        l_ = params_.l_ors;
    } else {
        const double l_val = std::pow(n_eff, 1.0 / (params_.c * params_.c)) * params_.kappa_l *
                             std::log(n_eff);
        l_ = static_cast<std::uint32_t>(std::max(1.0, std::ceil(l_val)));
    }
    if (params_.k_ands > 0) {
        k_ = params_.k_ands;
    } else {
        const double log_ratio = std::max(std::log(params_.big_delta / params_.beta), 1.0);
        const double numer = params_.kappa_k * std::log(n_eff) + std::log(static_cast<double>(l_)) +
                             std::log(log_ratio);
        const double k_val = numer / std::log(1.0 / p2_hat_);
        k_ = static_cast<std::uint32_t>(std::max(1.0, std::ceil(k_val)));
    }

    const std::size_t scales = scale_count();
    const std::size_t atoms = static_cast<std::size_t>(params_.repetitions) * scales * l_ * k_;
    directions_.resize(atoms * dim_);
    offsets_.resize(atoms);
    tables_.resize(static_cast<std::size_t>(params_.repetitions) * scales * l_);

    std::mt19937_64 rng(params_.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::size_t atom = 0;
    for (std::uint32_t rep = 0; rep < params_.repetitions; ++rep) {
        for (std::size_t s = 0; s < scales; ++s) {
            const double width = scale_width(s);
            std::uniform_real_distribution<double> shift(0.0, width);
            for (std::uint32_t l = 0; l < l_; ++l) {
                for (std::uint32_t k = 0; k < k_; ++k, ++atom) {
                    double* dir = directions_.data() + atom * dim_;
                    for (std::size_t j = 0; j < dim_; ++j) {
                        dir[j] = gauss(rng);
                    }
                    offsets_[atom] = shift(rng);
                }
            }
        }
    }

    for (const Centroid& p : points) {
        insert(p);
    }
}

std::size_t LshNns::table_index(std::uint32_t rep, std::size_t scale, std::uint32_t l) const {
    return (static_cast<std::size_t>(rep) * scale_count() + scale) * l_ + l;
}

double LshNns::scale_width(std::size_t scale) const {
    return params_.bucket_width * std::ldexp(1.0, scale_min_ + static_cast<int>(scale));
}

std::uint64_t LshNns::composite_key(std::uint32_t rep, std::size_t scale, std::uint32_t l,
                                    const double* x) const {
    const double width = scale_width(scale);
    const std::size_t base = table_index(rep, scale, l) * k_;
    std::uint64_t key = 0xcbf29ce484222325ull;
    for (std::uint32_t k = 0; k < k_; ++k) {
        const std::size_t atom = base + k;
        const double proj = simd::dot(directions_.data() + atom * dim_, x, dim_);
        const auto h = static_cast<std::int64_t>(std::floor((proj + offsets_[atom]) / width));
        key = splitmix64(key ^ static_cast<std::uint64_t>(h));
    }
    return key;
}

void LshNns::insert(const Centroid& u) {
    if (u.coords.size() != dim_) {
        throw std::invalid_argument("LshNns::insert: dimension mismatch");
    }
    if (!live_.emplace(u.id, u).second) {
        throw std::invalid_argument("LshNns::insert: duplicate id " + std::to_string(u.id));
    }
    for (std::uint32_t rep = 0; rep < params_.repetitions; ++rep) {
        for (std::size_t s = 0; s < scale_count(); ++s) {
            for (std::uint32_t l = 0; l < l_; ++l) {
                const std::uint64_t key = composite_key(rep, s, l, u.coords.data());
                tables_[table_index(rep, s, l)][key].push_back(u.id);
            }
        }
    }
}

void LshNns::erase(const Centroid& u) {
    auto it = live_.find(u.id);
    if (it == live_.end()) {
        throw std::invalid_argument("LshNns::erase: missing id " + std::to_string(u.id));
    }
    const Centroid& stored = it->second;
    for (std::uint32_t rep = 0; rep < params_.repetitions; ++rep) {
        for (std::size_t s = 0; s < scale_count(); ++s) {
            for (std::uint32_t l = 0; l < l_; ++l) {
                Table& table = tables_[table_index(rep, s, l)];
                const std::uint64_t key = composite_key(rep, s, l, stored.coords.data());
                auto bucket_it = table.find(key);
                if (bucket_it == table.end()) continue;
                Bucket& bucket = bucket_it->second;
                auto pos = std::find(bucket.begin(), bucket.end(), u.id);
                if (pos != bucket.end()) {
                    *pos = bucket.back();
                    bucket.pop_back();
                }
                if (bucket.empty()) {
                    table.erase(bucket_it);
                }
            }
        }
    }
    live_.erase(it);
}

QueryResult LshNns::query(std::span<const double> u,
                          std::optional<std::uint64_t> excluded) const {
    if (u.size() != dim_) {
        throw std::invalid_argument("LshNns::query: dimension mismatch");
    }
    const std::size_t max_probe = static_cast<std::size_t>(params_.max_probe_factor) * l_;
    const std::uint64_t skip = excluded.value_or(std::numeric_limits<std::uint64_t>::max());

    for (std::size_t s = 0; s < scale_count(); ++s) {
        double best_dist = std::numeric_limits<double>::infinity();
        const Centroid* best = nullptr;
        std::size_t probed = 0;
        for (std::uint32_t rep = 0; rep < params_.repetitions && probed < max_probe; ++rep) {
            for (std::uint32_t l = 0; l < l_ && probed < max_probe; ++l) {
                const Table& table = tables_[table_index(rep, s, l)];
                const std::uint64_t key = composite_key(rep, s, l, u.data());
                auto bucket_it = table.find(key);
                if (bucket_it == table.end()) continue;
                for (const std::uint64_t id : bucket_it->second) {
                    if (id == skip) continue;
                    if (probed >= max_probe) break;
                    ++probed;
                    const Centroid& cand = live_.at(id);
                    const double dist = euclidean_dist(u, cand.coords);
                    if (dist < best_dist || (dist == best_dist && best && cand.id < best->id)) {
                        best_dist = dist;
                        best = &cand;
                    }
                }
            }
        }
        if (best != nullptr) {
            return {*best, best_dist};
        }
    }

    // nothing collided at any scale; answer from a full scan so the query
    // stays total
    fallbacks_.fetch_add(1, std::memory_order_relaxed);
    double best_dist = std::numeric_limits<double>::infinity();
    const Centroid* best = nullptr;
    for (const auto& [id, cand] : live_) {
        if (id == skip) continue;
        const double dist = euclidean_dist(u, cand.coords);
        if (dist < best_dist || (dist == best_dist && best && cand.id < best->id)) {
            best_dist = dist;
            best = &cand;
        }
    }
    if (best == nullptr) {
        throw EmptyStoreError();
    }
    return {*best, best_dist};
}

std::vector<std::size_t> LshNns::buckets_per_table() const {
    std::vector<std::size_t> counts;
    counts.reserve(tables_.size());
    for (const Table& t : tables_) {
        counts.push_back(t.size());
    }
    return counts;
}

std::size_t LshNns::total_bucket_entries() const {
    std::size_t total = 0;
    for (const Table& t : tables_) {
        for (const auto& [key, bucket] : t) {
            total += bucket.size();
        }
    }
    return total;
}

}  // namespace chac
