#pragma once

// Brute-force reference implementations the library is tested against. These
// stay off the library's code paths: plain scalar loops, explicit leaf sets,
// full rescans.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "chac/geometry.hpp"
#include "chac/metrics.hpp"

namespace oracle {

inline double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return std::sqrt(s);
}

inline chac::Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed,
                                    double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(lo, hi);
    chac::Dataset out(d);
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (double& v : row) v = coord(rng);
        out.push_back(row);
    }
    return out;
}

// Exact centroid HAC by rescanning all active pairs each step, ties broken by
// (distance, smaller id, larger id). Also records the step-optimal distance
// right before each merge.
struct NaiveHac {
    chac::Dendrogram dendrogram;
    std::vector<double> step_optimal;
};

inline NaiveHac naive_hac(const chac::Dataset& points,
                          const std::vector<std::uint64_t>& weights = {}) {
    const std::size_t n = points.size();
    NaiveHac out;
    out.dendrogram.num_leaves = n;
    struct Node {
        std::vector<double> coords;
        double weight;
        std::uint64_t id;
    };
    std::vector<Node> live;
    live.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = points[i];
        live.push_back({{row.begin(), row.end()},
                        weights.empty() ? 1.0 : static_cast<double>(weights[i]),
                        i});
    }
    std::uint64_t next_id = n;
    while (live.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < live.size(); ++i) {
            for (std::size_t j = i + 1; j < live.size(); ++j) {
                const double d = dist(live[i].coords, live[j].coords);
                const std::uint64_t lo = std::min(live[i].id, live[j].id);
                const std::uint64_t hi = std::max(live[i].id, live[j].id);
                const std::uint64_t blo = std::min(live[bi].id, live[bj].id);
                const std::uint64_t bhi = std::max(live[bi].id, live[bj].id);
                if (d < best || (d == best && (lo < blo || (lo == blo && hi < bhi)))) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        out.step_optimal.push_back(best);
        Node& a = live[bi];
        Node& b = live[bj];
        Node merged;
        merged.id = next_id++;
        merged.weight = a.weight + b.weight;
        merged.coords.resize(a.coords.size());
        for (std::size_t k = 0; k < merged.coords.size(); ++k) {
            merged.coords[k] = (a.weight * a.coords[k] + b.weight * b.coords[k]) / merged.weight;
        }
        out.dendrogram.merges.push_back({std::min(a.id, b.id), std::max(a.id, b.id), merged.id,
                                         best, static_cast<std::uint64_t>(merged.weight)});
        if (bi > bj) std::swap(bi, bj);
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(bj));
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(bi));
        live.push_back(std::move(merged));
    }
    return out;
}

// Pair-counting adjusted Rand index, a different algebraic route than the
// contingency-table formula.
inline double ari_pairs(const chac::Clustering& a, const chac::Clustering& b) {
    const std::size_t n = a.size();
    double n11 = 0, n00 = 0, n10 = 0, n01 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a.labels[i] == a.labels[j];
            const bool sb = b.labels[i] == b.labels[j];
            if (sa && sb) ++n11;
            else if (!sa && !sb) ++n00;
            else if (sa) ++n10;
            else ++n01;
        }
    }
    const double denom = (n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00);
    if (denom == 0.0) return 1.0;
    return 2.0 * (n11 * n00 - n10 * n01) / denom;
}

inline double nmi_direct(const chac::Clustering& a, const chac::Clustering& b) {
    const std::size_t n = a.size();
    const double dn = static_cast<double>(n);
    std::uint32_t ka = 0, kb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ka = std::max(ka, a.labels[i] + 1);
        kb = std::max(kb, b.labels[i] + 1);
    }
    std::vector<std::vector<std::uint64_t>> joint(ka, std::vector<std::uint64_t>(kb, 0));
    std::vector<std::uint64_t> ca(ka, 0), cb(kb, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[a.labels[i]][b.labels[i]];
        ++ca[a.labels[i]];
        ++cb[b.labels[i]];
    }
    double ha = 0, hb = 0, mi = 0;
    for (std::uint32_t i = 0; i < ka; ++i)
        if (ca[i] > 0) ha -= (ca[i] / dn) * std::log(ca[i] / dn);
    for (std::uint32_t j = 0; j < kb; ++j)
        if (cb[j] > 0) hb -= (cb[j] / dn) * std::log(cb[j] / dn);
    for (std::uint32_t i = 0; i < ka; ++i)
        for (std::uint32_t j = 0; j < kb; ++j)
            if (joint[i][j] > 0) {
                const double pij = joint[i][j] / dn;
                mi += pij * std::log(pij / ((ca[i] / dn) * (cb[j] / dn)));
            }
    if (ha == 0.0 && hb == 0.0) return 1.0;
    if (mi <= 0.0) return 0.0;
    return std::min(mi / (0.5 * (ha + hb)), 1.0);
}

// Explicit leaf sets per dendrogram node (leaves included).
inline std::vector<std::set<std::uint32_t>> leaf_sets(const chac::Dendrogram& dend) {
    std::vector<std::set<std::uint32_t>> sets(dend.num_leaves + dend.merges.size());
    for (std::uint32_t i = 0; i < dend.num_leaves; ++i) sets[i] = {i};
    for (const chac::MergeRecord& m : dend.merges) {
        sets[m.new_id] = sets[m.left_id];
        sets[m.new_id].insert(sets[m.right_id].begin(), sets[m.right_id].end());
    }
    return sets;
}

// LCA by scanning merges in order for the first cluster containing both.
inline std::size_t lca_by_leafsets(const std::vector<std::set<std::uint32_t>>& sets,
                                   std::size_t num_leaves, std::uint32_t i, std::uint32_t j) {
    for (std::size_t v = num_leaves; v < sets.size(); ++v) {
        if (sets[v].count(i) && sets[v].count(j)) return v;
    }
    return sets.size();
}

inline double purity_bruteforce(const chac::Dendrogram& dend, const chac::Clustering& truth) {
    const auto sets = leaf_sets(dend);
    const std::size_t n = dend.num_leaves;
    double sum = 0.0, pairs = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) {
            if (i == j || truth.labels[i] != truth.labels[j]) continue;
            const std::size_t v = lca_by_leafsets(sets, n, i, j);
            double same = 0.0;
            for (const std::uint32_t leaf : sets[v]) {
                if (truth.labels[leaf] == truth.labels[i]) same += 1.0;
            }
            sum += same / static_cast<double>(sets[v].size());
            pairs += 1.0;
        }
    }
    return sum / pairs;
}

inline double dasgupta_bruteforce(const chac::Dendrogram& dend, const chac::Dataset& points,
                                  const std::function<double(double)>& kernel) {
    const auto sets = leaf_sets(dend);
    const std::size_t n = dend.num_leaves;
    double sum = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = i + 1; j < n; ++j) {
            const std::size_t v = lca_by_leafsets(sets, n, i, j);
            sum += kernel(dist(points[i], points[j])) * static_cast<double>(sets[v].size());
        }
    }
    return sum;
}

// Ancestor relation through strict leaf-set containment rather than parent
// pointers.
inline std::uint64_t inversions_bruteforce(const chac::Dendrogram& dend, double delta) {
    const auto sets = leaf_sets(dend);
    const std::size_t n = dend.num_leaves;
    std::uint64_t count = 0;
    for (std::size_t u = 0; u < dend.merges.size(); ++u) {
        for (std::size_t v = 0; v < dend.merges.size(); ++v) {
            if (u == v) continue;
            const auto& su = sets[n + u];
            const auto& sv = sets[n + v];
            const bool ancestor =
                su.size() < sv.size() &&
                std::includes(sv.begin(), sv.end(), su.begin(), su.end());
            if (ancestor && dend.merges[u].distance >= (1.0 + delta) * dend.merges[v].distance) {
                ++count;
            }
        }
    }
    return count;
}

// Flatten characterization: a node is formed iff every merge in its subtree
// has distance <= tau; clusters are the maximal formed nodes.
inline chac::Clustering flatten_bruteforce(const chac::Dendrogram& dend, double tau) {
    const auto sets = leaf_sets(dend);
    const std::size_t n = dend.num_leaves;
    std::vector<double> max_cost(sets.size(), 0.0);
    for (const chac::MergeRecord& m : dend.merges) {
        max_cost[m.new_id] = std::max({m.distance, max_cost[m.left_id], max_cost[m.right_id]});
    }
    chac::Clustering out;
    out.labels.assign(n, 0);
    for (std::uint32_t leaf = 0; leaf < n; ++leaf) {
        // highest ancestor whose whole subtree stays within tau
        std::size_t best = leaf;
        for (std::size_t v = n; v < sets.size(); ++v) {
            if (sets[v].count(leaf) && max_cost[v] <= tau && sets[v].size() > sets[best].size()) {
                best = v;
            }
        }
        out.labels[leaf] = static_cast<std::uint32_t>(best);
    }
    std::vector<std::uint32_t> remap(sets.size(), std::numeric_limits<std::uint32_t>::max());
    std::uint32_t next = 0;
    for (std::uint32_t leaf = 0; leaf < n; ++leaf) {
        if (remap[out.labels[leaf]] == std::numeric_limits<std::uint32_t>::max()) {
            remap[out.labels[leaf]] = next++;
        }
        out.labels[leaf] = remap[out.labels[leaf]];
    }
    return out;
}

// Random dendrogram: repeatedly merge two random roots; distances drawn
// uniformly, optionally sorted to force monotonicity.
inline chac::Dendrogram random_dendrogram(std::size_t n, std::uint64_t seed,
                                          bool monotone = false) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(0.0, 10.0);
    std::vector<double> costs(n - 1);
    for (double& c : costs) c = d(rng);
    if (monotone) std::sort(costs.begin(), costs.end());
    chac::Dendrogram out;
    out.num_leaves = n;
    std::vector<std::uint64_t> roots(n);
    std::vector<std::uint64_t> sizes(2 * n - 1, 1);
    for (std::size_t i = 0; i < n; ++i) roots[i] = i;
    std::uint64_t next = n;
    for (std::size_t k = 0; k < n - 1; ++k) {
        std::uniform_int_distribution<std::size_t> pick(0, roots.size() - 1);
        std::size_t i = pick(rng), j;
        do {
            j = pick(rng);
        } while (j == i);
        const std::uint64_t a = roots[i], b = roots[j];
        sizes[next] = sizes[a] + sizes[b];
        out.merges.push_back({std::min(a, b), std::max(a, b), next, costs[k], sizes[next]});
        if (i > j) std::swap(i, j);
        roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(j));
        roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(i));
        roots.push_back(next++);
    }
    return out;
}

inline chac::Clustering random_labels(std::size_t n, std::uint32_t k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> pick(0, k - 1);
    std::vector<std::int64_t> raw(n);
    for (auto& v : raw) v = pick(rng);
    return chac::normalize_labels(raw);
}

}  // namespace oracle
