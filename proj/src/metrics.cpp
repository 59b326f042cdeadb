#include "chac/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "chac/kernels.hpp"

namespace chac {

namespace {

struct Dsu {
    std::vector<std::uint32_t> parent;
    explicit Dsu(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::uint32_t>(i);
    }
    std::uint32_t find(std::uint32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void link(std::uint32_t a, std::uint32_t b) { parent[find(a)] = find(b); }
};

Clustering labels_from_dsu(Dsu& dsu, std::size_t n) {
    Clustering out;
    out.labels.resize(n);
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t root = dsu.find(static_cast<std::uint32_t>(i));
        auto it = remap.emplace(root, static_cast<std::uint32_t>(remap.size())).first;
        out.labels[i] = it->second;
    }
    return out;
}

// Ancestry machinery shared by purity, Dasgupta cost and the LCA-based
// oracles: parent pointers from the merge log, binary lifting for LCA, Euler
// intervals plus per-class sorted leaf positions for subtree class counts.
struct DendroTree {
    std::size_t n = 0;
    std::size_t total = 0;
    std::vector<std::uint32_t> parent;
    std::vector<std::uint32_t> depth;
    std::vector<std::uint64_t> leaf_count;
    std::vector<std::uint32_t> tin, tout;  // leaf-index intervals per node
    std::vector<std::vector<std::uint32_t>> up;

    explicit DendroTree(const Dendrogram& d) {
        n = d.num_leaves;
        if (n < 1 || d.merges.size() + 1 != n) {
            throw std::invalid_argument("metric requires a completed dendrogram");
        }
        total = n + d.merges.size();
        parent.assign(total, std::numeric_limits<std::uint32_t>::max());
        leaf_count.assign(total, 1);
        for (std::size_t k = 0; k < d.merges.size(); ++k) {
            const MergeRecord& m = d.merges[k];
            parent[m.left_id] = static_cast<std::uint32_t>(m.new_id);
            parent[m.right_id] = static_cast<std::uint32_t>(m.new_id);
            leaf_count[m.new_id] = leaf_count[m.left_id] + leaf_count[m.right_id];
        }
        depth.assign(total, 0);
        for (std::size_t v = total; v-- > 0;) {
            if (parent[v] != std::numeric_limits<std::uint32_t>::max()) {
                depth[v] = depth[parent[v]] + 1;
            }
        }
        // Euler intervals via children lists, iterative dfs from each root
        std::vector<std::array<std::uint32_t, 2>> kids(total, {0, 0});
        std::vector<bool> has_kids(total, false);
        for (const MergeRecord& m : d.merges) {
            kids[m.new_id] = {static_cast<std::uint32_t>(m.left_id),
                              static_cast<std::uint32_t>(m.right_id)};
            has_kids[m.new_id] = true;
        }
        tin.assign(total, 0);
        tout.assign(total, 0);
        std::uint32_t clock = 0;
        for (std::size_t root = 0; root < total; ++root) {
            if (parent[root] != std::numeric_limits<std::uint32_t>::max()) continue;
            std::vector<std::pair<std::uint32_t, bool>> stack{{static_cast<std::uint32_t>(root), false}};
            while (!stack.empty()) {
                auto [v, done] = stack.back();
                stack.pop_back();
                if (done) {
                    tout[v] = clock;
                    continue;
                }
                tin[v] = clock;
                if (!has_kids[v]) {
                    ++clock;
                    tout[v] = clock;
                    continue;
                }
                stack.push_back({v, true});
                stack.push_back({kids[v][1], false});
                stack.push_back({kids[v][0], false});
            }
        }
        std::size_t levels = 1;
        while ((std::size_t{1} << levels) < total) ++levels;
        up.assign(levels, std::vector<std::uint32_t>(total));
        for (std::size_t v = 0; v < total; ++v) {
            up[0][v] = parent[v] == std::numeric_limits<std::uint32_t>::max()
                           ? static_cast<std::uint32_t>(v)
                           : parent[v];
        }
        for (std::size_t k = 1; k < levels; ++k) {
            for (std::size_t v = 0; v < total; ++v) {
                up[k][v] = up[k - 1][up[k - 1][v]];
            }
        }
    }

    std::uint32_t lca(std::uint32_t a, std::uint32_t b) const {
        if (depth[a] < depth[b]) std::swap(a, b);
        std::uint32_t diff = depth[a] - depth[b];
        for (std::size_t k = 0; diff != 0; ++k, diff >>= 1) {
            if (diff & 1u) a = up[k][a];
        }
        if (a == b) return a;
        for (std::size_t k = up.size(); k-- > 0;) {
            if (up[k][a] != up[k][b]) {
                a = up[k][a];
                b = up[k][b];
            }
        }
        return up[0][a];
    }
};

struct ClassIndex {
    std::vector<std::vector<std::uint32_t>> positions;  // per class, sorted leaf tins

    ClassIndex(const DendroTree& tree, const Clustering& truth) {
        std::uint32_t num_classes = 0;
        for (const std::uint32_t c : truth.labels) num_classes = std::max(num_classes, c + 1);
        positions.resize(num_classes);
        for (std::size_t leaf = 0; leaf < truth.labels.size(); ++leaf) {
            positions[truth.labels[leaf]].push_back(tree.tin[leaf]);
        }
        for (auto& v : positions) std::sort(v.begin(), v.end());
    }

    std::uint64_t count_in(const DendroTree& tree, std::uint32_t node, std::uint32_t cls) const {
        const auto& pos = positions[cls];
        auto lo = std::lower_bound(pos.begin(), pos.end(), tree.tin[node]);
        auto hi = std::lower_bound(pos.begin(), pos.end(), tree.tout[node]);
        return static_cast<std::uint64_t>(hi - lo);
    }
};

double default_kernel(double dist) { return 1.0 / (1.0 + dist); }

}  // namespace

Clustering normalize_labels(std::span<const std::int64_t> raw) {
    Clustering out;
    out.labels.reserve(raw.size());
    std::unordered_map<std::int64_t, std::uint32_t> remap;
    for (const std::int64_t v : raw) {
        auto it = remap.emplace(v, static_cast<std::uint32_t>(remap.size())).first;
        out.labels.push_back(it->second);
    }
    return out;
}

Clustering flatten_at_threshold(const Dendrogram& dend, double tau, FlattenRule rule) {
    const std::size_t n = dend.num_leaves;
    const std::size_t total = n + dend.merges.size();
    Dsu dsu(total);
    if (rule == FlattenRule::skip_unformed) {
        std::vector<bool> formed(total, false);
        for (std::size_t i = 0; i < n; ++i) formed[i] = true;
        for (const MergeRecord& m : dend.merges) {
            if (m.distance <= tau && formed[m.left_id] && formed[m.right_id]) {
                formed[m.new_id] = true;
                dsu.link(static_cast<std::uint32_t>(m.left_id),
                         static_cast<std::uint32_t>(m.new_id));
                dsu.link(static_cast<std::uint32_t>(m.right_id),
                         static_cast<std::uint32_t>(m.new_id));
            }
        }
    } else {
        for (const MergeRecord& m : dend.merges) {
            if (m.distance <= tau) {
                dsu.link(static_cast<std::uint32_t>(m.left_id),
                         static_cast<std::uint32_t>(m.new_id));
                dsu.link(static_cast<std::uint32_t>(m.right_id),
                         static_cast<std::uint32_t>(m.new_id));
            }
        }
    }
    return labels_from_dsu(dsu, n);
}

double ari(const Clustering& a, const Clustering& b) {
    if (a.size() != b.size()) throw std::invalid_argument("ari: length mismatch");
    const std::size_t n = a.size();
    if (n == 0) throw std::invalid_argument("ari: empty clusterings");
    std::unordered_map<std::uint64_t, std::uint64_t> cells;
    std::unordered_map<std::uint32_t, std::uint64_t> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        ++cells[(static_cast<std::uint64_t>(a.labels[i]) << 32) | b.labels[i]];
        ++rows[a.labels[i]];
        ++cols[b.labels[i]];
    }
    auto comb2 = [](std::uint64_t x) {
        return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1);
    };
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [k, v] : cells) sum_cells += comb2(v);
    for (const auto& [k, v] : rows) sum_rows += comb2(v);
    for (const auto& [k, v] : cols) sum_cols += comb2(v);
    const double pairs = comb2(n);
    const double expected = pairs > 0.0 ? sum_rows * sum_cols / pairs : 0.0;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) {
        return 1.0;  // both partitions degenerate and identical
    }
    return (sum_cells - expected) / (max_index - expected);
}

double nmi(const Clustering& a, const Clustering& b) {
    if (a.size() != b.size()) throw std::invalid_argument("nmi: length mismatch");
    const std::size_t n = a.size();
    if (n == 0) throw std::invalid_argument("nmi: empty clusterings");
    std::unordered_map<std::uint64_t, std::uint64_t> cells;
    std::unordered_map<std::uint32_t, std::uint64_t> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        ++cells[(static_cast<std::uint64_t>(a.labels[i]) << 32) | b.labels[i]];
        ++rows[a.labels[i]];
        ++cols[b.labels[i]];
    }
    const double dn = static_cast<double>(n);
    auto entropy = [&](const std::unordered_map<std::uint32_t, std::uint64_t>& m) {
        double h = 0.0;
        for (const auto& [k, v] : m) {
            const double p = static_cast<double>(v) / dn;
            h -= p * std::log(p);
        }
        return h;
    };
    const double ha = entropy(rows);
    const double hb = entropy(cols);
    if (ha == 0.0 && hb == 0.0) {
        return 1.0;  // both single-cluster: identical partitions
    }
    double mi = 0.0;
    for (const auto& [key, v] : cells) {
        const std::uint64_t ra = rows.at(static_cast<std::uint32_t>(key >> 32));
        const std::uint64_t cb = cols.at(static_cast<std::uint32_t>(key & 0xffffffffu));
        const double pij = static_cast<double>(v) / dn;
        mi += pij * std::log(dn * static_cast<double>(v) /
                             (static_cast<double>(ra) * static_cast<double>(cb)));
    }
    const double denom = 0.5 * (ha + hb);
    if (denom <= 0.0 || mi <= 0.0) return 0.0;
    return std::min(mi / denom, 1.0);
}

double dendrogram_purity(const Dendrogram& dend, const Clustering& truth,
                         std::size_t exact_threshold, std::size_t sample_pairs,
                         std::uint64_t seed) {
    if (truth.size() != dend.num_leaves) {
        throw std::invalid_argument("dendrogram_purity: truth length mismatch");
    }
    const DendroTree tree(dend);
    const ClassIndex index(tree, truth);
    std::vector<std::vector<std::uint32_t>> members(index.positions.size());
    for (std::size_t leaf = 0; leaf < truth.labels.size(); ++leaf) {
        members[truth.labels[leaf]].push_back(static_cast<std::uint32_t>(leaf));
    }
    auto pair_purity = [&](std::uint32_t i, std::uint32_t j) {
        const std::uint32_t v = tree.lca(i, j);
        return static_cast<double>(index.count_in(tree, v, truth.labels[i])) /
               static_cast<double>(tree.leaf_count[v]);
    };
    double total_pairs = 0.0;
    for (const auto& m : members) {
        total_pairs += static_cast<double>(m.size()) * static_cast<double>(m.size() - 1);
    }
    if (total_pairs == 0.0) {
        throw std::invalid_argument("dendrogram_purity: no same-class pair exists");
    }
    if (dend.num_leaves <= exact_threshold) {
        double sum = 0.0;
        for (const auto& m : members) {
            for (std::size_t i = 0; i < m.size(); ++i) {
                for (std::size_t j = i + 1; j < m.size(); ++j) {
                    sum += 2.0 * pair_purity(m[i], m[j]);
                }
            }
        }
        return sum / total_pairs;
    }
    // sample ordered same-class pairs uniformly: class by pair mass, then members
    std::vector<double> mass;
    mass.reserve(members.size());
    for (const auto& m : members) {
        mass.push_back(static_cast<double>(m.size()) * static_cast<double>(m.size() - 1));
    }
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick_class(mass.begin(), mass.end());
    double sum = 0.0;
    for (std::size_t s = 0; s < sample_pairs; ++s) {
        const auto& m = members[pick_class(rng)];
        std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
        std::size_t i = pick(rng), j;
        do {
            j = pick(rng);
        } while (j == i);
        sum += pair_purity(m[i], m[j]);
    }
    return sum / static_cast<double>(sample_pairs);
}

double dasgupta_cost(const Dendrogram& dend, const Dataset& points,
                     const SimilarityKernel& kernel, std::size_t exact_threshold,
                     std::size_t sample_pairs, std::uint64_t seed) {
    if (points.size() != dend.num_leaves) {
        throw std::invalid_argument("dasgupta_cost: dataset/dendrogram size mismatch");
    }
    const std::size_t n = dend.num_leaves;
    if (n < 2) return 0.0;
    const DendroTree tree(dend);
    const SimilarityKernel& w = kernel ? kernel : static_cast<SimilarityKernel>(default_kernel);
    auto pair_cost = [&](std::uint32_t i, std::uint32_t j) {
        const double dist = euclidean_dist(points[i], points[j]);
        return w(dist) * static_cast<double>(tree.leaf_count[tree.lca(i, j)]);
    };
    const double total_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    if (n <= exact_threshold) {
        double sum = 0.0;
        for (std::uint32_t i = 0; i < n; ++i) {
            for (std::uint32_t j = i + 1; j < n; ++j) {
                sum += pair_cost(i, j);
            }
        }
        return sum;
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
    double sum = 0.0;
    for (std::size_t s = 0; s < sample_pairs; ++s) {
        std::uint32_t i = pick(rng), j;
        do {
            j = pick(rng);
        } while (j == i);
        sum += pair_cost(i, j);
    }
    return sum * total_pairs / static_cast<double>(sample_pairs);
}

std::uint64_t delta_inversions(const Dendrogram& dend, double delta_param) {
    if (!(delta_param >= 0.0)) {
        throw std::invalid_argument("delta_inversions: delta must be >= 0");
    }
    const std::size_t n = dend.num_leaves;
    const std::size_t total = n + dend.merges.size();
    std::vector<std::uint32_t> parent(total, std::numeric_limits<std::uint32_t>::max());
    for (const MergeRecord& m : dend.merges) {
        parent[m.left_id] = static_cast<std::uint32_t>(m.new_id);
        parent[m.right_id] = static_cast<std::uint32_t>(m.new_id);
    }
    std::uint64_t count = 0;
    for (const MergeRecord& m : dend.merges) {
        const double cost_u = m.distance;
        for (std::uint32_t v = parent[m.new_id]; v != std::numeric_limits<std::uint32_t>::max();
             v = parent[v]) {
            const double cost_v = dend.merges[v - n].distance;
            if (cost_u >= (1.0 + delta_param) * cost_v) ++count;
        }
    }
    return count;
}

std::vector<double> cut_thresholds(const Dendrogram& dend, const CutPolicy& policy) {
    std::vector<double> taus;
    if (policy.mode == CutMode::all_thresholds) {
        taus.reserve(dend.merges.size() + 1);
        for (const MergeRecord& m : dend.merges) taus.push_back(m.distance);
        std::sort(taus.begin(), taus.end());
        taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    } else {
        if (!(policy.log_base > 1.0)) {
            throw std::invalid_argument("cut_thresholds: log_base must exceed 1");
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (const MergeRecord& m : dend.merges) {
            if (m.distance > 0.0) lo = std::min(lo, m.distance);
            hi = std::max(hi, m.distance);
        }
        if (std::isfinite(lo)) {
            for (double tau = lo; tau < hi * policy.log_base; tau *= policy.log_base) {
                taus.push_back(tau);
            }
        } else {
            taus.push_back(0.0);
        }
    }
    taus.push_back(std::numeric_limits<double>::infinity());
    return taus;
}

BestCut best_cut_score(const Dendrogram& dend, const Clustering& truth,
                       const ClusteringMetric& metric, const CutPolicy& policy,
                       const std::vector<std::uint32_t>* leaf_map) {
    if (leaf_map == nullptr && truth.size() != dend.num_leaves) {
        throw std::invalid_argument("best_cut_score: truth length mismatch");
    }
    if (leaf_map != nullptr && truth.size() != leaf_map->size()) {
        throw std::invalid_argument("best_cut_score: truth/map length mismatch");
    }
    BestCut best{-std::numeric_limits<double>::infinity(), 0.0};
    for (const double tau : cut_thresholds(dend, policy)) {
        Clustering flat = flatten_at_threshold(dend, tau, policy.rule);
        double score;
        if (leaf_map) {
            Clustering expanded;
            expanded.labels.resize(leaf_map->size());
            for (std::size_t i = 0; i < leaf_map->size(); ++i) {
                expanded.labels[i] = flat.labels[(*leaf_map)[i]];
            }
            score = metric(expanded, truth);
        } else {
            score = metric(flat, truth);
        }
        if (score > best.score) {
            best = {score, tau};
        }
    }
    return best;
}

}  // namespace chac
