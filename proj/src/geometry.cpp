#include "chac/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_map>

#include "chac/kernels.hpp"

namespace chac {

void Dataset::push_back(std::span<const double> p) {
    if (dim == 0) {
        dim = p.size();
    }
    if (p.size() != dim) {
        throw std::invalid_argument("Dataset::push_back: dimension mismatch");
    }
    data.insert(data.end(), p.begin(), p.end());
}

double euclidean_dist(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("euclidean_dist: dimension mismatch");
    }
    return std::sqrt(simd::l2_sq(a.data(), b.data(), a.size()));
}

Centroid merge_centroids(const Centroid& x, const Centroid& y, std::uint64_t new_id) {
    if (x.id == y.id) {
        throw std::invalid_argument("merge_centroids: identical ids");
    }
    if (x.coords.size() != y.coords.size()) {
        throw std::invalid_argument("merge_centroids: dimension mismatch");
    }
    Centroid z;
    z.id = new_id;
    z.weight = x.weight + y.weight;
    z.coords.resize(x.coords.size());
    const double wx = static_cast<double>(x.weight);
    const double wy = static_cast<double>(y.weight);
    const double wz = static_cast<double>(z.weight);
    for (std::size_t i = 0; i < z.coords.size(); ++i) {
        z.coords[i] = (wx * x.coords[i] + wy * y.coords[i]) / wz;
    }
    return z;
}

DistanceBounds compute_bounds(const Dataset& points, std::optional<double> supplied_delta,
                              std::size_t exact_threshold) {
    const std::size_t n = points.size();
    if (n < 2) {
        throw std::invalid_argument("compute_bounds: need at least 2 points");
    }
    DistanceBounds b;
    if (n <= exact_threshold) {
        double min_sq = std::numeric_limits<double>::infinity();
        double max_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* pi = points.data.data() + i * points.dim;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double sq =
                    simd::l2_sq(pi, points.data.data() + j * points.dim, points.dim);
                min_sq = std::min(min_sq, sq);
                max_sq = std::max(max_sq, sq);
            }
        }
        if (min_sq == 0.0) {
            throw DuplicatePointsError(
                "compute_bounds: duplicate points (minimum pairwise distance is 0); "
                "deduplicate the input or supply delta for the deduplicated set");
        }
        b.delta = supplied_delta.value_or(std::sqrt(min_sq));
        b.big_delta = std::sqrt(max_sq);
    } else {
        if (!supplied_delta.has_value()) {
            throw std::invalid_argument(
                "compute_bounds: dataset too large for the exact scan; supply delta");
        }
        b.delta = *supplied_delta;
        double diag_sq = 0.0;
        for (std::size_t k = 0; k < points.dim; ++k) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                const double v = points.data[i * points.dim + k];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            diag_sq += (hi - lo) * (hi - lo);
        }
        b.big_delta = std::sqrt(diag_sq);
    }
    if (!(b.delta > 0.0) || !(b.delta <= b.big_delta)) {
        throw std::invalid_argument("compute_bounds: need 0 < delta <= big_delta");
    }
    return b;
}

Point bounding_box_center(const Dataset& points) {
    const std::size_t n = points.size();
    if (n == 0) {
        throw std::invalid_argument("bounding_box_center: empty dataset");
    }
    Point center(points.dim);
    for (std::size_t k = 0; k < points.dim; ++k) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double v = points.data[i * points.dim + k];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        center[k] = lo + (hi - lo) / 2.0;
    }
    return center;
}

std::string coord_key(std::span<const double> p) {
    std::string key(p.size() * sizeof(double), '\0');
    for (std::size_t i = 0; i < p.size(); ++i) {
        double v = p[i] == 0.0 ? 0.0 : p[i];  // fold -0.0 into +0.0
        std::memcpy(key.data() + i * sizeof(double), &v, sizeof(double));
    }
    return key;
}

DedupResult dedup_points(const Dataset& input) {
    DedupResult out;
    out.points.dim = input.dim;
    out.leaf_of_input.reserve(input.size());
    std::unordered_map<std::string, std::uint32_t> seen;
    seen.reserve(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const auto row = input[i];
        auto [it, fresh] = seen.emplace(coord_key(row), static_cast<std::uint32_t>(out.weights.size()));
        if (fresh) {
            out.points.push_back(row);
            out.weights.push_back(1);
        } else {
            ++out.weights[it->second];
        }
        out.leaf_of_input.push_back(it->second);
    }
    return out;
}

void validate_dendrogram(const Dendrogram& dend, std::span<const std::uint64_t> leaf_weights) {
    const std::size_t n = dend.num_leaves;
    if (n == 0) {
        throw std::invalid_argument("dendrogram: no leaves");
    }
    if (!leaf_weights.empty() && leaf_weights.size() != n) {
        throw std::invalid_argument("dendrogram: leaf weight count mismatch");
    }
    // 0 marks a leaf of unknown weight (>= 1); internal sizes come from records
    std::vector<std::uint64_t> size_of(n + dend.merges.size(), 0);
    std::vector<bool> used_as_child(n + dend.merges.size(), false);
    for (std::size_t i = 0; i < n && !leaf_weights.empty(); ++i) {
        if (leaf_weights[i] == 0) {
            throw std::invalid_argument("dendrogram: zero leaf weight");
        }
        size_of[i] = leaf_weights[i];
    }
    for (std::size_t k = 0; k < dend.merges.size(); ++k) {
        const MergeRecord& m = dend.merges[k];
        const std::uint64_t expect_id = n + k;
        if (m.new_id != expect_id) {
            throw std::invalid_argument("dendrogram: merge " + std::to_string(k) +
                                        " has new_id " + std::to_string(m.new_id) +
                                        ", expected " + std::to_string(expect_id));
        }
        if (m.left_id >= expect_id || m.right_id >= expect_id || m.left_id == m.right_id) {
            throw std::invalid_argument("dendrogram: merge " + std::to_string(k) +
                                        " has invalid child ids");
        }
        if (used_as_child[m.left_id] || used_as_child[m.right_id]) {
            throw std::invalid_argument("dendrogram: merge " + std::to_string(k) +
                                        " reuses a child id");
        }
        used_as_child[m.left_id] = true;
        used_as_child[m.right_id] = true;
        if (!(m.distance >= 0.0) || !std::isfinite(m.distance)) {
            throw std::invalid_argument("dendrogram: merge " + std::to_string(k) +
                                        " has a bad distance");
        }
        std::uint64_t known = 0;
        int unknown = 0;
        for (const std::uint64_t child : {m.left_id, m.right_id}) {
            if (size_of[child] == 0) {
                ++unknown;
            } else {
                known += size_of[child];
            }
        }
        const bool consistent =
            unknown == 0 ? m.new_size == known
                         : m.new_size >= known + static_cast<std::uint64_t>(unknown);
        if (!consistent) {
            throw std::invalid_argument("dendrogram: merge " + std::to_string(k) +
                                        " has inconsistent size");
        }
        size_of[expect_id] = m.new_size;
    }
}

}  // namespace chac
