#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "chac/geometry.hpp"

namespace chac {

/// Flat clustering: cluster ids contiguous from 0, one per point.
struct Clustering {
    std::vector<std::uint32_t> labels;
    std::size_t size() const { return labels.size(); }
};

/// Remaps arbitrary label values to contiguous ids in first-occurrence order.
Clustering normalize_labels(std::span<const std::int64_t> raw);

/// How a non-monotone dendrogram is flattened at a threshold.
/// skip_unformed: apply merges in recorded order when distance <= tau, skipping
/// any merge whose children were not both formed (the default).
/// cut_above: drop every merge with distance > tau and take the connected
/// components of what remains.
enum class FlattenRule { skip_unformed, cut_above };

enum class CutMode { all_thresholds, log_thresholds };

struct CutPolicy {
    CutMode mode = CutMode::all_thresholds;
    double log_base = 1.1;  // geometric step between thresholds in log mode
    FlattenRule rule = FlattenRule::skip_unformed;
};

Clustering flatten_at_threshold(const Dendrogram& dend, double tau,
                                FlattenRule rule = FlattenRule::skip_unformed);

/// Adjusted Rand index (permutation model), in [-1, 1].
double ari(const Clustering& a, const Clustering& b);

/// Mutual information normalized by the arithmetic mean of the entropies,
/// in [0, 1].
double nmi(const Clustering& a, const Clustering& b);

/// Mean over ordered same-class point pairs (i, j) of the fraction of leaves
/// under LCA(i, j) sharing i's class. Exact up to `exact_threshold` leaves,
/// sampled above it.
double dendrogram_purity(const Dendrogram& dend, const Clustering& truth,
                         std::size_t exact_threshold = 2000,
                         std::size_t sample_pairs = 1000000, std::uint64_t seed = 0);

using SimilarityKernel = std::function<double(double)>;

/// Sum over point pairs of similarity times the leaf count of their LCA.
/// Null kernel means the default w(D) = 1/(1+D). Exact up to
/// `exact_threshold` leaves, sampled (and rescaled) above it.
double dasgupta_cost(const Dendrogram& dend, const Dataset& points,
                     const SimilarityKernel& kernel = nullptr,
                     std::size_t exact_threshold = 2000,
                     std::size_t sample_pairs = 1000000, std::uint64_t seed = 0);

/// Number of node pairs (U, V) with V a strict ancestor of U and
/// cost(U) >= (1 + delta_param) * cost(V).
std::uint64_t delta_inversions(const Dendrogram& dend, double delta_param);

/// Threshold set a cut policy evaluates: every distinct merge distance (plus
/// an infinity sentinel), or a geometric grid covering the distance range.
std::vector<double> cut_thresholds(const Dendrogram& dend, const CutPolicy& policy);

struct BestCut {
    double score = 0.0;
    double threshold = 0.0;
};

using ClusteringMetric = std::function<double(const Clustering&, const Clustering&)>;

/// Best metric value over the policy's thresholded cuts. When leaf_map is
/// given (original point -> dendrogram leaf), flat clusterings are expanded
/// through it before scoring against the truth.
BestCut best_cut_score(const Dendrogram& dend, const Clustering& truth,
                       const ClusteringMetric& metric, const CutPolicy& policy = {},
                       const std::vector<std::uint32_t>* leaf_map = nullptr);

}  // namespace chac
