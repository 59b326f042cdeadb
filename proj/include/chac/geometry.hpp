#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace chac {

using Point = std::vector<double>;

/// A fixed-dimension point set stored row-major, so distance scans run over
/// contiguous memory.
struct Dataset {
    std::size_t dim = 0;
    std::vector<double> data;

    Dataset() = default;
    explicit Dataset(std::size_t d) : dim(d) {}

    std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
    std::span<const double> operator[](std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
    void push_back(std::span<const double> p);
};

/// A weighted point: the running mean of `weight` underlying input points,
/// tagged with an id that is unique for the lifetime of a run.
struct Centroid {
    Point coords;
    std::uint64_t weight = 1;
    std::uint64_t id = 0;
};

struct MergeRecord {
    std::uint64_t left_id = 0;   // smaller child id
    std::uint64_t right_id = 0;  // larger child id
    std::uint64_t new_id = 0;
    double distance = 0.0;
    std::uint64_t new_size = 0;
};

/// Ordered merge log. Leaves are 0..num_leaves-1; merge k creates id
/// num_leaves + k.
struct Dendrogram {
    std::size_t num_leaves = 0;
    std::vector<MergeRecord> merges;
};

/// delta/big_delta: lower/upper bounds on the min/max pairwise distance.
struct DistanceBounds {
    double delta = 0.0;
    double big_delta = 0.0;
};

struct DuplicatePointsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double euclidean_dist(std::span<const double> a, std::span<const double> b);

/// Weighted mean of two centroids; the result is the true centroid of the
/// union of their underlying point sets.
Centroid merge_centroids(const Centroid& x, const Centroid& y, std::uint64_t new_id);

inline constexpr std::size_t kBoundExactThreshold = 10000;

/// Exact min/max pairwise distance for small inputs; above the threshold the
/// bounding-box diagonal serves as the upper bound and the caller must supply
/// delta. Throws DuplicatePointsError when the exact minimum is zero.
DistanceBounds compute_bounds(const Dataset& points,
                              std::optional<double> supplied_delta = std::nullopt,
                              std::size_t exact_threshold = kBoundExactThreshold);

Point bounding_box_center(const Dataset& points);

struct DedupResult {
    Dataset points;                        // unique rows, in first-seen order
    std::vector<std::uint64_t> weights;    // multiplicity per unique row
    std::vector<std::uint32_t> leaf_of_input;  // original row -> unique row
};

/// Folds exact coordinate duplicates (after canonicalizing signed zeros) into
/// multiplicities, so the pairwise minimum distance of the result is positive.
DedupResult dedup_points(const Dataset& input);

/// Byte key for exact coordinate identity with -0.0 == +0.0.
std::string coord_key(std::span<const double> p);

/// Structural checks: child ids valid and used at most once, new ids
/// sequential, sizes additive, distances finite and nonnegative. Sizes count
/// input points, so leaves may weigh more than 1 when duplicates were folded;
/// pass the leaf weights to check sizes exactly, or leave them empty to check
/// the weakest consistent assignment (every leaf >= 1).
void validate_dendrogram(const Dendrogram& dend,
                         std::span<const std::uint64_t> leaf_weights = {});

}  // namespace chac
