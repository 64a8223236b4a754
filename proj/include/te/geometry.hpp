#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "te/linalg.hpp"

namespace te {

/// The terminal set: n >= 1 pairwise-distinct points in R^d, in input order.
/// Immutable once built; construct through build_point_set.
class PointSet {
public:
    std::size_t size() const noexcept { return points_.rows(); }
    std::size_t dim() const noexcept { return points_.cols(); }
    std::span<const double> operator[](std::size_t i) const { return points_.row(i); }
    const Matrix& matrix() const noexcept { return points_; }

private:
    explicit PointSet(Matrix points) : points_(std::move(points)) {}
    friend PointSet build_point_set(Matrix raw);

    Matrix points_;
};

/// Validates shape and distinctness. Throws EmptyInput, DimensionMismatch or
/// DuplicatePoint.
PointSet build_point_set(const std::vector<Vector>& raw);
PointSet build_point_set(Matrix raw);
inline PointSet build_point_set(std::initializer_list<Vector> raw) { return build_point_set(std::vector<Vector>(raw)); }

/// Index of the closest point to u; ties go to the lowest index.
std::size_t nearest_point(std::span<const double> u, const PointSet& X);

/// All n(n-1) normalized ordered differences (x_i - x_j) / |x_i - x_j|.
struct DirectionSet {
    Matrix directions;  // one unit vector per row
    std::vector<std::pair<std::size_t, std::size_t>> pair_index;

    std::size_t size() const noexcept { return directions.rows(); }
};

DirectionSet direction_set(const PointSet& X);

/// Pairs (i < j) closer than `threshold`; surfaced as conditioning diagnostics.
std::vector<std::pair<std::size_t, std::size_t>> close_pairs(const PointSet& X, double threshold = 1e-9);

/// Largest pairwise distance.
double diameter(const PointSet& X);

/// Distance from x_i to its nearest other point of X (0 when n = 1).
std::vector<double> nearest_neighbor_distances(const PointSet& X);

}  // namespace te
