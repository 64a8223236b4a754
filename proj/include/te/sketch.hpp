#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "te/geometry.hpp"
#include "te/linalg.hpp"

namespace te {

enum class Distribution { Rademacher, Gaussian, Custom };

std::string_view to_string(Distribution d);
Distribution parse_distribution(std::string_view name);

/// Pi in R^{m x d}: i.i.d. subgaussian draws already scaled by 1/sqrt(m).
/// `Custom` wraps caller-supplied entries (orthogonal matrices in tests and
/// the exact-regime checks); it has no seed.
class SketchMatrix {
public:
    SketchMatrix() = default;
    static SketchMatrix from_entries(Matrix entries, Distribution distribution = Distribution::Custom,
                                     std::uint64_t seed = 0);

    std::size_t rows() const noexcept { return entries_.rows(); }
    std::size_t cols() const noexcept { return entries_.cols(); }
    Distribution distribution() const noexcept { return distribution_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const Matrix& entries() const noexcept { return entries_; }

    friend bool operator==(const SketchMatrix&, const SketchMatrix&) = default;

private:
    Matrix entries_;
    Distribution distribution_ = Distribution::Custom;
    std::uint64_t seed_ = 0;
};

enum class EmbeddingMode { Sketch, ExactSmall };

std::string_view to_string(EmbeddingMode m);

/// Target dimension choice. `m` is always the formula value
/// ceil(C eps^-2 ln(max(|Y|, 2))) (or its failure-probability variant); in
/// ExactSmall mode the actual output width comes from the rank of X instead.
struct DimensionPlan {
    EmbeddingMode mode = EmbeddingMode::Sketch;
    std::size_t m = 0;
    double C = 4.0;
    double epsilon = 0.0;
    std::size_t n = 0;
    std::optional<double> delta;
};

/// Throws InvalidEpsilon unless 0 < eps < 1, InvalidConstant unless C > 0.
DimensionPlan plan_dimension(std::size_t n, double epsilon, double C = 4.0);

/// Failure-probability variant: m = ceil(C eps^-2 ln(|Y| log2(2/eps) / delta)),
/// delta in (0, 1). Same exact-small rule.
DimensionPlan plan_dimension(std::size_t n, double epsilon, double C, double delta);

SketchMatrix generate_sketch(std::size_t m, std::size_t d, Distribution distribution, std::uint64_t seed);

Vector apply_sketch(const SketchMatrix& Pi, std::span<const double> x);

/// Rows of X mapped through Pi; OpenMP-parallel over rows, output identical
/// to applying one row at a time.
Matrix apply_sketch_rows(const SketchMatrix& Pi, const Matrix& X);

/// Zero-distortion terminal map for small n: coordinates of the projection
/// onto span(X - x_1) plus the norm of the orthogonal remainder.
class ExactSmallEmbedding {
public:
    const Vector& origin() const noexcept { return origin_; }
    /// Orthonormal basis of span{x_i - x_1}, one vector per row.
    const Matrix& basis() const noexcept { return basis_; }
    std::size_t rank() const noexcept { return basis_.rows(); }
    std::size_t output_dim() const noexcept { return basis_.rows() + 1; }
    std::size_t input_dim() const noexcept { return origin_.size(); }

    /// u -> (basis coords of proj(u - x_1), |remainder|)
    Vector map(std::span<const double> u) const;

    /// Image of a point known to lie in span(X - x_1): remainder forced to 0.
    Vector map_in_span(std::span<const double> x) const;

    static ExactSmallEmbedding from_parts(Vector origin, Matrix basis);

private:
    friend ExactSmallEmbedding exact_small_embedding(const PointSet& X);

    Vector origin_;
    Matrix basis_;
};

/// Gram-Schmidt with one re-orthogonalization pass; a difference is dropped
/// when its residual falls below 1e-10 times its original length.
ExactSmallEmbedding exact_small_embedding(const PointSet& X);

}  // namespace te
