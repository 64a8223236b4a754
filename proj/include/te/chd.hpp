#pragma once

// Convex hull distortion of a sketch over a set of unit directions T:
//   sup over p in conv(T) of | ||Pi p|| - ||p|| |.
// Three estimators: an exhaustive simplex grid with a Lipschitz certificate
// (tiny |T| only), Monte Carlo over vertices, midpoints and Dirichlet draws,
// and a coordinate-pair ascent that sharpens a witness.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "te/linalg.hpp"
#include "te/sketch.hpp"

namespace te {

/// A point of conv(T) together with its barycentric weights.
struct HullPoint {
    Vector weights;  // one per row of T, nonnegative, summing to 1
    Vector vector;   // sum_i weights[i] * T.row(i)
};

/// Validates the weights (nonnegative, sum within 1e-12 of 1) and forms the
/// combination.
HullPoint make_hull_point(const Matrix& T, Vector weights);

enum class ChdMethod { GridCertified, Sampled, LocalAscent };

std::string_view to_string(ChdMethod m);

struct ChdEstimate {
    double max_violation = 0.0;
    HullPoint witness;
    ChdMethod method = ChdMethod::Sampled;
    std::optional<double> certified_bound;  // grid only
    double lipschitz = 0.0;                 // max_i ||Pi t_i|| + ||t_i||
    double grid_step = 0.0;                 // effective step 1/N, grid only
    std::uint64_t evaluated = 0;            // hull points evaluated
    std::vector<double> trace;              // accepted values, local ascent only
};

/// | ||Pi p|| - ||p|| |
double violation(const SketchMatrix& Pi, const HullPoint& p);

/// Lipschitz constant of lambda -> violation in l1.
double hull_lipschitz(const SketchMatrix& Pi, const Matrix& T);

/// Worst-case l1 distance from a simplex point in k coordinates to the
/// lattice of step h, in units of h: max_j 2 j (k - j) / k.
double grid_cover_factor(std::size_t k);

/// Exhaustive search over {lambda : sum = 1, lambda_i in (1/N) Z} with
/// N = ceil(1/h). certified_bound = grid max + L * cover(|T|) * (1/N), which
/// equals grid max + L h for |T| = 2. Requires 1 <= |T| <= 6 and 0 < h <= 1.
ChdEstimate certify_grid(const SketchMatrix& Pi, const Matrix& T, double h);

/// Max over all vertices, all pair midpoints (while there are at most 2^24
/// pairs) and `samples` random hull points.
/// Samples cycle through four families: full-support Dirichlet(1), and
/// Dirichlet(1) on random supports of size 2, 3 and ceil(sqrt |T|).
ChdEstimate estimate_sampled(const SketchMatrix& Pi, const Matrix& T, std::size_t samples, std::uint64_t seed);

/// Coordinate-pair ascent: repeatedly moves mass between two coordinates by
/// line search, accepting only strict improvements.
ChdEstimate refine_local(const SketchMatrix& Pi, const Matrix& T, const HullPoint& start, std::size_t iters);

}  // namespace te
