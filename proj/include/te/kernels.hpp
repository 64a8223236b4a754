#pragma once

// Data-parallel inner loops. Every kernel exists twice: `serial` is the
// reference implementation the tests compare against, `omp` is the OpenMP
// version used by the library. Both return bit-identical results for any
// thread count; reductions break ties by enumeration order.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "te/linalg.hpp"

namespace te::kernels {

/// Weights of one hull point, sparse over the direction indices.
struct SparseWeights {
    std::vector<std::size_t> index;
    std::vector<double> weight;

    void clear() {
        index.clear();
        weight.clear();
    }
};

/// Fills `out` with the index-th sample's weights; must depend only on index.
using WeightGenerator = std::function<void(std::size_t index, SparseWeights& out)>;

struct GridResult {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> counts;  // witness lattice coordinates, summing to steps
    std::uint64_t points = 0;         // grid points visited
};

struct PairResult {
    double value = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    std::size_t j = 0;
};

struct SampleResult {
    double value = -std::numeric_limits<double>::infinity();
    std::size_t index = 0;
    SparseWeights weights;
};

/// | ||sum w_i images_i|| - ||sum w_i sources_i|| |
double sparse_violation(const Matrix& images, const Matrix& sources, const SparseWeights& w);

/// Number of lattice points {c in N^k : sum c = steps}.
double grid_point_count(std::size_t k, std::size_t steps);

namespace serial {

Matrix apply_rows(const Matrix& M, const Matrix& X);

/// Max over lambda = c / steps of |sqrt(l'Al) - sqrt(l'Bl)| where A and B are
/// the Gram matrices of the images and sources.
GridResult grid_max(const Matrix& gram_image, const Matrix& gram_source, std::size_t steps);

/// Max violation over all midpoints (t_i + t_j) / 2, i < j.
PairResult midpoint_max(const Matrix& images, const Matrix& sources);

SampleResult sampled_max(const Matrix& images, const Matrix& sources, std::size_t count,
                         const WeightGenerator& generate);

}  // namespace serial

namespace omp {

Matrix apply_rows(const Matrix& M, const Matrix& X);
GridResult grid_max(const Matrix& gram_image, const Matrix& gram_source, std::size_t steps);
PairResult midpoint_max(const Matrix& images, const Matrix& sources);
SampleResult sampled_max(const Matrix& images, const Matrix& sources, std::size_t count,
                         const WeightGenerator& generate);

/// Runs body(i) for i in [0, count) across threads. Callers write results
/// into per-index slots; nothing is reduced here.
void for_each_index(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace omp

/// Gram matrix R R^T of the rows of R.
Matrix gram(const Matrix& R);

}  // namespace te::kernels
