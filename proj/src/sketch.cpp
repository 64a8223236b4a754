#include "te/sketch.hpp"

#include <cmath>
#include <string>

#include "te/error.hpp"
#include "te/kernels.hpp"
#include "te/random.hpp"

namespace te {

std::string_view to_string(Distribution d) {
    switch (d) {
        case Distribution::Rademacher: return "rademacher";
        case Distribution::Gaussian: return "gaussian";
        case Distribution::Custom: return "custom";
    }
    return "custom";
}

Distribution parse_distribution(std::string_view name) {
    if (name == "rademacher") return Distribution::Rademacher;
    if (name == "gaussian") return Distribution::Gaussian;
    if (name == "custom") return Distribution::Custom;
    throw Error(ErrorKind::InvalidArgument, "unknown distribution '" + std::string(name) + "'");
}

std::string_view to_string(EmbeddingMode m) {
    return m == EmbeddingMode::Sketch ? "sketch" : "exact_small";
}

SketchMatrix SketchMatrix::from_entries(Matrix entries, Distribution distribution, std::uint64_t seed) {
    if (entries.rows() == 0 || entries.cols() == 0) {
        throw Error(ErrorKind::InvalidArgument, "sketch matrix must be non-empty");
    }
    SketchMatrix S;
    S.entries_ = std::move(entries);
    S.distribution_ = distribution;
    S.seed_ = seed;
    return S;
}

namespace {

void check_plan_args(double epsilon, double C) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw Error(ErrorKind::InvalidEpsilon, "epsilon must lie in (0, 1), got " + std::to_string(epsilon));
    }
    if (!(C > 0.0) || !std::isfinite(C)) {
        throw Error(ErrorKind::InvalidConstant, "C must be positive, got " + std::to_string(C));
    }
}

DimensionPlan finish_plan(std::size_t n, double epsilon, double C, double log_term) {
    if (n == 0) throw Error(ErrorKind::EmptyInput, "plan_dimension needs n >= 1");
    DimensionPlan plan;
    plan.n = n;
    plan.epsilon = epsilon;
    plan.C = C;
    plan.m = static_cast<std::size_t>(std::ceil(C / (epsilon * epsilon) * log_term));
    plan.mode = plan.m >= n ? EmbeddingMode::ExactSmall : EmbeddingMode::Sketch;
    return plan;
}

double direction_count(std::size_t n) {
    return static_cast<double>(n) * static_cast<double>(n - 1);
}

}  // namespace

DimensionPlan plan_dimension(std::size_t n, double epsilon, double C) {
    check_plan_args(epsilon, C);
    const double y = n == 0 ? 0.0 : direction_count(n);
    return finish_plan(n, epsilon, C, std::log(std::max(y, 2.0)));
}

DimensionPlan plan_dimension(std::size_t n, double epsilon, double C, double delta) {
    check_plan_args(epsilon, C);
    if (!(delta > 0.0 && delta < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "delta must lie in (0, 1)");
    }
    const double y = n == 0 ? 0.0 : direction_count(n);
    auto plan = finish_plan(n, epsilon, C, std::log(std::max(y, 2.0) * std::log2(2.0 / epsilon) / delta));
    plan.delta = delta;
    return plan;
}

SketchMatrix generate_sketch(std::size_t m, std::size_t d, Distribution distribution, std::uint64_t seed) {
    if (m == 0 || d == 0) throw Error(ErrorKind::InvalidArgument, "sketch needs m >= 1 and d >= 1");
    if (distribution == Distribution::Custom) {
        throw Error(ErrorKind::InvalidArgument, "custom sketches are built with SketchMatrix::from_entries");
    }
    Matrix entries(m, d);
    Rng rng(seed);
    const double root_m = std::sqrt(static_cast<double>(m));
    for (auto& e : entries.data()) {
        const double raw = distribution == Distribution::Rademacher ? rng.rademacher() : rng.normal();
        e = raw / root_m;
    }
    return SketchMatrix::from_entries(std::move(entries), distribution, seed);
}

Vector apply_sketch(const SketchMatrix& Pi, std::span<const double> x) {
    if (x.size() != Pi.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "vector has dimension " + std::to_string(x.size()) +
                                                      ", sketch expects " + std::to_string(Pi.cols()));
    }
    Vector out(Pi.rows());
    matvec(Pi.entries(), x, out);
    return out;
}

Matrix apply_sketch_rows(const SketchMatrix& Pi, const Matrix& X) {
    if (X.cols() != Pi.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "rows have dimension " + std::to_string(X.cols()) +
                                                      ", sketch expects " + std::to_string(Pi.cols()));
    }
    return kernels::omp::apply_rows(Pi.entries(), X);
}

namespace {

// Projects r onto the orthogonal complement of basis rows [0, count), adding
// the removed components to coords.
void remove_components(const Matrix& basis, std::size_t count, std::span<double> r, std::span<double> coords) {
    for (std::size_t j = 0; j < count; ++j) {
        const double c = dot(basis.row(j), r);
        coords[j] += c;
        axpy(-c, basis.row(j), r);
    }
}

}  // namespace

Vector ExactSmallEmbedding::map(std::span<const double> u) const {
    if (u.size() != input_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "query has dimension " + std::to_string(u.size()) +
                                                      ", embedding expects " + std::to_string(input_dim()));
    }
    Vector r = subtract(u, origin_);
    Vector out(output_dim(), 0.0);
    std::span<double> coords(out.data(), rank());
    remove_components(basis_, rank(), r, coords);
    remove_components(basis_, rank(), r, coords);
    out.back() = norm(r);
    return out;
}

Vector ExactSmallEmbedding::map_in_span(std::span<const double> x) const {
    Vector out = map(x);
    out.back() = 0.0;
    return out;
}

ExactSmallEmbedding ExactSmallEmbedding::from_parts(Vector origin, Matrix basis) {
    if (basis.rows() > 0 && basis.cols() != origin.size()) {
        throw Error(ErrorKind::DimensionMismatch, "basis and origin dimensions differ");
    }
    ExactSmallEmbedding E;
    E.origin_ = std::move(origin);
    E.basis_ = basis.rows() > 0 ? std::move(basis) : Matrix(0, E.origin_.size());
    return E;
}

ExactSmallEmbedding exact_small_embedding(const PointSet& X) {
    constexpr double kDropTolerance = 1e-10;
    const std::size_t d = X.dim();
    ExactSmallEmbedding E;
    E.origin_.assign(X[0].begin(), X[0].end());

    Vector scratch(X.size());
    Matrix basis(std::min(X.size(), d + 1), d);
    std::size_t rank = 0;
    for (std::size_t i = 1; i < X.size() && rank < d; ++i) {
        Vector r = subtract(X[i], E.origin_);
        const double len = norm(r);
        remove_components(basis, rank, r, scratch);
        remove_components(basis, rank, r, scratch);
        const double res = norm(r);
        if (res <= kDropTolerance * len) continue;
        for (auto& v : r) v /= res;
        std::copy(r.begin(), r.end(), basis.row(rank).begin());
        ++rank;
    }
    E.basis_ = Matrix(rank, d,
                      std::vector<double>(basis.data().begin(), basis.data().begin() + static_cast<long>(rank * d)));
    return E;
}

}  // namespace te
