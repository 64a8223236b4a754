#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "te/chd.hpp"
#include "te/error.hpp"
#include "te/random.hpp"
#include "test_support.hpp"

using namespace te;

namespace {

SketchMatrix stretched_axis(double delta) {
    Matrix M = Matrix::identity(2);
    M(0, 0) = 1.0 + delta;
    return SketchMatrix::from_entries(M);
}

Matrix pm_e1() { return Matrix::from_rows({{1.0, 0.0}, {-1.0, 0.0}}); }

Matrix random_unit_rows(std::size_t k, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix T(k, d);
    for (std::size_t i = 0; i < k; ++i) {
        const auto v = rng.unit_vector(d);
        std::copy(v.begin(), v.end(), T.row(i).begin());
    }
    return T;
}

// Vectors and their negations, interleaved.
Matrix with_negations(const Matrix& T) {
    Matrix out(2 * T.rows(), T.cols());
    for (std::size_t i = 0; i < T.rows(); ++i) {
        for (std::size_t c = 0; c < T.cols(); ++c) {
            out(2 * i, c) = T(i, c);
            out(2 * i + 1, c) = -T(i, c);
        }
    }
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST(ViolationTest, Examples) {
    const auto T = pm_e1();
    const auto I = SketchMatrix::from_entries(Matrix::identity(2));
    EXPECT_EQ(violation(I, make_hull_point(T, {0.3, 0.7})), 0.0);

    const auto Z = SketchMatrix::from_entries(Matrix(1, 1, 0.0));
    EXPECT_EQ(violation(Z, make_hull_point(Matrix::from_rows({{1.0}}), {1.0})), 1.0);

    const auto Pi = generate_sketch(5, 2, Distribution::Gaussian, 3);
    EXPECT_EQ(violation(Pi, make_hull_point(T, {0.5, 0.5})), 0.0);
}

TEST(ViolationTest, HullPointValidation) {
    const auto T = pm_e1();
    EXPECT_THROW(make_hull_point(T, {0.6, 0.6}), Error);
    EXPECT_THROW(make_hull_point(T, {-0.1, 1.1}), Error);
    EXPECT_THROW(make_hull_point(T, {1.0}), Error);
    const auto p = make_hull_point(T, {0.25, 0.75});
    EXPECT_NEAR(p.vector[0], -0.5, 1e-15);
}

TEST(ViolationTest, ScaleCovariance) {
    const auto Pi = generate_sketch(6, 4, Distribution::Gaussian, 8);
    const auto T = random_unit_rows(5, 4, 2);
    const auto p = make_hull_point(T, {0.1, 0.2, 0.3, 0.15, 0.25});
    const double image_norm = norm(apply_sketch(Pi, p.vector));
    for (double c : {0.5, 2.0, 7.5}) {
        Matrix scaled = Pi.entries();
        for (auto& v : scaled.data()) v *= c;
        const double direct = violation(SketchMatrix::from_entries(scaled), p);
        EXPECT_NEAR(direct, std::abs(c * image_norm - norm(p.vector)), 1e-10);
    }
}

TEST(ViolationTest, MirroredWeightsGiveSameValue) {
    const auto X = tk::random_points(5, 6, 3);
    const auto Y = direction_set(X);
    const auto Pi = generate_sketch(4, 6, Distribution::Rademacher, 1);
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
        Vector w(Y.size());
        double total = 0.0;
        for (auto& x : w) total += (x = rng.exponential());
        for (auto& x : w) x /= total;
        Vector mirrored(Y.size());
        for (std::size_t r = 0; r < Y.size(); ++r) {
            const auto [i, j] = Y.pair_index[r];
            const auto s = static_cast<std::size_t>(
                std::find(Y.pair_index.begin(), Y.pair_index.end(), std::pair(j, i)) - Y.pair_index.begin());
            mirrored[s] = w[r];
        }
        EXPECT_NEAR(violation(Pi, make_hull_point(Y.directions, w)),
                    violation(Pi, make_hull_point(Y.directions, mirrored)), 1e-12);
    }
}

TEST(CertifyGridTest, StretchedAxis) {
    const double delta = 0.1, h = 0.01;
    const auto Pi = stretched_axis(delta);
    const auto T = pm_e1();
    const auto est = certify_grid(Pi, T, h);
    // Oracle: on the 1-simplex lambda = (a, 1 - a) the violation is
    // delta * |2a - 1|, maximized at the vertices.
    double oracle = 0.0;
    for (int a = 0; a <= 100; ++a) {
        oracle = std::max(oracle, tk::naive_violation(Pi.entries(), T, {a / 100.0, 1.0 - a / 100.0}));
    }
    EXPECT_NEAR(oracle, delta, 1e-15);
    EXPECT_NEAR(est.max_violation, delta, 1e-12);
    EXPECT_EQ(est.method, ChdMethod::GridCertified);
    ASSERT_TRUE(est.certified_bound.has_value());
    EXPECT_DOUBLE_EQ(est.lipschitz, 2.1);
    EXPECT_LE(*est.certified_bound, delta + est.lipschitz * h + 1e-12);
    EXPECT_NEAR(violation(Pi, est.witness), est.max_violation, 1e-10);
    EXPECT_EQ(est.evaluated, 101u);
}

TEST(CertifyGridTest, IdentityHasZeroGridMax) {
    const auto I = SketchMatrix::from_entries(Matrix::identity(2));
    const auto est = certify_grid(I, pm_e1(), 0.05);
    EXPECT_EQ(est.max_violation, 0.0);
    EXPECT_NEAR(*est.certified_bound, 2.0 * 0.05, 1e-15);
}

TEST(CertifyGridTest, RejectsBadInputs) {
    const auto I = SketchMatrix::from_entries(Matrix::identity(2));
    EXPECT_THROW(certify_grid(I, pm_e1(), 0.0), Error);
    EXPECT_THROW(certify_grid(I, pm_e1(), 1.5), Error);
    try {
        certify_grid(I, random_unit_rows(7, 2, 1), 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooManyDirections);
    }
    try {
        certify_grid(I, random_unit_rows(6, 2, 1), 1e-4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::GridTooFine);
    }
}

TEST(CertifyGridTest, CoverFactor) {
    EXPECT_EQ(grid_cover_factor(1), 0.0);
    EXPECT_EQ(grid_cover_factor(2), 1.0);
    EXPECT_NEAR(grid_cover_factor(3), 4.0 / 3.0, 1e-15);
    EXPECT_EQ(grid_cover_factor(4), 2.0);
}

TEST(CertifyGridTest, SandwichCoarseAndFine) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto T = random_unit_rows(3, 3, 50 + seed);
        const auto Pi = generate_sketch(2, 3, Distribution::Gaussian, seed);
        const auto fine = certify_grid(Pi, T, 1e-3);
        const auto coarse = certify_grid(Pi, T, 1e-1);
        // grid max <= true sup <= certified bound, at both resolutions.
        EXPECT_LE(coarse.max_violation, *fine.certified_bound + 1e-12);
        EXPECT_LE(fine.max_violation, *coarse.certified_bound + 1e-12);
        EXPECT_GE(fine.max_violation, coarse.max_violation - 1e-12);
    }
}

TEST(EstimateSampledTest, IncludesVertices) {
    const auto T = random_unit_rows(10, 5, 4);
    const auto Pi = generate_sketch(3, 5, Distribution::Rademacher, 4);
    const auto est = estimate_sampled(Pi, T, 50, 1);
    double vertex_max = 0.0;
    for (std::size_t i = 0; i < T.rows(); ++i) {
        Vector w(T.rows(), 0.0);
        w[i] = 1.0;
        vertex_max = std::max(vertex_max, tk::naive_violation(Pi.entries(), T, w));
    }
    EXPECT_GE(est.max_violation, vertex_max - 1e-12);
    EXPECT_NEAR(violation(Pi, est.witness), est.max_violation, 1e-10);
    EXPECT_EQ(est.evaluated, 10u + 45u + 50u);
}

TEST(EstimateSampledTest, Deterministic) {
    const auto T = random_unit_rows(30, 5, 4);
    const auto Pi = generate_sketch(3, 5, Distribution::Rademacher, 4);
    const auto a = estimate_sampled(Pi, T, 500, 77);
    const auto b = estimate_sampled(Pi, T, 500, 77);
    EXPECT_EQ(a.max_violation, b.max_violation);
    EXPECT_EQ(a.witness.weights, b.witness.weights);
}

TEST(EstimateSampledTest, WithinGridWindowOnTinyInstances) {
    const double h = 1e-2;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto T = random_unit_rows(3, 3, 200 + seed);
        const auto Pi = generate_sketch(2, 3, Distribution::Gaussian, 300 + seed);
        const auto grid = certify_grid(Pi, T, h);
        const auto est = estimate_sampled(Pi, T, 2000, seed);
        EXPECT_LE(est.max_violation, *grid.certified_bound + 1e-12);
        EXPECT_GE(est.max_violation, grid.max_violation - grid.lipschitz * h);
    }
}

TEST(RefineLocalTest, GlobalMaxVertexIsFixedPoint) {
    const auto Pi = stretched_axis(0.1);
    const auto T = pm_e1();
    const auto start = make_hull_point(T, {1.0, 0.0});
    const auto est = refine_local(Pi, T, start, 50);
    EXPECT_EQ(est.witness.weights, start.weights);
    EXPECT_NEAR(est.max_violation, 0.1, 1e-12);
    EXPECT_EQ(est.trace.size(), 1u);
}

TEST(RefineLocalTest, MonotoneAndReachesGridMax) {
    const double h = 1e-2;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto T = random_unit_rows(4, 4, 400 + seed);
        const auto Pi = generate_sketch(3, 4, Distribution::Gaussian, 500 + seed);
        const auto grid = certify_grid(Pi, T, h);
        const auto start = make_hull_point(T, {0.25, 0.25, 0.25, 0.25});
        const auto est = refine_local(Pi, T, start, 200);
        EXPECT_EQ(est.method, ChdMethod::LocalAscent);
        for (std::size_t i = 1; i < est.trace.size(); ++i) EXPECT_GT(est.trace[i], est.trace[i - 1]);
        EXPECT_GE(est.max_violation, est.trace.front());
        EXPECT_NEAR(violation(Pi, est.witness), est.max_violation, 1e-10);
        // Ascent from the barycenter may stop at a local maximum; from the
        // sampled witness it must land within L h of the grid maximum.
        const auto sampled = estimate_sampled(Pi, T, 500, seed);
        const auto sharp = refine_local(Pi, T, sampled.witness, 200);
        EXPECT_GE(sharp.max_violation, grid.max_violation - grid.lipschitz * h);
        EXPECT_LE(sharp.max_violation, *grid.certified_bound + 1e-12);
    }
}

TEST(RefineLocalTest, LargeDirectionSetUsesGradientPairs) {
    const auto T = with_negations(random_unit_rows(20, 16, 3));
    const auto Pi = generate_sketch(8, 16, Distribution::Rademacher, 3);
    const auto sampled = estimate_sampled(Pi, T, 200, 3);
    const auto est = refine_local(Pi, T, sampled.witness, 100);
    EXPECT_GE(est.max_violation, sampled.max_violation);
    for (std::size_t i = 1; i < est.trace.size(); ++i) EXPECT_GT(est.trace[i], est.trace[i - 1]);
}

TEST(ChdConcentrationTest, MedianViolationNonIncreasingInRows) {
    const auto T = with_negations(random_unit_rows(8, 64, 12));
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t m : {16, 32, 64, 128}) {
        std::vector<double> values;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            values.push_back(
                estimate_sampled(generate_sketch(m, 64, Distribution::Rademacher, seed * 1000 + m), T, 400, seed)
                    .max_violation);
        }
        const double med = median(values);
        EXPECT_LE(med, previous) << "m=" << m;
        previous = med;
    }
}
