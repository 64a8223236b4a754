#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "te/chd.hpp"
#include "te/error.hpp"
#include "te/extension.hpp"
#include "test_support.hpp"

using namespace te;

namespace {

TerminalEmbedder identity_embedder(const PointSet& X, double eps, SolverConfig cfg = {}) {
    return TerminalEmbedder(X, SketchMatrix::from_entries(Matrix::identity(X.dim())), eps, cfg);
}

}  // namespace

TEST(SolveExtensionTest, QueryOnTerminalIsDegenerate) {
    const auto X = tk::random_points(6, 5, 1);
    const TerminalEmbedder E(X, generate_sketch(4, 5, Distribution::Rademacher, 1), 0.3);
    const auto sol = E.solve_extension(X[3]);
    EXPECT_EQ(sol.anchor, 3u);
    EXPECT_EQ(sol.radius, 0.0);
    EXPECT_EQ(sol.residual, 0.0);
    for (double v : sol.u_prime) EXPECT_EQ(v, 0.0);
}

TEST(SolveExtensionTest, SinglePointHasNoConstraints) {
    const auto X = build_point_set({{1.0, 2.0}});
    const TerminalEmbedder E(X, generate_sketch(3, 2, Distribution::Rademacher, 1), 0.3);
    const auto sol = E.solve_extension(Vector{4.0, -2.0});
    EXPECT_EQ(sol.residual, 0.0);
    EXPECT_DOUBLE_EQ(sol.radius, 5.0);
    for (double v : sol.u_prime) EXPECT_EQ(v, 0.0);
    const auto img = E.lift(sol);
    EXPECT_DOUBLE_EQ(img.back(), 5.0);
}

TEST(SolveExtensionTest, IdentitySketchIsExactlyFeasible) {
    std::mt19937_64 gen(3);
    const auto X = tk::random_points(8, 5, 2);
    const auto E = identity_embedder(X, 0.25);
    for (int q = 0; q < 50; ++q) {
        const auto u = tk::random_vector(5, gen, 2.0);
        const auto sol = E.solve_extension(u);
        EXPECT_LE(sol.residual, 1e-8);
        EXPECT_TRUE(sol.converged);
    }
}

TEST(SolveExtensionTest, ColdStartSolverConvergesOnConsistentSystem) {
    std::mt19937_64 gen(4);
    const auto X = tk::random_points(6, 4, 3);
    SolverConfig cfg;
    cfg.warm_start = false;
    cfg.max_iters = 20000;
    const auto E = identity_embedder(X, 1e-9, cfg);
    for (int q = 0; q < 20; ++q) {
        const auto u = tk::random_vector(4, gen, 2.0);
        const auto sol = E.solve_extension(u);
        EXPECT_LE(sol.residual, 1e-8) << "iterations " << sol.iterations;
        EXPECT_GT(sol.iterations, 0u);
    }
}

TEST(SolveExtensionTest, LevelStepRuleReachesTarget) {
    std::mt19937_64 gen(5);
    const auto X = tk::random_points(10, 30, 4);
    SolverConfig cfg;
    cfg.step_rule = StepRule::PolyakLevel;
    cfg.warm_start = false;
    const TerminalEmbedder E(X, generate_sketch(60, 30, Distribution::Gaussian, 4), 0.3, cfg);
    for (int q = 0; q < 20; ++q) {
        const auto sol = E.solve_extension(tk::random_vector(30, gen));
        EXPECT_TRUE(sol.converged);
        EXPECT_LE(sol.residual, 0.3 * (1 + cfg.tol));
    }
}

TEST(SolveExtensionTest, BallConstraintAndResidualRecomputation) {
    std::mt19937_64 gen(6);
    const auto X = tk::random_points(20, 40, 5);
    const TerminalEmbedder E(X, generate_sketch(25, 40, Distribution::Rademacher, 5), 0.25);
    for (int q = 0; q < 40; ++q) {
        const auto u = tk::random_vector(40, gen, 1.5);
        const auto sol = E.solve_extension(u);
        EXPECT_LE(norm(sol.u_prime), sol.radius + 1e-12);
        EXPECT_NEAR(E.residual(u, sol.u_prime, sol.anchor), sol.residual, 1e-10);
        EXPECT_EQ(sol.anchor, nearest_point(u, X));
    }
}

TEST(SolveExtensionTest, AnnihilatingSketchIsDiagnosticNotFatal) {
    const auto X = tk::random_points(5, 3, 6);
    const TerminalEmbedder E(X, SketchMatrix::from_entries(Matrix(2, 3, 0.0)), 0.1);
    const Vector u{5.0, 5.0, 5.0};
    const auto sol = E.solve_extension(u);
    EXPECT_FALSE(sol.converged);
    const auto img = E.lift(sol);
    EXPECT_NEAR(img.back(), sol.radius, 1e-12);
}

TEST(SolveExtensionTest, DimensionMismatch) {
    const auto X = tk::random_points(5, 3, 6);
    const TerminalEmbedder E(X, generate_sketch(2, 3, Distribution::Rademacher, 1), 0.1);
    EXPECT_THROW(E.solve_extension(Vector{1.0, 2.0}), Error);
    EXPECT_THROW(TerminalEmbedder(X, generate_sketch(2, 4, Distribution::Rademacher, 1), 0.1), Error);
    EXPECT_THROW(TerminalEmbedder(X, generate_sketch(2, 3, Distribution::Rademacher, 1), 1.0), Error);
}

TEST(LiftTest, FormulaCases) {
    const auto X = build_point_set({{0.0, 0.0}, {1.0, 0.0}});
    const TerminalEmbedder E(X, generate_sketch(3, 2, Distribution::Rademacher, 2), 0.2);

    ExtensionSolution zero{Vector(3, 0.0), 2.0, 0.0, 0, 1, true};
    auto img = E.lift(zero);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(img[j], E.embedded_points()(1, j));
    EXPECT_EQ(img.back(), 2.0);

    ExtensionSolution full{Vector{0.0, 2.0, 0.0}, 2.0, 0.0, 0, 0, true};
    EXPECT_EQ(E.lift(full).back(), 0.0);

    const double R = 3.0;
    ExtensionSolution over{Vector{R * std::sqrt(1.0 + 1e-14), 0.0, 0.0}, R, 0.0, 0, 0, true};
    const double last = E.lift(over).back();
    EXPECT_FALSE(std::isnan(last));
    EXPECT_EQ(last, 0.0);
}

TEST(EmbedTerminalTest, MembersMapToPaddedSketch) {
    const auto X = tk::random_points(5, 6, 7);
    const TerminalEmbedder E(X, generate_sketch(4, 6, Distribution::Rademacher, 7), 0.3);
    const auto img = E.embed_terminal(X[3]);
    const auto expect = apply_sketch(E.sketch(), X[3]);
    ASSERT_EQ(img.size(), 5u);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(img[j], expect[j], 1e-12);
    EXPECT_EQ(img.back(), 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        const auto t = E.terminal_image(i);
        EXPECT_EQ(t.back(), 0.0);
    }
}

TEST(EmbedTerminalTest, AnchorIsometry) {
    std::mt19937_64 gen(8);
    const auto X = tk::random_points(30, 20, 8);
    const TerminalEmbedder E(X, generate_sketch(12, 20, Distribution::Rademacher, 8), 0.3);
    for (int q = 0; q < 100; ++q) {
        const auto u = tk::random_vector(20, gen, 1.0 + q % 5);
        const auto img = E.embed_terminal(u);
        const auto k = nearest_point(u, X);
        const double R = tk::naive_distance(u, X[k]);
        EXPECT_LE(std::abs(tk::naive_distance(img, E.terminal_image(k)) - R), 1e-8 * (1.0 + R));
    }
}

TEST(EmbedTerminalTest, IdentitySketchPreservesAllDistances) {
    std::mt19937_64 gen(9);
    const auto X = tk::random_points(10, 4, 9);
    const auto E = identity_embedder(X, 0.1);
    for (int q = 0; q < 50; ++q) {
        const auto u = tk::random_vector(4, gen, 2.0);
        const auto img = E.embed_terminal(u);
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(img[j], u[j], 1e-8);
        EXPECT_NEAR(img.back(), 0.0, 1e-6);
        for (std::size_t i = 0; i < X.size(); ++i) {
            EXPECT_NEAR(tk::naive_distance(img, E.terminal_image(i)), tk::naive_distance(u, X[i]), 1e-8);
        }
    }
}

TEST(EmbedTerminalTest, SquaredDistortionWithinMeasuredBound) {
    std::mt19937_64 gen(10);
    const auto X = tk::random_points(12, 40, 10);
    const TerminalEmbedder E(X, generate_sketch(200, 40, Distribution::Rademacher, 10), 0.25);
    const auto Y = direction_set(X);
    const double chd = estimate_sampled(E.sketch(), Y.directions, 2000, 10).max_violation;
    for (int q = 0; q < 100; ++q) {
        const auto u = tk::random_vector(40, gen, 1.0 + q % 3);
        const auto sol = E.solve_extension(u);
        const auto img = E.lift(sol);
        const double eps_hat = chd + sol.residual;
        for (std::size_t i = 0; i < X.size(); ++i) {
            const double t2 = squared_distance(u, X[i]);
            const double e2 = squared_distance(img, E.terminal_image(i));
            EXPECT_LE(std::abs(e2 - t2), 20.0 * eps_hat * t2 + 1e-8);
        }
    }
}

TEST(EmbedTerminalTest, TranslationLeavesRatiosUnchanged) {
    std::mt19937_64 gen(111);
    const auto base = tk::random_matrix(15, 10, 11);
    Matrix shifted = base;
    const Vector shift = tk::random_vector(10, gen, 5.0);
    for (std::size_t i = 0; i < shifted.rows(); ++i) axpy(1.0, shift, shifted.row(i));
    const auto Pi = generate_sketch(8, 10, Distribution::Rademacher, 11);
    const TerminalEmbedder A(build_point_set(base), Pi, 0.3), B(build_point_set(shifted), Pi, 0.3);
    for (int q = 0; q < 30; ++q) {
        const auto u = tk::random_vector(10, gen);
        Vector v = u;
        axpy(1.0, shift, v);
        const auto fa = A.embed_terminal(u), fb = B.embed_terminal(v);
        for (std::size_t i = 0; i < base.rows(); ++i) {
            const double ra = distance(fa, A.terminal_image(i)) / distance(u, A.points()[i]);
            const double rb = distance(fb, B.terminal_image(i)) / distance(v, B.points()[i]);
            EXPECT_NEAR(ra, rb, 1e-9);
        }
    }
}

TEST(ScalarFactTest, MaxOfOneAndShiftedSquareDominates) {
    for (int i = 0; i <= 100000; ++i) {
        const double x = 100.0 * i / 100000.0;
        EXPECT_GE(std::max(1.0, (x - 1) * (x - 1)), (x * x + 1) / 5) << x;
    }
}

TEST(EfnTest, SharpInstance) {
    const auto X = build_point_set({{-1.0}, {0.0}, {2.0}});
    const Matrix f = Matrix::from_rows({{-1.0}, {0.0}, {2.0}});
    const auto fu = efn_extend(X, f, Vector{1.0});
    EXPECT_EQ(fu, (Vector{0.0, 1.0}));
    const Vector fm1{-1.0, 0.0}, f2{2.0, 0.0};
    EXPECT_NEAR(distance(fu, fm1), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(distance(fu, f2), std::sqrt(5.0), 1e-15);
    const double shrink = distance(fu, fm1) / 2.0, stretch = distance(fu, f2) / 1.0;
    EXPECT_NEAR(stretch / shrink, std::sqrt(10.0), 1e-12);
}

TEST(EfnTest, MembersAndSinglePoint) {
    const auto X = build_point_set({{-1.0}, {0.0}, {2.0}});
    const Matrix f = Matrix::from_rows({{-1.0}, {0.0}, {2.0}});
    EXPECT_EQ(efn_extend(X, f, Vector{2.0}), (Vector{2.0, 0.0}));

    const auto O = build_point_set({{0.0, 0.0, 0.0}});
    const auto fu = efn_extend(O, Matrix(1, 3, 0.0), Vector{1.0, 2.0, 2.0});
    EXPECT_EQ(fu, (Vector{0.0, 0.0, 0.0, 3.0}));
    EXPECT_THROW(efn_extend(X, Matrix(2, 1, 0.0), Vector{1.0}), Error);
}

TEST(MakeTerminalMapTest, DispatchFollowsPlan) {
    EmbedderConfig cfg;
    cfg.epsilon = 0.1;
    const auto small = make_terminal_map(tk::random_points(3, 5, 1), cfg);
    EXPECT_EQ(small->name(), "exact_small");

    cfg.epsilon = 0.9;
    cfg.C = 0.5;
    const auto big = make_terminal_map(tk::random_points(400, 20, 2), cfg);
    EXPECT_EQ(big->name(), "sketch");
    EXPECT_EQ(big->output_dim(), plan_dimension(400, 0.9, 0.5).m + 1);
}

TEST(ExactTerminalMapTest, MembersGetZeroLastCoordinate) {
    const auto X = tk::random_points(4, 6, 12);
    const ExactTerminalMap M(X);
    for (std::size_t i = 0; i < X.size(); ++i) {
        const auto q = M.embed_query(X[i]);
        EXPECT_EQ(q.image.back(), 0.0);
        EXPECT_EQ(q.image, M.terminal_image(i));
    }
}
