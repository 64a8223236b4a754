#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>

#include "te/geometry.hpp"
#include "te/linalg.hpp"
#include "te/sketch.hpp"

namespace te {

enum class StepRule {
    PolyakZero,   // step to the hyperplane <z, w_j> = t_j of the worst constraint
    PolyakLevel,  // step to the edge of its slab |<z, w_j> - t_j| <= eps R
};

std::string_view to_string(StepRule r);
StepRule parse_step_rule(std::string_view name);

struct SolverConfig {
    std::size_t max_iters = 5000;
    double tol = 1e-3;
    StepRule step_rule = StepRule::PolyakZero;
    bool warm_start = true;
};

/// u' for one query, with the diagnostics of the solve that produced it.
struct ExtensionSolution {
    Vector u_prime;
    double radius = 0.0;    // R = |u - x_k|
    double residual = 0.0;  // max_i |<u', Pi v_i> - <u - x_k, v_i>| / R, 0 when R = 0
    std::size_t iterations = 0;
    std::size_t anchor = 0;
    bool converged = true;  // residual <= eps (1 + tol)
};

/// Image of one query plus whatever the map knows about how it was produced.
struct EmbeddedQuery {
    Vector image;
    std::size_t anchor = 0;
    double radius = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

/// A terminal embedding of a fixed point set: images of the terminals and a
/// rule for every other query point.
class TerminalMap {
public:
    virtual ~TerminalMap() = default;

    virtual const PointSet& points() const = 0;
    virtual std::size_t output_dim() const = 0;
    virtual Vector terminal_image(std::size_t i) const = 0;
    virtual EmbeddedQuery embed_query(std::span<const double> u) const = 0;
    virtual std::string_view name() const = 0;

    std::size_t input_dim() const { return points().dim(); }
};

/// The sketch route: terminals go to (Pi x_i, 0), any other query u to
/// (Pi x_k + u', sqrt(R^2 - |u'|^2)) with x_k its nearest terminal and u'
/// a point of the radius-R ball that approximately preserves the inner
/// products of u - x_k with every direction x_i - x_k.
class TerminalEmbedder final : public TerminalMap {
public:
    TerminalEmbedder(PointSet X, SketchMatrix Pi, double epsilon, SolverConfig solver = {});

    const PointSet& points() const override { return X_; }
    const SketchMatrix& sketch() const noexcept { return Pi_; }
    /// Row i is Pi x_i.
    const Matrix& embedded_points() const noexcept { return embedded_; }
    double epsilon() const noexcept { return epsilon_; }
    const SolverConfig& solver() const noexcept { return solver_; }
    std::size_t output_dim() const override { return Pi_.rows() + 1; }
    std::string_view name() const override { return "sketch"; }

    ExtensionSolution solve_extension(std::span<const double> u) const;
    Vector lift(const ExtensionSolution& solution) const;
    Vector embed_terminal(std::span<const double> u) const;

    /// Residual of an arbitrary candidate u' for query u, anchored at k,
    /// recomputed from scratch.
    double residual(std::span<const double> u, std::span<const double> u_prime, std::size_t anchor) const;

    Vector terminal_image(std::size_t i) const override;
    EmbeddedQuery embed_query(std::span<const double> u) const override;

private:
    PointSet X_;
    SketchMatrix Pi_;
    Matrix embedded_;
    double epsilon_;
    SolverConfig solver_;
};

/// Wraps the exact small-n map as a terminal map.
class ExactTerminalMap final : public TerminalMap {
public:
    explicit ExactTerminalMap(PointSet X);
    ExactTerminalMap(PointSet X, ExactSmallEmbedding map);

    const PointSet& points() const override { return X_; }
    const ExactSmallEmbedding& embedding() const noexcept { return map_; }
    std::size_t output_dim() const override { return map_.output_dim(); }
    std::string_view name() const override { return "exact_small"; }
    Vector terminal_image(std::size_t i) const override;
    EmbeddedQuery embed_query(std::span<const double> u) const override;

private:
    PointSet X_;
    ExactSmallEmbedding map_;
};

/// Snap-to-nearest extension: u -> (f(x_k), |u - x_k|).
Vector efn_extend(const PointSet& X, const Matrix& f_of_X, std::span<const double> u);

/// efn_extend over a base embedding given by the terminal images f_of_X.
class EfnBaseline final : public TerminalMap {
public:
    EfnBaseline(PointSet X, Matrix f_of_X);

    const PointSet& points() const override { return X_; }
    std::size_t output_dim() const override { return f_.cols() + 1; }
    std::string_view name() const override { return "efn"; }
    Vector terminal_image(std::size_t i) const override;
    EmbeddedQuery embed_query(std::span<const double> u) const override;

private:
    PointSet X_;
    Matrix f_;
};

struct EmbedderConfig {
    double epsilon = 0.25;
    double C = 4.0;
    Distribution distribution = Distribution::Rademacher;
    std::uint64_t seed = 0;
    SolverConfig solver;
};

/// Plans the dimension for X and builds the map the plan selects: the exact
/// small-n map, or a TerminalEmbedder over a fresh sketch seeded from
/// derive_seed(seed, "sketch").
std::unique_ptr<TerminalMap> make_terminal_map(const PointSet& X, const EmbedderConfig& cfg);

/// Always the sketch route, with m rows.
TerminalEmbedder make_sketch_embedder(const PointSet& X, std::size_t m, const EmbedderConfig& cfg);

}  // namespace te
