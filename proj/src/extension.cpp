#include "te/extension.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "te/error.hpp"
#include "te/random.hpp"

namespace te {

std::string_view to_string(StepRule r) { return r == StepRule::PolyakZero ? "polyak0" : "polyak-level"; }

StepRule parse_step_rule(std::string_view name) {
    if (name == "polyak0") return StepRule::PolyakZero;
    if (name == "polyak-level") return StepRule::PolyakLevel;
    throw Error(ErrorKind::InvalidArgument, "unknown step rule '" + std::string(name) + "'");
}

namespace {

void check_query(std::span<const double> u, std::size_t d) {
    if (u.size() != d) {
        throw Error(ErrorKind::DimensionMismatch,
                    "query has dimension " + std::to_string(u.size()) + ", expected " + std::to_string(d));
    }
}

// Scales z radially into the closed ball of radius R.
void project_to_ball(std::span<double> z, double R) {
    double nz = norm(z);
    if (nz <= R) return;
    double scale = R / nz;
    for (auto& v : z) v *= scale;
    // Rounding can leave |z| a few ulps above R.
    while ((nz = norm(z)) > R) {
        scale = std::nextafter(R / nz, 0.0);
        for (auto& v : z) v *= scale;
    }
}

// Slab system for one query: rows w_i = Pi v_i and targets t_i = <u - x_k, v_i>
// over i != k, with v_i = (x_i - x_k) / |x_i - x_k|.
struct Constraints {
    Matrix w;
    Vector t;
    Vector w_sq;
};

Constraints build_constraints(const PointSet& X, const Matrix& embedded, std::span<const double> u,
                              std::size_t k) {
    const std::size_t n = X.size();
    Constraints c{Matrix(n - 1, embedded.cols()), Vector(n - 1), Vector(n - 1)};
    const Vector p = subtract(u, X[k]);
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == k) continue;
        const Vector diff = subtract(X[i], X[k]);
        const double len = norm(diff);
        c.t[r] = dot(p, diff) / len;
        auto wi = c.w.row(r);
        for (std::size_t j = 0; j < wi.size(); ++j) wi[j] = (embedded(i, j) - embedded(k, j)) / len;
        c.w_sq[r] = squared_norm(wi);
        ++r;
    }
    return c;
}

// max_i |<z, w_i> - t_i|, with the lowest index attaining it.
std::pair<double, std::size_t> worst_constraint(const Constraints& c, std::span<const double> z) {
    double g = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < c.t.size(); ++i) {
        const double a = std::abs(dot(z, c.w.row(i)) - c.t[i]);
        if (a > g) {
            g = a;
            arg = i;
        }
    }
    return {g, arg};
}

}  // namespace

TerminalEmbedder::TerminalEmbedder(PointSet X, SketchMatrix Pi, double epsilon, SolverConfig solver)
    : X_(std::move(X)), Pi_(std::move(Pi)), epsilon_(epsilon), solver_(solver) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw Error(ErrorKind::InvalidEpsilon, "epsilon must lie in (0, 1), got " + std::to_string(epsilon));
    }
    if (Pi_.cols() != X_.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "sketch expects dimension " + std::to_string(Pi_.cols()) +
                                                      ", points have " + std::to_string(X_.dim()));
    }
    embedded_ = apply_sketch_rows(Pi_, X_.matrix());
}

ExtensionSolution TerminalEmbedder::solve_extension(std::span<const double> u) const {
    check_query(u, X_.dim());
    ExtensionSolution sol;
    sol.anchor = nearest_point(u, X_);
    sol.radius = distance(u, X_[sol.anchor]);
    sol.u_prime.assign(Pi_.rows(), 0.0);
    if (sol.radius == 0.0 || X_.size() == 1) return sol;

    const double R = sol.radius;
    const Constraints c = build_constraints(X_, embedded_, u, sol.anchor);

    Vector z(Pi_.rows(), 0.0);
    if (solver_.warm_start) {
        const Vector image = apply_sketch(Pi_, subtract(u, X_[sol.anchor]));
        const double len = norm(image);
        if (len > 1e-14 * R) {
            for (std::size_t j = 0; j < z.size(); ++j) z[j] = R * image[j] / std::max(len, 1e-300);
            project_to_ball(z, R);
        }
    }

    const double level = epsilon_ * R;
    const double threshold = level * (1.0 + solver_.tol);
    auto [g, worst] = worst_constraint(c, z);
    Vector best = z;
    double best_g = g;
    std::size_t it = 0;
    while (best_g > threshold && it < solver_.max_iters) {
        if (c.w_sq[worst] == 0.0) break;  // Pi annihilates this direction; no step can help
        const double a = dot(z, c.w.row(worst)) - c.t[worst];
        const double target = solver_.step_rule == StepRule::PolyakZero ? 0.0 : level;
        const double step = (g - target) / c.w_sq[worst];
        axpy(a > 0.0 ? -step : step, c.w.row(worst), z);
        project_to_ball(z, R);
        ++it;
        std::tie(g, worst) = worst_constraint(c, z);
        if (g < best_g) {
            best_g = g;
            best = z;
        }
    }
    sol.u_prime = std::move(best);
    sol.iterations = it;
    sol.residual = best_g / R;
    sol.converged = best_g <= threshold;
    return sol;
}

double TerminalEmbedder::residual(std::span<const double> u, std::span<const double> u_prime,
                                  std::size_t anchor) const {
    check_query(u, X_.dim());
    const double R = distance(u, X_[anchor]);
    if (R == 0.0 || X_.size() == 1) return 0.0;
    double worst = 0.0;
    const Vector p = subtract(u, X_[anchor]);
    for (std::size_t i = 0; i < X_.size(); ++i) {
        if (i == anchor) continue;
        Vector v = subtract(X_[i], X_[anchor]);
        const double len = norm(v);
        for (auto& x : v) x /= len;
        const Vector pv = apply_sketch(Pi_, v);
        worst = std::max(worst, std::abs(dot(u_prime, pv) - dot(p, v)));
    }
    return worst / R;
}

Vector TerminalEmbedder::lift(const ExtensionSolution& solution) const {
    Vector out(Pi_.rows() + 1);
    const auto base = embedded_.row(solution.anchor);
    for (std::size_t j = 0; j < Pi_.rows(); ++j) out[j] = base[j] + solution.u_prime[j];
    const double R = solution.radius;
    out.back() = std::sqrt(std::max(R * R - squared_norm(solution.u_prime), 0.0));
    return out;
}

Vector TerminalEmbedder::terminal_image(std::size_t i) const {
    Vector out(Pi_.rows() + 1, 0.0);
    const auto row = embedded_.row(i);
    std::copy(row.begin(), row.end(), out.begin());
    return out;
}

Vector TerminalEmbedder::embed_terminal(std::span<const double> u) const { return embed_query(u).image; }

EmbeddedQuery TerminalEmbedder::embed_query(std::span<const double> u) const {
    check_query(u, X_.dim());
    const std::size_t k = nearest_point(u, X_);
    EmbeddedQuery q;
    q.anchor = k;
    if (distance(u, X_[k]) == 0.0) {
        q.image = terminal_image(k);
        return q;
    }
    const auto sol = solve_extension(u);
    q.image = lift(sol);
    q.radius = sol.radius;
    q.residual = sol.residual;
    q.iterations = sol.iterations;
    q.converged = sol.converged;
    return q;
}

ExactTerminalMap::ExactTerminalMap(PointSet X) : X_(std::move(X)), map_(exact_small_embedding(X_)) {}

ExactTerminalMap::ExactTerminalMap(PointSet X, ExactSmallEmbedding map) : X_(std::move(X)), map_(std::move(map)) {
    if (map_.input_dim() != X_.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "exact map dimension does not match the point set");
    }
}

Vector ExactTerminalMap::terminal_image(std::size_t i) const { return map_.map_in_span(X_[i]); }

EmbeddedQuery ExactTerminalMap::embed_query(std::span<const double> u) const {
    check_query(u, X_.dim());
    EmbeddedQuery q;
    q.anchor = nearest_point(u, X_);
    q.radius = distance(u, X_[q.anchor]);
    q.image = q.radius == 0.0 ? terminal_image(q.anchor) : map_.map(u);
    return q;
}

Vector efn_extend(const PointSet& X, const Matrix& f_of_X, std::span<const double> u) {
    if (f_of_X.rows() != X.size()) {
        throw Error(ErrorKind::DimensionMismatch, "base embedding must have one row per terminal");
    }
    check_query(u, X.dim());
    const std::size_t k = nearest_point(u, X);
    Vector out(f_of_X.cols() + 1);
    const auto fk = f_of_X.row(k);
    std::copy(fk.begin(), fk.end(), out.begin());
    out.back() = distance(u, X[k]);
    return out;
}

EfnBaseline::EfnBaseline(PointSet X, Matrix f_of_X) : X_(std::move(X)), f_(std::move(f_of_X)) {
    if (f_.rows() != X_.size()) {
        throw Error(ErrorKind::DimensionMismatch, "base embedding must have one row per terminal");
    }
}

Vector EfnBaseline::terminal_image(std::size_t i) const {
    Vector out(f_.cols() + 1, 0.0);
    const auto row = f_.row(i);
    std::copy(row.begin(), row.end(), out.begin());
    return out;
}

EmbeddedQuery EfnBaseline::embed_query(std::span<const double> u) const {
    EmbeddedQuery q;
    q.image = efn_extend(X_, f_, u);
    q.anchor = nearest_point(u, X_);
    q.radius = q.image.back();
    return q;
}

TerminalEmbedder make_sketch_embedder(const PointSet& X, std::size_t m, const EmbedderConfig& cfg) {
    auto Pi = generate_sketch(m, X.dim(), cfg.distribution, derive_seed(cfg.seed, "sketch"));
    return TerminalEmbedder(X, std::move(Pi), cfg.epsilon, cfg.solver);
}

std::unique_ptr<TerminalMap> make_terminal_map(const PointSet& X, const EmbedderConfig& cfg) {
    const auto plan = plan_dimension(X.size(), cfg.epsilon, cfg.C);
    if (plan.mode == EmbeddingMode::ExactSmall) return std::make_unique<ExactTerminalMap>(X);
    return std::make_unique<TerminalEmbedder>(make_sketch_embedder(X, plan.m, cfg));
}

}  // namespace te
