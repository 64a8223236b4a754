#include "te/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "te/chd.hpp"
#include "te/error.hpp"
#include "te/kernels.hpp"
#include "te/random.hpp"

namespace te {

namespace {

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double parse_number(const std::string& text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::InvalidArgument, "bad number '" + text + "' in sampler spec");
    }
    return v;
}

}  // namespace

std::string SamplerSpec::label() const {
    switch (kind) {
        case Sampler::Box: return "box";
        case Sampler::Segment: return "segment";
        case Sampler::Member: return "member";
        case Sampler::Far: return "far(" + format_number(param) + ")";
        case Sampler::Shell:
            return relative ? "shell(" + format_number(param) + "x)" : "shell(" + format_number(param) + ")";
    }
    return "unknown";
}

SamplerSpec parse_sampler(const std::string& text) {
    const auto open = text.find('(');
    const std::string head = text.substr(0, open);
    std::string arg;
    if (open != std::string::npos) {
        if (text.back() != ')') throw Error(ErrorKind::InvalidArgument, "bad sampler '" + text + "'");
        arg = text.substr(open + 1, text.size() - open - 2);
    }
    if (head == "box" && arg.empty()) return {Sampler::Box};
    if (head == "segment" && arg.empty()) return {Sampler::Segment};
    if (head == "member" && arg.empty()) return {Sampler::Member};
    if (head == "far") return {Sampler::Far, arg.empty() ? 4.0 : parse_number(arg)};
    if (head == "shell" && !arg.empty()) {
        if (arg.back() == 'x') return {Sampler::Shell, parse_number(arg.substr(0, arg.size() - 1)), true};
        return {Sampler::Shell, parse_number(arg), false};
    }
    throw Error(ErrorKind::InvalidArgument, "unknown sampler '" + text + "'");
}

std::vector<SamplerSpec> standard_samplers() {
    return {
        {Sampler::Box},
        {Sampler::Shell, 0.01, true},
        {Sampler::Shell, 0.1, true},
        {Sampler::Shell, 1.0, true},
        {Sampler::Shell, 10.0, true},
        {Sampler::Segment},
        {Sampler::Member},
        {Sampler::Far, 4.0},
    };
}

Matrix sample_queries(const PointSet& X, const SamplerSpec& spec, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw Error(ErrorKind::InvalidArgument, "sample_queries needs count >= 1");
    const std::size_t n = X.size(), d = X.dim();
    Matrix out(count, d);
    Rng rng(seed);
    switch (spec.kind) {
        case Sampler::Box: {
            Vector lo(X[0].begin(), X[0].end()), hi = lo;
            for (std::size_t i = 1; i < n; ++i) {
                for (std::size_t c = 0; c < d; ++c) {
                    lo[c] = std::min(lo[c], X[i][c]);
                    hi[c] = std::max(hi[c], X[i][c]);
                }
            }
            for (std::size_t q = 0; q < count; ++q) {
                for (std::size_t c = 0; c < d; ++c) {
                    const double mid = 0.5 * (lo[c] + hi[c]);
                    const double half = hi[c] - lo[c];  // 2x the original half-width
                    out(q, c) = rng.uniform(mid - half, mid + half);
                }
            }
            break;
        }
        case Sampler::Shell: {
            const auto nn = spec.relative ? nearest_neighbor_distances(X) : std::vector<double>{};
            for (std::size_t q = 0; q < count; ++q) {
                const std::size_t i = rng.index(n);
                const double scale = spec.relative ? (n > 1 ? nn[i] : 1.0) : 1.0;
                const Vector dir = rng.unit_vector(d);
                for (std::size_t c = 0; c < d; ++c) out(q, c) = X[i][c] + spec.param * scale * dir[c];
            }
            break;
        }
        case Sampler::Segment: {
            for (std::size_t q = 0; q < count; ++q) {
                if (n == 1) {
                    std::copy(X[0].begin(), X[0].end(), out.row(q).begin());
                    continue;
                }
                const std::size_t i = rng.index(n);
                std::size_t j = rng.index(n - 1);
                if (j >= i) ++j;
                const double t = rng.uniform();
                for (std::size_t c = 0; c < d; ++c) out(q, c) = (1.0 - t) * X[i][c] + t * X[j][c];
            }
            break;
        }
        case Sampler::Member: {
            for (std::size_t q = 0; q < count; ++q) {
                const auto src = X[q % n];
                std::copy(src.begin(), src.end(), out.row(q).begin());
            }
            break;
        }
        case Sampler::Far: {
            Vector centroid(d, 0.0);
            for (std::size_t i = 0; i < n; ++i) axpy(1.0 / static_cast<double>(n), X[i], centroid);
            const double diam = diameter(X);
            const double reach = spec.param * (diam > 0.0 ? diam : 1.0);
            for (std::size_t q = 0; q < count; ++q) {
                const Vector dir = rng.unit_vector(d);
                for (std::size_t c = 0; c < d; ++c) out(q, c) = centroid[c] + reach * dir[c];
            }
            break;
        }
    }
    return out;
}

LabeledQueries sample_suite(const PointSet& X, const std::vector<SamplerSpec>& specs, std::size_t per_sampler,
                            std::uint64_t seed) {
    LabeledQueries lq;
    lq.queries = Matrix(specs.size() * per_sampler, X.dim());
    std::size_t row = 0;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        const auto label = specs[s].label();
        const Matrix part = sample_queries(X, specs[s], per_sampler, derive_seed(item_seed(seed, s), label));
        for (std::size_t q = 0; q < part.rows(); ++q, ++row) {
            std::copy(part.row(q).begin(), part.row(q).end(), lq.queries.row(row).begin());
            lq.labels.push_back(label);
        }
    }
    return lq;
}

namespace {

struct QueryResult {
    std::vector<std::pair<std::size_t, double>> ratios;  // (point index, ratio)
    double max_sq_rel_error = 0.0;
    double anchor_error = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

QueryResult evaluate_one(const TerminalMap& map, const std::vector<Vector>& images,
                         std::span<const double> u) {
    QueryResult r;
    const auto q = map.embed_query(u);
    const PointSet& X = map.points();
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double true_d = distance(u, X[i]);
        const double emb_d = distance(q.image, images[i]);
        if (i == q.anchor) r.anchor_error = std::abs(emb_d - true_d);
        if (true_d <= 0.0) continue;
        r.ratios.emplace_back(i, emb_d / true_d);
        const double t2 = true_d * true_d;
        r.max_sq_rel_error = std::max(r.max_sq_rel_error, std::abs(emb_d * emb_d - t2) / t2);
    }
    r.residual = q.residual;
    r.iterations = q.iterations;
    r.converged = q.converged;
    return r;
}

}  // namespace

DistortionReport evaluate(const TerminalMap& map, const Matrix& queries, const EvalOptions& opts) {
    if (queries.rows() > 0 && queries.cols() != map.input_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "queries have dimension " + std::to_string(queries.cols()) +
                                                      ", embedding expects " + std::to_string(map.input_dim()));
    }
    if (!opts.labels.empty() && opts.labels.size() != queries.rows()) {
        throw Error(ErrorKind::InvalidArgument, "one label per query required");
    }
    std::vector<Vector> images(map.points().size());
    for (std::size_t i = 0; i < images.size(); ++i) images[i] = map.terminal_image(i);

    std::vector<QueryResult> results(queries.rows());
    auto body = [&](std::size_t q) { results[q] = evaluate_one(map, images, queries.row(q)); };
    if (opts.parallel) {
        kernels::omp::for_each_index(queries.rows(), body);
    } else {
        for (std::size_t q = 0; q < queries.rows(); ++q) body(q);
    }

    // Merge in query order so the report does not depend on scheduling.
    DistortionReport rep;
    rep.query_count = queries.rows();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    std::map<std::string, RatioStats> groups;
    std::vector<std::string> group_order;
    for (std::size_t q = 0; q < results.size(); ++q) {
        const auto& r = results[q];
        const std::string label = opts.labels.empty() ? "queries" : opts.labels[q];
        auto [it, inserted] = groups.try_emplace(label);
        auto& g = it->second;
        if (inserted) {
            group_order.push_back(label);
            g.label = label;
            g.min = std::numeric_limits<double>::infinity();
            g.max = -g.min;
        }
        ++g.queries;
        for (const auto& [i, ratio] : r.ratios) {
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            sum += ratio;
            g.min = std::min(g.min, ratio);
            g.max = std::max(g.max, ratio);
            g.mean += ratio;
            ++g.pairs;
            rep.max_abs_ratio_error = std::max(rep.max_abs_ratio_error, std::abs(ratio - 1.0));
            if (opts.keep_raw) rep.raw.push_back({q, i, ratio});
        }
        rep.pair_count += r.ratios.size();
        rep.max_sq_rel_error = std::max(rep.max_sq_rel_error, r.max_sq_rel_error);
        rep.max_anchor_error = std::max(rep.max_anchor_error, r.anchor_error);
        rep.max_residual = std::max(rep.max_residual, r.residual);
        rep.total_iterations += r.iterations;
        if (!r.converged) ++rep.not_converged;
    }
    for (const auto& label : group_order) {
        auto g = groups[label];
        if (g.pairs > 0) {
            g.mean /= static_cast<double>(g.pairs);
        } else {
            g.min = g.max = 0.0;
        }
        rep.samplers.push_back(g);
    }
    if (rep.pair_count > 0) {
        rep.min_ratio = lo;
        rep.max_ratio = hi;
        rep.mean_ratio = sum / static_cast<double>(rep.pair_count);
        rep.terminal_distortion = hi / lo;
        rep.histogram.lo = lo;
        rep.histogram.hi = hi;
        const double width = (hi - lo) / 64.0;
        for (const auto& r : results) {
            for (const auto& [i, ratio] : r.ratios) {
                std::size_t bin = width > 0.0 ? static_cast<std::size_t>((ratio - lo) / width) : 0;
                ++rep.histogram.counts[std::min<std::size_t>(bin, 63)];
            }
        }
    }
    return rep;
}

std::vector<ScalingRow> scaling_study(const PointSet& X, const std::vector<double>& epsilons,
                                      const std::vector<double>& Cs, const std::vector<std::uint64_t>& seeds,
                                      const ScalingOptions& opts) {
    if (epsilons.empty() || Cs.empty() || seeds.empty()) {
        throw Error(ErrorKind::InvalidArgument, "scaling study needs non-empty epsilon, C and seed grids");
    }
    const auto Y = direction_set(X);
    std::vector<ScalingRow> rows;
    for (double eps : epsilons) {
        for (double C : Cs) {
            const auto plan = plan_dimension(X.size(), eps, C);
            for (std::uint64_t seed : seeds) {
                EmbedderConfig cfg{eps, C, opts.distribution, seed, opts.solver};
                const auto embedder = make_sketch_embedder(X, plan.m, cfg);
                double chd = 0.0;
                if (Y.size() > 0) {
                    chd = estimate_sampled(embedder.sketch(), Y.directions, opts.chd_samples,
                                           derive_seed(seed, "chd"))
                              .max_violation;
                }
                const auto suite =
                    sample_suite(X, standard_samplers(), opts.queries_per_sampler, derive_seed(seed, "samplers"));
                EvalOptions eo;
                eo.labels = suite.labels;
                const auto rep = evaluate(embedder, suite.queries, eo);
                rows.push_back({eps, C, seed, plan.m, plan.mode, chd, rep.max_residual, rep.max_abs_ratio_error,
                                rep.terminal_distortion});
            }
        }
    }
    return rows;
}

nlohmann::json to_json(const DistortionReport& r) {
    nlohmann::json j;
    j["query_count"] = r.query_count;
    j["pair_count"] = r.pair_count;
    j["min_ratio"] = r.min_ratio;
    j["max_ratio"] = r.max_ratio;
    j["mean_ratio"] = r.mean_ratio;
    j["max_abs_ratio_error"] = r.max_abs_ratio_error;
    j["terminal_distortion"] = r.terminal_distortion;
    j["max_sq_rel_error"] = r.max_sq_rel_error;
    j["max_anchor_error"] = r.max_anchor_error;
    j["max_residual"] = r.max_residual;
    j["not_converged"] = r.not_converged;
    j["total_iterations"] = r.total_iterations;
    j["histogram"] = {{"lo", r.histogram.lo}, {"hi", r.histogram.hi}, {"counts", r.histogram.counts}};
    auto samplers = nlohmann::json::array();
    for (const auto& s : r.samplers) {
        samplers.push_back({{"label", s.label},
                            {"queries", s.queries},
                            {"pairs", s.pairs},
                            {"min", s.min},
                            {"max", s.max},
                            {"mean", s.mean}});
    }
    j["samplers"] = samplers;
    j["config"] = r.config;
    return j;
}

nlohmann::json to_json(const std::vector<ScalingRow>& rows) {
    auto out = nlohmann::json::array();
    for (const auto& r : rows) {
        out.push_back({{"epsilon", r.epsilon},
                       {"C", r.C},
                       {"seed", r.seed},
                       {"m", r.m},
                       {"planned_mode", std::string(to_string(r.planned_mode))},
                       {"chd_violation", r.chd_violation},
                       {"max_residual", r.max_residual},
                       {"max_abs_ratio_error", r.max_abs_ratio_error},
                       {"terminal_distortion", r.terminal_distortion}});
    }
    return out;
}

}  // namespace te
