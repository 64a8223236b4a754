#include "te/cli.hpp"

#include <omp.h>

#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "te/chd.hpp"
#include "te/error.hpp"
#include "te/harness.hpp"
#include "te/io.hpp"
#include "te/kernels.hpp"
#include "te/random.hpp"

namespace te::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
    double epsilon = 0.25;
    double C = 4.0;
    std::string distribution = "rademacher";
    std::optional<std::uint64_t> seed;
    std::size_t solver_iters = 5000;
    double solver_tol = 1e-3;
    std::string solver_step = "polyak0";
    int threads = 0;
    std::vector<std::string> asserts;
    std::string format;

    std::uint64_t resolved_seed() const {
        if (seed) return *seed;
        if (const char* env = std::getenv("TE_SEED")) {
            try {
                return std::stoull(env);
            } catch (const std::exception&) {
                throw Error(ErrorKind::InvalidArgument, "TE_SEED is not an unsigned integer");
            }
        }
        return 0;
    }

    SolverConfig solver() const {
        SolverConfig s;
        s.max_iters = solver_iters;
        s.tol = solver_tol;
        s.step_rule = parse_step_rule(solver_step);
        return s;
    }

    EmbedderConfig embedder() const {
        return {epsilon, C, parse_distribution(distribution), resolved_seed(), solver()};
    }

    // Thread count is left out: it never changes results.
    json echo() const {
        return {{"epsilon", epsilon},
                {"C", C},
                {"distribution", distribution},
                {"seed", resolved_seed()},
                {"solver", {{"max_iters", solver_iters}, {"tol", solver_tol}, {"step_rule", solver_step}}}};
    }

    std::optional<io::PointFormat> format_override() const {
        if (format.empty()) return std::nullopt;
        return io::parse_format(format);
    }
};

void add_config_flags(CLI::App& app, RunConfig& cfg) {
    app.add_option("--epsilon", cfg.epsilon, "Distortion parameter in (0, 1)");
    app.add_option("--const-C", cfg.C, "Constant C in m = ceil(C eps^-2 ln|Y|)");
    app.add_option("--dist", cfg.distribution, "Sketch entry distribution")
        ->check(CLI::IsMember({"rademacher", "gaussian"}));
    app.add_option("--seed", cfg.seed, "Global seed (falls back to TE_SEED, then 0)");
    app.add_option("--solver-iters", cfg.solver_iters, "Maximum solver iterations per query");
    app.add_option("--solver-tol", cfg.solver_tol, "Relative slack on the feasibility target");
    app.add_option("--solver-step", cfg.solver_step, "Step rule")->check(CLI::IsMember({"polyak0", "polyak-level"}));
    app.add_option("--threads", cfg.threads, "Worker cap (results do not depend on it)");
    app.add_option("--assert", cfg.asserts, "KEY=VAL: fail with exit 3 unless metric KEY <= VAL");
    app.add_option("--format", cfg.format, "Point file format override")->check(CLI::IsMember({"csv", "bin"}));
}

std::map<std::string, double> parse_asserts(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--assert expects KEY=VAL");
        try {
            out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidArgument, "--assert value in '" + item + "' is not a number");
        }
    }
    return out;
}

// Returns true when every assertion holds; unknown keys are usage errors.
bool check_asserts(const std::map<std::string, double>& asserts, const std::map<std::string, double>& metrics,
                   std::ostream& err) {
    bool ok = true;
    for (const auto& [key, limit] : asserts) {
        const auto it = metrics.find(key);
        if (it == metrics.end()) throw Error(ErrorKind::InvalidArgument, "unknown --assert key '" + key + "'");
        if (!(it->second <= limit)) {
            err << "assertion failed: " << key << " = " << it->second << " > " << limit << "\n";
            ok = false;
        }
    }
    return ok;
}

int cmd_build(const RunConfig& cfg, const fs::path& points_path, const fs::path& out_dir, std::ostream& out,
              std::ostream& err) {
    const auto fmt = io::detect_format(points_path, cfg.format_override());
    const PointSet X = build_point_set(io::read_points(points_path, fmt));
    for (const auto& [i, j] : close_pairs(X)) {
        err << "warning: points " << i << " and " << j << " are closer than 1e-9\n";
    }
    const auto ecfg = cfg.embedder();
    const auto plan = plan_dimension(X.size(), ecfg.epsilon, ecfg.C);
    const auto map = make_terminal_map(X, ecfg);
    io::write_bundle(out_dir, *map, cfg.echo());
    out << json{{"mode", std::string(to_string(plan.mode))},
                {"m", plan.m},
                {"output_dim", map->output_dim()},
                {"n", X.size()},
                {"d", X.dim()}}
               .dump()
        << "\n";
    return kSuccess;
}

int cmd_query(const RunConfig& cfg, const fs::path& bundle_dir, const fs::path& queries_path,
              const fs::path& out_path, std::ostream&, std::ostream&) {
    const auto bundle = io::read_bundle(bundle_dir);
    const auto& map = *bundle.map;
    const auto in_fmt = io::detect_format(queries_path, cfg.format_override());
    const Matrix queries = io::read_points(queries_path, in_fmt);
    if (queries.rows() > 0 && queries.cols() != map.input_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "queries have dimension " + std::to_string(queries.cols()) +
                                                      ", bundle expects " + std::to_string(map.input_dim()));
    }
    Matrix images(queries.rows(), map.output_dim());
    std::vector<EmbeddedQuery> diags(queries.rows());
    kernels::omp::for_each_index(queries.rows(), [&](std::size_t q) {
        diags[q] = map.embed_query(queries.row(q));
        std::copy(diags[q].image.begin(), diags[q].image.end(), images.row(q).begin());
    });
    io::write_points(out_path, images, in_fmt);

    auto per_query = json::array();
    for (const auto& d : diags) {
        per_query.push_back({{"anchor", d.anchor},
                             {"radius", d.radius},
                             {"residual", d.residual},
                             {"iterations", d.iterations},
                             {"converged", d.converged}});
    }
    io::write_json(out_path.string() + ".diag.json",
                   {{"bundle_config", bundle.manifest.at("config")},
                    {"mode", bundle.manifest.at("mode")},
                    {"output_dim", map.output_dim()},
                    {"queries", per_query}});
    return kSuccess;
}

int cmd_verify(const RunConfig& cfg, const fs::path& bundle_dir, const std::string& method, std::size_t samples,
               double grid_step, std::size_t ascent_iters, const fs::path& out_path, std::ostream& out,
               std::ostream& err) {
    const auto asserts = parse_asserts(cfg.asserts);
    const auto bundle = io::read_bundle(bundle_dir);
    const auto* embedder = dynamic_cast<const TerminalEmbedder*>(bundle.map.get());
    if (!embedder) {
        throw Error(ErrorKind::InvalidArgument, "bundle uses the exact small-n map; there is no sketch to verify");
    }
    const auto Y = direction_set(embedder->points());
    const std::uint64_t seed = derive_seed(bundle.manifest.at("config").value("seed", std::uint64_t{0}), "chd");
    ChdEstimate est;
    if (Y.size() == 0) {
        est.method = ChdMethod::Sampled;
    } else if (method == "grid") {
        est = certify_grid(embedder->sketch(), Y.directions, grid_step);
    } else {
        est = estimate_sampled(embedder->sketch(), Y.directions, samples, seed);
        if (method == "ascent") est = refine_local(embedder->sketch(), Y.directions, est.witness, ascent_iters);
    }
    json report = {{"max_violation", est.max_violation},
                   {"method", std::string(to_string(est.method))},
                   {"witness_weights", est.witness.weights},
                   {"m", embedder->sketch().rows()},
                   {"epsilon", embedder->epsilon()},
                   {"seed", seed},
                   {"lipschitz", est.lipschitz},
                   {"evaluated", est.evaluated},
                   {"directions", Y.size()},
                   {"config", bundle.manifest.at("config")}};
    if (est.certified_bound) report["certified_bound"] = *est.certified_bound;
    if (!out_path.empty()) {
        io::write_json(out_path, report);
    } else {
        out << report.dump() << "\n";
    }
    std::map<std::string, double> metrics{{"max-violation", est.max_violation}};
    if (est.certified_bound) metrics["certified-bound"] = *est.certified_bound;
    return check_asserts(asserts, metrics, err) ? kSuccess : kAssertion;
}

std::map<std::string, double> report_metrics(const DistortionReport& r) {
    return {{"max-abs-ratio-error", r.max_abs_ratio_error},
            {"terminal-distortion", r.terminal_distortion},
            {"max-ratio", r.max_ratio},
            {"max-sq-rel-error", r.max_sq_rel_error},
            {"max-anchor-error", r.max_anchor_error},
            {"max-residual", r.max_residual}};
}

int cmd_eval(const RunConfig& cfg, const fs::path& bundle_dir, const fs::path& queries_path,
             const std::vector<std::string>& sampler_names, std::size_t per_sampler, const std::string& baseline,
             const fs::path& out_path, const fs::path& raw_path, std::ostream& out, std::ostream& err) {
    const auto asserts = parse_asserts(cfg.asserts);
    auto bundle = io::read_bundle(bundle_dir);
    const TerminalMap* map = bundle.map.get();

    std::unique_ptr<TerminalMap> efn;
    if (baseline == "efn") {
        const auto& X = map->points();
        Matrix base(X.size(), map->output_dim() - 1);
        for (std::size_t i = 0; i < X.size(); ++i) {
            const auto img = map->terminal_image(i);
            std::copy(img.begin(), img.end() - 1, base.row(i).begin());
        }
        efn = std::make_unique<EfnBaseline>(X, std::move(base));
        map = efn.get();
    }

    const std::uint64_t seed = bundle.manifest.at("config").value("seed", std::uint64_t{0});
    LabeledQueries lq;
    json query_echo;
    if (!queries_path.empty()) {
        lq.queries = io::read_points(queries_path, io::detect_format(queries_path, cfg.format_override()));
        lq.labels.assign(lq.queries.rows(), "file");
        query_echo = {{"file", queries_path.filename().string()}};
    } else {
        std::vector<SamplerSpec> specs;
        if (sampler_names.empty()) {
            specs = standard_samplers();
        } else {
            for (const auto& s : sampler_names) specs.push_back(parse_sampler(s));
        }
        lq = sample_suite(map->points(), specs, per_sampler, derive_seed(seed, "samplers"));
        auto names = json::array();
        for (const auto& s : specs) names.push_back(s.label());
        query_echo = {{"samplers", names}, {"per_sampler", per_sampler}};
    }
    EvalOptions opts;
    opts.labels = lq.labels;
    opts.keep_raw = !raw_path.empty();
    auto rep = evaluate(*map, lq.queries, opts);
    rep.config = {{"bundle", bundle.manifest.at("config")},
                  {"mode", bundle.manifest.at("mode")},
                  {"m", bundle.manifest.value("m", std::size_t{0})},
                  {"baseline", baseline},
                  {"queries", query_echo}};
    const json report = to_json(rep);
    if (!out_path.empty()) {
        io::write_json(out_path, report);
    } else {
        out << report.dump() << "\n";
    }
    if (!raw_path.empty()) {
        std::ofstream raw(raw_path, std::ios::trunc);
        if (!raw) throw Error(ErrorKind::Io, "cannot write '" + raw_path.string() + "'");
        raw << "query_index,point_index,ratio\n";
        raw.precision(17);
        for (const auto& r : rep.raw) raw << r.query << "," << r.point << "," << r.ratio << "\n";
    }
    return check_asserts(asserts, report_metrics(rep), err) ? kSuccess : kAssertion;
}

int cmd_scaling(const RunConfig& cfg, const fs::path& points_path, const std::vector<double>& epsilons,
                const std::vector<double>& consts, const std::vector<std::uint64_t>& seeds, std::size_t per_sampler,
                std::size_t chd_samples, const fs::path& out_path, std::ostream& out) {
    const PointSet X =
        build_point_set(io::read_points(points_path, io::detect_format(points_path, cfg.format_override())));
    ScalingOptions opts;
    opts.queries_per_sampler = per_sampler;
    opts.chd_samples = chd_samples;
    opts.distribution = parse_distribution(cfg.distribution);
    opts.solver = cfg.solver();
    const auto rows = scaling_study(X, epsilons, consts, seeds, opts);
    json table = {{"rows", to_json(rows)},
                  {"config",
                   {{"distribution", cfg.distribution},
                    {"solver", cfg.echo()["solver"]},
                    {"per_sampler", per_sampler},
                    {"chd_samples", chd_samples},
                    {"points", points_path.filename().string()}}}};
    if (!out_path.empty()) {
        io::write_json(out_path, table);
    } else {
        out << table.dump() << "\n";
    }
    return kSuccess;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::InvalidEpsilon:
        case ErrorKind::InvalidConstant: return kUsage;
        default: return kInput;
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Terminal embeddings: sketch a point set and map arbitrary queries"};
    app.require_subcommand(1);
    RunConfig cfg;

    fs::path points_path, out_dir, bundle_dir, queries_path, out_path, raw_path;
    std::string method = "sampled", baseline = "none";
    std::size_t samples = 10000, ascent_iters = 200, per_sampler = 32, chd_samples = 2000;
    double grid_step = 1e-2;
    std::vector<std::string> sampler_names;
    std::vector<double> epsilons, consts{4.0};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    auto* build = app.add_subcommand("build", "Plan, sketch and embed a point set into a bundle");
    add_config_flags(*build, cfg);
    build->add_option("--points", points_path, "Point file (.csv or .bin)")->required();
    build->add_option("--out", out_dir, "Bundle directory to write")->required();

    auto* query = app.add_subcommand("query", "Embed query points with a bundle");
    add_config_flags(*query, cfg);
    query->add_option("--bundle", bundle_dir)->required();
    query->add_option("--queries", queries_path)->required();
    query->add_option("--out", out_path)->required();

    auto* verify = app.add_subcommand("verify-chd", "Estimate convex hull distortion of a bundle's sketch");
    add_config_flags(*verify, cfg);
    verify->add_option("--bundle", bundle_dir)->required();
    verify->add_option("--method", method)->check(CLI::IsMember({"sampled", "grid", "ascent"}));
    verify->add_option("--samples", samples);
    verify->add_option("--grid-step", grid_step);
    verify->add_option("--ascent-iters", ascent_iters);
    verify->add_option("--out", out_path);

    auto* eval = app.add_subcommand("eval", "Measure terminal distortion of a bundle");
    add_config_flags(*eval, cfg);
    eval->add_option("--bundle", bundle_dir)->required();
    eval->add_option("--queries", queries_path, "Explicit query file instead of samplers");
    eval->add_option("--samplers", sampler_names, "box, shell(r), shell(rx), segment, member, far(s)")
        ->delimiter(',');
    eval->add_option("--per-sampler", per_sampler);
    eval->add_option("--baseline", baseline)->check(CLI::IsMember({"none", "efn"}));
    eval->add_option("--out", out_path);
    eval->add_option("--raw-csv", raw_path);

    auto* scaling = app.add_subcommand("scaling", "Violation and distortion versus (epsilon, C, seed)");
    add_config_flags(*scaling, cfg);
    scaling->add_option("--points", points_path)->required();
    scaling->add_option("--epsilons", epsilons)->delimiter(',')->required();
    scaling->add_option("--consts", consts)->delimiter(',');
    scaling->add_option("--seeds", seeds)->delimiter(',');
    scaling->add_option("--per-sampler", per_sampler);
    scaling->add_option("--chd-samples", chd_samples);
    scaling->add_option("--out", out_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
        if (*build) return cmd_build(cfg, points_path, out_dir, out, err);
        if (*query) return cmd_query(cfg, bundle_dir, queries_path, out_path, out, err);
        if (*verify) {
            return cmd_verify(cfg, bundle_dir, method, samples, grid_step, ascent_iters, out_path, out, err);
        }
        if (*eval) {
            return cmd_eval(cfg, bundle_dir, queries_path, sampler_names, per_sampler, baseline, out_path, raw_path,
                            out, err);
        }
        if (*scaling) {
            return cmd_scaling(cfg, points_path, epsilons, consts, seeds, per_sampler, chd_samples, out_path, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInput;
    }
    return kUsage;
}

}  // namespace te::cli
