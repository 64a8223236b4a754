#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "te/extension.hpp"
#include "te/geometry.hpp"
#include "te/linalg.hpp"

namespace te {

enum class Sampler { Box, Shell, Segment, Member, Far };

/// One query distribution. `param` is the radius for Shell (absolute, or a
/// multiple of the anchor's nearest-neighbor distance when `relative`) and
/// the diameter multiple for Far.
struct SamplerSpec {
    Sampler kind = Sampler::Box;
    double param = 0.0;
    bool relative = false;

    std::string label() const;
};

SamplerSpec parse_sampler(const std::string& text);

/// box, shell at {0.01, 0.1, 1, 10} x local nearest-neighbor distance,
/// segment, member, far(4).
std::vector<SamplerSpec> standard_samplers();

/// box: uniform in the bounding box of X inflated 2x about its center.
/// shell: x_i + r * (random unit vector), i uniform.
/// segment: random convex combination of a random pair.
/// member: the points of X in order, cycling.
/// far: centroid + s * diameter * (random unit vector).
Matrix sample_queries(const PointSet& X, const SamplerSpec& spec, std::size_t count, std::uint64_t seed);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::array<std::uint64_t, 64> counts{};
};

struct RatioStats {
    std::string label;
    std::size_t queries = 0;
    std::size_t pairs = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

struct RawRatio {
    std::size_t query;
    std::size_t point;
    double ratio;
};

/// Ratios r = |f(u) - f(x_i)| / |u - x_i| over every query and every
/// terminal at positive distance.
struct DistortionReport {
    std::size_t query_count = 0;
    std::size_t pair_count = 0;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    double mean_ratio = 0.0;
    double max_abs_ratio_error = 0.0;  // max |r - 1|
    double terminal_distortion = 0.0;  // max r / min r
    double max_sq_rel_error = 0.0;     // max | |f(u)-f(x)|^2 - |u-x|^2 | / |u-x|^2
    double max_anchor_error = 0.0;     // max | |f(u)-f(x_k)| - |u-x_k| |
    double max_residual = 0.0;
    std::size_t not_converged = 0;
    std::size_t total_iterations = 0;
    Histogram histogram;
    std::vector<RatioStats> samplers;
    std::vector<RawRatio> raw;  // filled only when requested
    nlohmann::json config = nlohmann::json::object();
};

struct EvalOptions {
    bool keep_raw = false;
    bool parallel = true;
    /// Sampler label per query; empty means one group called "queries".
    std::vector<std::string> labels;
};

DistortionReport evaluate(const TerminalMap& map, const Matrix& queries, const EvalOptions& opts = {});

/// Queries from every sampler in `specs`, `per_sampler` each, with labels.
struct LabeledQueries {
    Matrix queries;
    std::vector<std::string> labels;
};

LabeledQueries sample_suite(const PointSet& X, const std::vector<SamplerSpec>& specs, std::size_t per_sampler,
                            std::uint64_t seed);

struct ScalingOptions {
    std::size_t queries_per_sampler = 16;
    std::size_t chd_samples = 2000;
    Distribution distribution = Distribution::Rademacher;
    SolverConfig solver;
};

struct ScalingRow {
    double epsilon;
    double C;
    std::uint64_t seed;
    std::size_t m;
    EmbeddingMode planned_mode;
    double chd_violation;
    double max_residual;
    double max_abs_ratio_error;
    double terminal_distortion;
};

/// Full factorial over (epsilon, C, seed). Always runs the sketch route with
/// the formula m, so the violation column is defined even where the plan
/// would pick the exact small-n map (that choice is echoed in planned_mode).
std::vector<ScalingRow> scaling_study(const PointSet& X, const std::vector<double>& epsilons,
                                      const std::vector<double>& Cs, const std::vector<std::uint64_t>& seeds,
                                      const ScalingOptions& opts = {});

nlohmann::json to_json(const DistortionReport& r);
nlohmann::json to_json(const std::vector<ScalingRow>& rows);

}  // namespace te
