#include "te/chd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "te/error.hpp"
#include "te/kernels.hpp"
#include "te/random.hpp"

namespace te {

namespace {

constexpr std::size_t kMaxGridDirections = 6;
constexpr double kMaxGridPoints = 2e9;

void check_dims(const SketchMatrix& Pi, const Matrix& T) {
    if (T.cols() != Pi.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "directions have dimension " + std::to_string(T.cols()) +
                                                      ", sketch expects " + std::to_string(Pi.cols()));
    }
}

HullPoint vertex(const Matrix& T, std::size_t i) {
    Vector w(T.rows(), 0.0);
    w[i] = 1.0;
    return make_hull_point(T, std::move(w));
}

HullPoint from_sparse(const Matrix& T, const kernels::SparseWeights& s) {
    Vector w(T.rows(), 0.0);
    for (std::size_t t = 0; t < s.index.size(); ++t) w[s.index[t]] += s.weight[t];
    return make_hull_point(T, std::move(w));
}

// Dirichlet(1) weights on `support` distinct indices drawn uniformly.
void dirichlet_on_support(Rng& rng, std::size_t k, std::size_t support, kernels::SparseWeights& out) {
    if (support >= k) {
        out.index.resize(k);
        std::iota(out.index.begin(), out.index.end(), std::size_t{0});
    } else {
        // Floyd's algorithm, then sorted so the combination order is canonical.
        for (std::size_t j = k - support; j < k; ++j) {
            const std::size_t t = static_cast<std::size_t>(rng.index(j + 1));
            if (std::find(out.index.begin(), out.index.end(), t) == out.index.end()) {
                out.index.push_back(t);
            } else {
                out.index.push_back(j);
            }
        }
        std::sort(out.index.begin(), out.index.end());
    }
    out.weight.resize(out.index.size());
    double total = 0.0;
    for (auto& w : out.weight) total += (w = rng.exponential());
    for (auto& w : out.weight) w /= total;
}

}  // namespace

HullPoint make_hull_point(const Matrix& T, Vector weights) {
    if (weights.size() != T.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "weights must have one entry per direction");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw Error(ErrorKind::InvalidArgument, "hull weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error(ErrorKind::InvalidArgument, "hull weights must sum to 1");
    }
    HullPoint p;
    p.vector.assign(T.cols(), 0.0);
    for (std::size_t i = 0; i < T.rows(); ++i) {
        if (weights[i] != 0.0) axpy(weights[i], T.row(i), p.vector);
    }
    p.weights = std::move(weights);
    return p;
}

std::string_view to_string(ChdMethod m) {
    switch (m) {
        case ChdMethod::GridCertified: return "grid_certified";
        case ChdMethod::Sampled: return "sampled";
        case ChdMethod::LocalAscent: return "local_ascent";
    }
    return "sampled";
}

double violation(const SketchMatrix& Pi, const HullPoint& p) {
    const Vector image = apply_sketch(Pi, p.vector);
    return std::abs(norm(image) - norm(p.vector));
}

double hull_lipschitz(const SketchMatrix& Pi, const Matrix& T) {
    check_dims(Pi, T);
    double L = 0.0;
    for (std::size_t i = 0; i < T.rows(); ++i) {
        L = std::max(L, norm(apply_sketch(Pi, T.row(i))) + norm(T.row(i)));
    }
    return L;
}

double grid_cover_factor(std::size_t k) {
    double best = 0.0;
    for (std::size_t j = 0; j <= k; ++j) {
        best = std::max(best, 2.0 * static_cast<double>(j) * static_cast<double>(k - j) / static_cast<double>(k));
    }
    return best;
}

ChdEstimate certify_grid(const SketchMatrix& Pi, const Matrix& T, double h) {
    check_dims(Pi, T);
    if (T.rows() == 0) throw Error(ErrorKind::InvalidArgument, "direction set is empty");
    if (T.rows() > kMaxGridDirections) {
        throw Error(ErrorKind::TooManyDirections, "grid certification supports at most " +
                                                      std::to_string(kMaxGridDirections) + " directions, got " +
                                                      std::to_string(T.rows()));
    }
    if (!(h > 0.0 && h <= 1.0)) throw Error(ErrorKind::InvalidArgument, "grid step must lie in (0, 1]");
    const auto steps = static_cast<std::size_t>(std::ceil(1.0 / h - 1e-9));
    if (kernels::grid_point_count(T.rows(), steps) > kMaxGridPoints) {
        throw Error(ErrorKind::GridTooFine, "grid would visit more than 2e9 points");
    }

    const Matrix images = apply_sketch_rows(Pi, T);
    const auto grid = kernels::omp::grid_max(kernels::gram(images), kernels::gram(T), steps);

    ChdEstimate est;
    est.method = ChdMethod::GridCertified;
    est.grid_step = 1.0 / static_cast<double>(steps);
    est.lipschitz = hull_lipschitz(Pi, T);
    est.evaluated = grid.points;
    Vector w(T.rows());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(grid.counts[i]) / static_cast<double>(steps);
    // Integer counts divided by N can miss a unit sum by a few ulps.
    est.witness = make_hull_point(T, std::move(w));
    est.max_violation = grid.value;
    est.certified_bound = grid.value + est.lipschitz * grid_cover_factor(T.rows()) * est.grid_step;
    return est;
}

// Above this many pairs the exhaustive midpoint pass costs more than the rest
// of the estimate combined; the support-2 samples still reach pair segments.
constexpr std::size_t kMaxMidpointPairs = std::size_t{1} << 24;

ChdEstimate estimate_sampled(const SketchMatrix& Pi, const Matrix& T, std::size_t samples, std::uint64_t seed) {
    check_dims(Pi, T);
    if (samples == 0) throw Error(ErrorKind::InvalidArgument, "estimate_sampled needs samples >= 1");
    if (T.rows() == 0) throw Error(ErrorKind::InvalidArgument, "direction set is empty");
    const std::size_t k = T.rows();
    const Matrix images = apply_sketch_rows(Pi, T);

    ChdEstimate est;
    est.method = ChdMethod::Sampled;
    est.lipschitz = hull_lipschitz(Pi, T);

    double best = -1.0;
    HullPoint witness;
    for (std::size_t i = 0; i < k; ++i) {
        const double v = std::abs(norm(images.row(i)) - norm(T.row(i)));
        if (v > best) {
            best = v;
            witness = vertex(T, i);
        }
    }
    est.evaluated = k;

    if (k >= 2 && k * (k - 1) / 2 <= kMaxMidpointPairs) {
        const auto mid = kernels::omp::midpoint_max(images, T);
        est.evaluated += k * (k - 1) / 2;
        if (mid.value > best) {
            best = mid.value;
            Vector w(k, 0.0);
            w[mid.i] = 0.5;
            w[mid.j] = 0.5;
            witness = make_hull_point(T, std::move(w));
        }
    }

    const std::size_t supports[4] = {k, 2, 3, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(k))))};
    const std::uint64_t stream = derive_seed(seed, "chd.samples");
    auto generate = [&](std::size_t s, kernels::SparseWeights& out) {
        Rng rng(item_seed(stream, s));
        dirichlet_on_support(rng, k, std::min(supports[s % 4], k), out);
    };
    const auto sampled = kernels::omp::sampled_max(images, T, samples, generate);
    est.evaluated += samples;
    if (sampled.value > best) {
        best = sampled.value;
        witness = from_sparse(T, sampled.weights);
    }

    est.max_violation = best;
    est.witness = std::move(witness);
    return est;
}

namespace {

struct Quadratic {
    double c0, c1, c2;  // c0 + 2 c1 s + c2 s^2
    double norm_at(double s) const { return std::sqrt(std::max(c0 + s * (2.0 * c1 + s * c2), 0.0)); }
};

struct LineResult {
    double value;
    double step;
};

// Maximizes |img(s)| - |src(s)| in absolute value for s in [0, hi]: dense
// scan, then golden-section refinement inside the best bracket.
LineResult line_search(const Quadratic& img, const Quadratic& src, double hi) {
    auto f = [&](double s) { return std::abs(img.norm_at(s) - src.norm_at(s)); };
    constexpr int kScan = 64;
    LineResult best{f(0.0), 0.0};
    int best_k = 0;
    for (int k = 1; k <= kScan; ++k) {
        const double s = hi * k / kScan;
        const double v = f(s);
        if (v > best.value) {
            best = {v, s};
            best_k = k;
        }
    }
    double a = hi * std::max(best_k - 1, 0) / kScan;
    double b = hi * std::min(best_k + 1, kScan) / kScan;
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 60 && b - a > 1e-15 * std::max(hi, 1.0); ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
    }
    if (f1 > best.value) best = {f1, x1};
    if (f2 > best.value) best = {f2, x2};
    return best;
}

}  // namespace

ChdEstimate refine_local(const SketchMatrix& Pi, const Matrix& T, const HullPoint& start, std::size_t iters) {
    check_dims(Pi, T);
    const std::size_t k = T.rows();
    if (start.weights.size() != k) {
        throw Error(ErrorKind::DimensionMismatch, "start point weights do not match the direction set");
    }
    const Matrix images = apply_sketch_rows(Pi, T);

    Vector lambda = start.weights;
    Vector img(images.cols(), 0.0), src(T.cols(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        if (lambda[i] != 0.0) {
            axpy(lambda[i], images.row(i), img);
            axpy(lambda[i], T.row(i), src);
        }
    }
    double value = std::abs(norm(img) - norm(src));

    ChdEstimate est;
    est.method = ChdMethod::LocalAscent;
    est.lipschitz = hull_lipschitz(Pi, T);
    est.trace.push_back(value);

    constexpr std::size_t kAllPairsLimit = 16;
    constexpr std::size_t kCandidates = 4;
    Vector d_img(images.cols()), d_src(T.cols());

    auto pair_candidates = [&]() {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        if (k <= kAllPairsLimit) {
            for (std::size_t i = 0; i < k; ++i) {
                if (lambda[i] <= 0.0) continue;
                for (std::size_t j = 0; j < k; ++j) {
                    if (j != i) pairs.emplace_back(i, j);
                }
            }
            return pairs;
        }
        // Pairwise Frank-Wolfe candidates from the gradient of the violation:
        // take mass from low-gradient support coordinates, give it to the
        // highest-gradient ones.
        const double ni = norm(img), ns = norm(src);
        const double sign = ni >= ns ? 1.0 : -1.0;
        std::vector<double> grad(k);
        for (std::size_t j = 0; j < k; ++j) {
            const double gi = ni > 0.0 ? dot(img, images.row(j)) / ni : norm(images.row(j));
            const double gs = ns > 0.0 ? dot(src, T.row(j)) / ns : norm(T.row(j));
            grad[j] = sign * (gi - gs);
        }
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return grad[a] > grad[b]; });
        std::vector<std::size_t> up(order.begin(), order.begin() + static_cast<long>(std::min(kCandidates, k)));
        std::vector<std::size_t> down;
        for (auto it = order.rbegin(); it != order.rend() && down.size() < kCandidates; ++it) {
            if (lambda[*it] > 0.0) down.push_back(*it);
        }
        for (auto i : down) {
            for (auto j : up) {
                if (i != j) pairs.emplace_back(i, j);
            }
        }
        return pairs;
    };

    for (std::size_t it = 0; it < iters; ++it) {
        LineResult best{value, 0.0};
        std::pair<std::size_t, std::size_t> best_pair{0, 0};
        for (auto [i, j] : pair_candidates()) {
            for (std::size_t c = 0; c < d_img.size(); ++c) d_img[c] = images(j, c) - images(i, c);
            for (std::size_t c = 0; c < d_src.size(); ++c) d_src[c] = T(j, c) - T(i, c);
            const Quadratic qi{squared_norm(img), dot(img, d_img), squared_norm(d_img)};
            const Quadratic qs{squared_norm(src), dot(src, d_src), squared_norm(d_src)};
            const auto r = line_search(qi, qs, lambda[i]);
            if (r.value > best.value) {
                best = r;
                best_pair = {i, j};
            }
        }
        if (best.step <= 0.0) break;

        // Apply the move and recompute the value directly; keep it only if
        // it is a strict improvement.
        const auto [i, j] = best_pair;
        Vector lambda_next = lambda;
        const double moved = std::min(best.step, lambda_next[i]);
        lambda_next[i] = moved >= lambda[i] ? 0.0 : lambda_next[i] - moved;
        lambda_next[j] += moved;
        Vector img_next = img, src_next = src;
        axpy(-moved, images.row(i), img_next);
        axpy(moved, images.row(j), img_next);
        axpy(-moved, T.row(i), src_next);
        axpy(moved, T.row(j), src_next);
        const double next = std::abs(norm(img_next) - norm(src_next));
        if (!(next > value)) break;
        lambda = std::move(lambda_next);
        img = std::move(img_next);
        src = std::move(src_next);
        value = next;
        est.trace.push_back(value);
    }

    // Renormalize against drift before forming the witness.
    const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
    for (auto& w : lambda) w /= total;
    est.witness = make_hull_point(T, std::move(lambda));
    est.max_violation = std::max(value, violation(Pi, est.witness));
    est.evaluated = est.trace.size();
    return est;
}

}  // namespace te
