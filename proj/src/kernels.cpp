#include "te/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <mutex>

namespace te::kernels {

namespace {

double quad_form(const Matrix& G, const std::vector<std::size_t>& c) {
    const std::size_t k = c.size();
    double s = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        if (c[a] == 0) continue;
        double row = 0.0;
        for (std::size_t b = 0; b < k; ++b) row += G(a, b) * static_cast<double>(c[b]);
        s += static_cast<double>(c[a]) * row;
    }
    return s;
}

double grid_violation(const Matrix& A, const Matrix& B, const std::vector<std::size_t>& c, double inv_steps) {
    const double img = std::sqrt(std::max(quad_form(A, c), 0.0)) * inv_steps;
    const double src = std::sqrt(std::max(quad_form(B, c), 0.0)) * inv_steps;
    return std::abs(img - src);
}

// Enumerates compositions of `remaining` into coordinates [pos, k) in
// lexicographic order of (c[pos], c[pos+1], ...) with larger values first.
void enumerate(const Matrix& A, const Matrix& B, std::vector<std::size_t>& c, std::size_t pos,
               std::size_t remaining, double inv_steps, GridResult& best) {
    const std::size_t k = c.size();
    if (pos + 1 == k) {
        c[pos] = remaining;
        const double v = grid_violation(A, B, c, inv_steps);
        ++best.points;
        if (v > best.value) {
            best.value = v;
            best.counts = c;
        }
        return;
    }
    for (std::size_t take = remaining + 1; take-- > 0;) {
        c[pos] = take;
        enumerate(A, B, c, pos + 1, remaining - take, inv_steps, best);
    }
    c[pos] = 0;
}

void take_better(SampleResult& best, double value, std::size_t index, const SparseWeights& w) {
    if (value > best.value || (value == best.value && index < best.index)) {
        best.value = value;
        best.index = index;
        best.weights = w;
    }
}

void take_better(PairResult& best, const PairResult& other) {
    if (other.value > best.value ||
        (other.value == best.value && std::pair(other.i, other.j) < std::pair(best.i, best.j))) {
        best = other;
    }
}

PairResult midpoint_row(const Matrix& images, const Matrix& sources, const std::vector<double>& img_sq,
                        const std::vector<double>& src_sq, std::size_t i) {
    PairResult best;
    for (std::size_t j = i + 1; j < images.rows(); ++j) {
        const double a = 0.25 * (img_sq[i] + img_sq[j] + 2.0 * dot(images.row(i), images.row(j)));
        const double b = 0.25 * (src_sq[i] + src_sq[j] + 2.0 * dot(sources.row(i), sources.row(j)));
        const double v = std::abs(std::sqrt(std::max(a, 0.0)) - std::sqrt(std::max(b, 0.0)));
        if (v > best.value) best = {v, i, j};
    }
    return best;
}

std::vector<double> row_squared_norms(const Matrix& R) {
    std::vector<double> out(R.rows());
    for (std::size_t i = 0; i < R.rows(); ++i) out[i] = squared_norm(R.row(i));
    return out;
}

}  // namespace

double sparse_violation(const Matrix& images, const Matrix& sources, const SparseWeights& w) {
    Vector img(images.cols(), 0.0), src(sources.cols(), 0.0);
    for (std::size_t t = 0; t < w.index.size(); ++t) {
        axpy(w.weight[t], images.row(w.index[t]), img);
        axpy(w.weight[t], sources.row(w.index[t]), src);
    }
    return std::abs(norm(img) - norm(src));
}

double grid_point_count(std::size_t k, std::size_t steps) {
    // C(steps + k - 1, k - 1)
    double c = 1.0;
    for (std::size_t i = 1; i < k; ++i) c = c * static_cast<double>(steps + i) / static_cast<double>(i);
    return std::round(c);
}

Matrix gram(const Matrix& R) {
    Matrix G(R.rows(), R.rows());
    for (std::size_t i = 0; i < R.rows(); ++i) {
        for (std::size_t j = i; j < R.rows(); ++j) {
            G(i, j) = G(j, i) = dot(R.row(i), R.row(j));
        }
    }
    return G;
}

namespace serial {

Matrix apply_rows(const Matrix& M, const Matrix& X) {
    Matrix out(X.rows(), M.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) matvec(M, X.row(r), out.row(r));
    return out;
}

GridResult grid_max(const Matrix& gram_image, const Matrix& gram_source, std::size_t steps) {
    GridResult best;
    std::vector<std::size_t> c(gram_image.rows(), 0);
    if (c.empty()) return best;
    enumerate(gram_image, gram_source, c, 0, steps, 1.0 / static_cast<double>(steps), best);
    return best;
}

PairResult midpoint_max(const Matrix& images, const Matrix& sources) {
    const auto img_sq = row_squared_norms(images);
    const auto src_sq = row_squared_norms(sources);
    PairResult best;
    for (std::size_t i = 0; i < images.rows(); ++i) {
        take_better(best, midpoint_row(images, sources, img_sq, src_sq, i));
    }
    return best;
}

SampleResult sampled_max(const Matrix& images, const Matrix& sources, std::size_t count,
                         const WeightGenerator& generate) {
    SampleResult best;
    SparseWeights w;
    for (std::size_t s = 0; s < count; ++s) {
        w.clear();
        generate(s, w);
        take_better(best, sparse_violation(images, sources, w), s, w);
    }
    return best;
}

}  // namespace serial

namespace omp {

Matrix apply_rows(const Matrix& M, const Matrix& X) {
    Matrix out(X.rows(), M.rows());
    const auto rows = static_cast<std::int64_t>(X.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < rows; ++r) {
        matvec(M, X.row(static_cast<std::size_t>(r)), out.row(static_cast<std::size_t>(r)));
    }
    return out;
}

GridResult grid_max(const Matrix& gram_image, const Matrix& gram_source, std::size_t steps) {
    const std::size_t k = gram_image.rows();
    if (k < 2) return serial::grid_max(gram_image, gram_source, steps);
    const double inv_steps = 1.0 / static_cast<double>(steps);
    // One slice per value of the first coordinate, visited in the serial order.
    std::vector<GridResult> slices(steps + 1);
    const auto count = static_cast<std::int64_t>(steps + 1);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t s = 0; s < count; ++s) {
        const std::size_t first = steps - static_cast<std::size_t>(s);
        std::vector<std::size_t> c(k, 0);
        c[0] = first;
        enumerate(gram_image, gram_source, c, 1, steps - first, inv_steps, slices[static_cast<std::size_t>(s)]);
        slices[static_cast<std::size_t>(s)].counts.resize(k);
        slices[static_cast<std::size_t>(s)].counts[0] = first;
    }
    GridResult best;
    for (auto& slice : slices) {
        best.points += slice.points;
        if (slice.value > best.value) {
            best.value = slice.value;
            best.counts = std::move(slice.counts);
        }
    }
    return best;
}

PairResult midpoint_max(const Matrix& images, const Matrix& sources) {
    const auto img_sq = row_squared_norms(images);
    const auto src_sq = row_squared_norms(sources);
    std::vector<PairResult> rows(images.rows());
    const auto n = static_cast<std::int64_t>(images.rows());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < n; ++i) {
        rows[static_cast<std::size_t>(i)] = midpoint_row(images, sources, img_sq, src_sq, static_cast<std::size_t>(i));
    }
    PairResult best;
    for (const auto& r : rows) take_better(best, r);
    return best;
}

SampleResult sampled_max(const Matrix& images, const Matrix& sources, std::size_t count,
                         const WeightGenerator& generate) {
    std::vector<SampleResult> partial(static_cast<std::size_t>(omp_get_max_threads()));
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel
    {
        auto& best = partial[static_cast<std::size_t>(omp_get_thread_num())];
        SparseWeights w;
#pragma omp for schedule(static)
        for (std::int64_t s = 0; s < n; ++s) {
            w.clear();
            generate(static_cast<std::size_t>(s), w);
            take_better(best, sparse_violation(images, sources, w), static_cast<std::size_t>(s), w);
        }
    }
    SampleResult best;
    for (const auto& p : partial) {
        if (p.value == -std::numeric_limits<double>::infinity()) continue;
        take_better(best, p.value, p.index, p.weights);
    }
    return best;
}

void for_each_index(std::size_t count, const std::function<void(std::size_t)>& body) {
    const auto n = static_cast<std::int64_t>(count);
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace omp

}  // namespace te::kernels
