#include "te/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "te/error.hpp"

namespace te {

PointSet build_point_set(const std::vector<Vector>& raw) {
    if (raw.empty()) throw Error(ErrorKind::EmptyInput, "point set needs at least one point");
    const std::size_t d = raw.front().size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].size() != d) {
            throw Error(ErrorKind::DimensionMismatch, "point " + std::to_string(i) + " has dimension " +
                                                          std::to_string(raw[i].size()) + ", expected " +
                                                          std::to_string(d));
        }
    }
    return build_point_set(Matrix::from_rows(raw));
}

PointSet build_point_set(Matrix raw) {
    if (raw.rows() == 0) throw Error(ErrorKind::EmptyInput, "point set needs at least one point");
    if (raw.cols() == 0) throw Error(ErrorKind::DimensionMismatch, "points must have dimension >= 1");

    std::vector<std::size_t> order(raw.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto row_less = [&](std::size_t a, std::size_t b) {
        auto ra = raw.row(a), rb = raw.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    };
    std::sort(order.begin(), order.end(), row_less);
    for (std::size_t i = 1; i < order.size(); ++i) {
        auto a = raw.row(order[i - 1]), b = raw.row(order[i]);
        if (std::equal(a.begin(), a.end(), b.begin())) {
            const auto [lo, hi] = std::minmax(order[i - 1], order[i]);
            throw Error(ErrorKind::DuplicatePoint,
                        "points " + std::to_string(lo) + " and " + std::to_string(hi) + " are identical");
        }
    }
    return PointSet(std::move(raw));
}

std::size_t nearest_point(std::span<const double> u, const PointSet& X) {
    if (u.size() != X.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "query has dimension " + std::to_string(u.size()) +
                                                      ", point set has " + std::to_string(X.dim()));
    }
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double d2 = squared_distance(u, X[i]);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

DirectionSet direction_set(const PointSet& X) {
    const std::size_t n = X.size();
    DirectionSet Y;
    if (n < 2) {
        Y.directions = Matrix(0, X.dim());
        return Y;
    }
    Y.directions = Matrix(n * (n - 1), X.dim());
    Y.pair_index.reserve(n * (n - 1));
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            auto out = Y.directions.row(r++);
            auto xi = X[i], xj = X[j];
            for (std::size_t c = 0; c < out.size(); ++c) out[c] = xi[c] - xj[c];
            const double len = norm(out);
            for (auto& v : out) v /= len;
            Y.pair_index.emplace_back(i, j);
        }
    }
    return Y;
}

std::vector<std::pair<std::size_t, std::size_t>> close_pairs(const PointSet& X, double threshold) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < X.size(); ++i) {
        for (std::size_t j = i + 1; j < X.size(); ++j) {
            if (distance(X[i], X[j]) < threshold) out.emplace_back(i, j);
        }
    }
    return out;
}

double diameter(const PointSet& X) {
    double best = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        for (std::size_t j = i + 1; j < X.size(); ++j) best = std::max(best, squared_distance(X[i], X[j]));
    }
    return std::sqrt(best);
}

std::vector<double> nearest_neighbor_distances(const PointSet& X) {
    std::vector<double> out(X.size(), 0.0);
    if (X.size() < 2) return out;
    for (std::size_t i = 0; i < X.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < X.size(); ++j) {
            if (j != i) best = std::min(best, squared_distance(X[i], X[j]));
        }
        out[i] = std::sqrt(best);
    }
    return out;
}

}  // namespace te
