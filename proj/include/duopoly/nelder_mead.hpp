#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace duopoly {

struct NelderMeadOptions {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    double x_tol = 1e-9;  ///< simplex diameter (max-norm about the best vertex)
    double f_tol = 1e-12; ///< objective spread across the simplex
    std::size_t max_evaluations = 5000;
    /// Fresh simplices built around the best point after convergence; the
    /// search stops once a restart no longer improves the objective.
    std::size_t max_restarts = 4;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    std::size_t iterations = 0;
    bool converged = false;
    /// Best objective after each iteration.
    std::vector<double> best_history;
};

/// Downhill simplex minimization. Every trial point passes through
/// `project` (e.g. clamping onto bounds) before it is evaluated, so all
/// returned and visited points are feasible.
template <class Objective, class Projection>
NelderMeadResult nelder_mead(Objective&& objective, std::vector<double> x0, const std::vector<double>& step,
                             Projection&& project, const NelderMeadOptions& opts = {})
{
    const std::size_t dim = x0.size();
    using Point = std::vector<double>;

    NelderMeadResult res;
    auto eval = [&](Point& p) {
        project(p);
        ++res.evaluations;
        const double v = objective(static_cast<const Point&>(p));
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    project(x0);
    res.x = x0;
    res.f = eval(res.x);
    if (dim == 0) {
        res.converged = true;
        return res;
    }

    std::vector<Point> simplex(dim + 1);
    std::vector<double> values(dim + 1);
    std::vector<std::size_t> order(dim + 1);

    auto build_simplex = [&](const Point& base, double base_value) {
        simplex[0] = base;
        values[0] = base_value;
        for (std::size_t i = 0; i < dim; ++i) {
            Point v = base;
            v[i] += step[i];
            project(v);
            if (v[i] == base[i]) {
                v[i] = base[i] - step[i];
                project(v);
            }
            simplex[i + 1] = v;
            values[i + 1] = eval(simplex[i + 1]);
        }
    };

    auto budget_left = [&] { return res.evaluations < opts.max_evaluations; };

    build_simplex(res.x, res.f);
    for (std::size_t restart = 0;; ++restart) {
        bool converged = false;
        while (budget_left()) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
            const std::size_t best = order.front(), worst = order.back(), second = order[dim - 1];

            double diameter = 0.0;
            for (const auto& v : simplex)
                for (std::size_t i = 0; i < dim; ++i)
                    diameter = std::max(diameter, std::abs(v[i] - simplex[best][i]));
            if (diameter < opts.x_tol || values[worst] - values[best] < opts.f_tol) {
                converged = true;
                break;
            }
            ++res.iterations;

            Point centroid(dim, 0.0);
            for (std::size_t j = 0; j <= dim; ++j)
                if (j != worst)
                    for (std::size_t i = 0; i < dim; ++i)
                        centroid[i] += simplex[j][i];
            for (auto& c : centroid)
                c /= static_cast<double>(dim);

            auto along = [&](double coef) {
                Point p(dim);
                for (std::size_t i = 0; i < dim; ++i)
                    p[i] = centroid[i] + coef * (centroid[i] - simplex[worst][i]);
                return p;
            };

            Point reflected = along(opts.reflection);
            const double f_reflected = eval(reflected);
            if (f_reflected < values[best]) {
                Point expanded = along(opts.reflection * opts.expansion);
                const double f_expanded = eval(expanded);
                if (f_expanded < f_reflected) {
                    simplex[worst] = std::move(expanded);
                    values[worst] = f_expanded;
                } else {
                    simplex[worst] = std::move(reflected);
                    values[worst] = f_reflected;
                }
            } else if (f_reflected < values[second]) {
                simplex[worst] = std::move(reflected);
                values[worst] = f_reflected;
            } else {
                const bool outside = f_reflected < values[worst];
                Point contracted = along(outside ? opts.reflection * opts.contraction : -opts.contraction);
                const double f_contracted = eval(contracted);
                if (f_contracted < (outside ? f_reflected : values[worst])) {
                    simplex[worst] = std::move(contracted);
                    values[worst] = f_contracted;
                } else {
                    for (std::size_t j = 0; j <= dim; ++j) {
                        if (j == best)
                            continue;
                        for (std::size_t i = 0; i < dim; ++i)
                            simplex[j][i] = simplex[best][i] + opts.shrink * (simplex[j][i] - simplex[best][i]);
                        values[j] = eval(simplex[j]);
                    }
                }
            }
            res.best_history.push_back(*std::min_element(values.begin(), values.end()));
        }

        const auto it = std::min_element(values.begin(), values.end());
        const double improvement = res.f - *it;
        if (*it < res.f) {
            res.f = *it;
            res.x = simplex[static_cast<std::size_t>(it - values.begin())];
        }
        if (!converged) {
            res.converged = false;
            return res;
        }
        if (restart >= opts.max_restarts || (restart > 0 && improvement <= opts.f_tol)) {
            res.converged = true;
            return res;
        }
        build_simplex(res.x, res.f);
    }
}

} // namespace duopoly
