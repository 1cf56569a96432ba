#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "geometry.hpp"

namespace mather {

struct LbfgsOptions {
    int max_iters = 5000;
    double grad_tol = 1e-7;  // on the sup-norm of the gradient
    int memory = 8;
};

struct LbfgsReport {
    bool converged = false;
    int iterations = 0;
    double value = 0.0;
    double grad_sup = 0.0;
};

namespace detail {

inline double dotv(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sup_norm(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

}  // namespace detail

/// Preconditioned L-BFGS with backtracking Armijo line search.
///
/// fg(x, g) returns f(x) and writes the gradient into g.
/// precond(r, z) writes z = P^{-1} r for a fixed SPD preconditioner P, used as
/// the initial inverse-Hessian model (scaled by s'y / y'P^{-1}y).
///
/// Near convergence the energy differences fall below rounding, so a step
/// that fails Armijo is still accepted when it satisfies the approximate
/// Wolfe conditions of Hager and Zhang (slope decreased in magnitude, value
/// not increased beyond a few ulps).
template <class FG, class Precond>
LbfgsReport minimize_lbfgs(std::vector<double>& x, FG&& fg, Precond&& precond, const LbfgsOptions& opts) {
    const std::size_t n = x.size();
    std::vector<double> g(n), gn(n), xn(n), d(n), q(n), z(n);
    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> mem;

    auto safe_eval = [&](const std::vector<double>& at, std::vector<double>& grad) {
        try {
            const double v = fg(at, grad);
            return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    LbfgsReport rep;
    double f = fg(x, g);
    double gamma = 1.0;
    int failures = 0;
    for (;;) {
        rep.grad_sup = detail::sup_norm(g);
        rep.value = f;
        if (rep.grad_sup <= opts.grad_tol) {
            rep.converged = true;
            break;
        }
        if (rep.iterations >= opts.max_iters) break;

        // Two-loop recursion.
        q = g;
        std::vector<double> alpha(mem.size());
        for (std::size_t i = mem.size(); i-- > 0;) {
            alpha[i] = mem[i].rho * detail::dotv(mem[i].s, q);
            for (std::size_t t = 0; t < n; ++t) q[t] -= alpha[i] * mem[i].y[t];
        }
        precond(q, z);
        for (std::size_t t = 0; t < n; ++t) z[t] *= gamma;
        for (std::size_t i = 0; i < mem.size(); ++i) {
            const double beta = mem[i].rho * detail::dotv(mem[i].y, z);
            for (std::size_t t = 0; t < n; ++t) z[t] += mem[i].s[t] * (alpha[i] - beta);
        }
        for (std::size_t t = 0; t < n; ++t) d[t] = -z[t];
        double slope = detail::dotv(g, d);
        if (!(slope < 0.0)) {
            mem.clear();
            gamma = 1.0;
            precond(g, z);
            for (std::size_t t = 0; t < n; ++t) d[t] = -z[t];
            slope = detail::dotv(g, d);
            if (!(slope < 0.0)) break;
        }

        double step = 1.0;
        double fn = 0.0;
        bool accepted = false;
        const double noise = 16.0 * std::numeric_limits<double>::epsilon() * (std::abs(f) + 1e-300);
        for (int tries = 0; tries < 60; ++tries) {
            for (std::size_t t = 0; t < n; ++t) xn[t] = x[t] + step * d[t];
            fn = safe_eval(xn, gn);
            if (fn <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            if (std::isfinite(fn) && fn <= f + noise) {
                const double slope_new = detail::dotv(gn, d);
                if (slope_new >= 0.9 * slope && slope_new <= -0.8 * slope) {
                    accepted = true;
                    break;
                }
            }
            // Quadratic interpolation, safeguarded to [0.1, 0.5] of the step.
            double next = 0.5 * step;
            if (std::isfinite(fn)) {
                const double denom = 2.0 * (fn - f - slope * step);
                if (denom > 0.0) next = -slope * step * step / denom;
            }
            step = std::clamp(next, 0.1 * step, 0.5 * step);
        }
        ++rep.iterations;
        if (!accepted) {
            if (mem.empty() || ++failures > 2) break;
            mem.clear();
            gamma = 1.0;
            continue;
        }
        failures = 0;

        Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            p.s[t] = xn[t] - x[t];
            p.y[t] = gn[t] - g[t];
        }
        const double sy = detail::dotv(p.s, p.y);
        if (sy > 1e-14 * std::sqrt(detail::dotv(p.s, p.s) * detail::dotv(p.y, p.y)) && sy > 0.0) {
            precond(p.y, z);
            const double yhy = detail::dotv(p.y, z);
            if (yhy > 0.0) gamma = sy / yhy;
            p.rho = 1.0 / sy;
            mem.push_back(std::move(p));
            if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
        }
        x.swap(xn);
        g.swap(gn);
        f = fn;
    }
    return rep;
}

}  // namespace mather
