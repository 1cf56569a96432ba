#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "loop.hpp"
#include "metric.hpp"
#include "rng.hpp"

namespace mather {

struct GradCheck {
    std::string label;
    double max_abs_error = 0.0;  // sup over coordinates
    double scale = 0.0;          // sup of the finite-difference gradient, floored at 1
    double rel_error = 0.0;
    bool pass = true;
};

/// Analytic gradient of `action` at `loop` against central differences.
inline GradCheck gradient_check(const LoopAction& action, const DiscreteLoop& loop, double tol = 1e-5,
                                double step = 1e-6) {
    const std::size_t n = loop.size();
    const IVec2 k = loop.winding();
    std::vector<Vec2> nodes = loop.nodes();
    std::vector<Vec2> grad(n);
    action.value_and_gradient(nodes, k, grad);
    GradCheck r;
    double fd_sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 2; ++c) {
            double& coord = c == 0 ? nodes[i].x : nodes[i].y;
            const double saved = coord;
            coord = saved + step;
            const double fp = action.value(nodes, k);
            coord = saved - step;
            const double fm = action.value(nodes, k);
            coord = saved;
            const double fd = (fp - fm) / (2.0 * step);
            const double an = c == 0 ? grad[i].x : grad[i].y;
            fd_sup = std::max(fd_sup, std::abs(fd));
            r.max_abs_error = std::max(r.max_abs_error, std::abs(fd - an));
        }
    }
    r.scale = std::max(fd_sup, 1.0);
    r.rel_error = r.max_abs_error / r.scale;
    r.pass = r.rel_error <= tol;
    return r;
}

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return std::string("(") + buf + ")";
}

/// Trigonometric polynomial c0 + sum of `modes` terms with total amplitude
/// `amp`, as an expression in x and y (or only one of them).
inline std::string random_trig(SplitMix64& rng, double c0, double amp, int modes, bool use_x = true, bool use_y = true) {
    std::string s = num(c0);
    std::vector<double> w(modes);
    double total = 0.0;
    for (auto& v : w) total += (v = rng.uniform(0.2, 1.0));
    for (int i = 0; i < modes; ++i) {
        const int mx = use_x ? static_cast<int>(rng.uniform(0.0, 3.0)) + (use_y ? 0 : 1) : 0;
        const int my = use_y ? static_cast<int>(rng.uniform(0.0, 3.0)) + ((use_x && mx > 0) ? 0 : 1) : 0;
        const double a = amp * w[i] / total;
        const double ph = rng.uniform(0.0, 6.283185307179586);
        std::string arg;
        if (mx != 0) arg = std::to_string(mx) + "*x";
        if (my != 0) arg += (arg.empty() ? "" : "+") + std::to_string(my) + "*y";
        s += "+" + num(a) + "*cos(2*pi*(" + arg + ")+" + num(ph) + ")";
    }
    return s;
}

}  // namespace detail

/// Smooth random metric; `variant` cycles through conformal, general,
/// Liouville and conformal-over-anisotropic-base families.
inline MetricSpec random_metric(SplitMix64& rng, int variant) {
    switch (((variant % 4) + 4) % 4) {
        case 0:
            return MetricSpec::conformal(ScalarField::expression(detail::random_trig(rng, 1.0, rng.uniform(0.1, 0.6), 3)));
        case 1: {
            const auto g11 = detail::random_trig(rng, 1.5, 0.5, 2);
            const auto g12 = detail::random_trig(rng, 0.0, 0.4, 2);
            const auto g22 = detail::random_trig(rng, 1.5, 0.5, 2);
            return MetricSpec::general(ScalarField::expression(g11), ScalarField::expression(g12),
                                       ScalarField::expression(g22));
        }
        case 2:
            return MetricSpec::liouville(ScalarField::expression(detail::random_trig(rng, 1.0, 0.4, 2, true, false)),
                                         ScalarField::expression(detail::random_trig(rng, 1.0, 0.4, 2, false, true)));
        default: {
            const double a = rng.uniform(0.5, 2.0), c = rng.uniform(0.5, 2.0);
            const double b = rng.uniform(-0.4, 0.4) * std::sqrt(a * c);
            return MetricSpec::conformal(Sym2{a, b, c},
                                         ScalarField::expression(detail::random_trig(rng, 1.0, rng.uniform(0.1, 0.5), 2)));
        }
    }
}

/// Smooth random potential with max roughly 0 (not normalized).
inline ScalarField random_potential(SplitMix64& rng) {
    return ScalarField::expression(detail::random_trig(rng, -0.3, 0.3, 3));
}

}  // namespace mather
