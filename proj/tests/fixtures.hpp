#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "mather/mather.hpp"

namespace fixture {

using namespace mather;

inline constexpr const char* kDip = "1 - 0.5*exp(-50*((x-0.5)^2 + (y-0.5)^2))";
inline constexpr const char* kBump = "1 + 0.5*bump(((x-0.5)^2 + (y-0.5)^2)/0.01)";

inline double dip(double x, double y) {
    return 1.0 - 0.5 * std::exp(-50.0 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
}

inline MetricSpec flat(double a = 1.0, double b = 0.0, double c = 1.0) { return MetricSpec::flat({a, b, c}); }
inline MetricSpec dip_metric() { return MetricSpec::conformal(ScalarField::expression(kDip)); }
inline MetricSpec bump_metric() { return MetricSpec::conformal(ScalarField::expression(kBump)); }

struct Liouville {
    const char* f1;
    const char* f2;
    double (*f1_fn)(double);
    double (*f2_fn)(double);

    MetricSpec metric() const {
        return MetricSpec::liouville(ScalarField::expression(f1), ScalarField::expression(f2));
    }
};

inline double la1(double x) { return 1.0 + 0.3 * std::cos(2 * std::numbers::pi * x); }
inline double la2(double y) { return 1.0 + 0.5 * std::pow(std::sin(std::numbers::pi * y), 2); }
inline double lb1(double x) { return 2.0 + std::sin(2 * std::numbers::pi * x) + 0.2 * std::cos(4 * std::numbers::pi * x); }
inline double lb2(double y) { return 1.0 + 0.4 * std::cos(2 * std::numbers::pi * y); }
inline double lc1(double x) { return 0.5 + 0.2 * std::exp(std::cos(2 * std::numbers::pi * x)); }
inline double lc2(double y) { return 1.0 + 0.3 * std::sin(2 * std::numbers::pi * y) + 0.1 * std::cos(6 * std::numbers::pi * y); }

inline const Liouville kLiouville[3] = {
    {"1 + 0.3*cos(2*pi*x)", "1 + 0.5*sin(pi*y)^2", la1, la2},
    {"2 + sin(2*pi*x) + 0.2*cos(4*pi*x)", "1 + 0.4*cos(2*pi*y)", lb1, lb2},
    {"0.5 + 0.2*exp(cos(2*pi*x))", "1 + 0.3*sin(2*pi*y) + 0.1*cos(6*pi*y)", lc1, lc2},
};

/// g2 = psi * g1 with psi = C on the line y = 1/2 and smaller elsewhere:
/// C * (1 - delta * (1 - bump((y - 1/2)^2 / w^2))).
inline MetricSpec banded(const MetricSpec& g1, double C, double delta = 0.05, double w = 0.45) {
    const std::string psi = std::to_string(C) + "*(1 - " + std::to_string(delta) + "*(1 - bump((y-0.5)^2/" +
                            std::to_string(w * w) + ")))";
    if (g1.kind() != MetricSpec::Kind::Conformal) throw Error("banded fixture needs a conformal base");
    const std::string phi = std::string("(") + g1.factor().expression_ptr()->source() + ")*" + psi;
    return MetricSpec::conformal(g1.base(), ScalarField::expression(phi));
}

inline MinOptions quick(int starts = 6, int levels = 1) {
    MinOptions o;
    o.starts = starts;
    o.levels = levels;
    return o;
}

}  // namespace fixture
