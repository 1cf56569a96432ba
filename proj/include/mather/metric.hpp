#pragma once

#include <array>
#include <limits>
#include <string>
#include <utility>

#include "field.hpp"
#include "geometry.hpp"

namespace mather {

/// Riemannian metric on the 2-torus [0,1)^2.
///
///  Flat       G constant
///  Conformal  factor(x) * G
///  Liouville  (f1(x) + f2(y)) * identity
///  General    [[g11, g12], [g12, g22]](x), each entry a scalar field
///
/// Values are immutable; copies share the underlying expressions and grids.
class MetricSpec {
public:
    enum class Kind { Flat, Conformal, Liouville, General };

    static MetricSpec flat(Sym2 G) {
        if (!std::isfinite(G.a) || !std::isfinite(G.b) || !std::isfinite(G.c) || !G.positive_definite())
            throw Error("flat metric matrix must be symmetric positive-definite");
        MetricSpec m(Kind::Flat);
        m.base_ = G;
        return m;
    }

    static MetricSpec conformal(Sym2 base, ScalarField factor) {
        MetricSpec m = flat(base);
        m.kind_ = Kind::Conformal;
        m.fields_[0] = std::move(factor);
        m.validate();
        return m;
    }

    static MetricSpec conformal(ScalarField factor) { return conformal(Sym2::identity(), std::move(factor)); }

    static MetricSpec liouville(ScalarField f1, ScalarField f2) {
        if (f1.depends_on_y()) throw Error("Liouville f1 must depend on x only");
        if (f2.depends_on_x()) throw Error("Liouville f2 must depend on y only");
        MetricSpec m(Kind::Liouville);
        m.fields_[0] = std::move(f1);
        m.fields_[1] = std::move(f2);
        m.validate();
        return m;
    }

    static MetricSpec general(ScalarField g11, ScalarField g12, ScalarField g22) {
        MetricSpec m(Kind::General);
        m.fields_ = {std::move(g11), std::move(g12), std::move(g22)};
        m.validate();
        return m;
    }

    Kind kind() const { return kind_; }
    const Sym2& base() const { return base_; }
    const ScalarField& factor() const { return fields_[0]; }
    const ScalarField& f1() const { return fields_[0]; }
    const ScalarField& f2() const { return fields_[1]; }
    const std::array<ScalarField, 3>& entries() const { return fields_; }

    /// c * g for a constant c > 0.
    MetricSpec scaled(double c) const {
        if (!(c > 0.0) || !std::isfinite(c)) throw Error("metric scale must be positive");
        MetricSpec m = *this;
        switch (kind_) {
            case Kind::Flat: m.base_ = base_.scaled(c); break;
            case Kind::Conformal: m.fields_[0] = fields_[0].scaled(c); break;
            case Kind::Liouville:
                m.fields_[0] = fields_[0].scaled(c);
                m.fields_[1] = fields_[1].scaled(c);
                break;
            case Kind::General:
                for (auto& f : m.fields_) f = f.scaled(c);
                break;
        }
        return m;
    }

    /// Metric matrix at x, without validation.
    Sym2 raw_at(Vec2 x) const {
        switch (kind_) {
            case Kind::Flat: return base_;
            case Kind::Conformal: return base_.scaled(fields_[0].value(x));
            case Kind::Liouville: {
                const double s = fields_[0].value(x) + fields_[1].value(x);
                return {s, 0.0, s};
            }
            case Kind::General: return {fields_[0].value(x), fields_[1].value(x), fields_[2].value(x)};
        }
        return base_;
    }

    /// Metric matrix at x; throws "degenerate metric sample" if not positive-definite.
    Sym2 at(Vec2 x) const {
        const Sym2 G = raw_at(x);
        if (!G.positive_definite()) throw Error("degenerate metric sample");
        return G;
    }

    /// Metric matrix with exact partial derivatives of each entry.
    Sym2D at_with_grad(Vec2 x) const {
        Sym2D r;
        switch (kind_) {
            case Kind::Flat:
                r = {Dual2::constant(base_.a), Dual2::constant(base_.b), Dual2::constant(base_.c)};
                break;
            case Kind::Conformal: {
                const Dual2 f = fields_[0].eval(x);
                r = {base_.a * f, base_.b * f, base_.c * f};
                break;
            }
            case Kind::Liouville: {
                const Dual2 s = fields_[0].eval(x) + fields_[1].eval(x);
                r = {s, Dual2{}, s};
                break;
            }
            case Kind::General:
                r = {fields_[0].eval(x), fields_[1].eval(x), fields_[2].eval(x)};
                break;
        }
        if (!r.value().positive_definite()) throw Error("degenerate metric sample");
        return r;
    }

    std::string kind_name() const {
        switch (kind_) {
            case Kind::Flat: return "flat";
            case Kind::Conformal: return "conformal";
            case Kind::Liouville: return "liouville";
            case Kind::General: return "general";
        }
        return "unknown";
    }

private:
    explicit MetricSpec(Kind k) : kind_(k) {}

    // Positivity on a dense evaluation grid, offset from grid nodes so that
    // both grid samples and cell interiors are probed.
    void validate() const {
        constexpr int n = 64;
        for (int pass = 0; pass < 2; ++pass) {
            const double shift = pass == 0 ? 0.0 : 0.5 / n;
            for (int j = 0; j < n; ++j) {
                for (int i = 0; i < n; ++i) {
                    const Vec2 x{i / double(n) + shift, j / double(n) + shift};
                    const Sym2 G = raw_at(x);
                    if (!std::isfinite(G.a) || !std::isfinite(G.b) || !std::isfinite(G.c))
                        throw Error("metric is not finite at (" + std::to_string(x.x) + ", " + std::to_string(x.y) + ")");
                    if (!(G.min_eigenvalue() > 0.0))
                        throw Error("degenerate metric: not positive-definite at (" + std::to_string(x.x) + ", " +
                                    std::to_string(x.y) + ")");
                }
            }
        }
    }

    Kind kind_;
    Sym2 base_ = Sym2::identity();
    std::array<ScalarField, 3> fields_;
};

/// A point of the torus and a tangent vector in the standard trivialization.
struct TangentSample {
    Vec2 x;
    Vec2 v;
};

/// Squared fiber norm g_x(v, v).
inline double metric_eval(const MetricSpec& g, const TangentSample& s) {
    if (s.v.x == 0.0 && s.v.y == 0.0) return 0.0;
    return g.at(s.x).quad(s.v);
}

/// Largest generalized eigenvalue of the pencil (G2, G1): the largest root of
/// det(G2 - lambda G1) = 0.
inline double pencil_max_eigenvalue(const Sym2& G1, const Sym2& G2) {
    const double d1 = G1.det();
    if (!(d1 > 0.0) || !(G1.a > 0.0)) throw Error("degenerate metric sample");
    // M = G1^{-1} G2; its eigenvalues are real, disc = (M11 - M22)^2 + 4 M12 M21
    const double m11 = (G1.c * G2.a - G1.b * G2.b) / d1;
    const double m22 = (G1.a * G2.c - G1.b * G2.b) / d1;
    const double m12 = (G1.c * G2.b - G1.b * G2.c) / d1;
    const double m21 = (G1.a * G2.b - G1.b * G2.a) / d1;
    const double diff = (G1.c * G2.a - G1.a * G2.c) / d1;
    const double disc = std::max(0.0, diff * diff + 4.0 * m12 * m21);
    return 0.5 * (m11 + m22 + std::sqrt(disc));
}

/// sup over v != 0 of g2(v,v) / g1(v,v) at the point x.
inline double fiber_distortion(const MetricSpec& g1, const MetricSpec& g2, Vec2 x) {
    return pencil_max_eigenvalue(g1.at(x), g2.at(x));
}

struct DistortionResult {
    double C = 0.0;
    Vec2 argmax;
};

namespace detail {

// Golden-section maximization of f on [lo, hi].
template <class F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d; d = c; fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

/// Grid scan plus coordinate-wise golden-section refinement of a periodic
/// function on the torus. Returns (max value, argmax).
template <class F>
std::pair<double, Vec2> maximize_on_torus(F&& f, int grid_n, double rel_tol = 1e-10) {
    double best = -std::numeric_limits<double>::infinity();
    Vec2 arg;
    for (int j = 0; j < grid_n; ++j) {
        for (int i = 0; i < grid_n; ++i) {
            const Vec2 x{double(i) / grid_n, double(j) / grid_n};
            const double v = f(x);
            if (v > best) {
                best = v;
                arg = x;
            }
        }
    }
    const double h = 1.0 / grid_n;
    const double tol = 1e-13;
    for (int round = 0; round < 100; ++round) {
        const double before = best;
        auto [px, vx] = golden_max([&](double t) { return f(Vec2{t, arg.y}); }, arg.x - h, arg.x + h, tol);
        if (vx > best) {
            best = vx;
            arg.x = px;
        }
        auto [py, vy] = golden_max([&](double t) { return f(Vec2{arg.x, t}); }, arg.y - h, arg.y + h, tol);
        if (vy > best) {
            best = vy;
            arg.y = py;
        }
        if (std::abs(best - before) <= rel_tol * std::abs(best)) break;
    }
    return {best, wrap_unit(arg)};
}

}  // namespace detail

/// Maximal distortion of g2 against g1 over the torus.
inline DistortionResult distortion_constant(const MetricSpec& g1, const MetricSpec& g2, int grid_n) {
    if (grid_n < 16) throw Error("distortion grid must have at least 16 points per axis");
    auto [C, arg] = detail::maximize_on_torus([&](Vec2 x) { return fiber_distortion(g1, g2, x); }, grid_n);
    return {C, arg};
}

}  // namespace mather
