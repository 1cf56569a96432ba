#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace mather {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Integer winding vector (p, q).
struct IVec2 {
    std::int64_t p = 0;
    std::int64_t q = 0;

    friend IVec2 operator*(std::int64_t m, IVec2 k) { return {m * k.p, m * k.q}; }
    friend IVec2 operator-(IVec2 k) { return {-k.p, -k.q}; }
    friend bool operator==(IVec2, IVec2) = default;
    friend auto operator<=>(IVec2, IVec2) = default;

    bool is_zero() const { return p == 0 && q == 0; }
    Vec2 to_real() const { return {static_cast<double>(p), static_cast<double>(q)}; }
    std::int64_t max_abs() const { return std::max(p < 0 ? -p : p, q < 0 ? -q : q); }
    std::int64_t gcd() const { return std::gcd(p, q); }
};

/// Symmetric 2x2 matrix [[a, b], [b, c]].
struct Sym2 {
    double a = 1.0;
    double b = 0.0;
    double c = 1.0;

    static Sym2 identity() { return {1.0, 0.0, 1.0}; }
    static Sym2 diag(double d1, double d2) { return {d1, 0.0, d2}; }

    double quad(Vec2 v) const { return a * v.x * v.x + 2.0 * b * v.x * v.y + c * v.y * v.y; }
    Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, b * v.x + c * v.y}; }
    double det() const { return a * c - b * b; }
    double trace() const { return a + c; }
    bool positive_definite() const { return a > 0.0 && c > 0.0 && det() > 0.0; }
    double min_eigenvalue() const {
        const double h = 0.5 * (a - c);
        return 0.5 * (a + c) - std::sqrt(h * h + b * b);
    }
    double max_eigenvalue() const {
        const double h = 0.5 * (a - c);
        return 0.5 * (a + c) + std::sqrt(h * h + b * b);
    }
    Sym2 scaled(double s) const { return {s * a, s * b, s * c}; }
};

/// Value with its gradient with respect to the two torus coordinates.
struct Dual2 {
    double v = 0.0;
    double dx = 0.0;
    double dy = 0.0;

    static Dual2 constant(double c) { return {c, 0.0, 0.0}; }

    friend Dual2 operator+(Dual2 a, Dual2 b) { return {a.v + b.v, a.dx + b.dx, a.dy + b.dy}; }
    friend Dual2 operator-(Dual2 a, Dual2 b) { return {a.v - b.v, a.dx - b.dx, a.dy - b.dy}; }
    friend Dual2 operator-(Dual2 a) { return {-a.v, -a.dx, -a.dy}; }
    friend Dual2 operator*(Dual2 a, Dual2 b) {
        return {a.v * b.v, a.dx * b.v + a.v * b.dx, a.dy * b.v + a.v * b.dy};
    }
    friend Dual2 operator*(double s, Dual2 a) { return {s * a.v, s * a.dx, s * a.dy}; }
    friend Dual2 operator/(Dual2 a, Dual2 b) {
        const double inv = 1.0 / b.v;
        const double q = a.v * inv;
        return {q, (a.dx - q * b.dx) * inv, (a.dy - q * b.dy) * inv};
    }
    Vec2 grad() const { return {dx, dy}; }
};

// Chain rule helper: f(a) with f'(a.v) = slope.
inline Dual2 chain(Dual2 a, double value, double slope) { return {value, slope * a.dx, slope * a.dy}; }

inline Dual2 sin(Dual2 a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
inline Dual2 cos(Dual2 a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
inline Dual2 exp(Dual2 a) {
    const double e = std::exp(a.v);
    return chain(a, e, e);
}
inline Dual2 sqrt(Dual2 a) {
    const double s = std::sqrt(a.v);
    return chain(a, s, s > 0.0 ? 0.5 / s : 0.0);
}

/// Smooth compactly supported profile: exp(1 - 1/(1 - s)) for s < 1, zero otherwise.
/// Equals 1 at s = 0; every derivative vanishes as s -> 1.
inline Dual2 bump(Dual2 a) {
    if (a.v >= 1.0) return {};
    const double w = 1.0 - a.v;
    const double val = std::exp(1.0 - 1.0 / w);
    return chain(a, val, -val / (w * w));
}

inline Dual2 pow_int(Dual2 a, int n) {
    if (n == 0) return Dual2::constant(1.0);
    if (n < 0) return Dual2::constant(1.0) / pow_int(a, -n);
    const double pm1 = std::pow(a.v, n - 1);
    return chain(a, pm1 * a.v, n * pm1);
}

inline Dual2 pow(Dual2 a, Dual2 b) {
    // a^b = exp(b log a), defined for a > 0
    if (a.v <= 0.0) throw Error("non-positive base in real power");
    const double la = std::log(a.v);
    const double val = std::exp(b.v * la);
    return {val, val * (b.dx * la + b.v * a.dx / a.v), val * (b.dy * la + b.v * a.dy / a.v)};
}

/// Symmetric matrix field value with partial derivatives of each entry.
struct Sym2D {
    Dual2 a;
    Dual2 b;
    Dual2 c;

    Sym2 value() const { return {a.v, b.v, c.v}; }
    Sym2 d_dx() const { return {a.dx, b.dx, c.dx}; }
    Sym2 d_dy() const { return {a.dy, b.dy, c.dy}; }
};

/// Reduce a coordinate into [0, 1).
inline double wrap_unit(double t) {
    double r = t - std::floor(t);
    if (r >= 1.0) r = 0.0;
    return r;
}

inline Vec2 wrap_unit(Vec2 p) { return {wrap_unit(p.x), wrap_unit(p.y)}; }

}  // namespace mather
