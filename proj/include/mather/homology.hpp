#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "geometry.hpp"

namespace mather {

/// Positive rational number num / den in lowest terms.
struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;

    static Rational make(std::int64_t n, std::int64_t d) {
        if (d == 0) throw Error("rational with zero denominator");
        if (d < 0) { n = -n; d = -d; }
        const std::int64_t g = std::gcd(n, d);
        if (g > 1) { n /= g; d /= g; }
        return {n, d};
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(Rational, Rational) = default;
    std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }
};

/// The real homology class scale * (p, q) in H_1(T^2; R).
struct HomologyClass {
    IVec2 k;
    Rational scale;

    HomologyClass() = default;
    HomologyClass(std::int64_t p, std::int64_t q) : k{p, q} {}
    HomologyClass(IVec2 kk, Rational s) : k(kk), scale(s) {
        if (scale.num <= 0) throw Error("homology class scale must be positive");
    }

    bool is_zero() const { return k.is_zero(); }

    /// gcd(|p|, |q|); zero only for the null class.
    std::int64_t gcd() const { return k.gcd(); }

    /// (p, q) / gcd; the null class maps to itself.
    IVec2 primitive_part() const {
        const std::int64_t g = gcd();
        if (g == 0) return k;
        return {k.p / g, k.q / g};
    }

    /// Multiplier t with h = t * primitive_part().
    double primitive_multiplier() const { return scale.value() * static_cast<double>(gcd()); }

    Vec2 to_real() const { return scale.value() * k.to_real(); }

    HomologyClass times(std::int64_t m) const { return {m * k, scale}; }

    HomologyClass scaled(Rational t) const { return {k, Rational::make(scale.num * t.num, scale.den * t.den)}; }

    friend bool operator==(const HomologyClass& a, const HomologyClass& b) {
        return a.k == b.k && a.scale == b.scale;
    }

    std::string str() const {
        std::string s = "(" + std::to_string(k.p) + "," + std::to_string(k.q) + ")";
        if (!(scale.num == 1 && scale.den == 1)) s = scale.str() + "*" + s;
        return s;
    }
};

}  // namespace mather
