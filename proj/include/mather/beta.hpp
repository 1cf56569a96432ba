#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "homology.hpp"
#include "minimizer.hpp"

namespace mather {

struct BetaOptions {
    MinOptions min;
    int sweep_max = 3;  // direct minimizations at m * k0 for m = 1..sweep_max

    void validate() const {
        min.validate();
        if (sweep_max < 1) throw Error("sweep_max must be at least 1");
    }
};

/// Per-unit value (1/m) * sqrt(2 E*(m k0)) from a direct minimization in the
/// class m * k0.
struct SweepEntry {
    int m = 1;
    IVec2 k;
    double value = 0.0;
    double energy = 0.0;
    bool converged = false;
};

struct BetaResult {
    enum class Method { Direct, Homogeneity };

    HomologyClass h;
    double stable_norm = 0.0;
    double beta = 0.0;
    std::optional<MinResult> certificate;  // minimizer in the primitive class
    Method method = Method::Direct;
    std::vector<SweepEntry> m_sweep;
    bool converged = true;
    double numerical_error = 0.0;  // in beta units

    std::string method_name() const { return method == Method::Direct ? "direct" : "homogeneity"; }
};

/// Thrown when no start converged; carries what was computed.
class BetaError : public Error {
public:
    BetaError(const std::string& what, BetaResult partial) : Error(what), partial_(std::move(partial)) {}
    const BetaResult& partial() const { return partial_; }

private:
    BetaResult partial_;
};

namespace detail {

/// Minimizes the loop energy (or a supplied action) for every listed winding
/// once. Windings are processed concurrently; the map is keyed by winding.
template <class MakeAction>
std::map<IVec2, MinResult> solve_windings(MakeAction&& make_action, const std::vector<IVec2>& ks, const MinOptions& opts) {
    std::vector<IVec2> unique = ks;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    std::vector<std::optional<MinResult>> out(unique.size());
    MinOptions inner = opts;
    if (unique.size() > 1) inner.workers = 1;
    parallel_for(unique.size(), opts.workers, [&](std::size_t i) {
        const auto action = make_action(unique[i]);
        out[i] = minimize_action(action, unique[i], inner);
    });
    std::map<IVec2, MinResult> res;
    for (std::size_t i = 0; i < unique.size(); ++i) res.emplace(unique[i], std::move(*out[i]));
    return res;
}

inline std::vector<IVec2> windings_for(const HomologyClass& h, int sweep_max) {
    std::vector<IVec2> ks;
    if (h.is_zero()) return ks;
    const IVec2 k0 = h.primitive_part();
    for (int m = 1; m <= sweep_max; ++m) ks.push_back(static_cast<std::int64_t>(m) * k0);
    return ks;
}

inline BetaResult assemble_beta(const HomologyClass& h, const std::map<IVec2, MinResult>& solved, int sweep_max) {
    BetaResult r;
    r.h = h;
    if (h.is_zero()) {
        r.method = BetaResult::Method::Homogeneity;
        return r;
    }
    const IVec2 k0 = h.primitive_part();
    const MinResult& cert = solved.at(k0);
    const double t = h.primitive_multiplier();
    r.stable_norm = t * std::sqrt(2.0 * cert.energy);
    r.beta = 0.5 * r.stable_norm * r.stable_norm;
    r.method = (h.gcd() == 1 && h.scale == Rational{1, 1}) ? BetaResult::Method::Direct : BetaResult::Method::Homogeneity;
    r.converged = cert.converged;
    r.numerical_error = t * t * cert.refinement_change() + 1e-8 * r.beta;
    for (int m = 1; m <= sweep_max; ++m) {
        const IVec2 km = static_cast<std::int64_t>(m) * k0;
        const MinResult& mr = solved.at(km);
        r.m_sweep.push_back({m, km, std::sqrt(2.0 * mr.energy) / m, mr.energy, mr.converged});
    }
    r.certificate = cert;
    return r;
}

}  // namespace detail

/// Stable norm at a rational class from the minimizer of its primitive part:
/// ||h|| = scale * gcd * sqrt(2 E*(k0)).
inline BetaResult stable_norm_rational(const MetricSpec& g, const HomologyClass& h, const BetaOptions& opts = {}) {
    opts.validate();
    const auto solved = detail::solve_windings([&](IVec2) { return LoopAction(g); },
                                               detail::windings_for(h, opts.sweep_max), opts.min);
    BetaResult r = detail::assemble_beta(h, solved, opts.sweep_max);
    if (r.certificate && !r.certificate->any_converged)
        throw BetaError("optimizer did not converge at any start for class " + h.str(), r);
    return r;
}

/// Mather beta = stable_norm^2 / 2; same computation as stable_norm_rational.
inline BetaResult beta_rational(const MetricSpec& g, const HomologyClass& h, const BetaOptions& opts = {}) {
    return stable_norm_rational(g, h, opts);
}

/// Batch evaluation. Each required winding is minimized once, concurrently
/// across `opts.min.workers`; results follow the order of `classes`.
/// Non-convergence is reported through BetaResult::converged, not thrown.
inline std::vector<BetaResult> beta_batch(const MetricSpec& g, const std::vector<HomologyClass>& classes,
                                          const BetaOptions& opts = {}) {
    opts.validate();
    std::vector<IVec2> ks;
    for (const auto& h : classes) {
        const auto w = detail::windings_for(h, opts.sweep_max);
        ks.insert(ks.end(), w.begin(), w.end());
    }
    const auto solved = detail::solve_windings([&](IVec2) { return LoopAction(g); }, ks, opts.min);
    std::vector<BetaResult> out;
    out.reserve(classes.size());
    for (const auto& h : classes) out.push_back(detail::assemble_beta(h, solved, opts.sweep_max));
    return out;
}

/// Integer direction approximating angle theta: the last continued-fraction
/// convergent of the minor/major slope with denominator <= max_den.
inline IVec2 best_convergent(double theta, std::int64_t max_den = 20) {
    const double c = std::cos(theta), s = std::sin(theta);
    const bool x_major = std::abs(c) >= std::abs(s);
    const double ratio = x_major ? std::abs(s) / std::abs(c) : std::abs(c) / std::abs(s);
    // Convergents h_n / k_n of ratio in [0, 1].
    std::int64_t h_prev = 0, k_prev = 1, h_cur = 1, k_cur = 0;
    double r = ratio;
    for (int iter = 0; iter < 64; ++iter) {
        const double a_real = std::floor(r);
        const auto a = static_cast<std::int64_t>(a_real);
        const std::int64_t h_next = a * h_cur + h_prev;
        const std::int64_t k_next = a * k_cur + k_prev;
        if (iter > 0 && k_next > max_den) break;
        h_prev = h_cur; k_prev = k_cur;
        h_cur = h_next; k_cur = k_next;
        const double frac = r - a_real;
        if (frac < 1e-12) break;
        r = 1.0 / frac;
    }
    const std::int64_t major = k_cur, minor = h_cur;
    const std::int64_t sx = c < 0 ? -1 : 1, sy = s < 0 ? -1 : 1;
    return x_major ? IVec2{sx * major, sy * minor} : IVec2{sx * minor, sy * major};
}

struct BallPoint {
    double theta = 0.0;           // requested direction
    IVec2 k;                      // rational approximation used
    double direction_angle = 0.0;  // angle of k
    double radius = 0.0;          // |k| / ||k||_stable, boundary radius along k
    bool converged = true;
};

struct NormBall {
    std::vector<BallPoint> points;
    bool convex = true;
    double min_turn = 0.0;  // smallest normalized cross product along the boundary
};

/// Samples the boundary of the unit ball of the stable norm along n_dirs
/// equally spaced directions, each through its best rational convergent.
inline NormBall norm_ball(const MetricSpec& g, int n_dirs, const BetaOptions& opts = {}, std::int64_t max_den = 20) {
    if (n_dirs < 4) throw Error("norm ball needs at least 4 directions");
    BetaOptions o = opts;
    o.sweep_max = 1;
    std::vector<HomologyClass> classes;
    std::vector<double> thetas;
    for (int j = 0; j < n_dirs; ++j) {
        const double th = 2.0 * std::numbers::pi * j / n_dirs;
        thetas.push_back(th);
        const IVec2 k = best_convergent(th, max_den);
        classes.emplace_back(k.p, k.q);
    }
    const auto results = beta_batch(g, classes, o);
    NormBall ball;
    for (int j = 0; j < n_dirs; ++j) {
        const IVec2 k = classes[j].k;
        const Vec2 kr = k.to_real();
        ball.points.push_back({thetas[j], k, std::atan2(kr.y, kr.x), norm(kr) / results[j].stable_norm,
                               results[j].converged});
    }
    // Convexity on distinct boundary points ordered by angle.
    std::vector<std::pair<double, Vec2>> pts;
    for (const auto& p : ball.points) {
        double a = p.direction_angle;
        if (a < 0) a += 2.0 * std::numbers::pi;
        pts.push_back({a, p.radius * Vec2{std::cos(p.direction_angle), std::sin(p.direction_angle)}});
    }
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return std::abs(a.first - b.first) < 1e-12; }),
              pts.end());
    ball.min_turn = std::numeric_limits<double>::infinity();
    const std::size_t m = pts.size();
    for (std::size_t i = 0; i < m && m >= 3; ++i) {
        const Vec2 a = pts[i].second, b = pts[(i + 1) % m].second, c = pts[(i + 2) % m].second;
        const Vec2 e1 = b - a, e2 = c - b;
        const double turn = cross(e1, e2) / (norm(e1) * norm(e2));
        ball.min_turn = std::min(ball.min_turn, turn);
    }
    ball.convex = ball.min_turn >= -1e-6;
    return ball;
}

struct AxiomEntry {
    std::string kind;  // "symmetry", "homogeneity", "triangle"
    std::string label;
    double lhs = 0.0;
    double rhs = 0.0;
    double violation = 0.0;  // relative amount by which lhs exceeds the allowed bound
    bool pass = true;
};

struct NormAxiomReport {
    std::vector<AxiomEntry> entries;
    bool all_pass = true;

    std::size_t failures(const std::string& kind) const {
        return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const AxiomEntry& e) {
            return e.kind == kind && !e.pass;
        }));
    }
};

namespace detail {

inline HomologyClass class_sum(const HomologyClass& a, const HomologyClass& b) {
    const std::int64_t l = std::lcm(a.scale.den, b.scale.den);
    const std::int64_t fa = a.scale.num * (l / a.scale.den);
    const std::int64_t fb = b.scale.num * (l / b.scale.den);
    const IVec2 k{fa * a.k.p + fb * b.k.p, fa * a.k.q + fb * b.k.q};
    return {k, Rational::make(1, l)};
}

}  // namespace detail

/// Checks symmetry, positive homogeneity (against direct minimization in
/// the multiple classes) and the triangle inequality. Violations are report
/// entries, not exceptions.
inline NormAxiomReport check_norm_axioms(const MetricSpec& g, const std::vector<HomologyClass>& classes,
                                         const BetaOptions& opts = {}) {
    BetaOptions o = opts;
    o.sweep_max = std::max(3, opts.sweep_max);
    std::vector<HomologyClass> all;
    for (const auto& h : classes) {
        if (h.is_zero()) throw Error("norm axioms need nonzero classes");
        all.push_back(h);
        all.push_back({-h.k, h.scale});
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (std::size_t j = i + 1; j < classes.size(); ++j)
            if (cross(classes[i].k.to_real(), classes[j].k.to_real()) != 0.0) {
                pairs.emplace_back(i, j);
                all.push_back(detail::class_sum(classes[i], classes[j]));
            }
    const auto res = beta_batch(g, all, o);

    NormAxiomReport rep;
    auto add = [&](std::string kind, std::string label, double lhs, double rhs, double scale) {
        AxiomEntry e{std::move(kind), std::move(label), lhs, rhs, 0.0, true};
        e.violation = (lhs - rhs) / scale;
        e.pass = lhs <= rhs;
        rep.all_pass = rep.all_pass && e.pass;
        rep.entries.push_back(std::move(e));
    };
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const BetaResult& pos = res[2 * i];
        const BetaResult& neg = res[2 * i + 1];
        const double n = pos.stable_norm;
        add("symmetry", classes[i].str(), std::abs(n - neg.stable_norm), 1e-6 * n, n);
        const double unit = pos.m_sweep[0].value;
        for (int m = 2; m <= 3; ++m)
            add("homogeneity", std::to_string(m) + "*" + classes[i].str(), std::abs(pos.m_sweep[m - 1].value - unit),
                1e-4 * unit, unit);
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        const double a = res[2 * i].stable_norm, b = res[2 * j].stable_norm;
        const double s = res[2 * classes.size() + p].stable_norm;
        add("triangle", classes[i].str() + "+" + classes[j].str(), s, a + b + 1e-4 * (a + b), a + b);
    }
    return rep;
}

}  // namespace mather
