#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "field.hpp"
#include "geometry.hpp"
#include "metric.hpp"
#include "rng.hpp"

namespace mather {

/// Closed curve on the torus with fixed winding k, stored as a lift to the
/// plane: nodes u_0 .. u_{N-1}, with the closing node u_N := u_0 + k.
class DiscreteLoop {
public:
    static constexpr std::size_t kMinNodes = 8;

    DiscreteLoop(IVec2 k, std::vector<Vec2> nodes) : k_(k), nodes_(std::move(nodes)) {
        if (nodes_.size() < kMinNodes) throw Error("a loop needs at least 8 nodes");
        for (const auto& u : nodes_)
            if (!std::isfinite(u.x) || !std::isfinite(u.y)) throw Error("loop node is not finite");
    }

    IVec2 winding() const { return k_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<Vec2>& nodes() const { return nodes_; }

    /// u_i for 0 <= i <= N, with u_N = u_0 + k.
    Vec2 node(std::size_t i) const { return i < nodes_.size() ? nodes_[i] : nodes_[i - nodes_.size()] + k_.to_real(); }

    /// Same winding, new node positions.
    DiscreteLoop with_nodes(std::vector<Vec2> nodes) const { return {k_, std::move(nodes)}; }

    /// Relabel so that node s becomes node 0 (the traced curve is unchanged).
    DiscreteLoop cyclic_shifted(std::size_t s) const {
        const std::size_t n = nodes_.size();
        s %= n;
        std::vector<Vec2> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = node(i + s);
        return {k_, std::move(out)};
    }

    DiscreteLoop translated(Vec2 t) const {
        std::vector<Vec2> out = nodes_;
        for (auto& u : out) u += t;
        return {k_, std::move(out)};
    }

private:
    IVec2 k_;
    std::vector<Vec2> nodes_;
};

namespace detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
        else comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace detail

/// Straight lift from a seeded basepoint b to b + k, plus a smooth seeded
/// transverse perturbation whose largest node displacement is `amplitude`.
inline DiscreteLoop init_loop(IVec2 k, std::size_t n, std::uint64_t seed, double amplitude) {
    if (k.is_zero()) throw Error("null class has no loop representative");
    if (n < DiscreteLoop::kMinNodes) throw Error("a loop needs at least 8 nodes");
    SplitMix64 rng(seed);
    const Vec2 base{rng.uniform(), rng.uniform()};
    const Vec2 kr = k.to_real();
    const Vec2 normal = (1.0 / norm(kr)) * Vec2{-kr.y, kr.x};

    constexpr int kModes = 3;
    double cs[kModes], sn[kModes];
    for (int m = 0; m < kModes; ++m) {
        cs[m] = rng.uniform(-1.0, 1.0) / (m + 1);
        sn[m] = rng.uniform(-1.0, 1.0) / (m + 1);
    }
    std::vector<double> offset(n, 0.0);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / n;
        for (int m = 0; m < kModes; ++m) {
            const double ph = 2.0 * std::numbers::pi * (m + 1) * s;
            offset[i] += cs[m] * std::cos(ph) + sn[m] * std::sin(ph);
        }
        peak = std::max(peak, std::abs(offset[i]));
    }
    const double gain = (amplitude != 0.0 && peak > 0.0) ? amplitude / peak : 0.0;

    std::vector<Vec2> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / n;
        nodes[i] = base + s * kr + (gain * offset[i]) * normal;
    }
    return {k, std::move(nodes)};
}

/// Discrete periodic action of a loop traversed in time `period`:
///   sum_i  N / (2 T^2) * g(m_i)(d_i, d_i)  +  V(m_i) / N
/// with d_i = u_{i+1} - u_i and midpoint m_i. With V absent and T = 1 this
/// is the Dirichlet energy of the unit-period parametrization.
class LoopAction {
public:
    explicit LoopAction(const MetricSpec& metric, const ScalarField* potential = nullptr, double period = 1.0)
        : metric_(&metric), potential_(potential), period_(period) {
        if (!(period > 0.0) || !std::isfinite(period)) throw Error("period must be positive");
    }

    const MetricSpec& metric() const { return *metric_; }
    const ScalarField* potential() const { return potential_; }
    double period() const { return period_; }

    /// Coefficient of the kinetic term, N / (2 T^2).
    double kinetic_coefficient(std::size_t n) const { return static_cast<double>(n) / (2.0 * period_ * period_); }

    double value(std::span<const Vec2> nodes, IVec2 k) const {
        const std::size_t n = nodes.size();
        const double ck = kinetic_coefficient(n);
        const Vec2 kr = k.to_real();
        detail::CompensatedSum sum;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 a = nodes[i];
            const Vec2 b = i + 1 < n ? nodes[i + 1] : nodes[0] + kr;
            const Vec2 d = b - a;
            const Vec2 m = 0.5 * (a + b);
            double term = 0.0;
            if (d.x != 0.0 || d.y != 0.0) term = ck * metric_->at(m).quad(d);
            if (potential_) term += potential_->value(m) / static_cast<double>(n);
            sum.add(term);
        }
        return sum.value();
    }

    double value(const DiscreteLoop& loop) const { return value(loop.nodes(), loop.winding()); }

    /// Value and gradient with respect to every node position.
    double value_and_gradient(std::span<const Vec2> nodes, IVec2 k, std::span<Vec2> grad) const {
        const std::size_t n = nodes.size();
        const double ck = kinetic_coefficient(n);
        const double cv = 1.0 / static_cast<double>(n);
        const Vec2 kr = k.to_real();
        for (auto& g : grad) g = {};
        detail::CompensatedSum sum;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = i + 1 < n ? i + 1 : 0;
            const Vec2 a = nodes[i];
            const Vec2 b = i + 1 < n ? nodes[i + 1] : nodes[0] + kr;
            const Vec2 d = b - a;
            const Vec2 m = 0.5 * (a + b);
            const Sym2D G = metric_->at_with_grad(m);
            const Sym2 G0 = G.value();
            const Vec2 Gd = G0.apply(d);
            const double q = dot(d, Gd);
            // d/dm of d^T G(m) d
            const Vec2 dq{G.d_dx().quad(d), G.d_dy().quad(d)};
            double term = ck * q;
            Vec2 shared = (0.5 * ck) * dq;
            if (potential_) {
                const Dual2 v = potential_->eval(m);
                term += cv * v.v;
                shared += (0.5 * cv) * v.grad();
            }
            sum.add(term);
            const Vec2 stretch = (2.0 * ck) * Gd;
            grad[j] += shared + stretch;
            grad[i] += shared - stretch;
        }
        return sum.value();
    }

private:
    const MetricSpec* metric_;
    const ScalarField* potential_;
    double period_;
};

/// Riemannian length with midpoint quadrature.
inline double loop_length(const MetricSpec& g, const DiscreteLoop& loop) {
    detail::CompensatedSum sum;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec2 a = loop.node(i);
        const Vec2 b = loop.node(i + 1);
        sum.add(std::sqrt(metric_eval(g, {0.5 * (a + b), b - a})));
    }
    return sum.value();
}

/// g-lengths of the individual segments.
inline std::vector<double> segment_lengths(const MetricSpec& g, const DiscreteLoop& loop) {
    std::vector<double> out(loop.size());
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec2 a = loop.node(i);
        const Vec2 b = loop.node(i + 1);
        out[i] = std::sqrt(metric_eval(g, {0.5 * (a + b), b - a}));
    }
    return out;
}

/// Dirichlet energy of the unit-period parametrization, (N/2) sum g(m_i)(d_i, d_i).
inline double loop_energy(const MetricSpec& g, const DiscreteLoop& loop) { return LoopAction(g).value(loop); }

inline std::vector<Vec2> energy_gradient(const MetricSpec& g, const DiscreteLoop& loop) {
    std::vector<Vec2> grad(loop.size());
    LoopAction(g).value_and_gradient(loop.nodes(), loop.winding(), grad);
    return grad;
}

/// Reparametrize by Euclidean arc length of the lift, keeping u_0.
inline DiscreteLoop resample(const DiscreteLoop& loop, std::size_t n_new) {
    if (n_new < DiscreteLoop::kMinNodes) throw Error("a loop needs at least 8 nodes");
    const std::size_t n = loop.size();
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + norm(loop.node(i + 1) - loop.node(i));
    const double total = cum[n];
    std::vector<Vec2> out(n_new);
    std::size_t seg = 0;
    for (std::size_t j = 0; j < n_new; ++j) {
        const double t = total * static_cast<double>(j) / n_new;
        while (seg + 1 < n && cum[seg + 1] <= t) ++seg;
        const double len = cum[seg + 1] - cum[seg];
        const double w = len > 0.0 ? (t - cum[seg]) / len : 0.0;
        const Vec2 a = loop.node(seg);
        const Vec2 b = loop.node(seg + 1);
        out[j] = a + w * (b - a);
    }
    return loop.with_nodes(std::move(out));
}

/// Distance between two loops of the same winding: the minimum, over cyclic
/// relabelings and integer translations, of the sup over nodes of the
/// Euclidean node offset. Loops of different size are compared after
/// resampling both to the larger size.
inline double loop_distance(const DiscreteLoop& a_in, const DiscreteLoop& b_in,
                            double stop_below = -1.0) {
    if (a_in.winding() != b_in.winding()) return std::numeric_limits<double>::infinity();
    const std::size_t n = std::max(a_in.size(), b_in.size());
    const DiscreteLoop a = a_in.size() == n ? a_in : resample(a_in, n);
    const DiscreteLoop b = b_in.size() == n ? b_in : resample(b_in, n);
    double best = std::numeric_limits<double>::infinity();
    std::vector<Vec2> diff(n);
    for (std::size_t s = 0; s < n; ++s) {
        double lox = std::numeric_limits<double>::infinity(), hix = -lox, loy = lox, hiy = -lox;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t idx = i + s;
            diff[i] = a.node(i) - (idx < n ? b.node(idx) : b.node(idx - n) + b.winding().to_real());
            lox = std::min(lox, diff[i].x); hix = std::max(hix, diff[i].x);
            loy = std::min(loy, diff[i].y); hiy = std::max(hiy, diff[i].y);
        }
        const Vec2 t{std::round(0.5 * (lox + hix)), std::round(0.5 * (loy + hiy))};
        double worst = 0.0;
        for (std::size_t i = 0; i < n && worst < best; ++i) worst = std::max(worst, norm(diff[i] - t));
        best = std::min(best, worst);
        if (best <= stop_below) break;
    }
    return best;
}

/// True iff loop_distance(a, b) <= tol. Faster than loop_distance because
/// each candidate alignment is abandoned at the first node outside tol.
inline bool loops_within(const DiscreteLoop& a_in, const DiscreteLoop& b_in, double tol) {
    if (a_in.winding() != b_in.winding()) return false;
    if (!(tol < 0.25)) return loop_distance(a_in, b_in, tol) <= tol;
    const std::size_t n = std::max(a_in.size(), b_in.size());
    const DiscreteLoop a = a_in.size() == n ? a_in : resample(a_in, n);
    const DiscreteLoop b = b_in.size() == n ? b_in : resample(b_in, n);
    const Vec2 kr = b.winding().to_real();
    for (std::size_t s = 0; s < n; ++s) {
        auto diff = [&](std::size_t i) {
            const std::size_t idx = i + s;
            return a.node(i) - (idx < n ? b.node(idx) : b.node(idx - n) + kr);
        };
        const Vec2 d0 = diff(0);
        const Vec2 t{std::round(d0.x), std::round(d0.y)};
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) ok = norm(diff(i) - t) <= tol;
        if (ok) return true;
    }
    return false;
}

}  // namespace mather
