#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "beta.hpp"
#include "metric.hpp"

namespace mather {

/// Lagrangian L(x, v) = 1/2 g_x(v, v) + V(x).
///
/// V is stored with the sign it is given: adding V <= 0 lowers the action.
/// This is not the mechanical convention L = K - U.
struct TonelliSpec {
    MetricSpec kinetic;
    ScalarField potential = ScalarField::constant(0.0);
    bool normalized = false;
};

inline double potential_max(const ScalarField& V, int grid_n = 256) {
    return detail::maximize_on_torus([&](Vec2 x) { return V.value(x); }, grid_n).first;
}

/// V - max V, with the maximum taken over a grid scan refined by golden
/// section. V' <= 0 everywhere up to the refinement accuracy.
inline ScalarField normalize_potential(const ScalarField& V, int grid_n = 256) {
    return V.shifted(-potential_max(V, grid_n));
}

inline TonelliSpec normalized(TonelliSpec L, int grid_n = 256) {
    L.potential = normalize_potential(L.potential, grid_n);
    L.normalized = true;
    return L;
}

/// Discrete average action of the loop traversed in time T:
///   sum_i  N / (2 T^2) g(m_i)(d_i, d_i) + V(m_i) / N.
inline double average_action(const TonelliSpec& L, const DiscreteLoop& loop, double T) {
    if (!(T > 0.0)) throw Error("period must be positive");
    return LoopAction(L.kinetic, &L.potential, T).value(loop);
}

struct ManeOptions {
    MinOptions min;
    int m_max = 3;

    void validate() const {
        min.validate();
        if (m_max < 1) throw Error("m_max must be at least 1");
    }
};

struct CoverEntry {
    int m = 1;
    IVec2 k;
    double period = 1.0;
    double value = 0.0;
    bool converged = false;
    double numerical_error = 0.0;
};

struct ManeResult {
    HomologyClass h;
    double beta = 0.0;
    int best_m = 1;
    std::vector<CoverEntry> per_m;
    std::optional<MinResult> certificate;  // minimizer of the winning cover
    std::vector<MinResult> minima;         // one per cover, for warm starts
    bool converged = true;
    double numerical_error = 0.0;
};

/// beta of a Tonelli Lagrangian at a rational class h = t * k0: for each
/// m = 1..m_max the action is minimized over loops of winding m * k0 with
/// period T = m / t, so that the rotation vector is exactly h; the minimum
/// over m is returned.
///
/// `warm` optionally holds one MinResult per cover (as in ManeResult::minima);
/// its best loop is added as a starting point.
inline ManeResult beta_mane(const TonelliSpec& L, const HomologyClass& h, const ManeOptions& opts = {},
                            const std::vector<MinResult>* warm = nullptr) {
    opts.validate();
    ManeResult r;
    r.h = h;
    if (h.is_zero()) throw Error("beta_mane needs a nonzero class");
    const IVec2 k0 = h.primitive_part();
    const double t = h.primitive_multiplier();
    bool any = false;
    for (int m = 1; m <= opts.m_max; ++m) {
        const IVec2 k = static_cast<std::int64_t>(m) * k0;
        const double T = m / t;
        const LoopAction action(L.kinetic, &L.potential, T);
        std::span<const DiscreteLoop> ws;
        if (warm && static_cast<std::size_t>(m - 1) < warm->size()) ws = std::span<const DiscreteLoop>(&(*warm)[m - 1].loop, 1);
        MinResult res = minimize_action(action, k, opts.min, ws);
        any = any || res.any_converged;
        const double err = res.refinement_change() + 1e-8 * std::abs(res.energy);
        r.per_m.push_back({m, k, T, res.energy, res.converged, err});
        r.minima.push_back(std::move(res));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.per_m.size(); ++i) {
        // a larger cover wins only beyond rounding
        const double v = r.per_m[best].value;
        if (r.per_m[i].value < v - 1e-12 * std::abs(v)) best = i;
    }
    r.best_m = r.per_m[best].m;
    r.beta = r.per_m[best].value;
    r.converged = r.per_m[best].converged;
    r.numerical_error = r.per_m[best].numerical_error;
    r.certificate = r.minima[best];
    if (!any) throw Error("optimizer did not converge for any cover of class " + h.str());
    return r;
}

struct ManeEntry {
    HomologyClass h;
    double beta_L = 0.0;
    double beta_LV = 0.0;
    double gap = 0.0;  // beta_L - beta_LV
    double numerical_error = 0.0;
    bool pass = true;  // beta_LV <= beta_L + 1e-6 |beta_L|
    bool converged = true;
    std::optional<ManeResult> result_L;
    std::optional<ManeResult> result_LV;
};

struct ManeReport {
    std::vector<ManeEntry> entries;
    double potential_max = 0.0;      // of V on the evaluation grid
    double potential_abs_max = 0.0;  // of |V| on the evaluation grid

    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
    bool all_converged() const {
        for (const auto& e : entries)
            if (!e.converged) return false;
        return true;
    }
};

/// Compares beta of L = 1/2 g with beta of L + V at each class. The L + V
/// minimization is warm-started from the minimizers of L. V must satisfy
/// max V = 0; violations of beta_{L+V} <= beta_L are report entries.
inline ManeReport mane_inequality_check(const MetricSpec& kinetic, const ScalarField& V,
                                        const std::vector<HomologyClass>& classes, const ManeOptions& opts = {}) {
    if (classes.empty()) throw Error("class list is empty");
    for (const auto& h : classes)
        if (h.is_zero()) throw Error("beta_mane needs a nonzero class");
    ManeReport rep;
    const auto range = V.grid_range(256);
    rep.potential_max = range.second;
    rep.potential_abs_max = std::max(std::abs(range.first), std::abs(range.second));
    const TonelliSpec L{kinetic, ScalarField::constant(0.0), true};
    const TonelliSpec LV{kinetic, V, true};

    std::vector<std::optional<ManeEntry>> out(classes.size());
    ManeOptions inner = opts;
    if (classes.size() > 1) inner.min.workers = 1;
    parallel_for(classes.size(), opts.min.workers, [&](std::size_t i) {
        ManeEntry e;
        e.h = classes[i];
        ManeResult rl = beta_mane(L, classes[i], inner);
        ManeResult rv = beta_mane(LV, classes[i], inner, &rl.minima);
        e.beta_L = rl.beta;
        e.beta_LV = rv.beta;
        e.gap = rl.beta - rv.beta;
        e.numerical_error = rl.numerical_error + rv.numerical_error;
        e.pass = rv.beta <= rl.beta + 1e-6 * std::abs(rl.beta);
        e.converged = rl.converged && rv.converged;
        e.result_L = std::move(rl);
        e.result_LV = std::move(rv);
        out[i] = std::move(e);
    });
    for (auto& e : out) rep.entries.push_back(std::move(*e));
    return rep;
}

struct ManeRigidityReport {
    enum class Verdict { Zero, NonZero, Inconclusive };

    Verdict verdict = Verdict::Inconclusive;
    std::vector<double> beta_flat;  // closed form 1/2 h.G h per class
    ManeReport check;
    std::string note;

    std::string verdict_name() const {
        switch (verdict) {
            case Verdict::Zero: return "V = 0";
            case Verdict::NonZero: return "V != 0";
            case Verdict::Inconclusive: return "inconclusive";
        }
        return "unknown";
    }

    int exit_code() const {
        if (!check.all_pass()) return 2;
        return verdict == Verdict::Inconclusive ? 3 : 0;
    }
};

/// Potentials with max |V| at or below this are treated as zero.
inline constexpr double kZeroPotentialResolution = 1e-12;

/// For flat kinetic l(v) = 1/2 G v.v, beta_l(h) = 1/2 G h.h under the
/// standard identification H_1(T^2; R) = R^2. Equality beta_{l+V}(h) = beta_l(h)
/// at some class decides V = 0.
inline ManeRigidityReport mane_rigidity_check(const MetricSpec& kinetic, const ScalarField& V,
                                              const std::vector<HomologyClass>& classes, const ManeOptions& opts = {}) {
    if (kinetic.kind() != MetricSpec::Kind::Flat) throw Error("Mane rigidity check needs a flat kinetic term");
    ManeRigidityReport rep;
    rep.check = mane_inequality_check(kinetic, V, classes, opts);
    const Sym2 G = kinetic.base();
    for (const auto& h : classes) rep.beta_flat.push_back(0.5 * G.quad(h.to_real()));

    const double vmax = rep.check.potential_abs_max;
    bool all_small = true, all_separated = true;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto& e = rep.check.entries[i];
        // The gap is measured against the closed form.
        const double gap = rep.beta_flat[i] - e.beta_LV;
        const double err = e.numerical_error + 1e-8 * rep.beta_flat[i];
        if (std::abs(gap) > 3.0 * err) all_small = false;
        if (!(gap > 3.0 * err)) all_separated = false;
    }
    if (vmax <= kZeroPotentialResolution && all_small) {
        rep.verdict = ManeRigidityReport::Verdict::Zero;
    } else if (vmax > 1e-6 && all_separated && rep.check.all_converged()) {
        rep.verdict = ManeRigidityReport::Verdict::NonZero;
    } else {
        rep.verdict = ManeRigidityReport::Verdict::Inconclusive;
        rep.note = "gaps are within numerical resolution";
    }
    return rep;
}

}  // namespace mather
