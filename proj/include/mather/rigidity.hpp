#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "beta.hpp"
#include "metric.hpp"

namespace mather {

struct MatherPoint {
    Vec2 x;  // position reduced mod 1
    Vec2 v;  // velocity of the period-1/t parametrization
    double w = 0.0;
};

/// Finite approximation of the Mather set of class h: the near-minimal loops
/// of the primitive class, each loop weighted equally, each node sampled at
/// the segment midpoint with the velocity that makes the loop's rotation
/// vector equal to h.
struct MatherSample {
    HomologyClass h;
    std::vector<MatherPoint> samples;
    std::vector<DiscreteLoop> source;

    Vec2 rotation_vector() const {
        Vec2 r;
        for (const auto& s : samples) r += s.w * s.v;
        return r;
    }
};

/// Sample built from the loops of a minimization result in the primitive
/// class of h.
inline MatherSample mather_sample_from(const MinResult& res, const HomologyClass& h) {
    if (h.is_zero()) throw Error("Mather sample of the null class is not defined");
    if (!res.any_converged) throw Error("no converged minimizer for class " + h.str());
    MatherSample ms;
    ms.h = h;
    ms.source = res.all_minima;
    const double t = h.primitive_multiplier();
    const double loops = static_cast<double>(ms.source.size());
    for (const auto& loop : ms.source) {
        const std::size_t n = loop.size();
        const double w = 1.0 / (loops * static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 a = loop.node(i), b = loop.node(i + 1);
            ms.samples.push_back({wrap_unit(0.5 * (a + b)), (t * static_cast<double>(n)) * (b - a), w});
        }
    }
    return ms;
}

inline MatherSample mather_sample(const MetricSpec& g, const HomologyClass& h, const MinOptions& opts = {}) {
    if (h.is_zero()) throw Error("Mather sample of the null class is not defined");
    return mather_sample_from(minimize_energy(g, h.primitive_part(), opts), h);
}

/// Fraction of the cells of a cell_n x cell_n partition of the torus that
/// contain a projected sample point. The number of starts is raised to at
/// least 8 * cell_n.
inline double projected_coverage(const MetricSpec& g, const HomologyClass& h, int cell_n, const MinOptions& opts = {}) {
    if (cell_n < 1) throw Error("cell count must be positive");
    MinOptions o = opts;
    o.starts = std::max(o.starts, 8 * cell_n);
    const MatherSample ms = mather_sample(g, h, o);
    std::set<std::pair<int, int>> hit;
    for (const auto& s : ms.samples) {
        const int i = std::min(cell_n - 1, static_cast<int>(s.x.x * cell_n));
        const int j = std::min(cell_n - 1, static_cast<int>(s.x.y * cell_n));
        hit.insert({i, j});
    }
    return static_cast<double>(hit.size()) / (static_cast<double>(cell_n) * cell_n);
}

struct CompareOptions {
    BetaOptions beta;
    int grid_n = 256;     // distortion scan resolution
    double tol_rel = 1e-3;  // equality: gap <= tol_rel * C * beta1

    CompareOptions() { beta.sweep_max = 1; }
};

struct ComparisonEntry {
    enum class Status { Ok, Violation, Inconclusive };

    HomologyClass h;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double C = 0.0;
    double gap = 0.0;
    double tol_abs = 0.0;
    bool equality = false;
    std::optional<double> homothety_residual;
    std::optional<double> cross_min_excess;
    double numerical_error = 0.0;  // combined estimate for beta1 and beta2, in beta units
    Status status = Status::Ok;
    std::string note;
    std::optional<BetaResult> result1;
    std::optional<BetaResult> result2;
    std::optional<MatherSample> sample;

    std::string status_name() const {
        switch (status) {
            case Status::Ok: return "ok";
            case Status::Violation: return "violation";
            case Status::Inconclusive: return "inconclusive";
        }
        return "unknown";
    }
};

namespace detail {

/// beta for g1, then beta for g2 with the best g1 loop as an extra start.
inline std::pair<BetaResult, BetaResult> paired_betas(const MetricSpec& g1, const MetricSpec& g2,
                                                      const HomologyClass& h, const BetaOptions& opts) {
    const auto ks = windings_for(h, opts.sweep_max);
    std::map<IVec2, MinResult> s1, s2;
    for (const IVec2& k : ks) {
        MinResult r1 = minimize_energy(g1, k, opts.min);
        MinResult r2 = minimize_energy(g2, k, opts.min, std::span<const DiscreteLoop>(&r1.loop, 1));
        s1.emplace(k, std::move(r1));
        s2.emplace(k, std::move(r2));
    }
    return {assemble_beta(h, s1, opts.sweep_max), assemble_beta(h, s2, opts.sweep_max)};
}

inline double fiber_ratio(const MetricSpec& g1, const MetricSpec& g2, const MatherPoint& p) {
    return g2.at(p.x).quad(p.v) / g1.at(p.x).quad(p.v);
}

}  // namespace detail

/// Comparison at one class: beta2 <= C * beta1, with the
/// equality diagnostics evaluated on the Mather sample of g1.
///
/// `C` may be supplied to skip the distortion scan (or to compare against
/// another constant). Failures inside the computation mark the entry
/// inconclusive.
inline ComparisonEntry compare_at_class(const MetricSpec& g1, const MetricSpec& g2, const HomologyClass& h,
                                        const CompareOptions& opts = {}, std::optional<double> C = std::nullopt) {
    if (h.is_zero()) throw Error("comparison at the null class is not defined");
    ComparisonEntry e;
    e.h = h;
    try {
        e.C = C ? *C : distortion_constant(g1, g2, opts.grid_n).C;
        auto [r1, r2] = detail::paired_betas(g1, g2, h, opts.beta);
        e.beta1 = r1.beta;
        e.beta2 = r2.beta;
        e.gap = e.C * e.beta1 - e.beta2;
        e.tol_abs = 1e-6 * e.C * e.beta1;
        e.equality = e.gap <= opts.tol_rel * e.C * e.beta1;
        e.numerical_error = e.C * r1.numerical_error + r2.numerical_error;
        const bool converged = r1.converged && r2.converged;
        if (e.equality) {
            MatherSample ms = mather_sample_from(*r1.certificate, h);
            double res = 0.0;
            for (const auto& p : ms.samples) res = std::max(res, std::abs(detail::fiber_ratio(g1, g2, p) - e.C));
            e.homothety_residual = res;
            const double t = h.primitive_multiplier();
            double excess = -std::numeric_limits<double>::infinity();
            for (const auto& loop : r1.certificate->all_minima) {
                const double l2 = t * loop_length(g2, loop);
                excess = std::max(excess, 0.5 * l2 * l2 - e.beta2);
            }
            e.cross_min_excess = excess;
            e.sample = std::move(ms);
        }
        e.result1 = std::move(r1);
        e.result2 = std::move(r2);
        if (e.gap < -e.tol_abs) {
            e.status = ComparisonEntry::Status::Violation;
            e.note = "beta2 exceeds C * beta1 beyond tolerance";
        } else if (!converged) {
            e.status = ComparisonEntry::Status::Inconclusive;
            e.note = "optimizer did not converge";
        }
    } catch (const Error& ex) {
        e.status = ComparisonEntry::Status::Inconclusive;
        e.note = ex.what();
    }
    return e;
}

struct ComparisonReport {
    double C = 0.0;
    Vec2 C_argmax;
    double tol_rel = 1e-3;
    std::vector<ComparisonEntry> entries;
    std::vector<MatherPoint> homothety_region;  // union of samples over equality classes

    bool inequality_holds() const {
        for (const auto& e : entries)
            if (e.status == ComparisonEntry::Status::Violation) return false;
        return true;
    }

    bool any_inconclusive() const {
        for (const auto& e : entries)
            if (e.status == ComparisonEntry::Status::Inconclusive) return true;
        return false;
    }

    std::vector<HomologyClass> equality_classes() const {
        std::vector<HomologyClass> out;
        for (const auto& e : entries)
            if (e.equality && e.status != ComparisonEntry::Status::Inconclusive) out.push_back(e.h);
        return out;
    }

    /// 0 = inequality verified everywhere, 2 = violation, 3 = inconclusive entries.
    int exit_code() const {
        if (!inequality_holds()) return 2;
        if (any_inconclusive()) return 3;
        return 0;
    }
};

/// compare_at_class over a class list; entries run concurrently across
/// `opts.beta.min.workers` and are stored in class order.
inline ComparisonReport rigidity_scan(const MetricSpec& g1, const MetricSpec& g2, const std::vector<HomologyClass>& classes,
                                      const CompareOptions& opts = {}) {
    if (classes.empty()) throw Error("class list is empty");
    for (const auto& h : classes)
        if (h.is_zero()) throw Error("comparison at the null class is not defined");
    ComparisonReport rep;
    rep.tol_rel = opts.tol_rel;
    const DistortionResult d = distortion_constant(g1, g2, opts.grid_n);
    rep.C = d.C;
    rep.C_argmax = d.argmax;
    std::vector<std::optional<ComparisonEntry>> out(classes.size());
    CompareOptions inner = opts;
    if (classes.size() > 1) inner.beta.min.workers = 1;
    parallel_for(classes.size(), opts.beta.min.workers,
                 [&](std::size_t i) { out[i] = compare_at_class(g1, g2, classes[i], inner, d.C); });
    for (auto& e : out) {
        if (e->equality && e->sample)
            rep.homothety_region.insert(rep.homothety_region.end(), e->sample->samples.begin(), e->sample->samples.end());
        rep.entries.push_back(std::move(*e));
    }
    return rep;
}

struct FlatRigidityReport {
    enum class Verdict { Flat, NotFlat, Inconclusive };

    Verdict verdict = Verdict::Inconclusive;
    double factor_max = 0.0;        // maximum of the original factor
    double normalized_min = 0.0;    // of the normalized factor
    double normalized_max = 0.0;
    double C_check = 0.0;           // distortion of the normalized metric against the base
    bool normalization_ok = false;  // |C_check - 1| <= 1e-8
    ComparisonReport comparison;
    std::string note;

    std::string verdict_name() const {
        switch (verdict) {
            case Verdict::Flat: return "flat";
            case Verdict::NotFlat: return "not flat";
            case Verdict::Inconclusive: return "inconclusive";
        }
        return "unknown";
    }

    int exit_code() const {
        if (!comparison.inequality_holds()) return 2;
        return verdict == Verdict::Inconclusive ? 3 : 0;
    }
};

/// Factor variation at or below this fraction of its maximum is treated as
/// constant.
inline constexpr double kFlatFactorResolution = 1e-12;

/// Decides whether a conformal metric phi * G0 is flat after normalizing
/// max phi = 1, by comparing beta against the flat base at each class.
inline FlatRigidityReport flat_rigidity_check(const MetricSpec& g, const std::vector<HomologyClass>& classes,
                                              const CompareOptions& opts = {}) {
    if (g.kind() != MetricSpec::Kind::Conformal && g.kind() != MetricSpec::Kind::Flat)
        throw Error("flat rigidity check needs a conformal metric");
    FlatRigidityReport rep;
    const MetricSpec base = MetricSpec::flat(g.base());
    const ScalarField phi = g.kind() == MetricSpec::Kind::Flat ? ScalarField::constant(1.0) : g.factor();
    rep.factor_max =
        detail::maximize_on_torus([&](Vec2 x) { return phi.value(x); }, opts.grid_n).first;
    if (!(rep.factor_max > 0.0)) throw Error("conformal factor must be positive");
    const ScalarField normalized = phi.scaled(1.0 / rep.factor_max);
    const MetricSpec gn = MetricSpec::conformal(g.base(), normalized);
    std::tie(rep.normalized_min, rep.normalized_max) = normalized.grid_range(static_cast<std::size_t>(opts.grid_n));
    rep.C_check = distortion_constant(base, gn, opts.grid_n).C;
    rep.normalization_ok = std::abs(rep.C_check - 1.0) <= 1e-8;
    rep.comparison = rigidity_scan(base, gn, classes, opts);

    const bool constant = rep.normalized_max - rep.normalized_min <= kFlatFactorResolution * rep.normalized_max;
    bool some_equality = false, all_separated = true;
    for (const auto& e : rep.comparison.entries) {
        if (e.status == ComparisonEntry::Status::Inconclusive) {
            all_separated = false;
            continue;
        }
        some_equality = some_equality || e.equality;
        if (!(e.gap > 3.0 * e.numerical_error)) all_separated = false;
    }
    if (!rep.normalization_ok) {
        rep.verdict = FlatRigidityReport::Verdict::Inconclusive;
        rep.note = "normalized distortion differs from 1";
    } else if (some_equality && constant) {
        rep.verdict = FlatRigidityReport::Verdict::Flat;
    } else if (all_separated && !rep.comparison.any_inconclusive()) {
        rep.verdict = FlatRigidityReport::Verdict::NotFlat;
    } else {
        rep.verdict = FlatRigidityReport::Verdict::Inconclusive;
        rep.note = "gaps are within numerical resolution";
    }
    return rep;
}

}  // namespace mather
