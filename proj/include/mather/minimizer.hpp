#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "lbfgs.hpp"
#include "loop.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace mather {

struct MinOptions {
    std::size_t n0 = 0;  // initial node count; 0 selects 64 * max(|p|, |q|, 1)
    int levels = 2;      // mesh doublings after the initial level
    int starts = 12;
    double grad_tol = 1e-7;
    int max_iters = 5000;  // per level
    std::uint64_t seed = 1;
    double rel_tol = 1e-4;    // window for all_minima
    double amplitude = 0.05;  // transverse perturbation of the initial loops
    int workers = 1;          // threads used across starts
    int memory = 8;           // L-BFGS history

    void validate() const {
        if (n0 != 0 && n0 < DiscreteLoop::kMinNodes) throw Error("initial node count must be at least 8");
        if (starts < 1) throw Error("at least one start is required");
        if (!(grad_tol > 0.0)) throw Error("gradient tolerance must be positive");
        if (levels < 0) throw Error("refinement levels must be non-negative");
        if (max_iters < 1) throw Error("max_iters must be positive");
        if (!(rel_tol >= 0.0)) throw Error("rel_tol must be non-negative");
    }

    std::size_t initial_nodes(IVec2 k) const {
        if (n0 != 0) return n0;
        return static_cast<std::size_t>(64 * std::max<std::int64_t>(k.max_abs(), 1));
    }

    std::size_t final_nodes(IVec2 k) const { return initial_nodes(k) << levels; }
};

/// Outcome of one start of the multistart search.
struct StartRecord {
    int index = 0;
    std::uint64_t seed = 0;
    bool warm = false;  // seeded from a caller-provided loop
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
    double grad_sup = 0.0;
    std::vector<double> level_values;
};

struct MinResult {
    explicit MinResult(DiscreteLoop best) : loop(std::move(best)) {}

    DiscreteLoop loop;
    double energy = 0.0;  // objective value of `loop`, recomputed
    double length = 0.0;  // Riemannian length of `loop`
    std::vector<DiscreteLoop> all_minima;
    std::vector<double> all_minima_energies;
    bool converged = false;
    int iterations = 0;  // summed over starts and levels
    double grad_sup = 0.0;
    std::vector<double> level_energies;  // of the winning start, coarse to fine
    std::vector<StartRecord> starts;
    int best_start = 0;
    double rel_tol = 1e-4;
    bool any_converged = false;

    /// Discretization error proxy: change of the winning start's value
    /// between the two finest levels.
    double refinement_change() const {
        if (level_energies.size() < 2) return 0.0;
        return std::abs(level_energies.back() - level_energies[level_energies.size() - 2]);
    }
};

namespace detail {

/// Solver for the symmetric cyclic tridiagonal system
///   diag * z_i - off * (z_{i-1} + z_{i+1}) = r_i   (indices mod n)
/// via Sherman-Morrison on the Thomas algorithm.
class CyclicTridiagonal {
public:
    CyclicTridiagonal(std::size_t n, double diag, double off) : n_(n), diag_(diag), off_(-off) {
        // corners: A[0][n-1] = A[n-1][0] = -off
        gamma_ = -diag_;
        b_.assign(n_, diag_);
        b_[0] = diag_ - gamma_;
        b_[n_ - 1] = diag_ - off_ * off_ / gamma_;
        // Forward elimination coefficients for the modified tridiagonal.
        cp_.resize(n_);
        den_.resize(n_);
        den_[0] = b_[0];
        cp_[0] = off_ / den_[0];
        for (std::size_t i = 1; i < n_; ++i) {
            den_[i] = b_[i] - off_ * cp_[i - 1];
            cp_[i] = off_ / den_[i];
        }
        std::vector<double> u(n_, 0.0);
        u[0] = gamma_;
        u[n_ - 1] = off_;
        zvec_ = u;
        solve_tri(zvec_);
        corr_den_ = 1.0 + zvec_[0] + off_ * zvec_[n_ - 1] / gamma_;
    }

    void solve(std::vector<double>& r) const {
        solve_tri(r);
        const double fact = (r[0] + off_ * r[n_ - 1] / gamma_) / corr_den_;
        for (std::size_t i = 0; i < n_; ++i) r[i] -= fact * zvec_[i];
    }

private:
    void solve_tri(std::vector<double>& r) const {
        r[0] /= den_[0];
        for (std::size_t i = 1; i < n_; ++i) r[i] = (r[i] - off_ * r[i - 1]) / den_[i];
        for (std::size_t i = n_ - 1; i-- > 0;) r[i] -= cp_[i] * r[i + 1];
    }

    std::size_t n_;
    double diag_, off_, gamma_, corr_den_ = 1.0;
    std::vector<double> b_, cp_, den_, zvec_;
};

struct LevelOutcome {
    DiscreteLoop loop;
    LbfgsReport report;
};

/// Optimizes node positions at a fixed mesh size.
inline LevelOutcome optimize_level(const LoopAction& obj, const DiscreteLoop& start, const MinOptions& opts) {
    const std::size_t n = start.size();
    const IVec2 k = start.winding();

    // Preconditioner: Hessian of the kinetic term for a constant metric with
    // the loop's mean fiber scale, plus a small shift for the translation mode.
    double mean_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 m = 0.5 * (start.node(i) + start.node(i + 1));
        mean_scale += 0.5 * obj.metric().at(m).trace();
    }
    mean_scale /= static_cast<double>(n);
    const double stiff = 2.0 * obj.kinetic_coefficient(n) * mean_scale;
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
    const CyclicTridiagonal tri(n, 2.0 * stiff + stiff * h * h, stiff);

    std::vector<double> x(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        x[2 * i] = start.nodes()[i].x;
        x[2 * i + 1] = start.nodes()[i].y;
    }
    std::vector<Vec2> nodes(n), grad(n);
    auto fg = [&](const std::vector<double>& xs, std::vector<double>& gs) {
        for (std::size_t i = 0; i < n; ++i) nodes[i] = {xs[2 * i], xs[2 * i + 1]};
        const double v = obj.value_and_gradient(nodes, k, grad);
        for (std::size_t i = 0; i < n; ++i) {
            gs[2 * i] = grad[i].x;
            gs[2 * i + 1] = grad[i].y;
        }
        return v;
    };
    std::vector<double> chan(n);
    auto precond = [&](const std::vector<double>& r, std::vector<double>& z) {
        for (int c = 0; c < 2; ++c) {
            for (std::size_t i = 0; i < n; ++i) chan[i] = r[2 * i + c];
            tri.solve(chan);
            for (std::size_t i = 0; i < n; ++i) z[2 * i + c] = chan[i];
        }
    };
    LbfgsOptions lo;
    lo.max_iters = opts.max_iters;
    lo.grad_tol = opts.grad_tol;
    lo.memory = opts.memory;
    const LbfgsReport rep = minimize_lbfgs(x, fg, precond, lo);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = {x[2 * i], x[2 * i + 1]};
    return {start.with_nodes(nodes), rep};
}

struct RunOutcome {
    std::optional<DiscreteLoop> loop;
    StartRecord record;
};

inline RunOutcome run_schedule(const LoopAction& obj, DiscreteLoop loop, int levels, const MinOptions& opts,
                               StartRecord rec) {
    for (int level = 0; level <= levels; ++level) {
        LevelOutcome out = optimize_level(obj, loop, opts);
        rec.iterations += out.report.iterations;
        rec.level_values.push_back(out.report.value);
        rec.converged = out.report.converged;
        rec.grad_sup = out.report.grad_sup;
        loop = std::move(out.loop);
        if (level < levels) loop = resample(loop, 2 * loop.size());
    }
    rec.value = obj.value(loop);
    return {std::move(loop), std::move(rec)};
}

inline bool lexicographically_less(const DiscreteLoop& a, const DiscreteLoop& b) {
    const auto& na = a.nodes();
    const auto& nb = b.nodes();
    if (na.size() != nb.size()) return na.size() < nb.size();
    for (std::size_t i = 0; i < na.size(); ++i) {
        if (na[i].x != nb[i].x) return na[i].x < nb[i].x;
        if (na[i].y != nb[i].y) return na[i].y < nb[i].y;
    }
    return false;
}

}  // namespace detail

/// Multistart minimization of a discrete loop action in the winding class k.
///
/// Random starts run the full schedule N0 -> 2 N0 -> ... -> 2^levels N0.
/// Warm starts (loops of winding k supplied by the caller) are resampled to
/// the finest size and optimized there only. Starts are independent and are
/// merged in index order, so the result does not depend on `workers`.
inline MinResult minimize_action(const LoopAction& obj, IVec2 k, const MinOptions& opts,
                                 std::span<const DiscreteLoop> warm_starts = {}) {
    opts.validate();
    if (k.is_zero()) throw Error("null class has no loop representative");
    const std::size_t n0 = opts.initial_nodes(k);
    const std::size_t n_final = opts.final_nodes(k);
    const std::size_t total = static_cast<std::size_t>(opts.starts) + warm_starts.size();
    for (const auto& w : warm_starts)
        if (w.winding() != k) throw Error("warm start has a different winding");

    std::vector<detail::RunOutcome> runs(total);
    parallel_for(total, opts.workers, [&](std::size_t s) {
        StartRecord rec;
        rec.index = static_cast<int>(s);
        if (s < static_cast<std::size_t>(opts.starts)) {
            rec.seed = derive_seed(opts.seed, s);
            runs[s] = detail::run_schedule(obj, init_loop(k, n0, rec.seed, opts.amplitude), opts.levels, opts, rec);
        } else {
            rec.warm = true;
            const DiscreteLoop& w = warm_starts[s - opts.starts];
            DiscreteLoop start = w.size() == n_final ? w : resample(w, n_final);
            runs[s] = detail::run_schedule(obj, std::move(start), 0, opts, rec);
        }
    });

    // Winner: lowest value; values equal to rounding are broken by the
    // lexicographically smallest node list.
    std::size_t best = 0;
    for (std::size_t s = 1; s < total; ++s) {
        const double vb = runs[best].record.value;
        const double vs = runs[s].record.value;
        const double tie = 1e-12 * std::max(std::abs(vb), std::abs(vs));
        if (vs < vb - tie) best = s;
        else if (std::abs(vs - vb) <= tie && detail::lexicographically_less(*runs[s].loop, *runs[best].loop)) best = s;
    }

    MinResult res{*runs[best].loop};
    res.rel_tol = opts.rel_tol;
    res.best_start = static_cast<int>(best);
    res.energy = obj.value(res.loop);
    res.length = loop_length(obj.metric(), res.loop);
    res.converged = runs[best].record.converged;
    res.grad_sup = runs[best].record.grad_sup;
    res.level_energies = runs[best].record.level_values;
    const double window = res.energy + opts.rel_tol * std::abs(res.energy);
    for (std::size_t s = 0; s < total; ++s) {
        res.iterations += runs[s].record.iterations;
        res.any_converged = res.any_converged || runs[s].record.converged;
        res.starts.push_back(runs[s].record);
    }
    // all_minima: the winner first, then other starts in index order.
    std::vector<std::size_t> order{best};
    for (std::size_t s = 0; s < total; ++s)
        if (s != best) order.push_back(s);
    for (std::size_t s : order) {
        const auto& run = runs[s];
        if (run.record.value > window) continue;
        bool duplicate = false;
        for (const auto& kept : res.all_minima) {
            if (loops_within(kept, *run.loop, 1e-9)) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) continue;
        res.all_minima.push_back(*run.loop);
        res.all_minima_energies.push_back(run.record.value);
    }
    return res;
}

/// Minimal Dirichlet energy over loops of winding k.
inline MinResult minimize_energy(const MetricSpec& g, IVec2 k, const MinOptions& opts,
                                 std::span<const DiscreteLoop> warm_starts = {}) {
    return minimize_action(LoopAction(g), k, opts, warm_starts);
}

/// Near-minimal loops pairwise farther apart than dedup_tol in loop_distance.
/// The winner is always kept first.
inline std::vector<DiscreteLoop> distinct_minima(const MinResult& result, double dedup_tol) {
    std::vector<DiscreteLoop> out;
    for (const auto& loop : result.all_minima) {
        bool keep = true;
        for (const auto& kept : out) {
            if (loops_within(kept, loop, dedup_tol)) {
                keep = false;
                break;
            }
        }
        if (keep) out.push_back(loop);
    }
    return out;
}

}  // namespace mather
