// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace mather;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

const std::vector<HomologyClass> kEight{{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}, {1, 2}, {2, -1}, {1, -2}};

// 1. flat closed form over the box |p|, |q| <= 5
Verdict flat_closed_form() {
    const auto t0 = Clock::now();
    BetaOptions o;
    o.min = fixture::quick(2, 0);
    o.sweep_max = 1;
    const auto classes = io::box_classes(5);
    double worst = 0.0;
    for (const Sym2 G : {Sym2::identity(), Sym2::diag(1, 4), Sym2{2, 1, 2}}) {
        const auto rs = beta_batch(MetricSpec::flat(G), classes, o);
        for (const auto& r : rs) {
            const double exact = 0.5 * G.quad(r.h.to_real());
            worst = std::max(worst, std::abs(r.beta - exact) / exact);
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-5 && secs < 60.0,
            "3 x " + std::to_string(classes.size()) + " classes, max rel err " + num(worst) + ", " + num(secs) + " s"};
}

// 2. beta = norm^2 / 2 and beta(2h) = 4 beta(h) by direct minimization at 2h
Verdict norm_relation_homogeneity() {
    SplitMix64 rng(2024);
    std::vector<MetricSpec> gs;
    for (int i = 0; i < 7; ++i) gs.push_back(random_metric(rng, i));
    gs.push_back(fixture::dip_metric());
    gs.push_back(fixture::kLiouville[1].metric());
    gs.push_back(fixture::bump_metric());
    const HomologyClass cls[] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}};
    BetaOptions o;
    o.min = fixture::quick(6, 1);
    o.sweep_max = 2;
    double rel_norm = 0.0, rel_hom = 0.0;
    for (std::size_t i = 0; i < gs.size(); ++i) {
        const HomologyClass h = cls[i % 5];
        const auto r = beta_rational(gs[i], h, o);
        rel_norm = std::max(rel_norm, std::abs(r.beta - 0.5 * r.stable_norm * r.stable_norm) / r.beta);
        const double beta2h = 0.5 * std::pow(2.0 * r.m_sweep[1].value, 2);
        rel_hom = std::max(rel_hom, std::abs(beta2h - 4.0 * r.beta) / (4.0 * r.beta));
    }
    return {rel_norm <= 1e-10 && rel_hom <= 1e-4,
            "10 fixtures, norm relation " + num(rel_norm) + ", homogeneity " + num(rel_hom)};
}

// 3. beta2 <= C beta1 on random pairs
Verdict main_inequality() {
    SplitMix64 rng(31337);
    CompareOptions o;
    o.beta.min = fixture::quick(4, 1);
    o.grid_n = 64;
    int violations = 0, inconclusive = 0, total = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 25; ++i) {
        const auto g1 = random_metric(rng, i);
        const auto g2 = random_metric(rng, i + 1 + (i / 4));
        const auto rep = rigidity_scan(g1, g2, kEight, o);
        for (const auto& e : rep.entries) {
            ++total;
            if (e.status == ComparisonEntry::Status::Inconclusive) ++inconclusive;
            if (e.gap < -1e-6 * e.C * e.beta1) ++violations;
            worst = std::min(worst, e.gap / (e.C * e.beta1));
        }
    }
    return {violations == 0 && inconclusive == 0,
            std::to_string(total) + " cases, " + std::to_string(violations) + " violations, " + std::to_string(inconclusive) +
                " inconclusive, min gap/(C beta1) " + num(worst)};
}

// 4. homothetic pairs give equality with homothety on the Mather samples
Verdict homothety() {
    SplitMix64 rng(4);
    const MetricSpec bases[] = {fixture::dip_metric(), fixture::kLiouville[2].metric(), random_metric(rng, 1)};
    CompareOptions o;
    o.beta.min = fixture::quick(6, 1);
    o.grid_n = 64;
    int fails = 0, total = 0;
    double res = 0.0, excess = -1.0;
    for (const auto& g1 : bases) {
        for (double c : {0.5, 2.0}) {
            const auto rep = rigidity_scan(g1, g1.scaled(c), {{1, 0}, {0, 1}, {1, 1}, {2, -1}}, o);
            for (const auto& e : rep.entries) {
                ++total;
                const bool ok = e.equality && e.status == ComparisonEntry::Status::Ok && e.homothety_residual &&
                                *e.homothety_residual <= 1e-6 && e.cross_min_excess && *e.cross_min_excess <= 1e-6;
                if (!ok) ++fails;
                if (e.homothety_residual) res = std::max(res, *e.homothety_residual);
                if (e.cross_min_excess) excess = std::max(excess, *e.cross_min_excess);
            }
        }
    }
    return {fails == 0, std::to_string(total) + " classes, max residual " + num(res) + ", max cross excess " + num(excess)};
}

// 5. dip is not flat, with the margin certified by the grid oracle
Verdict dip_not_flat() {
    const auto t0 = Clock::now();
    const double L_dp = oracle::grid_shortest_horizontal(fixture::dip, 256, 4);
    const double margin = 0.5 - 0.5 * L_dp * L_dp;
    CompareOptions o;
    const auto rep = flat_rigidity_check(fixture::dip_metric(), {{1, 0}, {0, 1}, {1, 1}}, o);
    const double gap = rep.comparison.entries[0].gap;
    const double secs = seconds_since(t0);
    const bool ok = rep.verdict == FlatRigidityReport::Verdict::NotFlat && margin >= 0.01 && gap >= 0.01 && gap >= margin - 1e-3 &&
                    secs < 120.0;
    return {ok, "verdict " + rep.verdict_name() + ", gap(1,0) " + num(gap) + ", oracle margin " + num(margin) + ", " +
                    num(secs) + " s"};
}

// 6. a bump does not change beta(1,0)
Verdict big_bump() {
    const auto r = beta_rational(fixture::bump_metric(), {1, 0});
    const auto big = beta_rational(
        MetricSpec::conformal(ScalarField::expression("1 + 20*bump(((x-0.5)^2 + (y-0.5)^2)/0.01)")), {1, 0});
    const double e1 = std::abs(r.beta - 0.5), e2 = std::abs(big.beta - 0.5);
    return {e1 <= 1e-6 && e2 <= 1e-6, "beta(1,0) = " + io::fmt(r.beta) + ", with 20x bump " + io::fmt(big.beta)};
}

// 7. Liouville axis classes against the 1-D oracle
Verdict liouville() {
    BetaOptions o;
    o.sweep_max = 1;
    double worst = 0.0;
    for (const auto& L : fixture::kLiouville) {
        const auto g = L.metric();
        const double h = oracle::liouville_norm_horizontal(L.f1_fn, L.f2_fn);
        const double v = oracle::liouville_norm_vertical(L.f1_fn, L.f2_fn);
        worst = std::max(worst, std::abs(stable_norm_rational(g, {1, 0}, o).stable_norm - h) / h);
        worst = std::max(worst, std::abs(stable_norm_rational(g, {0, 1}, o).stable_norm - v) / v);
    }
    return {worst <= 1e-4, "3 fixtures x 2 axis classes, max rel err " + num(worst)};
}

// 8. separable Mane potential
Verdict mane() {
    const auto V = normalize_potential(ScalarField::expression("-0.3*sin(pi*x)^2"));
    const auto rep = mane_rigidity_check(fixture::flat(), V, kEight);
    double b01 = 0.0, min_ratio = std::numeric_limits<double>::infinity();
    bool ineq = rep.check.all_pass();
    for (std::size_t i = 0; i < kEight.size(); ++i) {
        const auto& e = rep.check.entries[i];
        if (kEight[i] == HomologyClass{0, 1}) b01 = e.beta_LV;
        ineq = ineq && e.beta_LV <= e.beta_L;
        const double err = e.numerical_error + 1e-8 * rep.beta_flat[i];
        min_ratio = std::min(min_ratio, (rep.beta_flat[i] - e.beta_LV) / (3.0 * err));
    }
    const bool ok = std::abs(b01 - 0.2) <= 1e-4 && ineq && min_ratio > 1.0 &&
                    rep.verdict == ManeRigidityReport::Verdict::NonZero;
    return {ok, "beta(0,1) = " + io::fmt(b01) + ", min gap / (3 err) " + num(min_ratio) + ", verdict " + rep.verdict_name()};
}

// 9. gradients against central differences
Verdict gradients() {
    SplitMix64 rng(9);
    const IVec2 ks[] = {{1, 0}, {0, 1}, {1, 1}, {2, -1}, {1, 3}};
    double worst = 0.0;
    int fails = 0;
    for (int i = 0; i < 20; ++i) {
        const auto g = random_metric(rng, i);
        const auto V = random_potential(rng);
        const auto loop = init_loop(ks[i % 5], 16 + static_cast<std::size_t>(rng.uniform(0, 48)), rng.next(), rng.uniform(0.02, 0.2));
        const double T = rng.uniform(0.5, 2.0);
        for (const auto& gc : {gradient_check(LoopAction(g), loop), gradient_check(LoopAction(g, &V, T), loop)}) {
            worst = std::max(worst, gc.rel_error);
            if (!gc.pass) ++fails;
        }
    }
    return {fails == 0 && worst <= 1e-5, "20 fixtures x {energy, action}, max rel err " + num(worst)};
}

// 10. two CLI compare runs give identical JSON
Verdict determinism() {
    const fs::path root = fs::temp_directory_path() / ("mather_acceptance_" + std::to_string(::getpid()));
    std::string payload[2];
    for (int i = 0; i < 2; ++i) {
        const fs::path out = root / std::to_string(i);
        fs::remove_all(out);
        const std::string cmd = std::string("'") + MATHER_CLI_PATH + "' compare --config '" + MATHER_SAMPLES_DIR +
                                "/compare_homothetic.json' --out-dir '" + out.string() + "' > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            fs::remove_all(root);
            return {false, "compare run " + std::to_string(i) + " failed"};
        }
        std::ifstream in(out / "compare.json", std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        payload[i] = os.str();
    }
    fs::remove_all(root);
    const bool same = !payload[0].empty() && payload[0] == payload[1];
    return {same, same ? std::to_string(payload[0].size()) + " bytes identical" : "payloads differ"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"flat closed form", flat_closed_form},
        {"beta-norm relation and homogeneity", norm_relation_homogeneity},
        {"comparison inequality", main_inequality},
        {"equality implies homothety", homothety},
        {"conformal strictness (dip)", dip_not_flat},
        {"big-bump invariance", big_bump},
        {"Liouville axis classes", liouville},
        {"Mane separable potential", mane},
        {"gradient correctness", gradients},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failed;
        std::cout << (v.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": " << v.detail << " ("
                  << num(seconds_since(t0)) << " s)" << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
