// Command-line front end: beta, norm-ball, compare, flat-rigidity, mane, gradcheck.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mather/mather.hpp"

namespace fs = std::filesystem;
using mather::io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitViolation = 2;
constexpr int kExitInconclusive = 3;

// Set once the configuration is fully read; errors after this point are
// numerical failures, not configuration errors.
bool g_computing = false;

struct Flags {
    std::string config;
    std::string metric;
    std::string metric2;
    std::string classes;
    int box = 0;
    int starts = 0;
    long long nodes = 0;
    int levels = 0;
    double tol_rel = 0.0;
    unsigned long long seed = 0;
    std::string out_dir;
    int workers = 0;
    double grad_tol = 0.0;
    int max_iters = 0;
    int dirs = 0;
    int m_max = 0;
    int sweep = 0;
    int grid = 0;
    int fixtures = 0;
};

// Flag values override config-file values, which override defaults.
class Settings {
public:
    Settings(const Flags& f, const CLI::App& sub, json file) : flags_(f), sub_(sub), file_(std::move(file)) {}

    template <class T>
    T get(const std::string& flag, const std::string& key, const T& flag_value, const T& fallback) const {
        if (sub_.count("--" + flag) > 0) return flag_value;
        if (file_.contains(key)) {
            try {
                return file_.at(key).get<T>();
            } catch (const json::exception&) {
                throw mather::Error("config key \"" + key + "\" has the wrong type");
            }
        }
        return fallback;
    }

    bool given(const std::string& flag) const { return sub_.count("--" + flag) > 0; }
    bool has(const std::string& flag, const std::string& key) const { return given(flag) || file_.contains(key); }

    const json& file() const { return file_; }
    const Flags& flags() const { return flags_; }

private:
    const Flags& flags_;
    const CLI::App& sub_;
    json file_;
};

json load_metric_json(const Settings& s, const std::string& flag, const std::string& key, const std::string& flag_value) {
    if (s.given(flag)) return mather::io::load_json(flag_value);
    if (s.file().contains(key)) {
        const json& v = s.file().at(key);
        if (v.is_string()) {
            fs::path p(v.get<std::string>());
            if (p.is_relative()) p = fs::path(s.flags().config).parent_path() / p;
            return mather::io::load_json(p.string());
        }
        if (v.is_object()) return v;
        throw mather::Error("config key \"" + key + "\" must be a path or a metric object");
    }
    throw mather::Error("missing --" + flag);
}

std::vector<mather::HomologyClass> load_classes(const Settings& s) {
    const Flags& f = s.flags();
    std::vector<mather::HomologyClass> out;
    if (s.given("classes")) {
        out = mather::io::parse_classes(f.classes);
    } else if (s.given("box")) {
        out = mather::io::box_classes(f.box);
    } else if (s.file().contains("classes")) {
        const json& c = s.file().at("classes");
        if (c.is_string()) {
            out = mather::io::parse_classes(c.get<std::string>());
        } else if (c.is_array()) {
            for (const auto& pq : c) {
                if (!pq.is_array() || pq.size() != 2 || !pq[0].is_number_integer() || !pq[1].is_number_integer())
                    throw mather::Error("config classes are [p, q] integer pairs");
                out.emplace_back(pq[0].get<std::int64_t>(), pq[1].get<std::int64_t>());
            }
        } else {
            throw mather::Error("config key \"classes\" must be a string or a list of pairs");
        }
    } else if (s.file().contains("box")) {
        out = mather::io::box_classes(s.get<int>("box", "box", 0, 0));
    }
    if (out.empty()) throw mather::Error("class list is empty");
    for (const auto& h : out)
        if (h.is_zero()) throw mather::Error("class list contains the null class");
    return out;
}

std::string default_out_dir() {
    if (const char* env = std::getenv("MATHER_OUT_DIR"); env && *env) return env;
    return "mather-out";
}

std::string timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw mather::Error("cannot write " + p.string());
    out << content;
}

struct Outcome {
    json result;
    int code = kExitOk;
    std::string summary;
};

json class_list_json(const std::vector<mather::HomologyClass>& cs) {
    json out = json::array();
    for (const auto& h : cs) out.push_back(mather::io::to_json(h));
    return out;
}

int run(const std::string& command, const Flags& f, const CLI::App& sub) {
    json file = json::object();
    if (!f.config.empty()) file = mather::io::load_json(f.config);
    if (!file.is_object()) throw mather::Error("config file must hold a JSON object");
    const Settings s(f, sub, file);

    mather::MinOptions mo;
    mo.starts = s.get("starts", "starts", f.starts, mo.starts);
    mo.n0 = static_cast<std::size_t>(s.get<long long>("nodes", "nodes", f.nodes, 0));
    mo.levels = s.get("levels", "levels", f.levels, mo.levels);
    mo.seed = s.get<unsigned long long>("seed", "seed", f.seed, 1);
    mo.grad_tol = s.get("grad-tol", "grad_tol", f.grad_tol, mo.grad_tol);
    mo.max_iters = s.get("max-iters", "max_iters", f.max_iters, mo.max_iters);
    mo.workers = s.get("workers", "workers", f.workers, mather::default_workers());
    if (mo.workers < 1) throw mather::Error("workers must be positive");
    mo.validate();
    const double tol_rel = s.get("tol-rel", "tol_rel", f.tol_rel, 1e-3);
    const int grid_n = s.get("grid", "grid_n", f.grid, 256);
    const std::string out_dir = s.get("out-dir", "out_dir", f.out_dir, default_out_dir());

    // Canonical configuration: everything that can change a result.
    json canon = {{"command", command},
                  {"starts", mo.starts},
                  {"nodes", mo.n0},
                  {"levels", mo.levels},
                  {"seed", mo.seed},
                  {"grad_tol", mo.grad_tol},
                  {"max_iters", mo.max_iters}};

    Outcome out;
    std::ostringstream csv;
    mather::io::CsvHeader header{"mather", mather::kVersion, "", mo.seed};
    auto finish_header = [&] {
        header.config_hash = mather::io::fnv1a_hex(canon.dump());
        g_computing = true;
    };

    if (command == "beta") {
        const json mj = load_metric_json(s, "metric", "metric", f.metric);
        const auto g = mather::io::metric_from_json(mj);
        const auto classes = load_classes(s);
        mather::BetaOptions bo;
        bo.min = mo;
        bo.sweep_max = s.get("sweep", "sweep_max", f.sweep, 3);
        bo.validate();
        canon["metric"] = mj;
        canon["classes"] = class_list_json(classes);
        canon["sweep_max"] = bo.sweep_max;
        finish_header();
        const auto rs = mather::beta_batch(g, classes, bo);
        out.result = json::array();
        bool all_conv = true;
        for (const auto& r : rs) {
            out.result.push_back(mather::io::to_json(r));
            all_conv = all_conv && r.converged;
        }
        mather::io::write_beta_csv(csv, header, rs);
        out.code = all_conv ? kExitOk : kExitInconclusive;
        out.summary = std::to_string(rs.size()) + " classes" + (all_conv ? "" : ", some not converged");
    } else if (command == "norm-ball") {
        const json mj = load_metric_json(s, "metric", "metric", f.metric);
        const auto g = mather::io::metric_from_json(mj);
        mather::BetaOptions bo;
        bo.min = mo;
        const int dirs = s.get("dirs", "dirs", f.dirs, 64);
        canon["metric"] = mj;
        canon["dirs"] = dirs;
        finish_header();
        const auto ball = mather::norm_ball(g, dirs, bo);
        out.result = mather::io::to_json(ball);
        mather::io::write_ball_csv(csv, header, ball);
        bool all_conv = true;
        for (const auto& p : ball.points) all_conv = all_conv && p.converged;
        out.code = !ball.convex ? kExitViolation : (all_conv ? kExitOk : kExitInconclusive);
        out.summary = std::string("convex=") + (ball.convex ? "true" : "false");
    } else if (command == "compare") {
        const json m1 = load_metric_json(s, "metric", "metric", f.metric);
        const json m2 = load_metric_json(s, "metric2", "metric2", f.metric2);
        const auto g1 = mather::io::metric_from_json(m1);
        const auto g2 = mather::io::metric_from_json(m2);
        const auto classes = load_classes(s);
        mather::CompareOptions co;
        co.beta.min = mo;
        co.tol_rel = tol_rel;
        co.grid_n = grid_n;
        canon["metric"] = m1;
        canon["metric2"] = m2;
        canon["classes"] = class_list_json(classes);
        canon["tol_rel"] = tol_rel;
        canon["grid_n"] = grid_n;
        finish_header();
        const auto rep = mather::rigidity_scan(g1, g2, classes, co);
        out.result = mather::io::to_json(rep);
        mather::io::write_compare_csv(csv, header, rep);
        out.code = rep.exit_code();
        out.summary = "C=" + mather::io::fmt(rep.C) + " equality classes: " + std::to_string(rep.equality_classes().size()) +
                      "/" + std::to_string(rep.entries.size());
    } else if (command == "flat-rigidity") {
        const json mj = load_metric_json(s, "metric", "metric", f.metric);
        const auto g = mather::io::metric_from_json(mj);
        if (g.kind() != mather::MetricSpec::Kind::Conformal && g.kind() != mather::MetricSpec::Kind::Flat)
            throw mather::Error("flat-rigidity needs a conformal metric");
        const auto classes = load_classes(s);
        mather::CompareOptions co;
        co.beta.min = mo;
        co.tol_rel = tol_rel;
        co.grid_n = grid_n;
        canon["metric"] = mj;
        canon["classes"] = class_list_json(classes);
        canon["tol_rel"] = tol_rel;
        canon["grid_n"] = grid_n;
        finish_header();
        const auto rep = mather::flat_rigidity_check(g, classes, co);
        out.result = mather::io::to_json(rep);
        mather::io::write_compare_csv(csv, header, rep.comparison);
        out.code = rep.exit_code();
        out.summary = "verdict: " + rep.verdict_name();
    } else if (command == "mane") {
        const json mj = load_metric_json(s, "metric", "metric", f.metric);
        mather::TonelliSpec L = mather::io::tonelli_from_json(mj);
        const auto classes = load_classes(s);
        mather::ManeOptions mopt;
        mopt.min = mo;
        mopt.m_max = s.get("m-max", "m_max", f.m_max, 3);
        mopt.validate();
        canon["metric"] = mj;
        canon["classes"] = class_list_json(classes);
        canon["m_max"] = mopt.m_max;
        finish_header();
        const double shift = mather::potential_max(L.potential);
        L = mather::normalized(L);
        if (L.kinetic.kind() == mather::MetricSpec::Kind::Flat) {
            const auto rep = mather::mane_rigidity_check(L.kinetic, L.potential, classes, mopt);
            out.result = mather::io::to_json(rep);
            mather::io::write_mane_csv(csv, header, rep.check);
            out.code = rep.exit_code();
            if (out.code == kExitOk && !rep.check.all_converged()) out.code = kExitInconclusive;
            out.summary = "verdict: " + rep.verdict_name();
        } else {
            const auto rep = mather::mane_inequality_check(L.kinetic, L.potential, classes, mopt);
            out.result = {{"check", mather::io::to_json(rep)}};
            mather::io::write_mane_csv(csv, header, rep);
            out.code = !rep.all_pass() ? kExitViolation : (rep.all_converged() ? kExitOk : kExitInconclusive);
            out.summary = std::string("inequality ") + (rep.all_pass() ? "holds" : "violated");
        }
        out.result["potential_shift"] = -shift;
    } else if (command == "gradcheck") {
        const int count = s.get("fixtures", "fixtures", f.fixtures, 20);
        if (count < 1) throw mather::Error("fixtures must be positive");
        std::optional<json> mj;
        if (s.has("metric", "metric")) mj = load_metric_json(s, "metric", "metric", f.metric);
        canon["fixtures"] = count;
        if (mj) canon["metric"] = *mj;
        finish_header();
        mather::SplitMix64 rng(mo.seed);
        std::optional<mather::TonelliSpec> given;
        if (mj) given = mather::io::tonelli_from_json(*mj);
        const std::vector<mather::IVec2> ks{{1, 0}, {0, 1}, {1, 1}, {2, -1}, {1, 3}};
        out.result = json::array();
        mather::io::write_header(csv, header);
        csv << "fixture,kind,p,q,nodes,rel_error,pass\n";
        bool all = true;
        for (int i = 0; i < count; ++i) {
            const mather::MetricSpec g = given ? given->kinetic : mather::random_metric(rng, i);
            const mather::ScalarField V = given ? given->potential : mather::random_potential(rng);
            const mather::IVec2 k = ks[static_cast<std::size_t>(i) % ks.size()];
            const std::size_t n = 16 + static_cast<std::size_t>(rng.uniform(0.0, 48.0));
            const auto loop = mather::init_loop(k, n, rng.next(), rng.uniform(0.02, 0.2));
            const double T = rng.uniform(0.5, 2.0);
            for (int kind = 0; kind < 2; ++kind) {
                const mather::LoopAction action = kind == 0 ? mather::LoopAction(g) : mather::LoopAction(g, &V, T);
                const auto gc = mather::gradient_check(action, loop);
                all = all && gc.pass;
                const char* kname = kind == 0 ? "energy" : "action";
                out.result.push_back({{"fixture", i},
                                      {"kind", kname},
                                      {"metric", g.kind_name()},
                                      {"k", mather::io::to_json(k)},
                                      {"nodes", n},
                                      {"period", kind == 0 ? 1.0 : T},
                                      {"max_abs_error", gc.max_abs_error},
                                      {"scale", gc.scale},
                                      {"rel_error", gc.rel_error},
                                      {"pass", gc.pass}});
                csv << i << ',' << kname << ',' << k.p << ',' << k.q << ',' << n << ',' << mather::io::fmt(gc.rel_error)
                    << ',' << (gc.pass ? 1 : 0) << '\n';
            }
        }
        out.code = all ? kExitOk : kExitViolation;
        out.summary = all ? "all gradients match" : "gradient mismatch";
    } else {
        throw mather::Error("unknown command " + command);
    }

    const std::string stem = command;
    json doc = {{"tool", "mather"},
                {"version", mather::kVersion},
                {"command", command},
                {"config_hash", header.config_hash},
                {"seed", mo.seed},
                {"config", canon},
                {"exit_code", out.code},
                {"result", out.result}};
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_file(dir / (stem + ".json"), doc.dump(2) + "\n");
    write_file(dir / (stem + ".csv"), csv.str());
    const json manifest = {{"tool", "mather"},
                           {"version", mather::kVersion},
                           {"command", command},
                           {"config_hash", header.config_hash},
                           {"seed", mo.seed},
                           {"workers", mo.workers},
                           {"created", timestamp()},
                           {"files", {stem + ".json", stem + ".csv"}}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << command << ": " << out.summary << " (exit " << out.code << ", output in " << out_dir << ")\n";
    return out.code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stable norms, Mather beta-functions and rigidity checks on the 2-torus"};
    app.require_subcommand(1);
    Flags f;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"beta", "stable norm and beta at rational classes"},
        {"norm-ball", "unit ball of the stable norm"},
        {"compare", "compare beta of two metrics against the distortion constant"},
        {"flat-rigidity", "decide flatness of a conformal metric"},
        {"mane", "beta of a Lagrangian with potential against the potential-free one"},
        {"gradcheck", "analytic against finite-difference gradients"}};
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", f.config, "JSON config file; flags override its keys");
        sub->add_option("--metric", f.metric, "metric spec (JSON file)");
        if (name == "compare") sub->add_option("--metric2", f.metric2, "second metric spec (JSON file)");
        sub->add_option("--classes", f.classes, "classes \"p,q;p,q\", optional \":a/b\" scale");
        sub->add_option("--box", f.box, "all classes with |p|, |q| <= B, one per sign pair");
        sub->add_option("--starts", f.starts, "multistart count");
        sub->add_option("--nodes", f.nodes, "initial node count (default 64 * max(|p|, |q|))");
        sub->add_option("--levels", f.levels, "mesh doublings");
        sub->add_option("--tol-rel", f.tol_rel, "relative equality tolerance");
        sub->add_option("--seed", f.seed, "base seed");
        sub->add_option("--out-dir", f.out_dir, "output directory (default $MATHER_OUT_DIR or ./mather-out)");
        sub->add_option("--workers", f.workers, "worker threads (default: processors)");
        sub->add_option("--grad-tol", f.grad_tol, "gradient sup-norm tolerance");
        sub->add_option("--max-iters", f.max_iters, "iterations per mesh level");
        sub->add_option("--grid", f.grid, "distortion scan resolution");
        if (name == "norm-ball") sub->add_option("--dirs", f.dirs, "number of directions");
        if (name == "mane") sub->add_option("--m-max", f.m_max, "largest cover multiplicity");
        if (name == "beta") sub->add_option("--sweep", f.sweep, "largest multiple in the homogeneity sweep");
        if (name == "gradcheck") sub->add_option("--fixtures", f.fixtures, "number of fixtures");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    const CLI::App* sub = app.get_subcommands().front();
    try {
        return run(sub->get_name(), f, *sub);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return g_computing ? kExitInconclusive : kExitConfig;
    }
}
