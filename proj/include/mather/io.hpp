#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "beta.hpp"
#include "mane.hpp"
#include "rigidity.hpp"

namespace mather::io {

using json = nlohmann::json;

// ---------------------------------------------------------------- input

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("invalid JSON in " + path + ": " + e.what());
    }
}

namespace detail {

inline double number(const json& j, const std::string& what) {
    if (!j.is_number()) throw Error(what + " must be a number");
    return j.get<double>();
}

inline std::vector<double> number_list(const json& j, const std::string& what) {
    if (!j.is_array()) throw Error(what + " must be an array");
    std::vector<double> out;
    for (const auto& row : j) {
        if (row.is_array()) {
            for (const auto& v : row) out.push_back(number(v, what));
        } else {
            out.push_back(number(row, what));
        }
    }
    return out;
}

}  // namespace detail

/// A scalar field: a number (constant), a string (expression in x, y), or a
/// grid object {"nx", "ny", "values"} with values row-major, j * nx + i at
/// (i / nx, j / ny). Nested rows are accepted.
inline ScalarField field_from_json(const json& j, const std::string& what) {
    if (j.is_number()) return ScalarField::constant(j.get<double>());
    if (j.is_string()) return ScalarField::expression(j.get<std::string>());
    if (j.is_object() && j.contains("values")) {
        if (!j.contains("nx") || !j.contains("ny")) throw Error(what + ": grid needs nx and ny");
        const auto nx = j.at("nx").get<long long>();
        const auto ny = j.at("ny").get<long long>();
        if (nx < 1 || ny < 1) throw Error(what + ": grid dimensions must be positive");
        return ScalarField::grid(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny),
                                 detail::number_list(j.at("values"), what));
    }
    throw Error(what + " must be a number, an expression string or a grid object");
}

/// Liouville profile: an expression or number, or {"values": [...]} sampled
/// uniformly along the axis.
inline ScalarField profile_from_json(const json& j, ScalarField::Axis axis, const std::string& what) {
    if (j.is_object() && j.contains("values") && !j.contains("nx"))
        return ScalarField::grid1d(axis, detail::number_list(j.at("values"), what));
    return field_from_json(j, what);
}

inline Sym2 matrix_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_array() || !j[1].is_array() || j[0].size() != 2 || j[1].size() != 2)
        throw Error("matrix must be [[a, b], [b, c]]");
    const double a = detail::number(j[0][0], "matrix entry"), b = detail::number(j[0][1], "matrix entry");
    const double b2 = detail::number(j[1][0], "matrix entry"), c = detail::number(j[1][1], "matrix entry");
    if (std::abs(b - b2) > 1e-12 * std::max({1.0, std::abs(b), std::abs(b2)})) throw Error("matrix must be symmetric");
    return {a, b, c};
}

inline MetricSpec metric_from_json(const json& j) {
    if (!j.is_object()) throw Error("metric spec must be a JSON object");
    if (!j.contains("type") || !j.at("type").is_string()) throw Error("metric spec needs a \"type\"");
    const std::string type = j.at("type").get<std::string>();
    const Sym2 base = j.contains("matrix") ? matrix_from_json(j.at("matrix")) : Sym2::identity();
    if (type == "flat") {
        if (!j.contains("matrix")) throw Error("flat metric needs \"matrix\"");
        return MetricSpec::flat(base);
    }
    if (type == "conformal") {
        if (!j.contains("factor")) throw Error("conformal metric needs \"factor\"");
        return MetricSpec::conformal(base, field_from_json(j.at("factor"), "factor"));
    }
    if (type == "liouville") {
        if (!j.contains("f1") || !j.contains("f2")) throw Error("Liouville metric needs \"f1\" and \"f2\"");
        return MetricSpec::liouville(profile_from_json(j.at("f1"), ScalarField::Axis::X, "f1"),
                                     profile_from_json(j.at("f2"), ScalarField::Axis::Y, "f2"));
    }
    if (type == "general") {
        if (j.contains("entries")) {
            const json& e = j.at("entries");
            if (!e.is_array() || e.size() != 3) throw Error("\"entries\" must list g11, g12, g22");
            return MetricSpec::general(field_from_json(e[0], "g11"), field_from_json(e[1], "g12"),
                                       field_from_json(e[2], "g22"));
        }
        if (j.contains("spd_grid")) {
            const json& g = j.at("spd_grid");
            if (!g.contains("nx") || !g.contains("ny") || !g.contains("values"))
                throw Error("spd_grid needs nx, ny and values");
            const auto nx = g.at("nx").get<long long>();
            const auto ny = g.at("ny").get<long long>();
            if (nx < 1 || ny < 1) throw Error("spd_grid dimensions must be positive");
            const json& vals = g.at("values");
            if (!vals.is_array() || vals.size() != static_cast<std::size_t>(nx * ny))
                throw Error("spd_grid needs nx * ny entries");
            std::vector<double> a, b, c;
            for (const auto& v : vals) {
                if (!v.is_array() || v.size() != 3) throw Error("spd_grid entries are [g11, g12, g22]");
                a.push_back(detail::number(v[0], "g11"));
                b.push_back(detail::number(v[1], "g12"));
                c.push_back(detail::number(v[2], "g22"));
            }
            const auto sx = static_cast<std::size_t>(nx), sy = static_cast<std::size_t>(ny);
            return MetricSpec::general(ScalarField::grid(sx, sy, std::move(a)), ScalarField::grid(sx, sy, std::move(b)),
                                       ScalarField::grid(sx, sy, std::move(c)));
        }
        throw Error("general metric needs \"entries\" or \"spd_grid\"");
    }
    throw Error("unknown metric type \"" + type + "\"");
}

/// Metric spec plus an optional "potential" field.
inline TonelliSpec tonelli_from_json(const json& j) {
    TonelliSpec L{metric_from_json(j)};
    if (j.contains("potential")) L.potential = field_from_json(j.at("potential"), "potential");
    return L;
}

/// "p,q;p,q" with an optional ":a/b" scale per class, e.g. "1,0;2,1:1/2".
inline std::vector<HomologyClass> parse_classes(const std::string& text) {
    std::vector<HomologyClass> out;
    std::stringstream all(text);
    std::string item;
    while (std::getline(all, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        Rational scale{1, 1};
        const auto colon = item.find(':');
        std::string pair = item.substr(0, colon);
        if (colon != std::string::npos) {
            const std::string s = item.substr(colon + 1);
            const auto slash = s.find('/');
            try {
                scale = slash == std::string::npos ? Rational::make(std::stoll(s), 1)
                                                   : Rational::make(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
            } catch (const std::logic_error&) {
                throw Error("bad class scale \"" + s + "\"");
            }
        }
        long long p = 0, q = 0;
        char comma = 0, extra = 0;
        std::stringstream ps(pair);
        if (!(ps >> p >> comma >> q) || comma != ',' || (ps >> extra)) throw Error("bad class \"" + item + "\"");
        out.emplace_back(IVec2{p, q}, scale);
    }
    return out;
}

/// One class per +/- pair with |p|, |q| <= B: p > 0, or p = 0 and q > 0.
inline std::vector<HomologyClass> box_classes(int B) {
    if (B < 1) throw Error("box size must be at least 1");
    std::vector<HomologyClass> out;
    for (int p = 0; p <= B; ++p)
        for (int q = -B; q <= B; ++q)
            if (p > 0 || q > 0) out.emplace_back(p, q);
    return out;
}

// ---------------------------------------------------------------- output

inline json to_json(Vec2 v) { return json::array({v.x, v.y}); }
inline json to_json(IVec2 k) { return json::array({k.p, k.q}); }

inline json to_json(const HomologyClass& h) {
    return {{"p", h.k.p}, {"q", h.k.q}, {"scale", h.scale.str()}};
}

inline json to_json(const DiscreteLoop& loop) {
    json nodes = json::array();
    for (const auto& u : loop.nodes()) nodes.push_back(to_json(u));
    return {{"k", to_json(loop.winding())}, {"nodes", std::move(nodes)}};
}

inline DiscreteLoop loop_from_json(const json& j) {
    if (!j.is_object() || !j.contains("k") || !j.contains("nodes")) throw Error("loop needs \"k\" and \"nodes\"");
    const json& k = j.at("k");
    if (!k.is_array() || k.size() != 2) throw Error("loop winding must be [p, q]");
    std::vector<Vec2> nodes;
    for (const auto& u : j.at("nodes")) {
        if (!u.is_array() || u.size() != 2) throw Error("loop nodes are [x, y] pairs");
        nodes.push_back({detail::number(u[0], "node"), detail::number(u[1], "node")});
    }
    return {IVec2{k[0].get<std::int64_t>(), k[1].get<std::int64_t>()}, std::move(nodes)};
}

inline json to_json(const MinResult& r, bool with_all_minima = true) {
    json starts = json::array();
    for (const auto& s : r.starts)
        starts.push_back({{"index", s.index},
                          {"seed", s.seed},
                          {"warm", s.warm},
                          {"value", s.value},
                          {"converged", s.converged},
                          {"iterations", s.iterations},
                          {"grad_sup", s.grad_sup},
                          {"level_values", s.level_values}});
    json j = {{"energy", r.energy},
              {"length", r.length},
              {"converged", r.converged},
              {"any_converged", r.any_converged},
              {"iterations", r.iterations},
              {"grad_sup", r.grad_sup},
              {"level_energies", r.level_energies},
              {"best_start", r.best_start},
              {"rel_tol", r.rel_tol},
              {"all_minima_energies", r.all_minima_energies},
              {"starts", std::move(starts)},
              {"loop", to_json(r.loop)}};
    if (with_all_minima) {
        json all = json::array();
        for (const auto& l : r.all_minima) all.push_back(to_json(l));
        j["all_minima"] = std::move(all);
    }
    return j;
}

inline json to_json(const BetaResult& r) {
    json sweep = json::array();
    for (const auto& s : r.m_sweep)
        sweep.push_back({{"m", s.m}, {"k", to_json(s.k)}, {"value", s.value}, {"energy", s.energy}, {"converged", s.converged}});
    json j = {{"h", to_json(r.h)},
              {"stable_norm", r.stable_norm},
              {"beta", r.beta},
              {"method", r.method_name()},
              {"converged", r.converged},
              {"numerical_error", r.numerical_error},
              {"m_sweep", std::move(sweep)}};
    j["certificate"] = r.certificate ? to_json(*r.certificate) : json(nullptr);
    return j;
}

inline json to_json(const MatherPoint& p) { return {{"x", to_json(p.x)}, {"v", to_json(p.v)}, {"w", p.w}}; }

inline json to_json(const ComparisonEntry& e) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j = {{"h", to_json(e.h)},
              {"beta1", e.beta1},
              {"beta2", e.beta2},
              {"C", e.C},
              {"gap", e.gap},
              {"tol_abs", e.tol_abs},
              {"equality", e.equality},
              {"homothety_residual", opt(e.homothety_residual)},
              {"cross_min_excess", opt(e.cross_min_excess)},
              {"numerical_error", e.numerical_error},
              {"status", e.status_name()},
              {"note", e.note}};
    j["result1"] = e.result1 ? to_json(*e.result1) : json(nullptr);
    j["result2"] = e.result2 ? to_json(*e.result2) : json(nullptr);
    return j;
}

inline json to_json(const ComparisonReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries) entries.push_back(to_json(e));
    json eq = json::array();
    for (const auto& h : r.equality_classes()) eq.push_back(to_json(h));
    json region = json::array();
    for (const auto& p : r.homothety_region) region.push_back(to_json(p));
    return {{"C", r.C},
            {"C_argmax", to_json(r.C_argmax)},
            {"tol_rel", r.tol_rel},
            {"inequality_holds", r.inequality_holds()},
            {"any_inconclusive", r.any_inconclusive()},
            {"equality_classes", std::move(eq)},
            {"entries", std::move(entries)},
            {"homothety_region", std::move(region)}};
}

inline json to_json(const FlatRigidityReport& r) {
    return {{"verdict", r.verdict_name()},
            {"factor_max", r.factor_max},
            {"normalized_min", r.normalized_min},
            {"normalized_max", r.normalized_max},
            {"C_check", r.C_check},
            {"normalization_ok", r.normalization_ok},
            {"note", r.note},
            {"comparison", to_json(r.comparison)}};
}

inline json to_json(const NormBall& b) {
    json pts = json::array();
    for (const auto& p : b.points)
        pts.push_back({{"theta", p.theta},
                       {"k", to_json(p.k)},
                       {"direction_angle", p.direction_angle},
                       {"radius", p.radius},
                       {"converged", p.converged}});
    return {{"points", std::move(pts)}, {"convex", b.convex}, {"min_turn", b.min_turn}};
}

inline json to_json(const NormAxiomReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"kind", e.kind}, {"label", e.label}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"violation", e.violation}, {"pass", e.pass}});
    return {{"all_pass", r.all_pass}, {"entries", std::move(entries)}};
}

inline json to_json(const ManeResult& r) {
    json per_m = json::array();
    for (const auto& c : r.per_m)
        per_m.push_back({{"m", c.m},
                         {"k", to_json(c.k)},
                         {"period", c.period},
                         {"value", c.value},
                         {"converged", c.converged},
                         {"numerical_error", c.numerical_error}});
    json j = {{"h", to_json(r.h)},
              {"beta", r.beta},
              {"best_m", r.best_m},
              {"converged", r.converged},
              {"numerical_error", r.numerical_error},
              {"per_m", std::move(per_m)}};
    j["certificate"] = r.certificate ? to_json(*r.certificate, false) : json(nullptr);
    return j;
}

inline json to_json(const ManeReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries) {
        json j = {{"h", to_json(e.h)},
                  {"beta_L", e.beta_L},
                  {"beta_LV", e.beta_LV},
                  {"gap", e.gap},
                  {"numerical_error", e.numerical_error},
                  {"pass", e.pass},
                  {"converged", e.converged}};
        j["result_LV"] = e.result_LV ? to_json(*e.result_LV) : json(nullptr);
        entries.push_back(std::move(j));
    }
    return {{"potential_max", r.potential_max},
            {"potential_abs_max", r.potential_abs_max},
            {"all_pass", r.all_pass()},
            {"entries", std::move(entries)}};
}

inline json to_json(const ManeRigidityReport& r) {
    return {{"verdict", r.verdict_name()}, {"beta_flat", r.beta_flat}, {"note", r.note}, {"check", to_json(r.check)}};
}

// ---------------------------------------------------------------- CSV

/// Shortest decimal form that reads back to the same double.
inline std::string fmt(double v) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

struct CsvHeader {
    std::string tool;
    std::string version;
    std::string config_hash;
    std::uint64_t seed = 0;
};

inline void write_header(std::ostream& os, const CsvHeader& h) {
    os << "# tool=" << h.tool << " version=" << h.version << " config_hash=" << h.config_hash << " seed=" << h.seed << '\n';
}

inline void write_beta_csv(std::ostream& os, const CsvHeader& h, const std::vector<BetaResult>& rs) {
    write_header(os, h);
    os << "p,q,scale,stable_norm,beta,converged\n";
    for (const auto& r : rs)
        os << r.h.k.p << ',' << r.h.k.q << ',' << r.h.scale.str() << ',' << fmt(r.stable_norm) << ',' << fmt(r.beta) << ','
           << (r.converged ? 1 : 0) << '\n';
}

inline void write_compare_csv(std::ostream& os, const CsvHeader& h, const ComparisonReport& rep) {
    write_header(os, h);
    os << "p,q,beta1,beta2,C,gap,equality,residual\n";
    for (const auto& e : rep.entries)
        os << e.h.k.p << ',' << e.h.k.q << ',' << fmt(e.beta1) << ',' << fmt(e.beta2) << ',' << fmt(e.C) << ',' << fmt(e.gap)
           << ',' << (e.equality ? 1 : 0) << ',' << (e.homothety_residual ? fmt(*e.homothety_residual) : "") << '\n';
}

inline void write_ball_csv(std::ostream& os, const CsvHeader& h, const NormBall& b) {
    write_header(os, h);
    os << "theta,p,q,angle,radius,x,y\n";
    for (const auto& p : b.points)
        os << fmt(p.theta) << ',' << p.k.p << ',' << p.k.q << ',' << fmt(p.direction_angle) << ',' << fmt(p.radius) << ','
           << fmt(p.radius * std::cos(p.direction_angle)) << ',' << fmt(p.radius * std::sin(p.direction_angle)) << '\n';
}

inline void write_mane_csv(std::ostream& os, const CsvHeader& h, const ManeReport& rep) {
    write_header(os, h);
    os << "p,q,scale,beta_L,beta_LV,gap,best_m,pass\n";
    for (const auto& e : rep.entries)
        os << e.h.k.p << ',' << e.h.k.q << ',' << e.h.scale.str() << ',' << fmt(e.beta_L) << ',' << fmt(e.beta_LV) << ','
           << fmt(e.gap) << ',' << (e.result_LV ? e.result_LV->best_m : 0) << ',' << (e.pass ? 1 : 0) << '\n';
}

/// FNV-1a, 64 bit, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace mather::io
