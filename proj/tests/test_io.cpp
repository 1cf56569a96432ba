#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace mather;
using io::json;

TEST(Classes, Parse) {
    const auto cls = io::parse_classes("1,0; 0,1;2,-1:1/2 ; -3,4:3");
    ASSERT_EQ(cls.size(), 4u);
    EXPECT_EQ(cls[0], (HomologyClass{1, 0}));
    EXPECT_EQ(cls[1], (HomologyClass{0, 1}));
    EXPECT_EQ(cls[2], (HomologyClass{{2, -1}, Rational{1, 2}}));
    EXPECT_EQ(cls[3], (HomologyClass{{-3, 4}, Rational{3, 1}}));
    EXPECT_EQ(io::parse_classes("2,2:2/4")[0].scale, (Rational{1, 2}));
    EXPECT_TRUE(io::parse_classes("").empty());
    for (const char* bad : {"1", "1;2", "1,0,3", "a,b", "1,0:x", "1,0:1/0", "1,0:-1", "1,0:0"})
        EXPECT_THROW(io::parse_classes(bad), Error) << bad;
}

TEST(Classes, Box) {
    EXPECT_EQ(io::box_classes(1).size(), 4u);
    EXPECT_EQ(io::box_classes(3).size(), 24u);
    const auto box = io::box_classes(5);
    EXPECT_EQ(box.size(), 60u);
    for (const auto& h : box) {
        EXPECT_FALSE(h.is_zero());
        EXPECT_TRUE(h.k.p > 0 || (h.k.p == 0 && h.k.q > 0));
        EXPECT_LE(h.k.max_abs(), 5);
    }
    EXPECT_THROW(io::box_classes(0), Error);
}

TEST(MetricJson, Variants) {
    const auto flat = io::metric_from_json(json::parse(R"J({"type":"flat","matrix":[[2,1],[1,2]]})J"));
    EXPECT_EQ(flat.kind(), MetricSpec::Kind::Flat);
    EXPECT_DOUBLE_EQ(flat.at({0.3, 0.3}).b, 1.0);

    const auto conf = io::metric_from_json(json::parse(R"J({"type":"conformal","factor":"1 + 0.2*cos(2*pi*x)"})J"));
    EXPECT_NEAR(conf.at({0.0, 0.7}).a, 1.2, 1e-15);
    const auto conf_base =
        io::metric_from_json(json::parse(R"J({"type":"conformal","matrix":[[1,0],[0,4]],"factor":0.5})J"));
    EXPECT_DOUBLE_EQ(conf_base.at({0.1, 0.1}).c, 2.0);

    const auto liou = io::metric_from_json(
        json::parse(R"J({"type":"liouville","f1":"1 + 0.3*cos(2*pi*x)","f2":{"values":[1, 1.5, 2, 1.5]}})J"));
    EXPECT_NEAR(liou.at({0.0, 0.25}).a, 1.3 + 1.5, 1e-14);
    EXPECT_NEAR(liou.at({0.5, 0.125}).c, 0.7 + 1.25, 1e-14);

    const auto gen = io::metric_from_json(json::parse(R"J({"type":"general","entries":[2, "0.1*sin(2*pi*y)", 3]})J"));
    EXPECT_NEAR(gen.at({0.0, 0.25}).b, 0.1, 1e-15);

    const auto grid = io::metric_from_json(json::parse(
        R"J({"type":"general","spd_grid":{"nx":2,"ny":2,"values":[[1,0,1],[3,0.5,2],[1,0,1],[3,0.5,2]]}})J"));
    EXPECT_DOUBLE_EQ(grid.at({0.5, 0.0}).a, 3.0);
    EXPECT_DOUBLE_EQ(grid.at({0.5, 0.7}).b, 0.5);
    EXPECT_DOUBLE_EQ(grid.at({0.25, 0.0}).c, 1.5);

    const auto nested = io::metric_from_json(
        json::parse(R"J({"type":"conformal","factor":{"nx":2,"ny":2,"values":[[1,2],[3,4]]}})J"));
    EXPECT_DOUBLE_EQ(nested.at({0.0, 0.5}).a, 3.0);
}

TEST(MetricJson, Errors) {
    const char* bad[] = {
        R"J([1,2])J",
        R"J({"matrix":[[1,0],[0,1]]})J",
        R"J({"type":"flat"})J",
        R"J({"type":"flat","matrix":[[1,0],[1,1]]})J",
        R"J({"type":"flat","matrix":[[1,2],[2,1]]})J",
        R"J({"type":"flat","matrix":[1,0,0,1]})J",
        R"J({"type":"conformal"})J",
        R"J({"type":"conformal","factor":"sin(2*pi*x)"})J",
        R"J({"type":"conformal","factor":"x"})J",
        R"J({"type":"conformal","factor":"1 + zz"})J",
        R"J({"type":"conformal","factor":true})J",
        R"J({"type":"conformal","factor":{"nx":2,"ny":2,"values":[1,2,3]}})J",
        R"J({"type":"liouville","f1":"1"})J",
        R"J({"type":"liouville","f1":"1 + 0.1*cos(2*pi*y)","f2":"1"})J",
        R"J({"type":"general"})J",
        R"J({"type":"general","entries":[1,0]})J",
        R"J({"type":"general","spd_grid":{"nx":2,"ny":1,"values":[[1,0,1]]}})J",
        R"J({"type":"hyperbolic"})J",
    };
    for (const char* text : bad) EXPECT_THROW(io::metric_from_json(json::parse(text)), Error) << text;
    EXPECT_THROW(io::load_json("/nonexistent/metric.json"), Error);
}

TEST(MetricJson, SamplesLoad) {
    for (const char* name : {"flat_identity", "flat_diag", "flat_skew", "dip", "dip_doubled", "bump", "constant_factor",
                             "faint_ripple", "liouville", "general", "mane_separable", "grid_factor"}) {
        const auto j = io::load_json(std::string(MATHER_SAMPLES_DIR) + "/" + name + ".json");
        EXPECT_NO_THROW(io::metric_from_json(j)) << name;
    }
    const auto L = io::tonelli_from_json(io::load_json(std::string(MATHER_SAMPLES_DIR) + "/mane_separable.json"));
    EXPECT_NEAR(L.potential.value(0.5, 0.1), -0.3, 1e-15);
    const auto dip = io::metric_from_json(io::load_json(std::string(MATHER_SAMPLES_DIR) + "/dip.json"));
    EXPECT_NEAR(dip.at({0.5, 0.5}).a, 0.5, 1e-15);
}

TEST(Output, LoopRoundTrip) {
    const auto loop = init_loop({2, -1}, 16, 5, 0.1);
    const auto back = io::loop_from_json(json::parse(io::to_json(loop).dump()));
    EXPECT_EQ(back.winding(), loop.winding());
    for (std::size_t i = 0; i < loop.size(); ++i) EXPECT_EQ(back.nodes()[i], loop.nodes()[i]);
    EXPECT_THROW(io::loop_from_json(json::parse(R"J({"k":[1,0]})J")), Error);
}

TEST(Output, BetaJsonFields) {
    BetaOptions o;
    o.min = fixture::quick(2, 0);
    o.sweep_max = 2;
    const auto r = beta_rational(fixture::flat(), {{1, 0}, Rational::make(1, 2)}, o);
    const json j = io::to_json(r);
    EXPECT_EQ(j["h"]["scale"], "1/2");
    EXPECT_EQ(j["method"], "homogeneity");
    EXPECT_NEAR(j["beta"].get<double>(), 0.125, 1e-10);
    EXPECT_EQ(j["m_sweep"].size(), 2u);
    EXPECT_TRUE(j["certificate"].contains("all_minima"));
}

TEST(Output, FmtRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 2.5, 1e-300, 123456789.123456789, -0.4326446038})
        EXPECT_EQ(std::strtod(io::fmt(v).c_str(), nullptr), v);
    EXPECT_EQ(io::fmt(0.5), "0.5");
}

TEST(Output, CsvHeaderAndRows) {
    BetaOptions o;
    o.min = fixture::quick(2, 0);
    o.sweep_max = 1;
    const auto rs = beta_batch(fixture::flat(), {{1, 0}, {1, 1}}, o);
    std::ostringstream os;
    io::write_beta_csv(os, {"mather", "0.1.0", "00ff", 7}, rs);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# tool=mather version=0.1.0 config_hash=00ff seed=7");
    std::getline(in, line);
    EXPECT_EQ(line, "p,q,scale,stable_norm,beta,converged");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 6), "1,0,1,");
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 2);
}

TEST(Output, Fnv1a) {
    EXPECT_EQ(io::fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(io::fnv1a_hex("a"), "af63dc4c8601ec8c");
    EXPECT_NE(io::fnv1a_hex("abc"), io::fnv1a_hex("abd"));
}
