#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "nlqm/lut.hpp"

using namespace nlqm;
using Catch::Approx;

TEST_CASE("table has one entry per input code and is monotone") {
    const auto t = build_lut(0.52, {});
    REQUIRE(t.codes().size() == 1024);
    for (std::size_t i = 1; i < t.codes().size(); ++i) REQUIRE(t.codes()[i] >= t.codes()[i - 1]);
}

TEST_CASE("centre code maps to zero angle") {
    const auto t = build_lut(0.52, {});
    const auto e = t.eval(0.0);
    REQUIRE(e.input_code == 512);
    REQUIRE(e.output_code == 512);
    REQUIRE(e.theta == 0.0);
}

TEST_CASE("exhaustive sweep stays within the quantization bound") {
    for (double gamma : {0.1, 0.52, 1.0, -0.52}) {
        for (int bits : {6, 10, 12}) {
            const auto t = build_lut(gamma, {bits, bits, 6.0});
            REQUIRE(lut_max_error(t) <= t.error_bound() + 1e-15);
        }
    }
}

TEST_CASE("q = 1 lands within one step of the exact angle") {
    const auto t = build_lut(0.52, {});
    const double exact = std::atan(std::sqrt(2.0) * 0.52);
    REQUIRE(exact == Approx(std::atan(0.7354)).margin(1e-4));
    REQUIRE(std::abs(t.eval(1.0).theta - exact) <= t.output_step() + std::sqrt(2.0) * 0.52 * t.input_step());
}

TEST_CASE("out-of-range q saturates at end codes") {
    const auto t = build_lut(0.52, {});
    const auto hi = t.eval(50.0), lo = t.eval(-50.0);
    REQUIRE(hi.clipped);
    REQUIRE(lo.clipped);
    REQUIRE(hi.input_code == 1023);
    REQUIRE(lo.input_code == 0);
    REQUIRE(hi.theta == t.eval(5.99).theta);
    REQUIRE_FALSE(t.eval(5.0).clipped);
}

TEST_CASE("angles never reach the half-wave limit") {
    for (int bits : {2, 4, 10}) {
        const auto t = build_lut(100.0, {10, bits, 6.0});
        for (auto c : t.codes()) REQUIRE(std::abs(t.angle_of(c)) < std::numbers::pi / 2);
    }
}

TEST_CASE("evaluation is bit-exact on replay") {
    const auto a = build_lut(0.52, {}), b = build_lut(0.52, {});
    std::mt19937_64 gen(7);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const double q = n(gen);
        const auto ea = a.eval(q), eb = b.eval(q);
        REQUIRE(ea.input_code == eb.input_code);
        REQUIRE(ea.output_code == eb.output_code);
        REQUIRE(ea.theta == eb.theta);
    }
}

TEST_CASE("24-bit table approaches the exact law") {
    const auto t = build_lut(0.52, {24, 24, 6.0});
    REQUIRE(lut_max_error(t) < 1e-6);
}

TEST_CASE("clipping reference sample is refused") {
    std::vector<double> ok(1000, 1.0), bad(1000, 1.0);
    for (int i = 0; i < 5; ++i) bad[i] = 7.0;
    REQUIRE_NOTHROW(build_lut(0.52, {}, ok));
    REQUIRE_THROWS_AS(build_lut(0.52, {}, bad), RangeTooNarrow);
}

TEST_CASE("geometry validation") {
    REQUIRE_THROWS_AS(build_lut(0.52, {1, 10, 6.0}), ConfigError);
    REQUIRE_THROWS_AS(build_lut(0.52, {10, 30, 6.0}), ConfigError);
    REQUIRE_THROWS_AS(build_lut(0.52, {10, 10, 0.0}), ConfigError);
}

TEST_CASE("latency budget") {
    const auto r = latency_report(LatencyBudget::board_default());
    REQUIRE(r.total_ns == Approx(26.8).epsilon(1e-12));
    REQUIRE(r.stages_ns.size() == 4);
    REQUIRE(r.stages_ns[1].second == Approx(2.6667).margin(1e-3));
    REQUIRE(r.optical_path_m == Approx(8.03).margin(0.01));
    for (const auto& [name, ns] : r.stages_ns) REQUIRE(ns > 0.0);

    REQUIRE(latency_report({{{"lut", 1.0, 2.67}}}).total_ns == Approx(2.67));
    REQUIRE(latency_report({{{"adc", 7.5, 2.67}}}).total_ns == Approx(20.0).margin(0.03));
    REQUIRE_THROWS_AS(latency_report({{{"bad", 0.0, 2.67}}}), ConfigError);
}
