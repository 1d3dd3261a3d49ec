#pragma once

// Fixed-point model of the feedforward path: ADC code -> arctangent lookup ->
// DAC code -> phase-modulator angle, plus the latency budget of the board.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nlqm/errors.hpp"
#include "nlqm/feedforward.hpp"

namespace nlqm {

struct LutGeometry {
    int input_bits = 10;
    int output_bits = 10;
    double input_range = 6.0;  // ADC full scale is [-input_range, input_range) in quadrature units

    void validate() const {
        if (input_bits < 2 || input_bits > 24) throw ConfigError("lut.input_bits", "must lie in [2, 24]");
        if (output_bits < 2 || output_bits > 24) throw ConfigError("lut.output_bits", "must lie in [2, 24]");
        if (!(input_range > 0.0)) throw ConfigError("lut.input_range", "must be positive");
    }
};

struct LutEval {
    double theta;
    std::int32_t input_code;
    std::int32_t output_code;
    bool clipped;  // q fell outside the ADC range and was saturated
};

/// Mid-tread quantizers on both sides. Output codes span the modulator's
/// half-wave range: theta = (c - 2^(b-1)) * pi / 2^b, so |theta| < pi/2 after
/// excluding the bottom code.
class LutTable {
public:
    LutTable(double gamma, LutGeometry g) : gamma_(gamma), geo_(g) {
        geo_.validate();
        codes_.resize(std::size_t{1} << geo_.input_bits);
        for (std::size_t i = 0; i < codes_.size(); ++i)
            codes_[i] = output_code(feedforward_angle(code_center(static_cast<std::int32_t>(i)), gamma_));
    }

    double gamma() const noexcept { return gamma_; }
    const LutGeometry& geometry() const noexcept { return geo_; }
    const std::vector<std::int32_t>& codes() const noexcept { return codes_; }

    std::int32_t input_half() const noexcept { return std::int32_t{1} << (geo_.input_bits - 1); }
    std::int32_t output_half() const noexcept { return std::int32_t{1} << (geo_.output_bits - 1); }
    double input_step() const noexcept { return 2.0 * geo_.input_range / static_cast<double>(codes_.size()); }
    double output_step() const noexcept { return std::numbers::pi / static_cast<double>(std::int64_t{1} << geo_.output_bits); }

    double code_center(std::int32_t i) const noexcept { return (i - input_half()) * input_step(); }

    std::int32_t input_code(double q, bool* clipped = nullptr) const noexcept {
        const double raw = std::nearbyint(q / input_step()) + input_half();
        const double hi = static_cast<double>(codes_.size() - 1);
        const bool clip = raw < 0.0 || raw > hi;
        if (clipped) *clipped = clip;
        return static_cast<std::int32_t>(std::clamp(raw, 0.0, hi));
    }

    std::int32_t output_code(double theta) const noexcept {
        const double raw = std::nearbyint(theta / output_step()) + output_half();
        const double hi = static_cast<double>((std::int64_t{1} << geo_.output_bits) - 1);
        return static_cast<std::int32_t>(std::clamp(raw, 1.0, hi));
    }

    double angle_of(std::int32_t code) const noexcept { return (code - output_half()) * output_step(); }

    LutEval eval(double q) const noexcept {
        bool clip = false;
        const std::int32_t i = input_code(q, &clip);
        const std::int32_t c = codes_[static_cast<std::size_t>(i)];
        return {angle_of(c), i, c, clip};
    }

    /// Worst-case |theta_lut - theta_exact| inside the range: half an output
    /// step plus the arctangent's maximum slope times half an input step.
    double error_bound() const noexcept {
        return 0.5 * output_step() + std::sqrt(2.0) * std::abs(gamma_) * 0.5 * input_step();
    }

private:
    double gamma_;
    LutGeometry geo_;
    std::vector<std::int32_t> codes_;
};

/// Builds the table; with a reference q sample, refuses a range that clips more than 0.1% of it.
inline LutTable build_lut(double gamma, const LutGeometry& geometry, std::span<const double> reference_q = {}) {
    LutTable t(gamma, geometry);
    if (!reference_q.empty()) {
        std::size_t clipped = 0;
        for (double q : reference_q) clipped += std::abs(q) >= geometry.input_range ? 1 : 0;
        const double frac = static_cast<double>(clipped) / static_cast<double>(reference_q.size());
        if (frac > 1e-3)
            throw RangeTooNarrow("ADC range +-" + std::to_string(geometry.input_range) + " clips " +
                                 std::to_string(100.0 * frac) + "% of the reference sample");
    }
    return t;
}

/// Largest |theta_lut(q) - theta(q)| over every input code, probing each code's
/// interval at its centre and both edges.
inline double lut_max_error(const LutTable& t) {
    double worst = 0.0;
    const double h = 0.5 * t.input_step() * (1.0 - 1e-12);
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(t.codes().size()); ++i) {
        const double centre = t.code_center(i);
        const double lut = t.angle_of(t.codes()[static_cast<std::size_t>(i)]);
        for (double q : {centre - h, centre, centre + h})
            worst = std::max(worst, std::abs(lut - feedforward_angle(q, t.gamma())));
    }
    return worst;
}

struct LatencyStage {
    std::string name;
    double cycles;
    double period_ns;

    double duration_ns() const { return cycles * period_ns; }
};

struct LatencyBudget {
    std::vector<LatencyStage> stages;

    /// ADC and DAC pipelines clocked at the 3 GHz sampling rate, the lookup at
    /// the 375 MHz fabric clock; the remainder lumps deserialization,
    /// serialization and on-board routing so the total is the measured 26.8 ns.
    static LatencyBudget board_default() {
        constexpr double sample = 1.0 / 3.0;       // ns
        constexpr double fabric = 8.0 / 3.0;       // ns, 375 MHz
        const double adc = 7.5 * sample, dac = 4.5 * sample, lut = 1.0 * fabric;
        return {{{"adc_pipeline", 7.5, sample},
                 {"lut", 1.0, fabric},
                 {"dac_pipeline", 4.5, sample},
                 {"serdes_and_routing", 1.0, 26.8 - adc - dac - lut}}};
    }

    void validate() const {
        for (const auto& s : stages)
            if (!(s.cycles > 0.0 && s.period_ns > 0.0)) throw ConfigError("latency." + s.name, "must be positive");
    }
};

struct LatencyReport {
    double total_ns;
    double optical_path_m;  // free-space delay line equivalent
    std::vector<std::pair<std::string, double>> stages_ns;
};

inline LatencyReport latency_report(const LatencyBudget& b) {
    b.validate();
    LatencyReport r{0.0, 0.0, {}};
    for (const auto& s : b.stages) {
        r.stages_ns.emplace_back(s.name, s.duration_ns());
        r.total_ns += s.duration_ns();
    }
    r.optical_path_m = r.total_ns * 0.299792458;
    return r;
}

}  // namespace nlqm
