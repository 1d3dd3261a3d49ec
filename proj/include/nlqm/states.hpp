#pragma once

// Input and ancilla states, pure loss, the nonlinear-squeezing metric
// var(p +- gamma x^2), and its Gaussian lower bound.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlqm/fock.hpp"
#include "nlqm/io.hpp"

namespace nlqm {

/// Coherent probe with alpha = (alpha_x + i alpha_p)/sqrt(2).
struct CoherentProbe {
    double alpha_x = 0.0;
    double alpha_p = 0.0;

    /// |alpha| e^{i phi} with |alpha| the complex amplitude.
    static CoherentProbe from_polar(double magnitude, double phase) {
        return {std::sqrt(2.0) * magnitude * std::cos(phase), std::sqrt(2.0) * magnitude * std::sin(phase)};
    }

    Complex amplitude() const { return amplitude_of(alpha_x, alpha_p); }
    double magnitude() const { return std::abs(amplitude()); }
};

struct NonlinearQuadratureSpec {
    double gamma = 0.52;
    int sign = +1;  // selects p + sign * gamma * x^2

    void validate() const {
        if (!std::isfinite(gamma)) throw ConfigError("gamma", "must be finite");
        if (sign != 1 && sign != -1) throw ConfigError("sign", "must be +1 or -1");
    }
};

struct AncillaSpec {
    enum class Kind { vacuum, fock_superposition, density_file };

    Kind kind = Kind::vacuum;
    std::vector<Complex> coefficients;  // fock_superposition amplitudes c_0, c_1, ...
    std::filesystem::path path;         // density_file
    double efficiency = 1.0;            // optional pure loss applied after preparation

    /// The pure model 0.8|0> - 0.6i|1>.
    static AncillaSpec canonical() {
        AncillaSpec s;
        s.kind = Kind::fock_superposition;
        s.coefficients = {Complex(0.8, 0.0), Complex(0.0, -0.6)};
        return s;
    }

    void validate() const {
        if (kind == Kind::fock_superposition) {
            if (coefficients.empty()) throw ConfigError("ancilla.coefficients", "empty superposition");
            double n = 0.0;
            for (const auto& c : coefficients) n += std::norm(c);
            if (std::abs(n - 1.0) > 1e-9) throw ConfigError("ancilla.coefficients", "not normalized (norm^2 = " + fmt(n) + ")");
        }
        if (kind == Kind::density_file && path.empty()) throw ConfigError("ancilla.path", "density_file needs a path");
        if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw ConfigError("ancilla.efficiency", "must lie in [0, 1]");
    }
};

/// |alpha><alpha| truncated at cfg.n_max.
inline FockOperator coherent_state(const CoherentProbe& probe, const FockConfig& cfg) {
    cfg.validate();
    const Complex alpha = probe.amplitude();
    const double loss = 1.0 - displaced_vacuum_norm(alpha, cfg.dim());
    if (loss > 1e-6)
        throw TruncationError("coherent state |alpha|=" + fmt(std::abs(alpha)) + " does not fit n_max=" +
                              std::to_string(cfg.n_max));
    const Vector v = displacement_matrix(alpha, cfg.dim()).col(0);
    return FockOperator::projector(v);
}

/// Pure-loss channel of transmissivity eta, as an exact Kraus sum.
inline FockOperator apply_loss(const FockOperator& op, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("loss efficiency must lie in [0, 1]");
    const int d = op.dim();
    if (eta == 1.0) return op;
    std::vector<double> lf(d + 1, 0.0);
    for (int i = 1; i <= d; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
    Matrix out = Matrix::Zero(d, d);
    for (int k = 0; k < d; ++k) {
        Matrix kraus = Matrix::Zero(d, d);
        for (int n = k; n < d; ++n) {
            // sqrt(C(n,k) eta^(n-k) (1-eta)^k)
            double w2 = std::exp(lf[n] - lf[k] - lf[n - k]);
            w2 *= std::pow(eta, n - k) * std::pow(1.0 - eta, k);
            kraus(n - k, n) = std::sqrt(w2);
        }
        out += kraus * op.matrix() * kraus.adjoint();
    }
    return FockOperator(std::move(out));
}

inline FockOperator ancilla_state(const AncillaSpec& spec, const FockConfig& cfg) {
    spec.validate();
    cfg.validate();
    FockOperator rho;
    switch (spec.kind) {
        case AncillaSpec::Kind::vacuum:
            rho = FockOperator::fock(0, cfg.dim());
            break;
        case AncillaSpec::Kind::fock_superposition: {
            if (static_cast<int>(spec.coefficients.size()) > cfg.dim())
                throw TruncationError("ancilla superposition exceeds n_max=" + std::to_string(cfg.n_max));
            Vector psi = Vector::Zero(cfg.dim());
            for (std::size_t n = 0; n < spec.coefficients.size(); ++n) psi(static_cast<Eigen::Index>(n)) = spec.coefficients[n];
            rho = FockOperator::projector(psi);
            break;
        }
        case AncillaSpec::Kind::density_file: {
            FockOperator loaded = load_operator(spec.path);
            if (!loaded.is_hermitian(1e-9)) throw FileFormatError(spec.path.string() + ": operator is not Hermitian");
            if (loaded.dim() > cfg.dim()) {
                const Matrix& m = loaded.matrix();
                const int d = cfg.dim();
                const double tail = m.real().trace() - m.topLeftCorner(d, d).real().trace();
                if (tail > 1e-9) throw TruncationError("ancilla file has weight beyond n_max=" + std::to_string(cfg.n_max));
            }
            rho = loaded.resized(cfg.dim());
            break;
        }
    }
    if (spec.efficiency < 1.0) rho = apply_loss(rho, spec.efficiency);
    return rho;
}

/// var(p + sign*gamma*x^2) of op/Tr[op]. Moments are taken in a space two
/// photons larger so that x^4 is exact for the truncated state.
inline double nonlinear_variance(const FockOperator& op, const NonlinearQuadratureSpec& spec) {
    spec.validate();
    const int d = op.dim() + 2;
    const FockOperator rho = op.normalized().resized(d);
    const Matrix x = x_matrix(d);
    const Matrix delta = p_matrix(d) + (spec.sign * spec.gamma) * (x * x);
    const double mean = rho.expectation(delta).real();
    const double second = rho.expectation(delta * delta).real();
    return second - mean * mean;
}

// ---------------------------------------------------------------------------
// Gaussian bound

/// Quadrature moments of the pure Gaussian state D(d, dp) S(r e^{i phi}) |0>.
struct GaussianMoments {
    double var_x, var_p, cov, mean_x, mean_p;

    static GaussianMoments from_parameters(double r, double phi, double d, double dp) {
        const double c2 = std::cosh(2 * r), s2 = std::sinh(2 * r);
        return {0.5 * (c2 - s2 * std::cos(phi)), 0.5 * (c2 + s2 * std::cos(phi)), -0.5 * s2 * std::sin(phi), d, dp};
    }
};

/// Closed-form var(p + gamma x^2) for a Gaussian state (Isserlis moments).
inline double gaussian_nonlinear_variance(const GaussianMoments& g, double gamma) {
    const double a = g.var_x, d = g.mean_x;
    return g.var_p + 4 * gamma * d * g.cov + 4 * gamma * gamma * d * d * a + 2 * gamma * gamma * a * a;
}

struct GaussianBound {
    double value = 0.0;
    bool attained = true;             // false for gamma = 0, where only the infimum 0 exists
    std::array<double, 4> argmin{};   // r, phi, d, dp
};

namespace detail {

struct BoundObjective {
    double gamma;
};

inline double clamp_param(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

inline double bound_objective(const gsl_vector* v, void* params) {
    const double gamma = static_cast<BoundObjective*>(params)->gamma;
    // Box constraints through clamping; the optimum is interior for gamma > 0.
    const double r = clamp_param(gsl_vector_get(v, 0), 0.0, 3.0);
    const double phi = gsl_vector_get(v, 1);
    const double d = clamp_param(gsl_vector_get(v, 2), -5.0, 5.0);
    const double dp = gsl_vector_get(v, 3);
    return gaussian_nonlinear_variance(GaussianMoments::from_parameters(r, phi, d, dp), gamma);
}

inline std::pair<double, std::array<double, 4>> nelder_mead(double gamma, std::array<double, 4> start) {
    BoundObjective params{gamma};
    gsl_multimin_function f{&bound_objective, 4, &params};
    gsl_vector* x = gsl_vector_alloc(4);
    gsl_vector* step = gsl_vector_alloc(4);
    const std::array<double, 4> steps{0.1, 0.2, 0.2, 0.2};
    for (int i = 0; i < 4; ++i) {
        gsl_vector_set(x, i, start[i]);
        gsl_vector_set(step, i, steps[i]);
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4);
    gsl_multimin_fminimizer_set(s, &f, x, step);
    for (int iter = 0; iter < 5000; ++iter) {
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-10) == GSL_SUCCESS) break;
    }
    std::array<double, 4> best{};
    for (int i = 0; i < 4; ++i) best[i] = gsl_vector_get(s->x, i);
    best[0] = clamp_param(best[0], 0.0, 3.0);
    best[2] = clamp_param(best[2], -5.0, 5.0);
    const double value = s->fval;
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x);
    return {value, best};
}

}  // namespace detail

/// Minimum of var(p + gamma x^2) over pure Gaussian states; by concavity of the
/// variance this also bounds Gaussian mixtures.
inline GaussianBound gaussian_bound(double gamma) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gaussian_bound needs gamma >= 0");
    if (gamma == 0.0) return {0.0, false, {}};

    // Coarse grid over (r, phi, d); dp does not enter the objective.
    struct Candidate {
        double value;
        std::array<double, 4> x;
    };
    std::vector<Candidate> grid;
    for (int i = 0; i <= 30; ++i)
        for (int j = 0; j < 24; ++j)
            for (int k = 0; k <= 40; ++k) {
                const std::array<double, 4> x{3.0 * i / 30, kPi * j / 24, -5.0 + 10.0 * k / 40, 0.0};
                const double v =
                    gaussian_nonlinear_variance(GaussianMoments::from_parameters(x[0], x[1], x[2], x[3]), gamma);
                grid.push_back({v, x});
            }
    std::partial_sort(grid.begin(), grid.begin() + 4, grid.end(),
                      [](const Candidate& a, const Candidate& b) { return a.value < b.value; });

    double best = grid.front().value;
    std::array<double, 4> arg = grid.front().x;
    for (int c = 0; c < 4; ++c) {
        auto [v, x] = detail::nelder_mead(gamma, grid[c].x);
        if (v < best) {
            best = v;
            arg = x;
        }
    }
    // Restart from the incumbent; a further gain means the search had not settled.
    auto [again, x_again] = detail::nelder_mead(gamma, arg);
    if (best - again > 1e-6)
        throw OptimizationDidNotConverge("Gaussian bound restart improved by " + fmt(best - again));
    if (again < best) {
        best = again;
        arg = x_again;
    }
    return {best, true, arg};
}

/// Loss efficiency that brings the canonical ancilla's var(p - gamma x^2) to
/// `target` (the loss raises the variance monotonically).
inline double calibrate_ancilla_efficiency(double target, double gamma, const FockConfig& cfg) {
    const FockOperator pure = ancilla_state(AncillaSpec::canonical(), cfg);
    const NonlinearQuadratureSpec anc{gamma, -1};
    auto value = [&](double eta) { return nonlinear_variance(apply_loss(pure, eta), anc); };
    double lo = 0.0, hi = 1.0;
    if (target < value(hi) || target > value(lo))
        throw std::invalid_argument("target variance not reachable by loss on the canonical ancilla");
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (value(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace nlqm
