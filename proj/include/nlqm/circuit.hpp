#pragma once

// Monte-Carlo model of the adaptive measurement: 50:50 interference with the
// ancilla, homodyne of x on mode 1, feedforward rotation, homodyne of p_theta
// on mode 2, gain post-processing. The heterodyne baseline is the same chain
// with the rotation switched off and quadratic post-processing.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "nlqm/errors.hpp"
#include "nlqm/feedforward.hpp"
#include "nlqm/fock.hpp"
#include "nlqm/lut.hpp"
#include "nlqm/povm.hpp"
#include "nlqm/random.hpp"
#include "nlqm/states.hpp"

namespace nlqm {

struct FeedforwardPolicy {
    enum class Mode { exact, lut, disabled };

    double gamma = 0.52;
    Mode mode = Mode::exact;
    std::shared_ptr<const LutTable> lut;

    static FeedforwardPolicy exact(double gamma) { return {gamma, Mode::exact, nullptr}; }
    static FeedforwardPolicy disabled(double gamma) { return {gamma, Mode::disabled, nullptr}; }
    static FeedforwardPolicy quantized(std::shared_ptr<const LutTable> table) {
        if (!table) throw std::invalid_argument("quantized policy needs a table");
        return {table->gamma(), Mode::lut, std::move(table)};
    }

    /// Angle applied to the second homodyne's local oscillator.
    double angle(double q) const {
        switch (mode) {
            case Mode::exact: return feedforward_angle(q, gamma);
            case Mode::lut: return lut->eval(q).theta;
            case Mode::disabled: return 0.0;
        }
        return 0.0;
    }

    /// Processed outcome. The gain uses the exact law at full precision even
    /// when the angle went through the table.
    double process(double q, double y) const {
        if (mode == Mode::disabled) return std::sqrt(2.0) * y + 2.0 * gamma * q * q;
        return feedforward_gain(q, gamma) * y;
    }
};

struct MeasurementRecord {
    CoherentProbe probe;
    double q = 0.0;
    double y = 0.0;
    double m = 0.0;
    double theta = 0.0;
};

/// Fitted residual coherent offset leaking into the second homodyne.
struct ResidualOffsetParams {
    double amplitude_coeff = 0.161;
    double phase_bias = 0.812;
    bool enabled = false;

    void validate() const {
        if (amplitude_coeff < 0.0) throw ConfigError("offset.amplitude_coeff", "must be nonnegative");
        if (phase_bias < 0.0) throw ConfigError("offset.phase_bias", "must be nonnegative");
    }

    /// c(phi, Theta) = a |alpha| [sin(phi + Theta - b) - sin(phi - b)].
    double value(double magnitude, double phase, double theta) const {
        return amplitude_coeff * magnitude * (std::sin(phase + theta - phase_bias) - std::sin(phase - phase_bias));
    }
};

inline double probe_phase(const CoherentProbe& p) { return std::atan2(p.alpha_p, p.alpha_x); }

/// Subtracts the offset from y and recomputes m. Identity when disabled.
inline MeasurementRecord residual_offset_correction(MeasurementRecord r, double phase, double theta,
                                                    const ResidualOffsetParams& params,
                                                    const FeedforwardPolicy& policy) {
    if (!params.enabled) return r;
    r.y -= params.value(r.probe.magnitude(), phase, theta);
    r.m = policy.process(r.q, r.y);
    return r;
}

namespace detail {

/// Inverse-CDF draw from a density tabulated on a uniform grid, linear
/// between nodes. `cdf` is scratch space of the same length.
inline double sample_tabulated(std::span<const double> xs, std::span<const double> density, std::vector<double>& cdf,
                               double expected_mass, double u) {
    const std::size_t n = xs.size();
    cdf.resize(n);
    cdf[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) cdf[i] = cdf[i - 1] + 0.5 * (density[i] + density[i - 1]) * (xs[i] - xs[i - 1]);
    const double total = cdf[n - 1];
    if (!(total >= 0.999 * expected_mass))
        throw GridTooNarrow("sampling grid captures only " + std::to_string(total / expected_mass) + " of the probability");
    const double target = u * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    const std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), 1, n - 1);
    const std::size_t lo = hi - 1;
    const double span = cdf[hi] - cdf[lo];
    const double f = span > 0.0 ? (target - cdf[lo]) / span : 0.5;
    return xs[lo] + f * (xs[hi] - xs[lo]);
}

inline double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Reference path: explicit two-mode density matrices

struct HomodyneDraw {
    double value;
    FockOperator conditioned;  // normalized state of the other mode (empty for single-mode draws)
};

inline std::vector<double> sampling_grid(int dim, int points = 4096) {
    const double half = std::sqrt(2.0 * dim + 1.0) + 6.0;
    return linspace(-half, half, points);
}

namespace detail {

struct SamplingTable {
    std::vector<double> grid;
    RealMatrix hermite;
};

/// Grid and Hermite table per dimension, cached per thread.
inline const SamplingTable& sampling_table(int dim) {
    thread_local std::map<int, SamplingTable> cache;
    auto it = cache.find(dim);
    if (it == cache.end()) {
        SamplingTable t{sampling_grid(dim), {}};
        t.hermite = hermite_table(dim - 1, t.grid);
        it = cache.emplace(dim, std::move(t)).first;
    }
    return it->second;
}

/// Ideal x_theta draw from rho by inverse CDF.
inline double draw_quadrature(const FockOperator& rho, double theta, Rng& rng) {
    const auto& t = sampling_table(rho.dim());
    const Matrix rot = rotation_matrix(theta, rho.dim());
    const Matrix ah = (rot.adjoint() * rho.matrix() * rot) * t.hermite.cast<Complex>();
    std::vector<double> density(t.grid.size());
    for (std::size_t j = 0; j < t.grid.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        density[j] = (t.hermite.col(jj).cast<Complex>().cwiseProduct(ah.col(jj))).sum().real();
    }
    std::vector<double> cdf;
    return sample_tabulated(t.grid, density, cdf, rho.real_trace(), rng.uniform());
}

}  // namespace detail

/// Outcome of a lossy homodyne of x_theta on a single mode: ideal draw X from
/// the quadrature density, then sqrt(eta) X plus vacuum noise of variance (1-eta)/2.
inline double sample_quadrature(const FockOperator& rho, double theta, double eta, Rng& rng) {
    const double x = detail::draw_quadrature(rho, theta, rng);
    if (eta >= 1.0) return x;
    return std::sqrt(eta) * x + std::sqrt(0.5 * (1.0 - eta)) * detail::gaussian(rng);
}

/// Homodyne of x_theta on `mode` of a two-mode state. The returned state of
/// the other mode is conditioned on the ideal quadrature value; since the
/// added detector noise is independent of everything else, this gives the
/// correct joint statistics of all later measurements.
inline HomodyneDraw sample_homodyne(const TwoModeState& state, int mode, double theta, double eta, Rng& rng) {
    if (mode != 1 && mode != 2) throw std::invalid_argument("mode must be 1 or 2");
    const int d = state.dim();
    const double x = detail::draw_quadrature(state.reduced(mode), theta, rng);

    std::vector<double> h(d);
    hermite_functions(x, h);
    Vector bra(d);  // <x; x_theta| n> = e^{i theta n} psi_n(x)
    for (int n = 0; n < d; ++n) bra(n) = std::exp(kI * (theta * n)) * h[n];
    Matrix cond = Matrix::Zero(d, d);
    const Matrix& m = state.matrix();
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            const Complex w = bra(a) * std::conj(bra(b));
            if (std::abs(w) == 0.0) continue;
            if (mode == 1)
                cond += w * m.block(a * d, b * d, d, d);
            else
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) cond(i, j) += w * m(i * d + a, j * d + b);
        }
    FockOperator out(cond);
    out = out.hermitian_part().normalized();

    double value = x;
    if (eta < 1.0) value = std::sqrt(eta) * x + std::sqrt(0.5 * (1.0 - eta)) * detail::gaussian(rng);
    return {value, std::move(out)};
}

/// One shot through explicit density matrices at cfg.n_max. Slow; used to
/// cross-check the fast simulator.
inline MeasurementRecord simulate_shot(const CoherentProbe& input, const FockOperator& ancilla,
                                       const FeedforwardPolicy& policy, const LossModel& loss,
                                       const ResidualOffsetParams& offset, Rng& rng, const FockConfig& cfg) {
    loss.validate();
    const int d = cfg.dim();
    const auto joint = beamsplitter(TwoModeState::product(coherent_state(input, cfg), ancilla.resized(d)), 0.5);
    auto first = sample_homodyne(joint, 1, 0.0, loss.eta1, rng);
    MeasurementRecord r;
    r.probe = input;
    r.q = first.value;
    r.theta = policy.angle(r.q);
    r.y = sample_quadrature(first.conditioned, r.theta - kPi / 2, loss.eta2, rng);
    if (offset.enabled) r.y += offset.value(input.magnitude(), probe_phase(input), r.theta);
    r.m = policy.process(r.q, r.y);
    return residual_offset_correction(r, probe_phase(input), r.theta, offset, policy);
}

// ---------------------------------------------------------------------------
// Fast path

/// Shot simulator that never builds the coherent input in the Fock basis.
/// A displaced input commutes through the splitter into equal displacements
/// alpha/sqrt2 of both outputs, so each ancilla component k only needs
/// Phi_k = B |0>|psi_k>, whose photon number is bounded by the ancilla's.
/// Shots are independent given their substream, so records are bit-identical
/// for any thread count.
class ShotSimulator {
public:
    ShotSimulator(const FockOperator& ancilla, FeedforwardPolicy policy, LossModel loss, ResidualOffsetParams offset = {},
                  int grid_points = 4096)
        : policy_(std::move(policy)), loss_(loss), offset_(offset) {
        loss_.validate();
        offset_.validate();
        if (policy_.mode == FeedforwardPolicy::Mode::lut && !policy_.lut)
            throw std::invalid_argument("lut mode without a table");
        const auto comps = pure_components(ancilla.hermitian_part().normalized());
        int support = 0;
        for (const auto& v : comps.vectors)
            for (int n = 0; n < v.size(); ++n)
                if (std::abs(v(n)) > 1e-14) support = std::max(support, n);
        dim_ = support + 1;
        double total = 0.0;
        for (double w : comps.weights) total += w;
        const Matrix u = beamsplitter_unitary(dim_, 0.5);
        Vector vac = Vector::Zero(dim_);
        vac(0) = 1.0;
        for (std::size_t k = 0; k < comps.vectors.size(); ++k) {
            const Vector psi = comps.vectors[k].head(dim_);
            const Vector phi = u * product_vector(vac, psi);
            Matrix amp(dim_, dim_);  // amp(n1, n2)
            for (int a = 0; a < dim_; ++a)
                for (int b = 0; b < dim_; ++b) amp(a, b) = phi(a * dim_ + b);
            amps_.push_back(amp);
            cumulative_.push_back((cumulative_.empty() ? 0.0 : cumulative_.back()) + comps.weights[k] / total);
        }
        cumulative_.back() = 1.0;

        grid_ = sampling_grid(dim_, grid_points);
        const RealMatrix table = hermite_table(dim_ - 1, grid_);
        // Running integrals of psi_a psi_b (a <= b): the CDF of any state
        // supported below dim_ is a fixed bilinear form in these.
        for (int a = 0; a < dim_; ++a)
            for (int b = a; b < dim_; ++b) pairs_.push_back(cumulative_products(table, a, b));
        // Marginal CDF of x on output 1 per component, fixed for the run.
        for (const auto& amp : amps_) {
            std::vector<double> f(grid_.size(), 0.0);
            for (int b = 0; b < dim_; ++b) add_cdf(amp.col(b), f);
            if (!(f.back() >= 0.999)) throw GridTooNarrow("first homodyne grid misses probability mass");
            marginals_.push_back(std::move(f));
        }
    }

    const FeedforwardPolicy& policy() const noexcept { return policy_; }
    const LossModel& loss() const noexcept { return loss_; }
    const ResidualOffsetParams& offset() const noexcept { return offset_; }
    int ancilla_dim() const noexcept { return dim_; }

    struct Workspace {
        std::vector<double> herm;
        std::vector<double> coeff;
    };

    MeasurementRecord shot(const CoherentProbe& probe, Rng& rng, Workspace& ws) const {
        std::size_t k = 0;
        if (amps_.size() > 1) {
            const double u = rng.uniform();
            while (k + 1 < cumulative_.size() && u >= cumulative_[k]) ++k;
        }
        const Matrix& amp = amps_[k];
        const auto& marginal = marginals_[k];
        const double s = invert(marginal.back(), rng.uniform(), [&](std::size_t i) { return marginal[i]; });
        const double xa = s + probe.alpha_x / std::sqrt(2.0);
        double q = xa;
        if (loss_.eta1 < 1.0) q = std::sqrt(loss_.eta1) * xa + std::sqrt(0.5 * (1.0 - loss_.eta1)) * detail::gaussian(rng);
        const double theta = policy_.angle(q);

        // Conditional state of output 2, rotated so that p_theta = x_{theta - pi/2} is read as x.
        ws.herm.resize(dim_);
        hermite_functions(s, ws.herm);
        Vector chi = Vector::Zero(dim_);
        for (int a = 0; a < dim_; ++a) chi += ws.herm[a] * amp.row(a).transpose();
        for (int n = 0; n < dim_; ++n) chi(n) *= std::exp(kI * (n * (theta - kPi / 2)));
        ws.coeff.clear();
        for (int a = 0; a < dim_; ++a)
            for (int b = a; b < dim_; ++b) {
                const Complex c = std::conj(chi(a)) * chi(b);
                ws.coeff.push_back(a == b ? c.real() : 2.0 * c.real());
            }
        auto cdf = [&](std::size_t i) {
            double v = 0.0;
            for (std::size_t p = 0; p < pairs_.size(); ++p) v += ws.coeff[p] * pairs_[p][i];
            return v;
        };
        const double mass = cdf(grid_.size() - 1);
        if (!(mass >= 0.999 * chi.squaredNorm())) throw GridTooNarrow("second homodyne grid misses probability mass");
        const double y0 = invert(mass, rng.uniform(), cdf);
        const double ya = y0 + (probe.alpha_x * std::sin(theta) + probe.alpha_p * std::cos(theta)) / std::sqrt(2.0);
        double y = ya;
        if (loss_.eta2 < 1.0) y = std::sqrt(loss_.eta2) * ya + std::sqrt(0.5 * (1.0 - loss_.eta2)) * detail::gaussian(rng);

        MeasurementRecord r{probe, q, y, 0.0, theta};
        const double phase = probe_phase(probe);
        if (offset_.enabled) r.y += offset_.value(probe.magnitude(), phase, theta);
        r.m = policy_.process(r.q, r.y);
        return residual_offset_correction(r, phase, theta, offset_, policy_);
    }

    /// One shot per probe entry; shot i draws from substream(seed, "shot", first_index + i).
    std::vector<MeasurementRecord> run(std::span<const CoherentProbe> probes, std::uint64_t seed, int threads = 1,
                                       std::uint64_t first_index = 0) const {
        std::vector<MeasurementRecord> out(probes.size());
        auto work = [&](std::size_t lo, std::size_t hi) {
            Workspace ws;
            for (std::size_t i = lo; i < hi; ++i) {
                Rng rng = substream(seed, "shot", first_index + i);
                out[i] = shot(probes[i], rng, ws);
            }
        };
        const std::size_t n = probes.size();
        const auto t = static_cast<std::size_t>(std::max(1, threads));
        if (t == 1 || n < 1024) {
            work(0, n);
            return out;
        }
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(t);
        for (std::size_t w = 0; w < t; ++w)
            pool.emplace_back([&, w] {
                try {
                    work(n * w / t, n * (w + 1) / t);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        return out;
    }

private:
    std::vector<double> cumulative_products(const RealMatrix& t, int a, int b) const {
        std::vector<double> c(grid_.size(), 0.0);
        const double h = grid_[1] - grid_[0];
        for (std::size_t i = 1; i < grid_.size(); ++i) {
            const auto j = static_cast<Eigen::Index>(i);
            c[i] = c[i - 1] + 0.5 * h * (t(a, j) * t(b, j) + t(a, j - 1) * t(b, j - 1));
        }
        return c;
    }

    /// Adds the CDF of |sum_n v_n psi_n|^2.
    void add_cdf(const Vector& v, std::vector<double>& f) const {
        std::size_t p = 0;
        for (int a = 0; a < dim_; ++a)
            for (int b = a; b < dim_; ++b, ++p) {
                const Complex c = std::conj(v(a)) * v(b);
                const double w = a == b ? c.real() : 2.0 * c.real();
                for (std::size_t i = 0; i < f.size(); ++i) f[i] += w * pairs_[p][i];
            }
    }

    /// Inverse of a nondecreasing CDF tabulated on grid_, linear between nodes.
    template <class F>
    double invert(double total, double u, F&& cdf) const {
        const double target = u * total;
        std::size_t lo = 0, hi = grid_.size() - 1;  // cdf(lo) <= target < cdf(hi)
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (cdf(mid) <= target)
                lo = mid;
            else
                hi = mid;
        }
        const double a = cdf(lo), b = cdf(hi);
        const double f = b > a ? std::clamp((target - a) / (b - a), 0.0, 1.0) : 0.5;
        return grid_[lo] + f * (grid_[hi] - grid_[lo]);
    }

    FeedforwardPolicy policy_;
    LossModel loss_;
    ResidualOffsetParams offset_;
    int dim_ = 1;
    std::vector<Matrix> amps_;
    std::vector<double> cumulative_;
    std::vector<double> grid_;
    std::vector<std::vector<double>> pairs_;
    std::vector<std::vector<double>> marginals_;
};

/// Single post-processed dual-homodyne outcome sqrt2 y + 2 gamma q^2.
inline double heterodyne_baseline(const CoherentProbe& input, const FockOperator& ancilla, double gamma, Rng& rng) {
    const ShotSimulator sim(ancilla, FeedforwardPolicy::disabled(gamma), LossModel{});
    ShotSimulator::Workspace ws;
    return sim.shot(input, rng, ws).m;
}

// ---------------------------------------------------------------------------
// Moment scans

struct MomentRow {
    double alpha_x;
    double alpha_p;
    double mean;
    double variance;
    double excess;  // variance minus the coherent input's own var(p + gamma x^2)
    std::size_t shots;
};

/// var(p + gamma x^2) of a coherent state with x-displacement alpha_x.
inline double coherent_nonlinear_variance(double alpha_x, double gamma) {
    return 0.5 + 2.0 * gamma * gamma * alpha_x * alpha_x + 0.5 * gamma * gamma;
}

inline MomentRow summarize(const CoherentProbe& probe, std::span<const MeasurementRecord> records, double gamma) {
    if (records.size() < 2) throw std::invalid_argument("need at least two records");
    double mean = 0.0;
    for (const auto& r : records) mean += r.m;
    mean /= static_cast<double>(records.size());
    double ss = 0.0;
    for (const auto& r : records) ss += (r.m - mean) * (r.m - mean);
    const double var = ss / static_cast<double>(records.size() - 1);
    return {probe.alpha_x, probe.alpha_p, mean, var, var - coherent_nonlinear_variance(probe.alpha_x, gamma),
            records.size()};
}

/// Runs `shots` shots for every probe. Probe p uses shot indices [p*shots, (p+1)*shots).
inline std::vector<MomentRow> moment_scan(std::span<const CoherentProbe> probes, std::size_t shots,
                                          const ShotSimulator& sim, std::uint64_t seed, int threads = 1) {
    if (shots < 1000) throw ConfigError("shots", "moment scans need at least 1000 shots per probe");
    std::vector<MomentRow> rows;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const std::vector<CoherentProbe> batch(shots, probes[p]);
        const auto recs = sim.run(batch, seed, threads, p * shots);
        rows.push_back(summarize(probes[p], recs, sim.policy().gamma));
    }
    return rows;
}

struct PolynomialFit {
    std::vector<double> coeffs;  // c0 + c1 x + c2 x^2 ...
    std::vector<double> errors;  // standard errors from the residual scatter
};

/// Least-squares polynomial fit, optionally weighted by 1/sigma^2.
inline PolynomialFit polynomial_fit(std::span<const double> xs, std::span<const double> ys, int degree,
                                    std::span<const double> sigmas = {}) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    if (n <= degree) throw std::invalid_argument("polynomial_fit: too few points");
    Eigen::MatrixXd a(n, degree + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = sigmas.empty() ? 1.0 : 1.0 / sigmas[static_cast<std::size_t>(i)];
        double p = 1.0;
        for (int d = 0; d <= degree; ++d, p *= xs[static_cast<std::size_t>(i)]) a(i, d) = w * p;
        b(i) = w * ys[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    const Eigen::MatrixXd cov = (a.transpose() * a).inverse();
    const double dof = static_cast<double>(n - degree - 1);
    const double s2 = dof > 0 ? (a * c - b).squaredNorm() / dof : 0.0;
    PolynomialFit fit;
    for (int d = 0; d <= degree; ++d) {
        fit.coeffs.push_back(c(d));
        fit.errors.push_back(std::sqrt(std::max(0.0, cov(d, d) * (sigmas.empty() ? s2 : 1.0))));
    }
    return fit;
}

}  // namespace nlqm
