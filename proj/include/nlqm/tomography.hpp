#pragma once

// Detector tomography: coherent probes with random phase, binning of (q, m)
// outcomes, iterative maximum-likelihood POVM reconstruction, bootstrap errors,
// probe calibration, the boundary safety range, and a Wigner ripple metric.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "nlqm/circuit.hpp"
#include "nlqm/errors.hpp"
#include "nlqm/fock.hpp"
#include "nlqm/povm.hpp"
#include "nlqm/random.hpp"
#include "nlqm/states.hpp"

namespace nlqm {

struct ProbeSet {
    std::vector<double> amplitudes;  // |alpha|, complex amplitude
    std::size_t shots_per_amplitude = 80000;

    /// 27 equally spaced amplitudes on [0, 3.5].
    static ProbeSet paper(std::size_t shots = 80000) { return {linspace(0.0, 3.5, 27), shots}; }

    std::size_t total() const noexcept { return amplitudes.size() * shots_per_amplitude; }
    double boundary() const { return amplitudes.empty() ? 0.0 : amplitudes.back(); }

    void validate() const {
        if (amplitudes.empty()) throw ConfigError("probes.amplitudes", "empty amplitude grid");
        for (std::size_t i = 0; i < amplitudes.size(); ++i) {
            if (amplitudes[i] < 0.0) throw ConfigError("probes.amplitudes", "amplitudes must be nonnegative");
            if (i && amplitudes[i] <= amplitudes[i - 1]) throw ConfigError("probes.amplitudes", "amplitudes must be sorted");
        }
        if (shots_per_amplitude == 0) throw ConfigError("probes.shots_per_amplitude", "must be positive");
    }
};

/// Probe i has amplitude index i / shots_per_amplitude and a phase drawn
/// uniformly on [0, 2 pi) from substream(seed, "phase", i).
inline std::vector<CoherentProbe> generate_probe_set(const ProbeSet& spec, std::uint64_t seed) {
    spec.validate();
    std::vector<CoherentProbe> out;
    out.reserve(spec.total());
    for (std::size_t i = 0; i < spec.total(); ++i) {
        const double a = spec.amplitudes[i / spec.shots_per_amplitude];
        const double phi = 2.0 * kPi * substream(seed, "phase", i).uniform();
        out.push_back(CoherentProbe::from_polar(a, phi));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Binning

struct BinningScheme {
    int m_bins = 20;
    double m_lo = -1.0;
    double m_hi = 1.0;
    double q_window = 0.6;
    int phase_bins = 32;  // probe phases are grouped for the likelihood

    void validate() const {
        if (m_bins < 1) throw ConfigError("binning.m_bins", "must be positive");
        if (!(m_hi > m_lo)) throw ConfigError("binning.m_range", "empty m range");
        if (!(q_window > 0.0)) throw ConfigError("binning.q_window", "must be positive");
        if (phase_bins < 1) throw ConfigError("binning.phase_bins", "must be positive");
    }

    double width() const noexcept { return (m_hi - m_lo) / m_bins; }
    double centre(int b) const noexcept { return m_lo + (b + 0.5) * width(); }

    /// Bin of m, or m_bins for the overflow bin.
    int bin(double m) const noexcept {
        if (!(m >= m_lo && m < m_hi)) return m_bins;
        return std::min(m_bins - 1, static_cast<int>(std::floor((m - m_lo) / width())));
    }
};

/// Counts per probe class j = amplitude_index * phase_bins + phase_bin.
/// Columns 0..m_bins-1 are the m-bins, column m_bins the in-window overflow.
struct FrequencyTable {
    std::vector<double> amplitudes;
    BinningScheme scheme;
    Eigen::MatrixXd counts;
    Eigen::VectorXd dropped;  // records outside the q window

    int probes() const noexcept { return static_cast<int>(counts.rows()); }
    double in_window() const { return counts.sum(); }
    double total() const { return counts.sum() + dropped.sum(); }

    double amplitude(int j) const { return amplitudes[static_cast<std::size_t>(j / scheme.phase_bins)]; }
    double phase_centre(int j) const { return (j % scheme.phase_bins + 0.5) * 2.0 * kPi / scheme.phase_bins; }

    /// Outcome table for the likelihood: the m-bins plus one complement column
    /// holding overflow and out-of-window records, so every row sums to its shots.
    Eigen::MatrixXd complete() const {
        Eigen::MatrixXd f = counts;
        f.col(scheme.m_bins) += dropped;
        return f;
    }
};

inline int amplitude_index(std::span<const double> amplitudes, double magnitude) {
    const auto it = std::lower_bound(amplitudes.begin(), amplitudes.end(), magnitude);
    int i = static_cast<int>(it - amplitudes.begin());
    if (i == static_cast<int>(amplitudes.size())) --i;
    if (i > 0 && std::abs(amplitudes[i - 1] - magnitude) < std::abs(amplitudes[i] - magnitude)) --i;
    return i;
}

inline int phase_bin(double phase, int bins) {
    double p = std::fmod(phase, 2.0 * kPi);
    if (p < 0.0) p += 2.0 * kPi;
    return std::min(bins - 1, static_cast<int>(p / (2.0 * kPi) * bins));
}

inline FrequencyTable bin_outcomes(std::span<const MeasurementRecord> records, std::span<const double> amplitudes,
                                   const BinningScheme& scheme) {
    scheme.validate();
    if (amplitudes.empty()) throw std::invalid_argument("bin_outcomes: empty amplitude grid");
    FrequencyTable t{{amplitudes.begin(), amplitudes.end()}, scheme, {}, {}};
    const int rows = static_cast<int>(amplitudes.size()) * scheme.phase_bins;
    t.counts = Eigen::MatrixXd::Zero(rows, scheme.m_bins + 1);
    t.dropped = Eigen::VectorXd::Zero(rows);
    for (const auto& r : records) {
        const int j = amplitude_index(amplitudes, r.probe.magnitude()) * scheme.phase_bins +
                      phase_bin(probe_phase(r.probe), scheme.phase_bins);
        if (std::abs(r.q) < scheme.q_window)
            t.counts(j, scheme.bin(r.m)) += 1.0;
        else
            t.dropped(j) += 1.0;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Safety range

struct SafetyRange {
    double r;
    bool unbounded;
};

/// Per m-bin, the widest |q| < r window that admits at most `threshold`
/// events from boundary probes. With no more than `threshold` such events the
/// answer is r_max. A threshold of SIZE_MAX never binds.
inline std::vector<SafetyRange> safety_range(std::span<const MeasurementRecord> records, std::size_t threshold,
                                             double boundary_amplitude, const BinningScheme& scheme,
                                             double r_max = 6.0) {
    std::vector<SafetyRange> out(static_cast<std::size_t>(scheme.m_bins));
    if (threshold == std::numeric_limits<std::size_t>::max()) {
        for (auto& s : out) s = {std::numeric_limits<double>::infinity(), true};
        return out;
    }
    std::vector<std::vector<double>> qs(out.size());
    for (const auto& r : records) {
        if (std::abs(r.probe.magnitude() - boundary_amplitude) > 1e-9) continue;
        const int b = scheme.bin(r.m);
        if (b < scheme.m_bins) qs[static_cast<std::size_t>(b)].push_back(std::abs(r.q));
    }
    for (std::size_t b = 0; b < out.size(); ++b) {
        auto& v = qs[b];
        if (v.size() <= threshold) {
            out[b] = {r_max, false};
            continue;
        }
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(threshold), v.end());
        out[b] = {std::min(r_max, v[threshold]), false};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Probe calibration

struct CalibrationSample {
    double reference_phase;  // phase of the modulator reference
    double x;
    double p;
};

struct CalibrationFit {
    double amplitude;
    double phase_offset;
    double x0;
    double p0;
    double rms;
    double amplitude_error;
    double offset_error;  // standard error of x0 and of p0
};

/// Heterodyne-mode samples with the probe phase as reference. Mean outcome is
/// (alpha_x + i alpha_p)/sqrt2 = |alpha| e^{i phi}, so the reference is -phi.
inline std::vector<CalibrationSample> calibration_samples(std::span<const MeasurementRecord> records) {
    std::vector<CalibrationSample> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({-probe_phase(r.probe), r.q, r.y});
    return out;
}

/// Least squares for z = A e^{i(-phase + offset)} + (x0 + i p0), linear in
/// c = A e^{i offset} and d = x0 + i p0.
inline CalibrationFit fit_probe_calibration(std::span<const CalibrationSample> samples) {
    if (samples.size() < 100) throw std::invalid_argument("calibration needs at least 100 samples");
    std::vector<double> phases;
    for (const auto& s : samples) {
        double p = std::fmod(s.reference_phase, 2.0 * kPi);
        phases.push_back(p < 0 ? p + 2.0 * kPi : p);
    }
    std::sort(phases.begin(), phases.end());
    double gap = phases.front() + 2.0 * kPi - phases.back();
    for (std::size_t i = 1; i < phases.size(); ++i) gap = std::max(gap, phases[i] - phases[i - 1]);
    const double coverage = 1.0 - gap / (2.0 * kPi);
    if (coverage < 0.1) throw FitDegenerate("phase coverage " + fmt(coverage) + " of a cycle is below 10%");

    const auto n = static_cast<Eigen::Index>(samples.size());
    Matrix a(n, 2);
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        a(i, 0) = std::exp(-kI * s.reference_phase);
        a(i, 1) = 1.0;
        z(i) = Complex(s.x, s.p);
    }
    const Vector c = a.colPivHouseholderQr().solve(z);
    const double sse = (a * c - z).squaredNorm();
    const double dof = std::max<double>(1.0, 2.0 * static_cast<double>(n) - 4.0);
    const double s2 = sse / dof;  // per real component
    const Matrix cov = (a.adjoint() * a).inverse();
    CalibrationFit f;
    f.amplitude = std::abs(c(0));
    f.phase_offset = std::arg(c(0));
    f.x0 = c(1).real();
    f.p0 = c(1).imag();
    f.rms = std::sqrt(sse / static_cast<double>(n));
    f.amplitude_error = std::sqrt(s2 * cov(0, 0).real());
    f.offset_error = std::sqrt(s2 * cov(1, 1).real());
    return f;
}

// ---------------------------------------------------------------------------
// Maximum likelihood

/// Phase-averaged coherent state: |alpha| = amplitude with the phase uniform
/// over a window of `width` around `centre`, truncated at dim.
inline FockOperator phase_averaged_coherent(double amplitude, double centre, double width, int dim) {
    std::vector<double> c(dim);  // e^{-A^2/2} A^n / sqrt(n!)
    double lf = 0.0;
    for (int n = 0; n < dim; ++n) {
        if (n) lf += std::log(static_cast<double>(n));
        c[n] = amplitude == 0.0 ? (n == 0 ? 1.0 : 0.0)
                                : std::exp(-0.5 * amplitude * amplitude + n * std::log(amplitude) - 0.5 * lf);
    }
    Matrix m(dim, dim);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) {
            const double k = a - b;
            const double x = 0.5 * k * width;
            const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
            m(a, b) = c[a] * c[b] * sinc * std::exp(kI * (k * centre));
        }
    return FockOperator(std::move(m));
}

struct MleOptions {
    int n_max = 10;
    int max_iterations = 2000;
    double tolerance = 1e-9;  // relative log-likelihood gain
    double eigen_floor = 1e-12;
};

struct TomographyResult {
    std::vector<PovmElement> elements;  // m-bins, then the complement outcome
    std::vector<double> log_likelihood;
    int iterations = 0;
    bool converged = false;
    double psd_defect = 0.0;         // most negative eigenvalue clipped after any step
    double completeness_defect = 0.0;  // || sum Pi - I ||_max

    std::vector<double> variances(double gamma, int bins) const {
        std::vector<double> v;
        for (int b = 0; b < bins; ++b) {
            const auto& e = elements[static_cast<std::size_t>(b)];
            v.push_back(e.op.real_trace() > 1e-12 ? e.variance(gamma) : kNaN);  // unpopulated bins have no state
        }
        return v;
    }
};

namespace detail {

/// H^{-1/2} on the eigenvalues above floor, zero elsewhere.
inline Matrix inverse_sqrt(const Matrix& h, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
    RealVector s = es.eigenvalues();
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = s(i) > floor ? 1.0 / std::sqrt(s(i)) : 0.0;
    return es.eigenvectors() * s.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

/// Clips negative eigenvalues; returns the largest clipped magnitude.
inline double make_psd(Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
    RealVector s = es.eigenvalues();
    const double worst = std::max(0.0, -s.minCoeff());
    if (worst == 0.0) {
        m = 0.5 * (m + m.adjoint());
        return 0.0;
    }
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::max(0.0, s(i));
    m = es.eigenvectors() * s.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    return worst;
}

}  // namespace detail

/// Probe operators of every non-empty row of the table.
struct ProbeModel {
    std::vector<int> rows;      // table rows kept
    Matrix stacked;             // row r = vec(rho_r^T), so p = stacked * vec(Pi)
    std::vector<FockOperator> ops;
};

inline ProbeModel probe_model(const FrequencyTable& t, int dim) {
    const Eigen::MatrixXd f = t.complete();
    ProbeModel pm;
    const double width = 2.0 * kPi / t.scheme.phase_bins;
    for (int j = 0; j < t.probes(); ++j) {
        if (f.row(j).sum() <= 0.0) continue;
        pm.rows.push_back(j);
        pm.ops.push_back(t.amplitude(j) == 0.0 ? phase_averaged_coherent(0.0, 0.0, 2.0 * kPi, dim)
                                               : phase_averaged_coherent(t.amplitude(j), t.phase_centre(j), width, dim));
    }
    pm.stacked.resize(static_cast<Eigen::Index>(pm.ops.size()), dim * dim);
    for (std::size_t r = 0; r < pm.ops.size(); ++r) {
        const Matrix tr = pm.ops[r].matrix().transpose();
        pm.stacked.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Vector>(tr.data(), dim * dim).transpose();
    }
    return pm;
}

/// Fixed-point iteration Pi_m <- L^{-1/2} R_m Pi_m R_m L^{-1/2}, L = sum_m R_m Pi_m R_m.
/// `start` warm-starts from earlier elements (same dimension and count).
inline TomographyResult mle_reconstruct(const FrequencyTable& table, const MleOptions& opt,
                                        const std::vector<FockOperator>* start = nullptr,
                                        const ProbeModel* model = nullptr) {
    const int d = opt.n_max + 1;
    const int outcomes = table.scheme.m_bins + 1;
    ProbeModel local;
    if (!model) {
        local = probe_model(table, d);
        model = &local;
    }
    const Eigen::MatrixXd full = table.complete();
    const auto rows = static_cast<Eigen::Index>(model->rows.size());
    Eigen::MatrixXd f(rows, outcomes);
    for (Eigen::Index r = 0; r < rows; ++r) f.row(r) = full.row(model->rows[static_cast<std::size_t>(r)]);
    const double n_total = f.sum();
    if (n_total <= 0.0) throw std::invalid_argument("mle_reconstruct: empty frequency table");

    std::vector<Matrix> pi(outcomes);
    for (int m = 0; m < outcomes; ++m)
        pi[m] = start ? (*start)[static_cast<std::size_t>(m)].matrix() : Matrix(Matrix::Identity(d, d) / outcomes);

    Matrix pv(d * d, outcomes);
    auto probabilities = [&](const std::vector<Matrix>& ops) {
        for (int m = 0; m < outcomes; ++m) pv.col(m) = Eigen::Map<const Vector>(ops[m].data(), d * d);
        return Eigen::MatrixXd((model->stacked * pv).real().cwiseMax(1e-300));
    };
    auto loglik = [&](const Eigen::MatrixXd& p) { return (f.array() * p.array().log()).sum(); };

    TomographyResult res;
    Eigen::MatrixXd p = probabilities(pi);
    double ll = loglik(p);
    res.log_likelihood.push_back(ll);
    std::vector<Matrix> next(outcomes);
    for (int it = 0; it < opt.max_iterations; ++it) {
        const Eigen::MatrixXd w = (f.array() / p.array()).matrix();
        const Matrix rstack = model->stacked.transpose() * w.cast<Complex>();  // column m = vec(R_m^T)
        std::vector<Matrix> r(outcomes);
        for (int m = 0; m < outcomes; ++m)
            r[m] = Eigen::Map<const Matrix>(rstack.col(m).data(), d, d).transpose();

        // Undiluted step first; if it lowers the likelihood, dilute R -> (I + eps R)/(1 + eps).
        bool accepted = false;
        double eps = std::numeric_limits<double>::infinity();
        Eigen::MatrixXd pn;
        double lln = ll;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            Matrix lam = Matrix::Zero(d, d);
            std::vector<Matrix> rr(outcomes);
            for (int m = 0; m < outcomes; ++m) {
                rr[m] = std::isinf(eps) ? r[m] : Matrix((Matrix::Identity(d, d) + eps * r[m]) / (1.0 + eps));
                next[m] = rr[m] * pi[m] * rr[m];
                lam += next[m];
            }
            const Matrix s = detail::inverse_sqrt(lam, opt.eigen_floor);
            for (int m = 0; m < outcomes; ++m) {
                next[m] = s * next[m] * s;
                res.psd_defect = std::max(res.psd_defect, detail::make_psd(next[m]));
            }
            pn = probabilities(next);
            lln = loglik(pn);
            if (lln >= ll - 1e-12 * std::abs(ll)) {
                accepted = true;
            } else {
                eps = std::isinf(eps) ? n_total : eps / 4.0;
            }
        }
        res.iterations = it + 1;
        if (!accepted) {
            res.converged = true;  // no ascent direction left at working precision
            break;
        }
        const double gain = (lln - ll) / std::abs(ll);
        pi.swap(next);
        p = std::move(pn);
        ll = lln;
        res.log_likelihood.push_back(ll);
        if (gain < opt.tolerance) {
            res.converged = true;
            break;
        }
    }

    Matrix sum = Matrix::Zero(d, d);
    for (int m = 0; m < outcomes; ++m) {
        sum += pi[m];
        PovmElement e{FockOperator(pi[m]), 1.0, kNaN, kNaN, m < table.scheme.m_bins ? table.scheme.centre(m) : kNaN};
        res.elements.push_back(std::move(e));
    }
    res.completeness_defect = (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
    return res;
}

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapOptions {
    int resamples = 100;
    bool full = false;           // cold-start full MLE per resample
    int warm_iterations = 60;    // budget of the cheap warm-started re-fit
    int threads = 1;
};

struct BootstrapResult {
    std::vector<double> mean;
    std::vector<double> stddev;  // per-bin error bar on var(p + gamma x^2); NaN for bins without data
};

/// Resampling records with replacement and re-binning is a multinomial draw
/// over the table's cells; the table is resampled directly.
inline FrequencyTable resample_table(const FrequencyTable& t, Rng& rng) {
    FrequencyTable out = t;
    const auto cols = t.counts.cols();
    std::vector<double> cells;
    for (Eigen::Index j = 0; j < t.counts.rows(); ++j) {
        for (Eigen::Index c = 0; c < cols; ++c) cells.push_back(t.counts(j, c));
        cells.push_back(t.dropped(j));
    }
    double remaining_n = 0.0, remaining_w = 0.0;
    for (double c : cells) remaining_n += c;
    remaining_w = remaining_n;
    std::vector<double> draw(cells.size(), 0.0);
    for (std::size_t i = 0; i < cells.size() && remaining_n > 0; ++i) {
        if (cells[i] <= 0.0) continue;
        const double pr = std::min(1.0, cells[i] / remaining_w);
        const auto k = std::binomial_distribution<long long>(static_cast<long long>(remaining_n), pr)(rng);
        draw[i] = static_cast<double>(k);
        remaining_n -= draw[i];
        remaining_w -= cells[i];
    }
    std::size_t i = 0;
    for (Eigen::Index j = 0; j < t.counts.rows(); ++j) {
        for (Eigen::Index c = 0; c < cols; ++c) out.counts(j, c) = draw[i++];
        out.dropped(j) = draw[i++];
    }
    return out;
}

inline BootstrapResult bootstrap_variance(const FrequencyTable& table, const TomographyResult& fit, double gamma,
                                          const MleOptions& opt, const BootstrapOptions& bo, std::uint64_t seed) {
    if (bo.resamples < 50) throw ConfigError("bootstrap.resamples", "at least 50 resamples are required");
    const int bins = table.scheme.m_bins;
    const ProbeModel model = probe_model(table, opt.n_max + 1);
    std::vector<FockOperator> warm;
    for (const auto& e : fit.elements) warm.push_back(e.op);
    std::vector<std::vector<double>> vars(static_cast<std::size_t>(bo.resamples));
    auto work = [&](int lo, int hi) {
        for (int b = lo; b < hi; ++b) {
            Rng rng = substream(seed, "bootstrap", static_cast<std::uint64_t>(b));
            const auto t = resample_table(table, rng);
            MleOptions o = opt;
            if (!bo.full) o.max_iterations = bo.warm_iterations;
            const auto r = mle_reconstruct(t, o, bo.full ? nullptr : &warm, &model);
            vars[static_cast<std::size_t>(b)] = r.variances(gamma, bins);
        }
    };
    const int t = std::max(1, std::min(bo.threads, bo.resamples));
    std::vector<std::thread> pool;
    for (int w = 0; w < t; ++w) pool.emplace_back(work, bo.resamples * w / t, bo.resamples * (w + 1) / t);
    for (auto& th : pool) th.join();

    BootstrapResult out;
    for (int m = 0; m < bins; ++m) {
        double mean = 0.0, n = 0.0;
        for (const auto& v : vars)
            if (!std::isnan(v[static_cast<std::size_t>(m)])) {
                mean += v[static_cast<std::size_t>(m)];
                n += 1.0;
            }
        if (n < 2.0) {
            out.mean.push_back(n > 0.0 ? mean : kNaN);
            out.stddev.push_back(kNaN);
            continue;
        }
        mean /= n;
        double ss = 0.0;
        for (const auto& v : vars)
            if (!std::isnan(v[static_cast<std::size_t>(m)])) ss += std::pow(v[static_cast<std::size_t>(m)] - mean, 2);
        out.mean.push_back(mean);
        out.stddev.push_back(std::sqrt(ss / (n - 1.0)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ripple metric

struct RippleReport {
    double ring_max;  // max |W| with inner <= sqrt(x^2 + p^2) <= outer
    double peak;      // max |W| anywhere on the raster
    double relative() const { return peak > 0.0 ? ring_max / peak : 0.0; }
};

/// Wigner amplitude outside the probed disk. The default inner radius is the
/// largest probe |alpha| = 3.5 in quadrature units (sqrt2 * 3.5).
inline RippleReport ripple_amplitude(const FockOperator& op, double inner = std::sqrt(2.0) * 3.5, double outer = 7.0,
                                     int points = 141) {
    const auto xs = linspace(-outer, outer, points);
    const auto w = wigner_grid(op.normalized(), xs, xs);
    RippleReport r{0.0, 0.0};
    for (int i = 0; i < points; ++i)
        for (int j = 0; j < points; ++j) {
            const double v = std::abs(w.values(i, j));
            r.peak = std::max(r.peak, v);
            const double rad = std::hypot(xs[i], xs[j]);
            if (rad >= inner && rad <= outer) r.ring_max = std::max(r.ring_max, v);
        }
    return r;
}

}  // namespace nlqm
