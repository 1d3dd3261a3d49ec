#pragma once

// POVM elements of the nonlinear quadrature measurement.
//
// Ideal element for first/second homodyne outcomes (q, y):
//   Pi(q, y) = (2/|cos th|) |psi><psi|,  psi = P(-tan th) D(sqrt2 q, sqrt2 y/cos th + sqrt2 q tan th) T psi_anc,
// with th = theta(q). As a density over (q, y) the element is Pi/(2 pi). Lossy
// homodyne detectors turn this into a Gaussian mixture over the ideal outcomes
// (X, Y) at the angle set by the measured q.

#include <cmath>
#include <limits>
#include <vector>

#include "nlqm/feedforward.hpp"
#include "nlqm/quadrature.hpp"
#include "nlqm/states.hpp"

namespace nlqm {

struct LossModel {
    double eta1 = 1.0;
    double eta2 = 1.0;

    static LossModel paper() { return {0.97, 0.91}; }

    void validate() const {
        if (!(eta1 > 0.0 && eta1 <= 1.0)) throw ConfigError("loss.eta1", "must lie in (0, 1]");
        if (!(eta2 > 0.0 && eta2 <= 1.0)) throw ConfigError("loss.eta2", "must lie in (0, 1]");
    }
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PovmElement {
    FockOperator op;
    double prefactor = 1.0;  // 2/|cos theta(q)| for single-outcome ideal elements
    double q = kNaN;
    double y = kNaN;
    double m = kNaN;

    FockOperator normalized() const { return op.normalized(); }
    double variance(double gamma) const { return nonlinear_variance(op, {gamma, +1}); }
};

struct DetectorState {
    FockOperator op;
    double m = kNaN;
    double variance = kNaN;
};

/// Eigen-decomposition of a density operator into weighted pure components.
struct PureComponents {
    std::vector<double> weights;
    std::vector<Vector> vectors;
};

inline PureComponents pure_components(const FockOperator& rho, double rel_floor = 1e-12) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.hermitian_part().matrix());
    const double top = es.eigenvalues().maxCoeff();
    PureComponents pc;
    for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0; --k) {
        const double w = es.eigenvalues()(k);
        if (w <= rel_floor * top) continue;
        pc.weights.push_back(w);
        pc.vectors.push_back(es.eigenvectors().col(k));
    }
    return pc;
}

/// One weighted pure element w |P(-t) D(dx, dp) phi_k><...| summed over ancilla components k.
struct ElementNode {
    double dx;
    double dp;
    double t;
    double weight;
};

/// Builds the Fock-basis vectors of P(-t) D(dx, dp) T psi_anc by sampling the
/// wavefunction on a position grid, which avoids truncating the shear.
class ElementFactory {
public:
    ElementFactory(const FockOperator& ancilla, const FockConfig& cfg, double tail_tol = 1e-6)
        : dim_(cfg.dim()), grid_(PositionGrid::for_dim(cfg.dim())), tail_tol_(tail_tol) {
        cfg.validate();
        const PureComponents pc = pure_components(anti_unitary_T(ancilla.normalized()));
        support_ = 1;
        for (const auto& v : pc.vectors)
            for (Eigen::Index n = v.size() - 1; n >= 0; --n)
                if (std::abs(v(n)) > 1e-15) {
                    support_ = std::max(support_, static_cast<int>(n) + 1);
                    break;
                }
        coeffs_ = Matrix(support_, static_cast<Eigen::Index>(pc.vectors.size()));
        for (std::size_t k = 0; k < pc.vectors.size(); ++k) {
            coeffs_.col(static_cast<Eigen::Index>(k)) = pc.vectors[k].head(support_) * std::sqrt(pc.weights[k]);
        }
    }

    int dim() const noexcept { return dim_; }
    int components() const noexcept { return static_cast<int>(coeffs_.cols()); }

    /// Sum over nodes of weight * P(-t) D(dx, dp) sigma D^dag P(-t)^dag, sigma = T rho_anc T^dag.
    FockOperator accumulate(const std::vector<ElementNode>& nodes, std::size_t chunk = 256) const {
        Matrix acc = Matrix::Zero(dim_, dim_);
        const int g = grid_.size();
        const int k = components();
        std::vector<double> h(support_);
        Matrix shifted(g, support_);
        double grid_weight = 0.0, kept_weight = 0.0;
        for (std::size_t start = 0; start < nodes.size(); start += chunk) {
            const std::size_t end = std::min(nodes.size(), start + chunk);
            Matrix samples(g, static_cast<Eigen::Index>((end - start) * k));
            for (std::size_t i = start; i < end; ++i) {
                const ElementNode& nd = nodes[i];
                for (int j = 0; j < g; ++j) {
                    hermite_functions(grid_.xs()[j] - nd.dx, h);
                    for (int n = 0; n < support_; ++n) shifted(j, n) = h[n];
                }
                Matrix block = shifted * coeffs_;  // g x k, phi_k(x - dx)
                for (int j = 0; j < g; ++j) {
                    const double x = grid_.xs()[j];
                    block.row(j) *= std::polar(1.0, nd.dp * x - nd.t * x * x);
                }
                samples.middleCols(static_cast<Eigen::Index>((i - start) * k), k) = block * std::sqrt(nd.weight);
            }
            const Matrix c = (grid_.table().cast<Complex>() * samples) * grid_.step();
            // Weight inside the cutoff versus weight on the grid.
            grid_weight += samples.squaredNorm() * grid_.step();
            kept_weight += c.squaredNorm();
            acc.noalias() += c * c.adjoint();
        }
        if (grid_weight > 0.0 && 1.0 - kept_weight / grid_weight > tail_tol_)
            throw TruncationError("POVM element does not fit n_max=" + std::to_string(dim_ - 1) + " (norm loss " +
                                  fmt(1.0 - kept_weight / grid_weight) + ")");
        return FockOperator(std::move(acc));
    }

private:
    int dim_;
    PositionGrid grid_;
    double tail_tol_;
    int support_ = 1;
    Matrix coeffs_;  // support x components, columns sqrt(w_k) phi_k
};

/// Ideal element for outcomes (q, y); op includes the 2/|cos theta| prefactor.
inline PovmElement povm_pure(double q, double y, const FockOperator& ancilla, double gamma, const FockConfig& cfg) {
    const double th = feedforward_angle(q, gamma);
    const double t = std::tan(th), c = std::cos(th);
    const ElementFactory f(ancilla, cfg);
    const double pref = 2.0 / std::abs(c);
    PovmElement e{f.accumulate({{std::sqrt(2.0) * q, std::sqrt(2.0) * y / c + std::sqrt(2.0) * q * t, t, pref}}), pref, q, y,
                  std::sqrt(2.0) * y / c};
    return e;
}

/// Detector model with ancilla, coupling and homodyne efficiencies fixed.
/// All elements are density-normalized: Tr[rho E] is the probability density
/// of the labelled outcome (or the probability of a bin).
class DetectorModel {
public:
    DetectorModel(const FockOperator& ancilla, double gamma, LossModel loss, const FockConfig& cfg, int mixture_nodes = 8)
        : gamma_(gamma), loss_(loss), factory_(ancilla, cfg), mixture_nodes_(mixture_nodes) {
        loss_.validate();
    }

    double gamma() const noexcept { return gamma_; }
    const LossModel& loss() const noexcept { return loss_; }
    int dim() const noexcept { return factory_.dim(); }

    /// Nodes for the joint density of lossy outcomes (q, y), scaled by `weight`.
    void add_outcome(double q, double y, double weight, std::vector<ElementNode>& nodes) const {
        const double th = feedforward_angle(q, gamma_);
        const double t = std::tan(th), c = std::cos(th);
        const double v1 = (1.0 - loss_.eta1) / (2.0 * loss_.eta1);
        const double v2 = (1.0 - loss_.eta2) / (2.0 * loss_.eta2);
        const auto rx = gaussian_expectation_rule(mixture_nodes_, q / std::sqrt(loss_.eta1), v1);
        const auto ry = gaussian_expectation_rule(mixture_nodes_, y / std::sqrt(loss_.eta2), v2);
        const double base = weight / (std::sqrt(loss_.eta1 * loss_.eta2) * kPi * std::abs(c));
        for (std::size_t i = 0; i < rx.size(); ++i)
            for (std::size_t j = 0; j < ry.size(); ++j) {
                const double X = rx.nodes[i], Y = ry.nodes[j];
                nodes.push_back({std::sqrt(2.0) * X, std::sqrt(2.0) * Y / c + std::sqrt(2.0) * t * X, t,
                                 base * rx.weights[i] * ry.weights[j]});
            }
    }

    PovmElement outcome(double q, double y) const {
        std::vector<ElementNode> nodes;
        add_outcome(q, y, 1.0, nodes);
        const double c = std::cos(feedforward_angle(q, gamma_));
        return {factory_.accumulate(nodes), 1.0, q, y, std::sqrt(2.0) * y / c};
    }

    /// Density in m restricted to |q| < r (y = m cos theta(q)/sqrt2 on each q node).
    PovmElement m_element(double m, double r, int q_nodes) const {
        std::vector<ElementNode> nodes;
        add_m(m, 1.0, r, q_nodes, nodes);
        return {factory_.accumulate(nodes), 1.0, kNaN, kNaN, m};
    }

    /// Probability of lo <= m < hi with |q| < r.
    PovmElement bin_element(double lo, double hi, double r, int q_nodes, int m_nodes) const {
        std::vector<ElementNode> nodes;
        const auto rule = gauss_legendre(m_nodes, lo, hi);
        for (std::size_t i = 0; i < rule.size(); ++i) add_m(rule.nodes[i], rule.weights[i], r, q_nodes, nodes);
        return {factory_.accumulate(nodes), 1.0, kNaN, kNaN, 0.5 * (lo + hi)};
    }

private:
    void add_m(double m, double weight, double r, int q_nodes, std::vector<ElementNode>& nodes) const {
        const auto rule = gauss_legendre(q_nodes, -r, r);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const double q = rule.nodes[i];
            const double c = std::cos(feedforward_angle(q, gamma_));
            add_outcome(q, m * c / std::sqrt(2.0), weight * rule.weights[i] * c / std::sqrt(2.0), nodes);
        }
    }

    double gamma_;
    LossModel loss_;
    ElementFactory factory_;
    int mixture_nodes_;
};

/// Ideal element for the outcome m with |q| < r, integrated by Gauss-Legendre
/// over q; the node count is doubled once as a convergence check.
inline PovmElement povm_m(double m, const FockOperator& ancilla, double gamma, double r, int n_nodes,
                          const FockConfig& cfg) {
    if (!(r > 0.0)) throw std::invalid_argument("povm_m: q range must be positive");
    if (n_nodes < 64) throw std::invalid_argument("povm_m: at least 64 quadrature nodes");
    const DetectorModel model(ancilla, gamma, {1.0, 1.0}, cfg);
    const PovmElement coarse = model.m_element(m, r, n_nodes);
    PovmElement fine = model.m_element(m, r, 2 * n_nodes);
    const double change = std::abs(coarse.variance(gamma) - fine.variance(gamma));
    if (change > 1e-4) throw QuadratureNotConverged("povm_m variance moved by " + fmt(change) + " on doubling");
    return fine;
}

/// Lossy homodyne element for outcome q of x_theta:
///   <m|Pi|n> = e^{-i(m-n) theta} int G(q - sqrt(eta) X) psi_m(X) psi_n(X) dX,
/// G the noise density of variance (1 - eta)/2.
inline PovmElement lossy_homodyne_povm(double q, double theta, double eta, const FockConfig& cfg) {
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("lossy_homodyne_povm: eta must lie in (0, 1]");
    cfg.validate();
    const int d = cfg.dim();
    RealMatrix real = RealMatrix::Zero(d, d);
    const double sx = std::sqrt((1.0 - eta) / (2.0 * eta));  // width of X given q
    std::vector<double> h(d);
    if (sx >= 0.1) {
        // Uniform grid: the Gaussian kernel is resolved, trapezoid is spectrally accurate.
        const double spacing = std::min(0.03, sx / 3.0);
        const double half = std::sqrt(2.0 * d + 1.0) + 8.0;
        const auto xs = linspace(-half, half, static_cast<int>(std::lround(2 * half / spacing)) + 1);
        const double step = xs[1] - xs[0];
        const double var = (1.0 - eta) / 2.0;
        for (double X : xs) {
            const double z = q - std::sqrt(eta) * X;
            const double g = std::exp(-z * z / (2 * var)) / std::sqrt(2 * kPi * var) * step;
            if (g < 1e-300) continue;
            hermite_functions(X, h);
            const Eigen::Map<const RealVector> hv(h.data(), d);
            real.noalias() += g * hv * hv.transpose();
        }
    } else {
        // Narrow kernel: X = q/sqrt(eta) + sx sqrt2 u, Gauss-Hermite in u.
        const auto rule = gaussian_expectation_rule(60, q / std::sqrt(eta), sx * sx);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            hermite_functions(rule.nodes[i], h);
            const Eigen::Map<const RealVector> hv(h.data(), d);
            real.noalias() += (rule.weights[i] / std::sqrt(eta)) * hv * hv.transpose();
        }
    }
    Matrix op(d, d);
    for (int mm = 0; mm < d; ++mm)
        for (int n = 0; n < d; ++n) op(mm, n) = std::exp(-kI * (theta * (mm - n))) * real(mm, n);
    return {FockOperator(std::move(op)), 1.0, q, kNaN, kNaN};
}

/// Element from the circuit itself: Tr_anc[(I (x) rho_anc) B^dag (Pi_eta1(q|x) (x) Pi_eta2(y|p_theta(q))) B].
/// Exact on input photon numbers up to n_max minus the ancilla's support.
inline PovmElement povm_imperfect(double q, double y, const FockOperator& ancilla, const LossModel& loss, double gamma,
                                  const FockConfig& cfg) {
    loss.validate();
    const int d = cfg.dim();
    const double th = feedforward_angle(q, gamma);
    const Matrix p1 = lossy_homodyne_povm(q, 0.0, loss.eta1, cfg).op.matrix();
    const Matrix p2 = lossy_homodyne_povm(y, th - kPi / 2, loss.eta2, cfg).op.matrix();
    Matrix prod(d * d, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) prod.block(i * d, j * d, d, d) = p1(i, j) * p2;
    const Matrix b = beamsplitter_unitary(d, 0.5);
    const Matrix m = b.adjoint() * prod * b;
    const Matrix rho = ancilla.normalized().resized(d).matrix();
    Matrix out = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Complex acc{};
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) acc += m(i * d + k, j * d + l) * rho(l, k);
            out(i, j) = acc;
        }
    return {FockOperator(std::move(out)), 1.0, q, y, std::sqrt(2.0) * y / std::cos(th)};
}

/// p-displacement of an operator by dp, carried out in a padded space so the
/// low-photon block is exact.
inline FockOperator displace_p(const FockOperator& op, double dp, int pad = 30) {
    const int d = op.dim();
    const int big = d + pad;
    const Matrix u = displacement_matrix(amplitude_of(0.0, dp), big);
    const Matrix shifted = u * op.resized(big).matrix() * u.adjoint();
    return FockOperator(shifted.topLeftCorner(d, d));
}

/// Elements shifted by -m in p, summed and normalized.
inline DetectorState averaged_detector_state(const std::vector<PovmElement>& elements, double gamma) {
    if (elements.empty()) throw std::invalid_argument("averaged_detector_state needs at least one element");
    FockOperator sum = FockOperator::zero(elements.front().op.dim());
    for (const auto& e : elements) sum += displace_p(e.op, -e.m);
    DetectorState s;
    s.op = sum.normalized().hermitian_part();
    s.m = elements.size() == 1 ? elements.front().m : 0.0;
    s.variance = nonlinear_variance(s.op, {gamma, +1});
    return s;
}

}  // namespace nlqm
