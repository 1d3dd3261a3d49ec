#pragma once

// Truncated Fock-space linear algebra for a single bosonic mode and pairs of
// modes. Conventions: hbar = 1, x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)),
// so the vacuum has var(x) = var(p) = 1/2. Rotated quadratures follow
//   x_theta = x cos(theta) - p sin(theta),  p_theta = x sin(theta) + p cos(theta),
// with eigenstates |X; x_theta> = exp(-i theta n)|X; x>.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "nlqm/errors.hpp"

namespace nlqm {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

struct FockConfig {
    int n_max = 30;
    double hbar = 1.0;

    int dim() const noexcept { return n_max + 1; }

    void validate() const {
        if (n_max < 1) throw ConfigError("n_max", "photon-number cutoff must be >= 1");
        if (hbar != 1.0) throw ConfigError("hbar", "only hbar = 1 is supported");
    }
};

/// Dense operator on a truncated single-mode Fock space: density operators,
/// unitaries, POVM elements.
class FockOperator {
public:
    FockOperator() = default;

    explicit FockOperator(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw std::invalid_argument("FockOperator: matrix must be square");
    }

    static FockOperator zero(int dim) { return FockOperator(Matrix::Zero(dim, dim)); }
    static FockOperator identity(int dim) { return FockOperator(Matrix::Identity(dim, dim)); }
    static FockOperator projector(const Vector& psi) { return FockOperator(psi * psi.adjoint()); }

    static FockOperator fock(int n, int dim) {
        Matrix m = Matrix::Zero(dim, dim);
        m(n, n) = 1.0;
        return FockOperator(std::move(m));
    }

    int dim() const noexcept { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const noexcept { return m_; }
    Matrix& matrix() noexcept { return m_; }
    Complex operator()(int r, int c) const { return m_(r, c); }

    Complex trace() const { return m_.trace(); }
    double real_trace() const { return m_.trace().real(); }

    /// Tr[op * obs].
    Complex expectation(const Matrix& obs) const { return (m_.cwiseProduct(obs.transpose())).sum(); }

    FockOperator normalized() const {
        const double t = real_trace();
        if (!(t > 0.0)) throw Error("cannot normalize an operator with non-positive trace");
        return FockOperator(m_ / t);
    }

    FockOperator adjoint() const { return FockOperator(m_.adjoint()); }

    /// Hermitian part; used to remove rounding asymmetry.
    FockOperator hermitian_part() const { return FockOperator(0.5 * (m_ + m_.adjoint())); }

    /// Crop to, or zero-pad up to, `dim`.
    FockOperator resized(int dim) const {
        Matrix out = Matrix::Zero(dim, dim);
        const int k = std::min(dim, this->dim());
        out.topLeftCorner(k, k) = m_.topLeftCorner(k, k);
        return FockOperator(std::move(out));
    }

    FockOperator conjugated_by(const Matrix& u) const { return FockOperator(u * m_ * u.adjoint()); }

    bool is_hermitian(double tol = 1e-9) const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol; }

    RealVector eigenvalues() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m_ + m_.adjoint()), Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }

    double min_eigenvalue() const { return eigenvalues().minCoeff(); }

    double purity() const { return (m_ * m_).trace().real(); }

    FockOperator& operator+=(const FockOperator& o) {
        m_ += o.m_;
        return *this;
    }
    FockOperator& operator*=(double s) {
        m_ *= s;
        return *this;
    }
    friend FockOperator operator+(FockOperator a, const FockOperator& b) { return a += b; }
    friend FockOperator operator-(const FockOperator& a, const FockOperator& b) {
        return FockOperator(a.m_ - b.m_);
    }
    friend FockOperator operator*(double s, FockOperator a) { return a *= s; }

private:
    Matrix m_;
};

// ---------------------------------------------------------------------------
// Ladder operators and quadratures

inline Matrix annihilation_matrix(int dim) {
    Matrix a = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Matrix x_matrix(int dim) {
    const Matrix a = annihilation_matrix(dim);
    return (a + a.adjoint()) / std::sqrt(2.0);
}

inline Matrix p_matrix(int dim) {
    const Matrix a = annihilation_matrix(dim);
    return (a - a.adjoint()) / (kI * std::sqrt(2.0));
}

inline Matrix number_matrix(int dim) {
    Matrix n = Matrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = k;
    return n;
}

struct Quadratures {
    FockOperator a;
    FockOperator x;
    FockOperator p;
};

inline Quadratures ladder_and_quadratures(const FockConfig& cfg) {
    cfg.validate();
    const int d = cfg.dim();
    const double s = std::sqrt(cfg.hbar);
    return {FockOperator(annihilation_matrix(d)), FockOperator(s * x_matrix(d)), FockOperator(s * p_matrix(d))};
}

// ---------------------------------------------------------------------------
// Gaussian unitaries

/// Exact matrix elements <m|D(alpha)|n> for m, n < dim (not a truncated
/// exponential), from the standard two-term recurrence.
inline Matrix displacement_matrix(Complex alpha, int dim) {
    Matrix d = Matrix::Zero(dim, dim);
    const Complex ac = std::conj(alpha);
    d(0, 0) = std::exp(-0.5 * std::norm(alpha));
    for (int m = 1; m < dim; ++m) d(m, 0) = alpha / std::sqrt(static_cast<double>(m)) * d(m - 1, 0);
    for (int n = 1; n < dim; ++n) {
        const double isn = 1.0 / std::sqrt(static_cast<double>(n));
        d(0, n) = -ac * d(0, n - 1) * isn;
        for (int m = 1; m < dim; ++m)
            d(m, n) = (std::sqrt(static_cast<double>(m)) * d(m - 1, n - 1) - ac * d(m, n - 1)) * isn;
    }
    return d;
}

/// Complex amplitude of a phase-space shift (dx, dp) in quadrature units.
inline Complex amplitude_of(double dx, double dp) { return Complex(dx, dp) / std::sqrt(2.0); }

/// Probability retained inside the cutoff by the displaced vacuum.
inline double displaced_vacuum_norm(Complex alpha, int dim) {
    double sum = 0.0;
    double term = std::exp(-std::norm(alpha));
    for (int m = 0; m < dim; ++m) {
        sum += term;
        term *= std::norm(alpha) / (m + 1);
    }
    return sum;
}

/// D(dx, dp) with D^dag x D = x + dx, D^dag p D = p + dp.
inline FockOperator displacement(double dx, double dp, const FockConfig& cfg) {
    cfg.validate();
    const Complex alpha = amplitude_of(dx, dp);
    const double loss = 1.0 - displaced_vacuum_norm(alpha, cfg.dim());
    if (loss > 1e-6)
        throw TruncationError("displacement (" + std::to_string(dx) + ", " + std::to_string(dp) +
                              ") loses " + std::to_string(loss) + " of the vacuum norm at n_max=" +
                              std::to_string(cfg.n_max));
    return FockOperator(displacement_matrix(alpha, cfg.dim()));
}

/// exp(-i theta n).
inline Matrix rotation_matrix(double theta, int dim) {
    Matrix r = Matrix::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) r(n, n) = std::exp(-kI * (theta * n));
    return r;
}

/// Eigenbasis of the (real, tridiagonal) position operator at size `dim`.
/// Its eigenvalues are the Gauss-Hermite nodes.
struct PositionEigenbasis {
    RealVector nodes;
    RealMatrix vectors;  // columns are eigenvectors
};

inline PositionEigenbasis position_eigenbasis(int dim) {
    RealMatrix x = RealMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) x(n - 1, n) = x(n, n - 1) = std::sqrt(n / 2.0);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(x);
    return {es.eigenvalues(), es.eigenvectors()};
}

/// f(x) evaluated through the eigendecomposition of x at size `work_dim`,
/// then cropped to `dim`.
template <typename F>
Matrix function_of_x(F&& f, int dim, int work_dim) {
    const auto basis = position_eigenbasis(work_dim);
    Vector fx(work_dim);
    for (int j = 0; j < work_dim; ++j) fx(j) = f(basis.nodes(j));
    const Matrix v = basis.vectors.cast<Complex>();
    const Matrix full = v * fx.asDiagonal() * v.transpose();
    return full.topLeftCorner(dim, dim);
}

/// Largest |(U^dag U - I)_{ij}| over the lower `fraction` of the photon numbers.
inline double unitarity_defect(const Matrix& u, double fraction = 2.0 / 3.0) {
    const int k = std::max(1, static_cast<int>(std::floor(fraction * u.rows())));
    const Matrix g = (u.adjoint() * u).topLeftCorner(k, k) - Matrix::Identity(k, k);
    return g.cwiseAbs().maxCoeff();
}

/// Shear exp(i k x^2) as a matrix, computed at `work_dim` and cropped.
inline Matrix shear_matrix(double k, int dim, int work_dim) {
    return function_of_x([k](double x) { return std::exp(kI * (k * x * x)); }, dim, work_dim);
}

/// Shear P(k) = exp(i k x^2): P^dag p P = p + 2 k x.
/// A truncated shear is only unitary on a block that shrinks like 1/(1+4k^2),
/// so the guard is the sheared vacuum's norm inside the cutoff.
inline FockOperator shear(double k, const FockConfig& cfg) {
    cfg.validate();
    const int d = cfg.dim();
    Matrix u = shear_matrix(k, d, 3 * d + 40);
    const double loss = 1.0 - u.col(0).squaredNorm();
    if (loss > 1e-6)
        throw TruncationError("shear k=" + std::to_string(k) + " loses " + std::to_string(loss) +
                              " of the vacuum norm at n_max=" + std::to_string(cfg.n_max));
    return FockOperator(std::move(u));
}

/// Squeezed vacuum S(r e^{i phi})|0> with S(z) = exp((z* a^2 - z a^dag^2)/2).
inline Vector squeezed_vacuum(double r, double phi, int dim) {
    Vector psi = Vector::Zero(dim);
    const Complex ratio = -std::exp(kI * phi) * std::tanh(r);
    Complex c = 1.0 / std::sqrt(std::cosh(r));
    for (int n = 0; 2 * n < dim; ++n) {
        psi(2 * n) = c;
        // c_{n+1} = c_n * ratio * sqrt((2n+1)(2n+2)) / (2 (n+1))
        c *= ratio * std::sqrt((2.0 * n + 1.0) * (2.0 * n + 2.0)) / (2.0 * (n + 1));
    }
    return psi;
}

/// Anti-unitary T: Fock-basis complex conjugation, x -> x, p -> -p.
inline FockOperator anti_unitary_T(const FockOperator& op) { return FockOperator(op.matrix().conjugate()); }

// ---------------------------------------------------------------------------
// Hermite functions and quadrature densities

/// Normalized Hermite functions psi_0..psi_{n_max} at x. Upward recurrence with
/// a running log scale so the Gaussian factor never underflows for large n.
inline void hermite_functions(double x, std::span<double> out) {
    const int count = static_cast<int>(out.size());
    if (count == 0) return;
    constexpr double kBig = 1e150;
    const double log_big = std::log(kBig);
    double log_scale = -0.5 * x * x;
    double factor = std::exp(log_scale);
    auto emit = [&](double v) {
        if (log_scale > -690.0 || v == 0.0) return v * factor;
        return std::copysign(std::exp(std::log(std::abs(v)) + log_scale), v);
    };
    double prev = 0.0;
    double cur = std::pow(kPi, -0.25);
    out[0] = emit(cur);
    for (int n = 0; n + 1 < count; ++n) {
        const double next = std::sqrt(2.0 / (n + 1)) * x * cur - std::sqrt(static_cast<double>(n) / (n + 1)) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > kBig) {
            cur /= kBig;
            prev /= kBig;
            log_scale += log_big;
            factor = std::exp(log_scale);
        }
        out[n + 1] = emit(cur);
    }
}

/// Table T(n, j) = psi_n(grid[j]).
inline RealMatrix hermite_table(int n_max, std::span<const double> grid) {
    RealMatrix t(n_max + 1, static_cast<Eigen::Index>(grid.size()));
    std::vector<double> buf(n_max + 1);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        hermite_functions(grid[j], buf);
        for (int n = 0; n <= n_max; ++n) t(n, static_cast<Eigen::Index>(j)) = buf[n];
    }
    return t;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

inline double trapezoid(std::span<const double> xs, std::span<const double> ys) {
    double s = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) s += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    return s;
}

/// Density <X; x_theta| op |X; x_theta> on an unchecked grid.
inline std::vector<double> quadrature_density(const FockOperator& op, double theta, std::span<const double> grid) {
    const int d = op.dim();
    const RealMatrix h = hermite_table(d - 1, grid);
    const Matrix rot = rotation_matrix(theta, d);
    const Matrix a = rot.adjoint() * op.matrix() * rot;
    const Matrix ah = a * h.cast<Complex>();
    std::vector<double> out(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out[j] = (h.col(jj).cast<Complex>().cwiseProduct(ah.col(jj))).sum().real();
    }
    return out;
}

/// Probability density of the rotated quadrature x_theta on `grid` (sorted).
/// Throws GridTooNarrow when the grid captures less than 0.999 of Tr[op].
inline std::vector<double> quadrature_wavefunction(const FockOperator& op, double theta, std::span<const double> grid) {
    if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("quadrature grid must be sorted");
    auto density = quadrature_density(op, theta, grid);
    const double captured = trapezoid(grid, density) / op.real_trace();
    if (captured < 0.999)
        throw GridTooNarrow("quadrature grid captures only " + std::to_string(captured) + " of the probability");
    return density;
}

/// Fock-basis expansion of wavefunctions sampled on a fixed uniform grid.
/// The trapezoid rule is spectrally accurate here because every integrand
/// decays like a Gaussian well inside the grid.
class PositionGrid {
public:
    PositionGrid(int dim, double half_width, double spacing)
        : xs_(linspace(-half_width, half_width, static_cast<int>(std::lround(2 * half_width / spacing)) + 1)),
          step_(xs_[1] - xs_[0]),
          table_(hermite_table(dim - 1, xs_)) {}

    /// Grid wide enough for every Hermite function below `dim` plus `margin`.
    static PositionGrid for_dim(int dim, double margin = 10.0, double spacing = 0.04) {
        return PositionGrid(dim, std::sqrt(2.0 * dim + 1.0) + margin, spacing);
    }

    const std::vector<double>& xs() const noexcept { return xs_; }
    int size() const noexcept { return static_cast<int>(xs_.size()); }
    int dim() const noexcept { return static_cast<int>(table_.rows()); }
    double step() const noexcept { return step_; }
    const RealMatrix& table() const noexcept { return table_; }

    /// c_n = int psi_n(x) f(x) dx for n < dim.
    Vector coefficients(const Vector& samples) const { return (table_.cast<Complex>() * samples) * step_; }

    /// Squared norm of f on the grid.
    double norm2(const Vector& samples) const { return samples.squaredNorm() * step_; }

private:
    std::vector<double> xs_;
    double step_;
    RealMatrix table_;
};

/// psi(x) = sum_n c_n psi_n(x) at arbitrary points.
inline Vector evaluate_wavefunction(const Vector& coeffs, std::span<const double> xs) {
    int last = static_cast<int>(coeffs.size()) - 1;
    while (last > 0 && std::abs(coeffs(last)) == 0.0) --last;
    Vector out(static_cast<Eigen::Index>(xs.size()));
    std::vector<double> h(last + 1);
    for (std::size_t j = 0; j < xs.size(); ++j) {
        hermite_functions(xs[j], h);
        Complex acc{};
        for (int n = 0; n <= last; ++n) acc += coeffs(n) * h[n];
        out(static_cast<Eigen::Index>(j)) = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Wigner function

struct WignerGrid {
    std::vector<double> xs;
    std::vector<double> ps;
    RealMatrix values;  // values(i, j) = W(xs[i], ps[j])

    double min() const { return values.minCoeff(); }
    double max() const { return values.maxCoeff(); }
};

/// W(x, p) for a single point; normalized so that the integral equals Tr[op].
inline double wigner_point(const Matrix& rho, double x, double p, std::vector<Complex>& work) {
    const int d = static_cast<int>(rho.rows());
    const Complex a(x, p);  // 2 alpha / sqrt(2) with alpha = (x + ip)/sqrt(2)
    const Complex ac = std::conj(a);
    work.assign(d, Complex{});
    work[0] = std::exp(-std::norm(a)) / kPi;
    double w = rho(0, 0).real() * work[0].real();
    for (int n = 1; n < d; ++n) {
        work[n] = (std::sqrt(2.0) * a * work[n - 1]) / std::sqrt(static_cast<double>(n));
        w += 2.0 * std::real(rho(0, n) * work[n]);
    }
    for (int m = 1; m < d; ++m) {
        Complex temp = work[m];
        work[m] = (std::sqrt(2.0) * ac * temp - std::sqrt(static_cast<double>(m)) * work[m - 1]) /
                  std::sqrt(static_cast<double>(m));
        w += std::real(rho(m, m) * work[m]);
        for (int n = m + 1; n < d; ++n) {
            const Complex next = (std::sqrt(2.0) * a * work[n - 1] - std::sqrt(static_cast<double>(m)) * temp) /
                                 std::sqrt(static_cast<double>(n));
            temp = work[n];
            work[n] = next;
            w += 2.0 * std::real(rho(m, n) * work[n]);
        }
    }
    return w;
}

inline WignerGrid wigner_grid(const FockOperator& op, std::span<const double> xs, std::span<const double> ps) {
    WignerGrid g{{xs.begin(), xs.end()}, {ps.begin(), ps.end()}, RealMatrix(xs.size(), ps.size())};
    const Matrix& rho = op.matrix();
    std::vector<Complex> work;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ps.size(); ++j)
            g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wigner_point(rho, xs[i], ps[j], work);
    return g;
}

// ---------------------------------------------------------------------------
// Two modes

/// Density operator of two modes in the tensor basis |n1> (x) |n2>, index n1*dim + n2.
class TwoModeState {
public:
    TwoModeState(int dim, Matrix m) : dim_(dim), m_(std::move(m)) {
        if (m_.rows() != dim_ * dim_ || m_.cols() != dim_ * dim_)
            throw std::invalid_argument("TwoModeState: matrix size must be dim^2");
    }

    static TwoModeState product(const FockOperator& a, const FockOperator& b) {
        if (a.dim() != b.dim()) throw std::invalid_argument("TwoModeState::product: dimension mismatch");
        const int d = a.dim();
        Matrix m(d * d, d * d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m.block(i * d, j * d, d, d) = a(i, j) * b.matrix();
        return TwoModeState(d, std::move(m));
    }

    static TwoModeState pure(int dim, const Vector& psi) { return TwoModeState(dim, psi * psi.adjoint()); }

    int dim() const noexcept { return dim_; }
    const Matrix& matrix() const noexcept { return m_; }
    Complex trace() const { return m_.trace(); }

    /// Reduced state of mode 1 or 2.
    FockOperator reduced(int mode) const {
        Matrix r = Matrix::Zero(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                for (int k = 0; k < dim_; ++k) {
                    if (mode == 1)
                        r(i, j) += m_(i * dim_ + k, j * dim_ + k);
                    else
                        r(i, j) += m_(k * dim_ + i, k * dim_ + j);
                }
        return FockOperator(std::move(r));
    }

    /// Expectation of (o1 (x) o2).
    Complex expectation(const Matrix& o1, const Matrix& o2) const {
        Matrix k(dim_ * dim_, dim_ * dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) k.block(i * dim_, j * dim_, dim_, dim_) = o1(i, j) * o2;
        return (m_ * k).trace();
    }

private:
    int dim_;
    Matrix m_;
};

/// |a> (x) |b> in the two-mode tensor basis.
inline Vector product_vector(const Vector& a, const Vector& b) {
    const auto d = b.size();
    Vector out(a.size() * d);
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * d, d) = a(i) * b;
    return out;
}

/// Two-mode mixing unitary. Input modes (1, 2) with amplitudes (alpha, beta) leave as
///   mode 1: sqrt(T) alpha - sqrt(1-T) beta,   mode 2: sqrt(1-T) alpha + sqrt(T) beta,
/// so a balanced splitter maps |alpha>|beta> to |(alpha-beta)/sqrt2>|(alpha+beta)/sqrt2>.
/// Exact on every block of total photon number <= dim-1.
inline Matrix beamsplitter_unitary(int dim, double transmittance) {
    if (transmittance < 0.0 || transmittance > 1.0) throw std::invalid_argument("transmittance must be in [0, 1]");
    const double t = std::sqrt(transmittance);
    const double r = std::sqrt(1.0 - transmittance);
    std::vector<double> lf(2 * dim + 1, 0.0);  // log factorials
    for (int i = 1; i <= 2 * dim; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
    auto binom = [&](int n, int k) { return std::exp(lf[n] - lf[k] - lf[n - k]); };

    Matrix u = Matrix::Zero(dim * dim, dim * dim);
    // a1^dag -> t b1^dag + r b2^dag ; a2^dag -> -r b1^dag + t b2^dag
    for (int n1 = 0; n1 < dim; ++n1)
        for (int n2 = 0; n2 < dim; ++n2) {
            const int total = n1 + n2;
            std::vector<double> poly(total + 1, 0.0);  // coefficient of b1^k b2^(total-k)
            for (int i = 0; i <= n1; ++i)
                for (int j = 0; j <= n2; ++j) {
                    const double c1 = binom(n1, i) * std::pow(t, i) * std::pow(r, n1 - i);
                    const double c2 = binom(n2, j) * std::pow(-r, j) * std::pow(t, n2 - j);
                    poly[i + j] += c1 * c2;
                }
            const double norm_in = std::exp(-0.5 * (lf[n1] + lf[n2]));
            for (int k = 0; k <= total; ++k) {
                const int m1 = k, m2 = total - k;
                if (m1 >= dim || m2 >= dim) continue;
                u(m1 * dim + m2, n1 * dim + n2) = poly[k] * norm_in * std::exp(0.5 * (lf[m1] + lf[m2]));
            }
        }
    return u;
}

inline TwoModeState beamsplitter(const TwoModeState& state, double transmittance) {
    const Matrix u = beamsplitter_unitary(state.dim(), transmittance);
    return TwoModeState(state.dim(), u * state.matrix() * u.adjoint());
}

}  // namespace nlqm
