#include "catch_amalgamated.hpp"

#include "nlqm/fock.hpp"
#include "nlqm/random.hpp"

using namespace nlqm;
using Catch::Matchers::WithinAbs;

namespace {

Vector coherent_vector(Complex alpha, int dim) {
    Vector v = displacement_matrix(alpha, dim).col(0);
    return v;
}

FockOperator random_state(int dim, int support, std::uint64_t seed) {
    Rng rng(seed);
    Vector psi = Vector::Zero(dim);
    for (int n = 0; n < support; ++n) psi(n) = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
    psi.normalize();
    return FockOperator::projector(psi);
}

}  // namespace

TEST_CASE("quadratures for a two-level truncation") {
    const auto q = ladder_and_quadratures({1, 1.0});
    CHECK_THAT(q.x(0, 1).real(), WithinAbs(1.0 / std::sqrt(2.0), 1e-15));
    CHECK_THAT(q.x(1, 0).real(), WithinAbs(1.0 / std::sqrt(2.0), 1e-15));
    CHECK(q.x(0, 0) == Complex{});
}

TEST_CASE("vacuum moments") {
    const auto q = ladder_and_quadratures({30, 1.0});
    const Matrix x2 = q.x.matrix() * q.x.matrix();
    CHECK_THAT(x2(0, 0).real(), WithinAbs(0.5, 1e-15));
    const Matrix nlq = q.p.matrix() + 0.52 * x2;
    CHECK_THAT(nlq(0, 0).real(), WithinAbs(0.26, 1e-15));
}

TEST_CASE("commutator holds away from the cutoff") {
    const int d = 31;
    const Matrix x = x_matrix(d), p = p_matrix(d);
    const Matrix c = x * p - p * x;
    const int k = d - 2;
    const double err = (c.topLeftCorner(k, k) - kI * Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
    CHECK(err < 1e-9);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(FockConfig({0, 1.0}).validate(), ConfigError);
    CHECK_THROWS_AS(FockConfig({5, 2.0}).validate(), ConfigError);
}

TEST_CASE("displacement") {
    const FockConfig cfg{30, 1.0};
    const int d = cfg.dim();
    SECTION("zero shift is the identity") {
        CHECK(displacement(0, 0, cfg).matrix().isApprox(Matrix::Identity(d, d), 1e-15));
    }
    SECTION("coherent mean") {
        const Vector v = displacement(1.0, 0.0, cfg).matrix().col(0);
        CHECK_THAT((v.adjoint() * x_matrix(d) * v)(0, 0).real(), WithinAbs(1.0, 1e-9));
        CHECK_THAT((v.adjoint() * p_matrix(d) * v)(0, 0).real(), WithinAbs(0.0, 1e-12));
    }
    SECTION("Heisenberg action on the low block") {
        const double dx = 0.7, dp = -1.1;
        const Matrix u = displacement(dx, dp, cfg).matrix();
        const int k = 12;
        const Matrix xs = (u.adjoint() * x_matrix(d) * u).topLeftCorner(k, k);
        const Matrix ps = (u.adjoint() * p_matrix(d) * u).topLeftCorner(k, k);
        const Matrix x_expect = x_matrix(d).topLeftCorner(k, k) + dx * Matrix::Identity(k, k);
        const Matrix p_expect = p_matrix(d).topLeftCorner(k, k) + dp * Matrix::Identity(k, k);
        CHECK((xs - x_expect).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((ps - p_expect).cwiseAbs().maxCoeff() < 1e-9);
    }
    SECTION("unitary on the lower block for small shifts") {
        CHECK(unitarity_defect(displacement(0.2, -0.1, cfg).matrix()) < 1e-6);
    }
    SECTION("pure p shift") {
        const Vector v = displacement(0.0, std::sqrt(2.0), cfg).matrix().col(0);
        CHECK_THAT((v.adjoint() * x_matrix(d) * v)(0, 0).real(), WithinAbs(0.0, 1e-12));
        CHECK_THAT((v.adjoint() * p_matrix(d) * v)(0, 0).real(), WithinAbs(std::sqrt(2.0), 1e-9));
    }
    SECTION("too large for the cutoff") { CHECK_THROWS_AS(displacement(8.0, 0.0, FockConfig{10, 1.0}), TruncationError); }
}

TEST_CASE("shear") {
    const FockConfig cfg{30, 1.0};
    const int d = cfg.dim();
    CHECK(shear(0.0, cfg).matrix().isApprox(Matrix::Identity(d, d), 1e-12));
    CHECK(unitarity_defect(shear(0.02, cfg).matrix()) < 1e-6);

    const double k = std::sqrt(2.0) * 0.52;  // tan(theta) at q = 1
    const Matrix p = p_matrix(d);

    // Sheared vacuum: <p> stays 0 and <p^2> = 1/2 + 4k^2 <x^2>.
    const Vector v = shear(k, cfg).matrix().col(0);
    CHECK_THAT((v.adjoint() * p * v)(0, 0).real(), WithinAbs(0.0, 1e-10));
    CHECK_THAT((v.adjoint() * p * p * v)(0, 0).real(), WithinAbs(0.5 + 2.0 * k * k, 1e-6));

    // Heisenberg action on the block the truncated shear can represent.
    const int big = 61;
    const Matrix u = shear_matrix(k, big, 3 * big + 40);
    const int b = 4;
    const Matrix ps = (u.adjoint() * p_matrix(big) * u).topLeftCorner(b, b);
    const Matrix expect = (p_matrix(big) + 2.0 * k * x_matrix(big)).topLeftCorner(b, b);
    CHECK((ps - expect).cwiseAbs().maxCoeff() < 1e-8);

    CHECK_THROWS_AS(shear(3.0, FockConfig{6, 1.0}), TruncationError);
}

TEST_CASE("position grid expansion") {
    const int d = 31;
    const auto grid = PositionGrid::for_dim(d);
    // A coherent state sampled in x round-trips to its Fock coefficients.
    const Complex alpha(0.9, -0.5);
    const Vector c = displacement_matrix(alpha, d).col(0);
    const Vector f = evaluate_wavefunction(c, grid.xs());
    CHECK((grid.coefficients(f) - c).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THAT(grid.norm2(f), WithinAbs(1.0, 1e-12));
}

TEST_CASE("beamsplitter") {
    const int d = 16;
    SECTION("full transmission is the identity") {
        CHECK(beamsplitter_unitary(d, 1.0).isApprox(Matrix::Identity(d * d, d * d), 1e-14));
    }
    SECTION("coherent inputs leave as coherent states") {
        const Complex alpha(1.1, -0.4), beta(-0.3, 0.5);
        const Matrix u = beamsplitter_unitary(d, 0.5);
        const Vector out = u * product_vector(coherent_vector(alpha, d), coherent_vector(beta, d));
        const Vector expect =
            product_vector(coherent_vector((alpha - beta) / std::sqrt(2.0), d), coherent_vector((alpha + beta) / std::sqrt(2.0), d));
        CHECK(std::abs(expect.dot(out)) > 1.0 - 1e-8);
    }
    SECTION("photon number is conserved") {
        const FockOperator a = random_state(d, 4, 1), b = random_state(d, 5, 2);
        const TwoModeState in = TwoModeState::product(a, b);
        const TwoModeState out = beamsplitter(in, 0.3);
        const Matrix n = number_matrix(d), id = Matrix::Identity(d, d);
        const double before = (in.expectation(n, id) + in.expectation(id, n)).real();
        const double after = (out.expectation(n, id) + out.expectation(id, n)).real();
        CHECK_THAT(after, WithinAbs(before, 1e-9));
        CHECK_THAT(out.trace().real(), WithinAbs(1.0, 1e-9));
    }
    SECTION("partial traces of a product") {
        const FockOperator a = random_state(d, 3, 3), b = random_state(d, 3, 4);
        const TwoModeState s = TwoModeState::product(a, b);
        CHECK(s.reduced(1).matrix().isApprox(a.matrix(), 1e-12));
        CHECK(s.reduced(2).matrix().isApprox(b.matrix(), 1e-12));
    }
}

TEST_CASE("anti-unitary T") {
    const int d = 12;
    Vector psi = Vector::Zero(d);
    psi(0) = 0.8;
    psi(1) = Complex(0, -0.6);
    const FockOperator t = anti_unitary_T(FockOperator::projector(psi));
    Vector flipped = psi.conjugate();
    CHECK(t.matrix().isApprox(flipped * flipped.adjoint(), 1e-15));

    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        const FockOperator rho = random_state(d, 5, seed);
        const FockOperator tr = anti_unitary_T(rho);
        CHECK_THAT(tr.expectation(x_matrix(d)).real(), WithinAbs(rho.expectation(x_matrix(d)).real(), 1e-12));
        CHECK_THAT(tr.expectation(p_matrix(d)).real(), WithinAbs(-rho.expectation(p_matrix(d)).real(), 1e-12));
        CHECK(anti_unitary_T(tr).matrix() == rho.matrix());
    }
}

TEST_CASE("Hermite functions stay finite at high order") {
    std::vector<double> h(301);
    hermite_functions(20.0, h);
    for (double v : h) CHECK(std::isfinite(v));
    // Orthonormality by Gauss-Hermite style dense trapezoid.
    const auto grid = linspace(-12, 12, 4001);
    const RealMatrix t = hermite_table(40, grid);
    const double dx = grid[1] - grid[0];
    const RealMatrix gram = t * t.transpose() * dx;
    CHECK((gram - RealMatrix::Identity(41, 41)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("quadrature densities") {
    const int d = 31;
    const auto grid = linspace(-8, 8, 1601);
    SECTION("vacuum is a variance-1/2 Gaussian at any angle") {
        for (double th : {0.0, 0.4, 1.3}) {
            const auto rho = quadrature_wavefunction(FockOperator::fock(0, d), th, grid);
            for (std::size_t j = 0; j < grid.size(); j += 100)
                CHECK_THAT(rho[j], WithinAbs(std::exp(-grid[j] * grid[j]) / std::sqrt(kPi), 1e-12));
        }
    }
    SECTION("single photon has a node at the origin") {
        const auto rho = quadrature_wavefunction(FockOperator::fock(1, d), 0.0, grid);
        CHECK(rho[800] < 1e-20);
    }
    SECTION("coherent marginal is centred on its amplitude") {
        const double ax = 1.3, ap = -0.7;
        const FockOperator rho = FockOperator::projector(displacement(ax, ap, {30, 1.0}).matrix().col(0));
        const auto dens = quadrature_wavefunction(rho, 0.0, grid);
        for (std::size_t j = 0; j < grid.size(); j += 50) {
            const double z = grid[j] - ax;
            CHECK_THAT(dens[j], WithinAbs(std::exp(-z * z) / std::sqrt(kPi), 1e-9));
        }
        // p marginal: x_theta at theta = -pi/2 is p.
        const auto pd = quadrature_wavefunction(rho, -kPi / 2, grid);
        for (std::size_t j = 0; j < grid.size(); j += 50) {
            const double z = grid[j] - ap;
            CHECK_THAT(pd[j], WithinAbs(std::exp(-z * z) / std::sqrt(kPi), 1e-9));
        }
    }
    SECTION("narrow grid") {
        CHECK_THROWS_AS(quadrature_wavefunction(FockOperator::fock(0, d), 0.0, linspace(-1, 1, 101)), GridTooNarrow);
    }
}

TEST_CASE("Wigner function") {
    const int d = 31;
    const auto xs = linspace(-7, 7, 281);
    SECTION("vacuum peak") {
        const auto w = wigner_grid(FockOperator::fock(0, d), std::vector<double>{0.0}, std::vector<double>{0.0});
        CHECK_THAT(w.values(0, 0), WithinAbs(1.0 / kPi, 1e-14));
    }
    SECTION("single photon is negative at the origin") {
        const auto w = wigner_grid(FockOperator::fock(1, d), std::vector<double>{0.0}, std::vector<double>{0.0});
        CHECK_THAT(w.values(0, 0), WithinAbs(-1.0 / kPi, 1e-14));
    }
    SECTION("coherent state peaks at its amplitude") {
        const FockOperator rho = FockOperator::projector(displacement(1.0, -2.0, {30, 1.0}).matrix().col(0));
        const auto w = wigner_grid(rho, std::vector<double>{1.0}, std::vector<double>{-2.0});
        CHECK_THAT(w.values(0, 0), WithinAbs(1.0 / kPi, 1e-9));
    }
    SECTION("superposition ancilla has negativity") {
        Vector psi = Vector::Zero(d);
        psi(0) = 0.8;
        psi(1) = Complex(0, 0.6);
        const auto w = wigner_grid(FockOperator::projector(psi), linspace(-3, 3, 61), linspace(-3, 3, 61));
        CHECK(w.min() < 0.0);
    }
    SECTION("marginals match quadrature densities") {
        for (std::uint64_t seed : {5u, 6u, 7u}) {
            const FockOperator rho = random_state(d, 6, seed);
            const auto w = wigner_grid(rho, xs, xs);
            const double dp = xs[1] - xs[0];
            const auto xd = quadrature_density(rho, 0.0, xs);
            const auto pd = quadrature_density(rho, -kPi / 2, xs);
            double total = 0.0, err_x = 0.0, err_p = 0.0;
            for (int i = 0; i < static_cast<int>(xs.size()); ++i) {
                const double mx = w.values.row(i).sum() * dp;
                const double mp = w.values.col(i).sum() * dp;
                err_x = std::max(err_x, std::abs(mx - xd[i]));
                err_p = std::max(err_p, std::abs(mp - pd[i]));
                total += mx * dp;
            }
            CHECK(err_x < 1e-4);
            CHECK(err_p < 1e-4);
            CHECK_THAT(total, WithinAbs(1.0, 1e-4));
        }
    }
}
