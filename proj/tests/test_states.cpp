#include "catch_amalgamated.hpp"

#include <filesystem>

#include "nlqm/random.hpp"
#include "nlqm/states.hpp"

using namespace nlqm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const FockConfig kCfg{30, 1.0};

FockOperator gaussian_pure(double r, double phi, double d, double dp, int dim) {
    const Vector sq = squeezed_vacuum(r, phi, dim + 40);
    const Vector v = (displacement_matrix(amplitude_of(d, dp), dim + 40) * sq).head(dim);
    return FockOperator::projector(v);
}

}  // namespace

TEST_CASE("coherent states") {
    CHECK(coherent_state({0, 0}, kCfg).matrix().isApprox(FockOperator::fock(0, kCfg.dim()).matrix(), 1e-15));

    const FockConfig big{40, 1.0};
    const FockOperator rho = coherent_state({3.5, 0.0}, big);
    CHECK_THAT(rho.expectation(x_matrix(big.dim())).real(), WithinAbs(3.5, 1e-6));

    const CoherentProbe probe{1.2, -0.8};
    const FockOperator c = coherent_state(probe, kCfg);
    CHECK_THAT(c.expectation(number_matrix(kCfg.dim())).real(), WithinAbs((1.44 + 0.64) / 2, 1e-9));
    CHECK_THAT(c.expectation(p_matrix(kCfg.dim())).real(), WithinAbs(-0.8, 1e-9));

    CHECK_THROWS_AS(coherent_state({9.0, 0.0}, FockConfig{20, 1.0}), TruncationError);

    const auto polar = CoherentProbe::from_polar(3.5, 0.0);
    CHECK_THAT(polar.alpha_x, WithinAbs(3.5 * std::sqrt(2.0), 1e-12));
    CHECK_THAT(polar.magnitude(), WithinAbs(3.5, 1e-12));
}

TEST_CASE("ancilla states") {
    SECTION("vacuum") {
        AncillaSpec s;
        CHECK(ancilla_state(s, kCfg).matrix() == FockOperator::fock(0, kCfg.dim()).matrix());
    }
    SECTION("canonical superposition") {
        const FockOperator rho = ancilla_state(AncillaSpec::canonical(), kCfg);
        CHECK_THAT(rho.purity(), WithinAbs(1.0, 1e-12));
        CHECK_THAT(rho.expectation(number_matrix(kCfg.dim())).real(), WithinAbs(0.36, 1e-12));
    }
    SECTION("unnormalized coefficients are rejected") {
        AncillaSpec s = AncillaSpec::canonical();
        s.coefficients[0] = 0.9;
        CHECK_THROWS_AS(ancilla_state(s, kCfg), ConfigError);
    }
    SECTION("density file round trip is bit exact") {
        const FockOperator rho = apply_loss(ancilla_state(AncillaSpec::canonical(), kCfg), 0.61);
        const auto path = std::filesystem::temp_directory_path() / "nlqm_test_ancilla.json";
        save_operator(rho, path);
        AncillaSpec s;
        s.kind = AncillaSpec::Kind::density_file;
        s.path = path;
        CHECK(ancilla_state(s, kCfg).matrix() == rho.matrix());
        std::filesystem::remove(path);
    }
    SECTION("malformed density file") {
        const auto path = std::filesystem::temp_directory_path() / "nlqm_test_bad.json";
        write_text(path, R"({"dim": 2, "data": [[1, 0]]})");
        AncillaSpec s;
        s.kind = AncillaSpec::Kind::density_file;
        s.path = path;
        CHECK_THROWS_AS(ancilla_state(s, kCfg), FileFormatError);
        std::filesystem::remove(path);
    }
}

TEST_CASE("nonlinear variance") {
    const FockOperator vac = FockOperator::fock(0, kCfg.dim());
    CHECK_THAT(nonlinear_variance(vac, {0.52, +1}), WithinAbs(0.6352, 1e-12));
    CHECK_THAT(nonlinear_variance(vac, {0.52, -1}), WithinAbs(0.6352, 1e-12));
    CHECK_THAT(nonlinear_variance(vac, {0.0, +1}), WithinAbs(0.5, 1e-12));

    // Values from an independent dense evaluation of the two-level state.
    const FockOperator canon = ancilla_state(AncillaSpec::canonical(), kCfg);
    const double g = 0.52;
    const double direct = nonlinear_variance(canon, {g, -1});
    CHECK_THAT(direct, WithinAbs(0.43989, 1e-4));
    CHECK_THAT(nonlinear_variance(canon, {g, +1}), WithinAbs(0.94820, 1e-4));

    SECTION("T with sign flip preserves the metric") {
        for (std::uint64_t seed = 1; seed <= 8; ++seed) {
            Rng rng(seed);
            Vector psi = Vector::Zero(kCfg.dim());
            for (int n = 0; n < 6; ++n) psi(n) = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
            psi.normalize();
            const FockOperator rho = FockOperator::projector(psi);
            CHECK_THAT(nonlinear_variance(anti_unitary_T(rho), {g, +1}), WithinAbs(nonlinear_variance(rho, {g, -1}), 1e-10));
        }
    }
}

TEST_CASE("pure loss") {
    const FockOperator one = FockOperator::fock(1, kCfg.dim());
    const FockOperator out = apply_loss(one, 0.91);
    CHECK_THAT(out(1, 1).real(), WithinAbs(0.91, 1e-12));
    CHECK_THAT(out(0, 0).real(), WithinAbs(0.09, 1e-12));

    const FockOperator rho = ancilla_state(AncillaSpec::canonical(), kCfg);
    CHECK(apply_loss(rho, 1.0).matrix() == rho.matrix());
    CHECK(apply_loss(rho, 0.0).matrix().isApprox(FockOperator::fock(0, kCfg.dim()).matrix(), 1e-15));

    const FockOperator coh = coherent_state({1.0, 2.0}, kCfg);
    const FockOperator lossy = apply_loss(coh, 0.7);
    CHECK_THAT(lossy.real_trace(), WithinAbs(1.0, 1e-9));
    const Matrix n = number_matrix(kCfg.dim());
    CHECK_THAT(lossy.expectation(n).real(), WithinAbs(0.7 * coh.expectation(n).real(), 1e-9));

    SECTION("Choi matrix is positive") {
        const int d = 5;
        Matrix choi = Matrix::Zero(d * d, d * d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                Matrix e = Matrix::Zero(d, d);
                e(i, j) = 1.0;
                choi.block(i * d, j * d, d, d) = apply_loss(FockOperator(e), 0.37).matrix();
            }
        Eigen::SelfAdjointEigenSolver<Matrix> es(choi);
        CHECK(es.eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("Gaussian bound") {
    const double g = 0.52;
    const auto bound = gaussian_bound(g);
    // Minimising 1/(4a) + 2 g^2 a^2 over var(x) = a gives (3/8)(4g)^(2/3).
    CHECK_THAT(bound.value, WithinAbs(0.375 * std::pow(4 * g, 2.0 / 3.0), 1e-7));
    CHECK(bound.attained);
    CHECK(0.56 / bound.value > 0.85);
    CHECK(0.56 / bound.value < 0.95);

    const auto zero = gaussian_bound(0.0);
    CHECK(zero.value == 0.0);
    CHECK_FALSE(zero.attained);

    for (double gg = 0.05; gg <= 1.0; gg += 0.05) CHECK(gaussian_bound(gg).value <= 0.5 * (1 + gg * gg) + 1e-12);

    SECTION("closed form agrees with Fock-space moments") {
        Rng rng(42);
        for (int t = 0; t < 10; ++t) {
            const double r = 0.6 * rng.uniform(), phi = kPi * rng.uniform();
            const double d = 2.0 * rng.uniform() - 1.0, dp = 2.0 * rng.uniform() - 1.0;
            const double closed = gaussian_nonlinear_variance(GaussianMoments::from_parameters(r, phi, d, dp), g);
            const double fock = nonlinear_variance(gaussian_pure(r, phi, d, dp, 60), {g, +1});
            CHECK_THAT(fock, WithinAbs(closed, 1e-8));
        }
    }
    SECTION("sampled Gaussian states respect the bound") {
        Rng rng(7);
        for (int t = 0; t < 2000; ++t) {
            const double r = 3.0 * rng.uniform(), phi = 2 * kPi * rng.uniform();
            const double d = 10.0 * rng.uniform() - 5.0, dp = 4.0 * rng.uniform() - 2.0;
            CHECK(gaussian_nonlinear_variance(GaussianMoments::from_parameters(r, phi, d, dp), g) >= bound.value - 1e-6);
        }
    }
}

TEST_CASE("ancilla loss calibration") {
    const double eta = calibrate_ancilla_efficiency(0.56, 0.52, kCfg);
    AncillaSpec s = AncillaSpec::canonical();
    s.efficiency = eta;
    CHECK_THAT(nonlinear_variance(ancilla_state(s, kCfg), {0.52, -1}), WithinAbs(0.56, 1e-9));
    CHECK(eta > 0.55);
    CHECK(eta < 0.65);
}
