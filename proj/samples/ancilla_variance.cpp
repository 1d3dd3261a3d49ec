// Nonlinear squeezing of the canonical ancilla 0.8|0> - 0.6i|1> as loss mixes it,
// compared with the Gaussian bound and with the detector state it produces.
//
//   sample_ancilla_variance [gamma]

#include <cstdio>
#include <cstdlib>

#include "nlqm/povm.hpp"
#include "nlqm/states.hpp"

using namespace nlqm;

int main(int argc, char** argv) {
    const double gamma = argc > 1 ? std::atof(argv[1]) : 0.52;
    const FockConfig cfg{30, 1.0};
    const GaussianBound bound = gaussian_bound(gamma);
    std::printf("gamma = %.3f, Gaussian bound = %.4f\n\n", gamma, bound.value);
    std::printf("%10s %14s %14s %10s\n", "efficiency", "var(p-gx^2)", "detector var", "squeezed");

    for (double eta : {1.0, 0.9, 0.8, 0.7, 0.6, 0.5}) {
        AncillaSpec spec = AncillaSpec::canonical();
        spec.efficiency = eta;
        const FockOperator anc = ancilla_state(spec, cfg);
        const double v = nonlinear_variance(anc, {gamma, -1});
        // The ideal element for m = 0 inherits the ancilla's opposite-sign variance.
        const double det = povm_m(0.0, anc, gamma, 0.6, 64, cfg).variance(gamma);
        std::printf("%10.2f %14.4f %14.4f %10s\n", eta, v, det, v < bound.value ? "yes" : "no");
    }
    return 0;
}
