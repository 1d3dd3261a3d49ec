// Variance of the outcome m against the probe's x displacement, with the
// nonlinear feedforward and with post-processed heterodyne detection.
// Prints a CSV table on stdout.
//
//   sample_heterodyne_vs_feedforward [shots_per_probe] [seed]

#include <cstdio>
#include <cstdlib>

#include "nlqm/circuit.hpp"

using namespace nlqm;

int main(int argc, char** argv) {
    const std::size_t shots = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 100000;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;
    const double gamma = 0.52;
    const FockOperator vac = FockOperator::fock(0, 4);

    const ShotSimulator ff(vac, FeedforwardPolicy::exact(gamma), {});
    const ShotSimulator het(vac, FeedforwardPolicy::disabled(gamma), {});
    std::vector<CoherentProbe> probes;
    for (double ax : linspace(0.0, 4.0, 9)) probes.push_back({ax, 0.0});
    const auto a = moment_scan(probes, shots, ff, seed);
    const auto b = moment_scan(probes, shots, het, seed);

    std::printf("alpha_x,input_var,feedforward_var,heterodyne_var,feedforward_excess,heterodyne_excess\n");
    for (std::size_t i = 0; i < probes.size(); ++i)
        std::printf("%.2f,%.4f,%.4f,%.4f,%.4f,%.4f\n", probes[i].alpha_x,
                    coherent_nonlinear_variance(probes[i].alpha_x, gamma), a[i].variance, b[i].variance, a[i].excess,
                    b[i].excess);
    return 0;
}
