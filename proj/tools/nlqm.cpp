// Command-line front end for the nonlinear-quadrature measurement pipelines.
//
//   nlqm simulate --config run.json --seed 7 --out runs/a
//   nlqm tomo --input runs/a/records.csv --out runs/a-tomo --set tomography.bootstrap.resamples=100
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical
// convergence failure, 1 anything else.

#include <iostream>

#include "CLI11.hpp"
#include "nlqm/run.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = 0;
    bool replay = false;
    std::string input;
    std::vector<std::string> overrides;
};

nlqm::RunConfig resolve(const Flags& f, const std::string& command) {
    nlqm::Json j = f.config.empty() ? nlqm::Json::object() : nlqm::load_config_json(f.config);
    for (const auto& o : f.overrides) nlqm::apply_override(j, o);
    if (f.seed) j["seed"] = *f.seed;
    if (!f.out.empty()) j["out"] = f.out;
    if (f.threads > 0) j["threads"] = f.threads;
    if (f.replay) j["replay"] = true;
    if (!f.input.empty()) {
        if (command == "tomo") j["tomography"]["records"] = f.input;
        else if (command == "wigner") j["wigner"]["operator"] = f.input;
        else throw nlqm::ConfigError("input", "--input is only used by tomo and wigner");
    }
    // Commands that consume no randomness still demand a seed; default it there.
    if (!j.contains("seed") && (command == "bound" || command == "lut-check" || command == "wigner")) j["seed"] = 0;
    return nlqm::RunConfig::from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlinear quadrature measurement: simulation, detector model and tomography"};
    app.require_subcommand(1);
    app.fallthrough();

    Flags f;
    app.add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", f.seed, "RNG seed (overrides the config)");
    app.add_option("--out", f.out, "output directory (overrides the config)");
    app.add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--replay", f.replay, "single-threaded, timing-free manifests for byte-identical reruns");
    app.add_option("--set", f.overrides, "override a config key, e.g. --set loss.eta1=0.97");
    app.add_option("--input", f.input, "record file (tomo) or operator file (wigner)");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "Monte-Carlo records of the feedforward measurement"},
        {"povm", "theoretical detector states and variance tables"},
        {"tomo", "maximum-likelihood detector tomography of a record file"},
        {"wigner", "Wigner function raster of a stored operator"},
        {"bound", "Gaussian lower bound on var(p + gamma x^2)"},
        {"lut-check", "lookup-table error sweep and latency budget"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const nlqm::RunConfig cfg = resolve(f, command);
        nlqm::CommandOutput out;
        if (command == "simulate") out = nlqm::cmd_simulate(cfg);
        else if (command == "povm") out = nlqm::cmd_povm(cfg);
        else if (command == "tomo") out = nlqm::cmd_tomo(cfg);
        else if (command == "wigner") out = nlqm::cmd_wigner(cfg);
        else if (command == "bound") out = nlqm::cmd_bound(cfg);
        else out = nlqm::cmd_lut_check(cfg);
        std::cout << out.summary.dump(2) << '\n';
        return 0;
    } catch (const nlqm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const nlqm::FileFormatError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const nlqm::OptimizationDidNotConverge& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return 3;
    } catch (const nlqm::QuadratureNotConverged& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
