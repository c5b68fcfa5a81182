#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "poisson_bandit/poisson_bandit.hpp"

int main(int argc, char** argv) {
    using namespace poisson_bandit;

    CLI::App app{"Bayesian strategies and risk for the Poissonian two-armed bandit"};
    std::string command;
    std::string config_path;
    app.add_option("command", command, "solve | linearized | evaluate | simulate | minimax | audit")
        ->required()
        ->check(CLI::IsMember({"solve", "linearized", "evaluate", "simulate", "minimax", "audit"}));
    app.add_option("--config", config_path, "key = value configuration file")->required();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const IoError& e) {
        std::cerr << "poisson-bandit: io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "poisson-bandit: validation error: " << e.what() << '\n';
        return kExitValidation;
    }
    if (to_string(cfg.command) != command) {
        std::cerr << "poisson-bandit: validation error: config command '" << to_string(cfg.command)
                  << "' does not match '" << command << "'\n";
        return kExitValidation;
    }
    return run(cfg);
}
