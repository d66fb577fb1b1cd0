// Command-line front end. Links the C API only; exit codes mirror
// cdsim_status (0 ok, 1 usage, 2 parse, 3 validation, 4 runtime, 5 io).

#include "cdsim.h"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

namespace {

int fail(cdsim_status status) {
    std::cerr << "error: " << cdsim_last_error() << "\n";
    return static_cast<int>(status);
}

int cmd_validate(const std::string& file) {
    cdsim_scenario* scenario = nullptr;
    cdsim_status status = cdsim_scenario_load_file(file.c_str(), &scenario);
    if (status != CDSIM_OK) return fail(status);
    status = cdsim_scenario_validate(scenario);
    if (status != CDSIM_OK) {
        std::cerr << "invalid scenario (" << cdsim_scenario_mechanism(scenario) << "):\n"
                  << cdsim_last_error();
        cdsim_scenario_free(scenario);
        return static_cast<int>(status);
    }
    std::cout << "valid " << cdsim_scenario_mechanism(scenario) << " scenario: " << file << "\n";
    cdsim_scenario_free(scenario);
    return 0;
}

int cmd_run(const std::string& file, const std::string& out_dir, bool have_seed, std::uint64_t seed,
            int markets, const std::string& epsilon, const std::string& mechanism) {
    cdsim_scenario* scenario = nullptr;
    cdsim_status status = cdsim_scenario_load_file(file.c_str(), &scenario);
    if (status != CDSIM_OK) return fail(status);

    cdsim_options* options = cdsim_options_new();
    if (have_seed) cdsim_options_set_seed(options, seed);
    if (markets > 0) {
        status = cdsim_options_set_markets(options, markets);
        if (status != CDSIM_OK) goto done;
    }
    if (!epsilon.empty()) {
        status = cdsim_options_set_epsilon(options, epsilon.c_str());
        if (status != CDSIM_OK) goto done;
    }
    if (!mechanism.empty()) {
        status = cdsim_options_set_mechanism(options, mechanism.c_str());
        if (status != CDSIM_OK) goto done;
    }

    {
        cdsim_result* result = nullptr;
        status = cdsim_run(scenario, options, &result);
        if (status == CDSIM_OK) {
            status = cdsim_result_write(result, out_dir.c_str());
            if (status == CDSIM_OK)
                std::cout << "mechanism: " << cdsim_result_mechanism(result) << "\n"
                          << "wrote prices.csv frustration.csv trades.csv final.csv trace.txt to "
                          << out_dir << "\n";
            cdsim_result_free(result);
        }
    }

done:
    cdsim_options_free(options);
    cdsim_scenario_free(scenario);
    if (status != CDSIM_OK) return fail(status);
    return 0;
}

int cmd_trace_replay(const std::string& file) {
    cdsim_status status = cdsim_trace_replay_file(file.c_str());
    if (status != CDSIM_OK) {
        std::cerr << "replay failed: " << cdsim_last_error() << "\n";
        return static_cast<int>(status);
    }
    std::cout << "trace verified: " << file << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"crisis-distribution market simulator"};
    app.require_subcommand(1);

    std::string validate_file;
    CLI::App* validate = app.add_subcommand("validate", "parse and validate a scenario file");
    validate->add_option("file", validate_file, "scenario file")->required();

    std::string run_file, out_dir = "out", epsilon, mechanism;
    std::uint64_t seed = 0;
    bool have_seed = false;
    int markets = 0;
    CLI::App* run = app.add_subcommand("run", "run a scenario and write the result tables");
    run->add_option("file", run_file, "scenario file")->required();
    run->add_option("--seed", seed, "override the rng seed")->each([&](const std::string&) {
        have_seed = true;
    });
    run->add_option("--markets", markets, "override the number of markets");
    run->add_option("--epsilon", epsilon, "override epsilon (couple mechanism), e.g. 1/4");
    run->add_option("--mechanism", mechanism, "assert the mechanism (couple|seller)");
    run->add_option("--out", out_dir, "output directory (default: out)");

    std::string trace_file;
    CLI::App* replay = app.add_subcommand("trace-replay", "verify a trace by replaying it");
    replay->add_option("trace", trace_file, "trace file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (validate->parsed()) return cmd_validate(validate_file);
    if (run->parsed())
        return cmd_run(run_file, out_dir, have_seed, seed, markets, epsilon, mechanism);
    if (replay->parsed()) return cmd_trace_replay(trace_file);
    return 1;
}
