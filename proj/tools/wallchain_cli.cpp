#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "wallchain/cli_io.hpp"
#include "wallchain/selftest.hpp"

using namespace wallchain;

int main(int argc, char** argv) {
    CLI::App app{"Acoustic pipe with wall oscillators: finite chains and their homogenized limit"};
    app.require_subcommand(1);

    std::string config;
    std::string out = "out";
    unsigned jobs = 1;
    bool permissive = false;

    const char* verbs[] = {"simulate-finite", "simulate-effective", "converge", "scatter", "bandgap",
                           "static-check"};
    for (const char* v : verbs) {
        auto* sub = app.add_subcommand(v, std::string("run the ") + v + " experiment");
        sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--permissive", permissive, "unknown config keys are warnings");
    }
    auto* self = app.add_subcommand("selftest", "run the acceptance battery");
    self->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (self->parsed()) {
            const auto results = run_selftest(std::cout, {jobs});
            for (const auto& r : results) {
                if (!r.passed) return 1;
            }
            return 0;
        }
        const std::string verb = app.get_subcommands().front()->get_name();
        std::vector<std::string> warnings;
        const auto cfg = load_config(config, {permissive, parse_experiment(verb)}, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        const auto summary = run(cfg, out, jobs, std::cerr);
        for (const auto& f : summary.files) std::cout << f.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
