// Command line front end. Subcommands:
//   run <experiment>   execute one experiment and write CSV results
//   accept [--out d]   run the full acceptance sweep, one PASS/FAIL line each
#include <cstdio>

#include "CLI11.hpp"

int main(int argc, char** argv) {
    CLI::App app{"sparse stream semantic register simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run one experiment");
    std::string experiment;
    run->add_option("experiment", experiment, "experiment name")->required();

    auto* accept = app.add_subcommand("accept", "run the acceptance sweep");
    std::string out_dir = "results";
    accept->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    std::fprintf(stderr, "not wired up yet\n");
    return 1;
}
