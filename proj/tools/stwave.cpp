// Experiment runner: reads a flat key=value config with one section per
// experiment and writes one CSV per section.

#include <cstdlib>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "stwave/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stwave: space-time spline discretizations of the acoustic wave equation"};

    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    unsigned seed = 12345;

    app.add_option("--config", config_path, "experiment config file")->required();
    app.add_option("--out", out_dir, "output directory for CSV files");
    app.add_option("--threads", threads,
                   "assembly threads (default: STWAVE_THREADS or 1)");
    app.add_option("--seed", seed, "base seed for randomized experiments");

    CLI11_PARSE(app, argc, argv);

    if (threads <= 0) {
        const char* env = std::getenv("STWAVE_THREADS");
        threads = env ? std::atoi(env) : 1;
        if (threads <= 0) threads = 1;
    }

    stwave::RunOptions opts;
    opts.threads = threads;
    opts.seed = seed;
    try {
        return stwave::run_config_file(config_path, out_dir, opts);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
