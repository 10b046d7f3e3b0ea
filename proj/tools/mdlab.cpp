#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "mdlab/commands.hpp"

namespace {

struct CommonFlags {
    std::string configPath;
    std::string outDir;
    std::string format;
    std::uint64_t seed = 0;
    bool seedSet = false;
    long reps = 0;
    bool repsSet = false;
    int threads = 0;
    bool threadsSet = false;
};

void addCommon(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.configPath, "experiment config file (JSON)")->required();
    cmd->add_option("--seed", f.seed, "override the config seed")->each([&](const std::string&) {
        f.seedSet = true;
    });
    cmd->add_option("--reps", f.reps, "override the replicate count")->each([&](const std::string&) {
        f.repsSet = true;
    });
    cmd->add_option("--threads", f.threads, "worker threads (outputs are thread-count independent)")
        ->each([&](const std::string&) { f.threadsSet = true; });
    cmd->add_option("--out", f.outDir, "output directory (or MDLAB_OUT env)");
    cmd->add_option("--format", f.format, "output format: csv or json");
}

mdlab::ExperimentConfig loadWithOverrides(const CommonFlags& f) {
    mdlab::ExperimentConfig cfg = mdlab::ExperimentConfig::fromFile(f.configPath);
    if (f.seedSet) cfg.overrideSeed(f.seed);
    if (f.repsSet) cfg.overrideReps(f.reps);
    if (f.threadsSet) cfg.overrideThreads(f.threads);
    if (const char* env = std::getenv("MDLAB_OUT")) cfg.overrideOutDir(env);
    if (!f.outDir.empty()) cfg.overrideOutDir(f.outDir);
    if (!f.format.empty()) cfg.overrideFormat(f.format);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mdlab: tail bounds, dependence coefficients and rate functions for bounded "
                 "stationary Hilbert-valued sequences"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        void (*fn)(const mdlab::ExperimentConfig&);
    };
    const Sub subs[] = {
        {"simulate", "sample stationary paths and polygonal partial-sum stats", mdlab::cmdSimulate},
        {"coeffs", "dependence profile, phi coefficients, condition diagnostics", mdlab::cmdCoeffs},
        {"bound", "tabulate the tail bounds without simulation", mdlab::cmdBound},
        {"verify", "empirical tail verification, moment and subadditivity checks", mdlab::cmdVerify},
        {"rate", "covariance operator, spectrum, rate-function tables", mdlab::cmdRate},
        {"cvm", "empirical-CDF kernel, spectrum, CvM and Kantorovich rates", mdlab::cmdCvm},
        {"lil", "iterated-logarithm statistic tables", mdlab::cmdLil},
        {"blocks", "block-martingale decomposition residual report", mdlab::cmdBlocks},
    };

    std::vector<CommonFlags> flags(std::size(subs));
    for (std::size_t i = 0; i < std::size(subs); ++i) {
        CLI::App* c = app.add_subcommand(subs[i].name, subs[i].help);
        addCommon(c, flags[i]);
    }

    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < std::size(subs); ++i) {
        if (!app.get_subcommand(subs[i].name)->parsed()) continue;
        try {
            subs[i].fn(loadWithOverrides(flags[i]));
            return 0;
        } catch (const mdlab::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const mdlab::PreconditionError& e) {
            std::cerr << "precondition failure: " << e.what() << "\n";
            return 3;
        } catch (const mdlab::InvariantViolation& e) {
            std::cerr << "invariant violation: " << e.what() << "\n";
            return 4;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return 1;
}
