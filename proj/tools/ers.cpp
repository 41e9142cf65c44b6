#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ers/commands.hpp"
#include "ers/config.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"entropy-regularized ensemble clustering on synthetic data"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string bundle_dir;
    std::uint64_t seed = 1;
    std::size_t trials = 20;
    std::vector<std::string> checkpoints;
    bool subclass = false;

    auto* train = app.add_subcommand(
        "train", "train an ensemble and write a run directory");
    train->add_option("--config", config_path, "config file")->required();
    auto* train_out = train->add_option(
        "--out", out_dir, "destination directory (default: the config's out)");
    auto* train_seed =
        train->add_option("--seed", seed, "override the config seed");

    auto* eval = app.add_subcommand(
        "eval", "evaluate checkpoints into a report bundle");
    eval->add_option("--config", config_path, "config file")->required();
    auto* eval_out = eval->add_option(
        "--out", out_dir, "bundle directory (default: the config's out)");
    auto* eval_seed =
        eval->add_option("--seed", seed, "override the config seed");
    eval->add_option("--checkpoints", checkpoints, "checkpoint files")
        ->required();
    eval->add_flag("--subclass-scoring", subclass,
                   "score against subclass labels instead of superclasses");

    auto* report = app.add_subcommand(
        "report", "summarize a bundle and regenerate its csv tables");
    report->add_option("bundle", bundle_dir, "bundle directory")->required();

    auto* grad = app.add_subcommand(
        "grad-check", "finite-difference verification of loss gradients");
    grad->add_option("--seed", seed, "rng seed");
    grad->add_option("--trials", trials, "random trials per term");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ers::cli::kExitOk : ers::cli::kExitUsage;
    }

    if (grad->parsed())
        return ers::cli::cmd_grad_check(seed, trials, std::cout);
    if (report->parsed()) return ers::cli::cmd_report(bundle_dir, std::cout);

    ers::cli::RunConfig config;
    try {
        config = ers::cli::load_config(config_path);
    } catch (const std::exception& e) {
        std::cout << "config error: " << e.what() << "\n";
        return ers::cli::kExitUsage;
    }
    if (train->parsed() && train_seed->count() > 0) config.seed = seed;
    if (eval->parsed() && eval_seed->count() > 0) config.seed = seed;
    if (subclass) config.subclass_scoring = true;
    const bool out_given = (train->parsed() && train_out->count() > 0) ||
                           (eval->parsed() && eval_out->count() > 0);
    const std::string dest = out_given ? out_dir : config.out;
    if (train->parsed()) return ers::cli::cmd_train(config, dest, std::cout);
    return ers::cli::cmd_eval(config, checkpoints, dest, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << "\n";
        return ers::cli::kExitRuntime;
    }
}
