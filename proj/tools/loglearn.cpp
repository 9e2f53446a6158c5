#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "loglearn/runner.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    uint64_t seed = 0;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--seed", args.seed, "master random seed");
    cmd->add_option("--out", args.out_dir, "output directory");
}

std::string resolve_out(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("LOGLEARN_OUT")) return env;
    return "out";
}

int sweep_threads() {
    if (const char* env = std::getenv("LOGLEARN_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"loglearn: interval embeddings for well logs"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* pretrain = app.add_subcommand("pretrain", "self-supervised pretraining");
    auto* transfer = app.add_subcommand("transfer", "regularized fine-tuning on target wells");
    auto* reverse = app.add_subcommand("reverse", "transfer then re-validate on the source");
    auto* sweep = app.add_subcommand("sweep", "grid sweep over config axes");
    auto* exp = app.add_subcommand("export", "write embeddings for a checkpoint");
    auto* eval = app.add_subcommand("eval", "score a checkpoint on held-out wells");
    for (auto* cmd : {pretrain, transfer, reverse, sweep, exp, eval}) add_common(cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::string out = resolve_out(args.out_dir);
    try {
        loglearn::ExperimentConfig cfg = loglearn::ExperimentConfig::from_file(args.config_path);
        if (pretrain->parsed())
            loglearn::run_pretrain(cfg, args.seed, out);
        else if (transfer->parsed())
            loglearn::run_transfer(cfg, args.seed, out);
        else if (reverse->parsed())
            loglearn::run_reverse(cfg, args.seed, out);
        else if (sweep->parsed())
            loglearn::run_sweep(cfg, args.seed, out, sweep_threads());
        else if (exp->parsed())
            loglearn::run_export(cfg, args.seed, out);
        else
            loglearn::run_eval(cfg, args.seed, out);
    } catch (const loglearn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const loglearn::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const loglearn::NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
