#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "sdehnn.h"

namespace {

struct SessionGuard {
    sdehnn_session* s = sdehnn_session_new();
    ~SessionGuard() { sdehnn_session_free(s); }
};

int fail(sdehnn_session* s, sdehnn_status status) {
    std::fprintf(stderr, "error: %s\n", sdehnn_last_error(s));
    return static_cast<int>(status);
}

// Shared option set; every subcommand accepts the full configuration so a
// single config file can drive synth/train/eval alike.
struct Options {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
    bool print_config = false;
};

void add_config_options(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", opt.config_file, "Config file (key = value lines)");
    auto track = [&opt, cmd](const std::string& flag, const std::string& key,
                             const std::string& help) {
        cmd->add_option_function<std::string>(
               flag,
               [&opt, key](const std::string& value) { opt.overrides.emplace_back(key, value); },
               help)
            ->type_name("TEXT");
    };
    track("--mode", "mode", "Data source: synthetic or csv");
    track("--data", "data", "CSV input path (csv mode)");
    track("--target", "target", "Target column name (csv mode)");
    track("--nan-policy", "nan-policy", "Missing-value handling: reject or forward-fill");
    track("--synth-n", "synth-n", "Synthetic sample count");
    track("--hidden", "hidden", "Hidden width");
    track("--init", "init", "Initial-state encoder: dense or lstm");
    track("--window", "window", "Input window length (csv mode)");
    track("--horizon", "horizon", "Forecast horizon (csv mode)");
    track("--terminal-time", "terminal-time", "SDE terminal time T");
    track("--step-size", "step-size", "Euler step size");
    track("--solver", "solver", "Solver: standard or bernoulli");
    track("--mask-p", "mask-p", "Bernoulli mask drop probability");
    track("--epochs", "epochs", "Training epochs");
    track("--batch-size", "batch-size", "Batch size");
    track("--lr", "lr", "Learning rate");
    track("--weight-decay", "weight-decay", "Weight decay");
    track("--patience", "patience", "Early-stopping patience (0 disables)");
    track("--curve-mc-samples", "curve-mc-samples", "MC samples for per-epoch calibration");
    track("--warmup-epochs", "warmup-epochs", "Mean-fit warmup epochs before the full objective");
    track("--warmup-lr", "warmup-lr", "Learning rate during warmup (0 uses --lr)");
    track("--mc-samples", "mc-samples", "MC samples at evaluation");
    track("--confidence", "confidence", "Interval confidence level");
    track("--seed", "seed", "Master seed");
    track("--out-dir", "out-dir", "Output directory");
    cmd->add_flag("--print-config", opt.print_config,
                  "Print the resolved configuration and exit");
}

int apply_options(sdehnn_session* s, const Options& opt) {
    if (!opt.config_file.empty()) {
        const sdehnn_status st = sdehnn_load_config_file(s, opt.config_file.c_str());
        if (st != SDEHNN_OK) return fail(s, st);
    }
    for (const auto& [key, value] : opt.overrides) {
        const sdehnn_status st = sdehnn_set_option(s, key.c_str(), value.c_str());
        if (st != SDEHNN_OK) return fail(s, st);
    }
    return 0;
}

// Returns nonzero if --print-config handled the command.
int maybe_print_config(sdehnn_session* s, const Options& opt, int& exit_code) {
    if (!opt.print_config) return 0;
    char* json = nullptr;
    const sdehnn_status st = sdehnn_config_json(s, &json);
    if (st != SDEHNN_OK) {
        exit_code = fail(s, st);
        return 1;
    }
    std::fputs(json, stdout);
    sdehnn_string_free(json);
    exit_code = 0;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heteroscedastic regression with SDE-driven hidden dynamics"};
    app.require_subcommand(1);

    Options synth_opt, train_opt, eval_opt, traj_opt;
    CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
    add_config_options(synth, synth_opt);

    CLI::App* train = app.add_subcommand("train", "Train a model");
    add_config_options(train, train_opt);

    std::string eval_checkpoint;
    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    add_config_options(eval, eval_opt);
    eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint path")->required();

    std::string traj_checkpoint;
    int traj_index = 0;
    int traj_count = 10;
    CLI::App* traj =
        app.add_subcommand("trajectories", "Sample hidden-state trajectories for one input");
    add_config_options(traj, traj_opt);
    traj->add_option("--checkpoint", traj_checkpoint, "Checkpoint path")->required();
    traj->add_option("--index", traj_index, "Test-split input index");
    traj->add_option("--count", traj_count, "Number of sampled trajectories");

    CLI11_PARSE(app, argc, argv);

    SessionGuard guard;
    if (!guard.s) {
        std::fprintf(stderr, "error: cannot create session\n");
        return 1;
    }
    sdehnn_session* s = guard.s;

    if (synth->parsed()) {
        if (int rc = apply_options(s, synth_opt)) return rc;
        int rc = 0;
        if (maybe_print_config(s, synth_opt, rc)) return rc;
        char* path = nullptr;
        const sdehnn_status st = sdehnn_run_synth(s, &path);
        if (st != SDEHNN_OK) return fail(s, st);
        std::printf("wrote %s\n", path);
        sdehnn_string_free(path);
        return 0;
    }
    if (train->parsed()) {
        if (int rc = apply_options(s, train_opt)) return rc;
        int rc = 0;
        if (maybe_print_config(s, train_opt, rc)) return rc;
        char* summary = nullptr;
        const sdehnn_status st = sdehnn_run_train(s, &summary);
        if (st != SDEHNN_OK) return fail(s, st);
        std::fputs(summary, stdout);
        sdehnn_string_free(summary);
        return 0;
    }
    if (eval->parsed()) {
        if (int rc = apply_options(s, eval_opt)) return rc;
        int rc = 0;
        if (maybe_print_config(s, eval_opt, rc)) return rc;
        char* summary = nullptr;
        const sdehnn_status st = sdehnn_run_eval(s, eval_checkpoint.c_str(), &summary);
        if (st != SDEHNN_OK) return fail(s, st);
        std::fputs(summary, stdout);
        sdehnn_string_free(summary);
        return 0;
    }
    if (int rc = apply_options(s, traj_opt)) return rc;
    int rc = 0;
    if (maybe_print_config(s, traj_opt, rc)) return rc;
    char* path = nullptr;
    const sdehnn_status st =
        sdehnn_run_trajectories(s, traj_checkpoint.c_str(), traj_index, traj_count, &path);
    if (st != SDEHNN_OK) return fail(s, st);
    std::printf("wrote %s\n", path);
    sdehnn_string_free(path);
    return 0;
}
