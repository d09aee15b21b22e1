#include "sdehnn.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sdehnn/runner.hpp"

struct sdehnn_session {
    sdehnn::RunConfig config;
    std::string last_error;
};

namespace {

using sdehnn::ConfigError;

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

sdehnn_status classify(const std::exception& e) {
    if (dynamic_cast<const sdehnn::ConfigError*>(&e)) return SDEHNN_ERR_CONFIG;
    if (dynamic_cast<const sdehnn::ParseError*>(&e)) return SDEHNN_ERR_PARSE;
    if (dynamic_cast<const sdehnn::IoError*>(&e)) return SDEHNN_ERR_IO;
    if (dynamic_cast<const sdehnn::DimensionError*>(&e)) return SDEHNN_ERR_DIMENSION;
    if (dynamic_cast<const sdehnn::NumericError*>(&e)) return SDEHNN_ERR_NUMERIC;
    return SDEHNN_ERR_INTERNAL;
}

template <typename Fn>
sdehnn_status guarded(sdehnn_session* session, Fn&& fn) {
    if (!session) return SDEHNN_ERR_ARGUMENT;
    session->last_error.clear();
    try {
        fn();
        return SDEHNN_OK;
    } catch (const std::exception& e) {
        session->last_error = e.what();
        return classify(e);
    } catch (...) {
        session->last_error = "unknown error";
        return SDEHNN_ERR_INTERNAL;
    }
}

int parse_int(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    int out = 0;
    try {
        out = std::stoi(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty()) {
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty()) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
    return out;
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || value.empty()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    }
    return static_cast<std::uint64_t>(out);
}

void apply_option(sdehnn::RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "mode") cfg.mode = value;
    else if (key == "data") cfg.data_path = value;
    else if (key == "target") cfg.target_column = value;
    else if (key == "nan-policy") cfg.nan_policy = value;
    else if (key == "synth-n") cfg.synth_n = parse_int(key, value);
    else if (key == "hidden") cfg.hidden = parse_int(key, value);
    else if (key == "init") cfg.init = value;
    else if (key == "window") cfg.window = parse_int(key, value);
    else if (key == "horizon") cfg.horizon = parse_int(key, value);
    else if (key == "terminal-time") cfg.terminal_time = parse_double(key, value);
    else if (key == "step-size") cfg.step_size = parse_double(key, value);
    else if (key == "solver") cfg.solver = value;
    else if (key == "mask-p") cfg.mask_probability = parse_double(key, value);
    else if (key == "epochs") cfg.epochs = parse_int(key, value);
    else if (key == "batch-size") cfg.batch_size = parse_int(key, value);
    else if (key == "lr") cfg.lr = parse_double(key, value);
    else if (key == "weight-decay") cfg.weight_decay = parse_double(key, value);
    else if (key == "patience") cfg.patience = parse_int(key, value);
    else if (key == "curve-mc-samples") cfg.curve_mc_samples = parse_int(key, value);
    else if (key == "warmup-epochs") cfg.warmup_epochs = parse_int(key, value);
    else if (key == "warmup-lr") cfg.warmup_lr = parse_double(key, value);
    else if (key == "mc-samples") cfg.mc_samples = parse_int(key, value);
    else if (key == "confidence") cfg.interval_confidence = parse_double(key, value);
    else if (key == "seed") cfg.seed = parse_seed(key, value);
    else if (key == "out-dir") cfg.out_dir = value;
    else throw ConfigError("unknown option '" + key + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

sdehnn::RunConfig resolved(const sdehnn_session& session) {
    sdehnn::RunConfig cfg = session.config;
    cfg.resolve();
    return cfg;
}

}  // namespace

extern "C" {

sdehnn_session* sdehnn_session_new(void) {
    try {
        return new sdehnn_session();
    } catch (...) {
        return nullptr;
    }
}

void sdehnn_session_free(sdehnn_session* session) { delete session; }

const char* sdehnn_last_error(const sdehnn_session* session) {
    return session ? session->last_error.c_str() : "null session";
}

sdehnn_status sdehnn_set_option(sdehnn_session* session, const char* key, const char* value) {
    if (!session) return SDEHNN_ERR_ARGUMENT;
    if (!key || !value) {
        session->last_error = "set_option: null key or value";
        return SDEHNN_ERR_ARGUMENT;
    }
    return guarded(session, [&] { apply_option(session->config, key, value); });
}

sdehnn_status sdehnn_load_config_file(sdehnn_session* session, const char* path) {
    if (!session) return SDEHNN_ERR_ARGUMENT;
    if (!path) {
        session->last_error = "load_config_file: null path";
        return SDEHNN_ERR_ARGUMENT;
    }
    return guarded(session, [&] {
        std::ifstream in(path);
        if (!in) throw sdehnn::IoError(std::string("cannot open ") + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string stripped = trim(line);
            if (stripped.empty()) continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos) {
                throw sdehnn::ParseError(std::string(path) + ":" + std::to_string(lineno) +
                                         ": expected 'key = value'");
            }
            apply_option(session->config, trim(stripped.substr(0, eq)),
                         trim(stripped.substr(eq + 1)));
        }
    });
}

sdehnn_status sdehnn_config_json(sdehnn_session* session, char** out_json) {
    if (!session) return SDEHNN_ERR_ARGUMENT;
    if (!out_json) {
        session->last_error = "config_json: null output pointer";
        return SDEHNN_ERR_ARGUMENT;
    }
    return guarded(session, [&] {
        *out_json = copy_string(sdehnn::config_to_json(resolved(*session)));
    });
}

sdehnn_status sdehnn_run_synth(sdehnn_session* session, char** out_path) {
    if (!session) return SDEHNN_ERR_ARGUMENT;
    if (!out_path) {
        session->last_error = "run_synth: null output pointer";
        return SDEHNN_ERR_ARGUMENT;
    }
    return guarded(session, [&] {
        *out_path = copy_string(sdehnn::run_synth(resolved(*session)));
    });
}

sdehnn_status sdehnn_run_train(sdehnn_session* session, char** out_summary_json) {
    if (!session) return SDEHNN_ERR_ARGUMENT;
    if (!out_summary_json) {
        session->last_error = "run_train: null output pointer";
        return SDEHNN_ERR_ARGUMENT;
    }
    return guarded(session, [&] {
        const sdehnn::TrainOutputs out = sdehnn::run_train(resolved(*session));
        nlohmann::ordered_json j{
            {"checkpoint", out.checkpoint_path},
            {"curve", out.curve_path},
            {"config", out.config_path},
            {"best_epoch", out.result.best_epoch},
            {"best_val_nll", out.result.best_val_nll},
            {"epochs_run", out.result.epochs_run},
            {"parameter_count", out.parameter_count},
        };
        *out_summary_json = copy_string(j.dump(2) + "\n");
    });
}

sdehnn_status sdehnn_run_eval(sdehnn_session* session, const char* checkpoint_path,
                              char** out_summary_json) {
    if (!session) return SDEHNN_ERR_ARGUMENT;
    if (!checkpoint_path || !out_summary_json) {
        session->last_error = "run_eval: null checkpoint path or output pointer";
        return SDEHNN_ERR_ARGUMENT;
    }
    return guarded(session, [&] {
        const sdehnn::EvalOutputs out = sdehnn::run_eval(resolved(*session), checkpoint_path);
        std::ifstream in(out.metrics_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        *out_summary_json = copy_string(buf.str());
    });
}

sdehnn_status sdehnn_run_trajectories(sdehnn_session* session, const char* checkpoint_path,
                                      int input_index, int count, char** out_path) {
    if (!session) return SDEHNN_ERR_ARGUMENT;
    if (!checkpoint_path || !out_path) {
        session->last_error = "run_trajectories: null checkpoint path or output pointer";
        return SDEHNN_ERR_ARGUMENT;
    }
    return guarded(session, [&] {
        *out_path = copy_string(sdehnn::run_trajectories(resolved(*session), checkpoint_path,
                                                         input_index, count));
    });
}

void sdehnn_string_free(char* s) { std::free(s); }

}  // extern "C"
