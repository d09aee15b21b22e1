#include "sdehnn/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace sdehnn {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json spec_to_json(const ModelSpec& spec) {
    return ordered_json{
        {"hidden", spec.hidden},
        {"init", spec.init == InitKind::Dense ? "dense" : "lstm"},
        {"input_dim", spec.input_dim},
        {"window", spec.window},
        {"terminal_time", spec.terminal_time},
        {"step_size", spec.step_size},
        {"sde_steps", spec.sde_steps},
        {"solver", spec.solver == SolverMode::Standard ? "standard" : "bernoulli"},
        {"mask_probability", spec.mask_probability},
        {"seed", spec.seed},
    };
}

ModelSpec spec_from_json(const ordered_json& j) {
    ModelSpec spec;
    spec.hidden = j.at("hidden").get<int>();
    const std::string init = j.at("init").get<std::string>();
    if (init != "dense" && init != "lstm") throw ConfigError("checkpoint: unknown init '" + init + "'");
    spec.init = init == "dense" ? InitKind::Dense : InitKind::Lstm;
    spec.input_dim = j.at("input_dim").get<int>();
    spec.window = j.at("window").get<int>();
    spec.terminal_time = j.at("terminal_time").get<double>();
    spec.step_size = j.at("step_size").get<double>();
    spec.sde_steps = j.at("sde_steps").get<int>();
    const std::string solver = j.at("solver").get<std::string>();
    if (solver != "standard" && solver != "bernoulli") {
        throw ConfigError("checkpoint: unknown solver '" + solver + "'");
    }
    spec.solver = solver == "standard" ? SolverMode::Standard : SolverMode::Bernoulli;
    spec.mask_probability = j.at("mask_probability").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

}  // namespace

void save_checkpoint(const std::string& path, SdeHnnModel& model, const Scaler& scaler,
                     int target_column) {
    ordered_json doc;
    doc["format_version"] = kCheckpointFormatVersion;
    doc["model"] = spec_to_json(model.spec());
    ordered_json params = ordered_json::object();
    for (Parameter* p : model.params()) {
        params[p->name] = ordered_json{
            {"rows", p->value.rows}, {"cols", p->value.cols}, {"values", p->value.v}};
    }
    doc["params"] = std::move(params);
    doc["scaler"] = ordered_json{{"min", scaler.min},
                                 {"max", scaler.max},
                                 {"constant", scaler.constant},
                                 {"target_column", target_column}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    ordered_json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        const int version = doc.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion) {
            throw ConfigError("checkpoint: unsupported format version " +
                              std::to_string(version));
        }
        LoadedCheckpoint loaded;
        loaded.model = std::make_unique<SdeHnnModel>(spec_from_json(doc.at("model")));
        const auto& params = doc.at("params");
        for (Parameter* p : loaded.model->params()) {
            if (!params.contains(p->name)) {
                throw ConfigError("checkpoint: missing parameter '" + p->name + "'");
            }
            const auto& entry = params.at(p->name);
            const int rows = entry.at("rows").get<int>();
            const int cols = entry.at("cols").get<int>();
            if (rows != p->value.rows || cols != p->value.cols) {
                throw ConfigError("checkpoint: shape mismatch for '" + p->name + "'");
            }
            p->value.v = entry.at("values").get<std::vector<double>>();
            if (p->value.v.size() != static_cast<std::size_t>(rows) * cols) {
                throw ConfigError("checkpoint: value count mismatch for '" + p->name + "'");
            }
            p->value.require_finite("checkpoint parameter " + p->name);
            p->zero_grad();
        }
        const auto& sc = doc.at("scaler");
        loaded.scaler.min = sc.at("min").get<std::vector<double>>();
        loaded.scaler.max = sc.at("max").get<std::vector<double>>();
        loaded.scaler.constant = sc.at("constant").get<std::vector<bool>>();
        loaded.target_column = sc.at("target_column").get<int>();
        return loaded;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace sdehnn
