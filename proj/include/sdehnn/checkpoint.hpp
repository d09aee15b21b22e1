#pragma once

#include <memory>
#include <string>

#include "sdehnn/data.hpp"
#include "sdehnn/model.hpp"

namespace sdehnn {

inline constexpr int kCheckpointFormatVersion = 1;

// JSON document: format version, model spec, named parameter tensors
// (shape + row-major values), and the fitted scaler.
void save_checkpoint(const std::string& path, SdeHnnModel& model, const Scaler& scaler,
                     int target_column);

struct LoadedCheckpoint {
    std::unique_ptr<SdeHnnModel> model;
    Scaler scaler;
    int target_column = 0;
};

// Rebuilds the model and restores parameter values; version or shape
// mismatches raise ConfigError naming the offending field.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace sdehnn
