#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "moquad/disturb.hpp"
#include "moquad/encoder.hpp"
#include "moquad/eval.hpp"
#include "moquad/synthdata.hpp"
#include "moquad/trainer.hpp"

namespace moquad {

// The whole experiment in one JSON document. Every key is validated up
// front; unknown keys are rejected by name.
struct RunConfig {
    std::uint64_t seed = 42;
    bool deterministic = false;  // pins the scalar kernel backend
    std::string out_dir = "runs/default";
    std::string data_dir = "data/synthetic";

    DatasetConfig dataset;
    ScheduleConfig schedule;   // carries LossConfig + QuadConfig
    EncoderConfig encoder;     // seed filled from the run seed
    TrainerOptions optim;
    EvalConfig eval;
    ProbeConfig probe;
};

RunConfig default_config();

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

// Cross-field validation (clip windows fit the videos, RAD k fits the
// frame, encoder input matches the dataset dims).
void validate_config(const RunConfig& cfg);

}  // namespace moquad
