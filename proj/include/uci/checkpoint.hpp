#pragma once

#include "uci/nn.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>

namespace uci {

/// Optimizer and loop counters stored alongside the weights so training can
/// resume bit-for-bit.
struct TrainSnapshot {
    int epoch = 0;   // completed epochs
    int64_t step = 0;
    int64_t adam_t = 0;
};

/// Container layout (documented in the README):
///   bytes 0..7   magic "UCICKPT1"
///   bytes 8..15  little-endian u64: header byte length H
///   bytes 16..16+H  UTF-8 JSON header {version, config, train_state?, arrays}
///   data section: concatenated raw little-endian float64 arrays; each
///   header entry carries {name, shape, dtype:"f64", offset, count} with
///   offset relative to the data section start.
void save_checkpoint(const std::filesystem::path& path, const ParamRegistry& params,
                     const nlohmann::json& config_echo, const Adam* adam = nullptr,
                     const TrainSnapshot* snapshot = nullptr);

struct LoadedCheckpoint {
    nlohmann::json header;
    nlohmann::json config_echo;
    std::optional<TrainSnapshot> snapshot;
    std::vector<std::pair<std::string, std::vector<double>>> arrays;
    std::vector<std::pair<std::string, std::vector<int>>> shapes;

    const std::vector<double>* find(const std::string& name) const;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Copies arrays into params by name; shapes must match exactly.
void apply_checkpoint(const LoadedCheckpoint& ckpt, ParamRegistry& params, Adam* adam = nullptr);

} // namespace uci
