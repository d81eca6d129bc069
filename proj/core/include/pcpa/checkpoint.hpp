#pragma once

#include <string>

#include "pcpa/model.hpp"

namespace pcpa {

/// Versioned JSON checkpoint: hyperparameters, vocabulary, and every
/// parameter tensor by name. Round-trips exactly (shortest-round-trip float
/// serialization) and writes deterministically.
void save_checkpoint(const std::string& path, const PcpaModel& model);
PcpaModel load_checkpoint(const std::string& path);

std::string hyper_to_json(const HyperParams& hyper);
HyperParams hyper_from_json(const std::string& text);

}  // namespace pcpa
