#pragma once

#include <optional>
#include <string>

#include "sscc/cascade.hpp"

namespace sscc {

/// Named threshold presets, one per benchmark dataset. The eucalyptus
/// thresholds differ by kernel and (for lambda_cs) by noise level, so both
/// are part of the lookup; the other presets ignore them.
enum class Preset { coal, ecoli, wine, eucalyptus };

std::optional<Preset> parse_preset(const std::string& name);
const char* to_string(Preset preset);

/// Hyperparameters with the preset's lambda thresholds filled in; engine
/// settings (subset policy, seed, restarts) keep their defaults and can be
/// overridden afterwards.
Hyperparameters preset_hyperparameters(Preset preset, ClusterAlgo algorithm,
                                       double noise_fraction = 0.0);

}  // namespace sscc
