#pragma once

#include "losses.hpp"
#include "model_config.hpp"
#include "roi.hpp"
#include "tensor_bridge.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mtra {

enum class Mode { Multiclass, BinaryFC, BinaryTC };

std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view name);

/// Everything a run needs. Built from a preset, a flat key=value file and
/// command-line overrides; see README for the key list.
struct RunConfig {
    Mode mode = Mode::Multiclass;
    int epochs = 100;
    int batch_size = 150;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    loss::LossWeights weights;
    roi::ThresholdConfig roi = roi::ThresholdConfig::multiclass_defaults();
    ModelConfig model;

    int split_train = 218;
    int split_val = 55;
    int split_test = 108;
    int edge_strip = 20;

    int phantom_slices = 160;
    int phantom_size = 384;
    double phantom_spacing_mm = 0.36;

    int eval_batch = 16;
    bool deterministic = false;
    bool verbose = false;

    TargetEncoding encoding() const;
    /// Switches mode and resets the mode-dependent defaults (class count,
    /// alpha, ROI thresholds, batch size).
    void set_mode(Mode m);
    /// Applies one key=value pair. Throws ValidationError for unknown keys
    /// or unparsable values.
    void set(std::string_view key, std::string_view value);
    void validate() const;

    /// Canonical key=value text; parsing it back reproduces the config.
    std::string to_text() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses flat "key=value" text; '#' starts a comment, blank lines ignored.
KeyValues parse_key_values(std::string_view text);

/// Named presets: "default" (reference configuration) and "tiny" (desk-scale
/// widths 8..128 at 64x64), built for the given mode.
bool is_preset(std::string_view name);
RunConfig preset(std::string_view name, Mode mode = Mode::Multiclass);

/// `source` is a preset name or a config file path. The file may name a
/// preset with `base=`. Resolution order: base preset, then mode (from the
/// file or overrides), then the remaining file keys, then overrides.
RunConfig resolve_config(std::string_view source, const KeyValues& overrides = {});

/// Same resolution from in-memory text (used for checkpoint echoes).
RunConfig config_from_text(std::string_view text);

}  // namespace mtra
