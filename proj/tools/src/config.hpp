#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rb/features/features.hpp"
#include "rb/train/train.hpp"

namespace rb::cli {

// Flat key=value settings. Later layers override earlier ones.
using Settings = std::map<std::string, std::string>;

// Lines of "key = value"; '#' starts a comment. Unknown keys are a ConfigError.
Settings parse_settings(const std::string& text, const std::string& origin);
Settings read_settings(const std::filesystem::path& path);
// One "key=value" token.
void apply_override(Settings& s, const std::string& token);
// Whitespace-separated key=value tokens, as used by sweep files.
Settings parse_override_line(const std::string& line, const std::string& origin);

const std::vector<std::string>& known_keys();

struct Resolved {
  train::TrainConfig train;
  std::string precision;  // float32 | float64
  Settings snapshot;      // every key with its effective value
};

// Fills defaults, then the architecture of `base` (when given), then `s`.
Resolved resolve(const Settings& s, const features::Vocabulary& vocab, const model::ModelConfig* base);

std::string render_settings(const Settings& s);

}  // namespace rb::cli
