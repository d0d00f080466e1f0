#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "containerforge/pipeline.hpp"

namespace cforge {

// Configuration problems: bad JSON, unknown keys, wrong types, out-of-range values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing keys keep their defaults. Messages name the offending field path.
GenerationConfig parse_config(const std::filesystem::path& path);
GenerationConfig parse_config_text(std::string_view text, std::string_view source = "<config>");
GenerationConfig config_from_json(const nlohmann::json& j);

// Full configuration in the same schema parse_config reads.
nlohmann::json config_to_json(const GenerationConfig& cfg);

std::size_t edit_distance(std::string_view a, std::string_view b);
// Closest candidate within distance 3, or empty.
std::string suggest_key(std::string_view key, const std::vector<std::string>& candidates);

}  // namespace cforge
