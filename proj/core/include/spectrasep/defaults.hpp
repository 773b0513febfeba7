#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace spectrasep {

// Configuration tables compiled into the library from core/data/:
// indices.default.json, params.dictionary.json, vis.weights.json and
// scores/<name>.table.json.
std::string_view embedded_file(std::string_view name);
nlohmann::json embedded_json(std::string_view name);
std::vector<std::string> embedded_file_names();

}  // namespace spectrasep
