#include "spectrasep/defaults.hpp"

#include <map>

#include "spectrasep/error.hpp"

namespace spectrasep {
namespace detail {
const std::map<std::string, std::string_view, std::less<>>& embedded_files();
}

std::string_view embedded_file(std::string_view name) {
  const auto& files = detail::embedded_files();
  auto it = files.find(name);
  if (it == files.end()) throw ConfigError("no embedded configuration named '" + std::string(name) + "'");
  return it->second;
}

nlohmann::json embedded_json(std::string_view name) {
  return nlohmann::json::parse(embedded_file(name));
}

std::vector<std::string> embedded_file_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : detail::embedded_files()) names.push_back(name);
  return names;
}

}  // namespace spectrasep
