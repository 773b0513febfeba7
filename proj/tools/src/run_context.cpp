#include "run_context.hpp"

#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "spectrasep/cube_io.hpp"
#include "spectrasep/error.hpp"

#ifndef SPECTRASEP_VERSION
#define SPECTRASEP_VERSION "unknown"
#endif

namespace spectrasep::cli {

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

}  // namespace

RunContext::RunContext(std::string command, std::vector<std::string> arguments, const GlobalOptions& options)
    : command_(std::move(command)), arguments_(std::move(arguments)), options_(options) {
  if (options_.out.empty()) throw ValidationError("--out is required");
  if (options_.jobs < 1) throw ValidationError("--jobs must be at least 1");
  out_ = options_.out;
  std::filesystem::create_directories(out_);

  std::string path = options_.config;
  if (path.empty()) {
    if (const char* env = std::getenv("SPECTRASEP_CONFIG"); env != nullptr) path = env;
  }
  if (!path.empty()) {
    if (!std::filesystem::exists(path)) throw ValidationError("--config: file not found: " + path);
    config_ = PipelineConfig::load(path);
    config_source_ = path;
  }
  step_start_ = std::chrono::steady_clock::now();
}

void RunContext::input(const std::string& role, const std::filesystem::path& path) {
  inputs_[role] = path.generic_string();
}

std::filesystem::path RunContext::output(const std::string& relative) {
  outputs_.push_back(relative);
  const auto path = out_ / relative;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  return path;
}

void RunContext::write_text(const std::string& relative, const std::string& text) {
  write_text_file(output(relative), text);
}

void RunContext::write_json(const std::string& relative, const nlohmann::json& j) {
  write_json_file(output(relative), j);
}

void RunContext::begin_step(const std::string& name) {
  close_step();
  current_step_ = name;
  step_start_ = std::chrono::steady_clock::now();
}

void RunContext::close_step() {
  if (current_step_.empty()) return;
  const auto elapsed = std::chrono::steady_clock::now() - step_start_;
  timings_.emplace_back(current_step_, std::chrono::duration<double, std::milli>(elapsed).count());
  current_step_.clear();
}

void RunContext::finish() {
  close_step();
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& [step, ms] : timings_) timings.push_back({{"step", step}, {"ms", ms}});
  const nlohmann::json config_json = config_.to_json();
  const nlohmann::json manifest = {
      {"tool", "spectrasep"},
      {"version", SPECTRASEP_VERSION},
      {"command", command_},
      {"arguments", arguments_},
      {"seed", options_.seed},
      {"jobs", options_.jobs},
      {"config_source", config_source_.empty() ? nlohmann::json("builtin") : nlohmann::json(config_source_)},
      {"config_hash", hex64(config_hash(config_json))},
      {"inputs", inputs_},
      {"outputs", outputs_},
      {"timings", std::move(timings)},
      {"finished_at", utc_timestamp()},
  };
  write_json_file(out_ / "run_manifest.json", manifest);
}

}  // namespace spectrasep::cli
