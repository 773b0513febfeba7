#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectrasep/pipeline.hpp"

namespace spectrasep::cli {

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string config;
  int jobs = 1;
  std::string out;
};

// Per-invocation state: resolved config, output directory, recorded inputs
// and outputs, step timings. finish() writes run_manifest.json.
class RunContext {
 public:
  RunContext(std::string command, std::vector<std::string> arguments, const GlobalOptions& options);

  const PipelineConfig& config() const { return config_; }
  std::uint64_t seed() const { return options_.seed; }
  int jobs() const { return options_.jobs; }
  const std::filesystem::path& out_dir() const { return out_; }

  void input(const std::string& role, const std::filesystem::path& path);
  std::filesystem::path output(const std::string& relative);

  void write_text(const std::string& relative, const std::string& text);
  void write_json(const std::string& relative, const nlohmann::json& j);

  // Times the work between begin_step and the next begin_step / finish.
  void begin_step(const std::string& name);
  void finish();

 private:
  void close_step();

  std::string command_;
  std::vector<std::string> arguments_;
  GlobalOptions options_;
  std::filesystem::path out_;
  std::string config_source_;
  PipelineConfig config_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, double>> timings_;
  std::string current_step_;
  std::chrono::steady_clock::time_point step_start_;
};

}  // namespace spectrasep::cli
