#pragma once

#include <functional>
#include <vector>

#include <CLI11.hpp>

#include "run_context.hpp"

namespace spectrasep::cli {

struct Command {
  CLI::App* app = nullptr;
  std::function<void(RunContext&)> run;
};

// calibrate, preprocess, indices, features, scores, stats, synth
void add_data_commands(CLI::App& app, std::vector<Command>& commands);
// train-rf, rfe, evaluate, report
void add_model_commands(CLI::App& app, std::vector<Command>& commands);

// Shared helpers.
Task task_option(const std::string& text);
Tier tier_option(const std::string& text);
FeatureTable load_or_compute_hsi(RunContext& ctx, const CohortDirectory& dir, const std::string& features_csv);
std::string to_csv(const std::function<void(std::ostream&)>& writer);

}  // namespace spectrasep::cli
