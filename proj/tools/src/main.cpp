#include <iostream>

#include "commands.hpp"
#include "spectrasep/error.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace spectrasep;
  CLI::App app{"spectrasep: hyperspectral sepsis and mortality prediction pipeline"};
  app.set_version_flag("--version", SPECTRASEP_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  cli::GlobalOptions global;
  app.add_option("--seed", global.seed, "Base random seed")->capture_default_str();
  app.add_option("--config", global.config, "Pipeline config JSON (fallback: SPECTRASEP_CONFIG)");
  app.add_option("--jobs", global.jobs, "Worker threads; outputs do not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--out", global.out, "Output directory");

  std::vector<cli::Command> commands;
  cli::add_data_commands(app, commands);
  cli::add_model_commands(app, commands);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  const std::vector<std::string> arguments(argv + 1, argv + argc);
  try {
    for (const auto& command : commands) {
      if (!command.app->parsed()) continue;
      cli::RunContext ctx(command.app->get_name(), arguments, global);
      command.run(ctx);
      ctx.finish();
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
