#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace dpgopt::cli;

namespace {

int thread_count(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("DPGOPT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1 || n > 1024) throw ConfigError("DPGOPT_THREADS must be an integer in [1, 1024]");
    return static_cast<int>(n);
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DPG option pricer"};
  std::string command, config_path, out_dir, format;
  int threads = 0;
  app.add_option("command", command, "price | converge | greeks | compare | surface")
      ->required()
      ->check(CLI::IsMember({"price", "converge", "greeks", "compare", "surface"}));
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides output.path)");
  app.add_option("--format", format, "csv or json (overrides output.format)")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", threads, "worker threads (overrides DPGOPT_THREADS)")->check(CLI::Range(1, 1024));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  RunConfig config;
  int workers = 1;
  try {
    config = load_config(config_path, command_from_string(command));
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (!format.empty()) config.format = format == "csv" ? Format::csv : Format::json;
    workers = thread_count(threads);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  }

  try {
    const Outcome outcome = run(config, workers);
    const auto path = write_report(outcome.table, config.format, config.out_dir, config.precision);
    std::printf("%s: %s\nwrote %s\n", command.c_str(), outcome.summary.c_str(), path.string().c_str());
  } catch (const IoError& e) {
    std::fprintf(stderr, "output error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
