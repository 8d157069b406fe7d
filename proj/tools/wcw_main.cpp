#include <iostream>

#include "CLI11.hpp"
#include "wcw/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"wcw: worst-case work statistics for driven few-level systems"};
  std::string config;
  std::string out;
  std::string format;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool extracted = false;
  app.add_option("--config", config, "Run configuration file")->required();
  auto* out_opt = app.add_option("--out", out, "Output path (default: config 'output' or stdout)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the random seed");
  app.add_option("--threads", threads, "Worker threads for Monte Carlo (0: all cores)");
  app.add_flag("--extracted", extracted, "Report extracted work (-w) in distributions");
  auto* fmt_opt = app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  }

  wcw::cli::RunOptions opts;
  if (*out_opt) opts.out = out;
  if (*seed_opt) opts.seed = seed;
  if (*fmt_opt) opts.format = format;
  opts.threads = threads;
  opts.extracted = extracted;
  return wcw::cli::run_file(config, opts);
}
