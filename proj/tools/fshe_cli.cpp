// fshe: batch driver for the fractal stochastic heat equation experiments.
//
//   fshe <kind> [--config FILE] [--set key=value ...] [--seed N] [--out DIR] [--threads N]
//
// Exit status: 0 when every criterion passes, 1 when one fails or a numerical routine breaks down,
// 2 for usage, configuration and output-directory errors.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fshe/experiment.hpp"

namespace {

constexpr int exit_failure = 1;
constexpr int exit_usage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fshe::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// Applies key=value overrides by rewriting the serialized section, so they go through the same parser.
fshe::ExperimentConfig apply_overrides(const fshe::ExperimentConfig& base, const std::vector<std::string>& sets) {
  if (sets.empty()) return base;
  std::map<std::string, std::string> overrides;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw fshe::ConfigError("--set expects key=value, got '" + s + "'");
    overrides[fshe::detail::trim(s.substr(0, eq))] = fshe::detail::trim(s.substr(eq + 1));
  }
  std::istringstream in(fshe::serialize_config(base));
  std::ostringstream out;
  std::string line, section;
  while (std::getline(in, line)) {
    const auto t = fshe::detail::trim(line);
    if (!t.empty() && t.front() == '[') {
      if (section == base.kind)
        for (const auto& [k, v] : overrides) out << k << " = " << v << "\n";
      section = t.substr(1, t.size() - 2);
      out << line << "\n";
      continue;
    }
    const auto eq = t.find('=');
    if (section == base.kind && eq != std::string::npos && overrides.count(fshe::detail::trim(t.substr(0, eq)))) continue;
    out << line << "\n";
  }
  if (section == base.kind)
    for (const auto& [k, v] : overrides) out << k << " = " << v << "\n";
  return fshe::parse_config(out.str(), base.kind);
}

void print_report(const fshe::RunReport& report, const std::filesystem::path& dir) {
  for (const auto& c : report.criteria) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  measured=" << c.measured << "  threshold=" << c.threshold;
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << "\n";
  }
  std::cout << report.criteria.size() << " criteria, " << (report.all_passed() ? "all passed" : "some failed") << "; outputs in "
            << dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplacians, stochastic heat equations and regularity checks on p.c.f. self-similar fractals", "fshe"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int threads = 0;
  CLI::Option* seed_opt = nullptr;
  for (const auto& kind : fshe::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    sub->add_option("--config", config_path, "configuration file (key = value sections)")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "override one key of the experiment section, key=value");
    auto* s = sub->add_option("--seed", seed, "random seed (overrides the config)");
    if (!seed_opt) seed_opt = s;
    sub->add_option("--out", out_dir, "output directory (overrides FSHE_OUT_DIR and the config)");
    sub->add_option("--threads", threads, "worker threads (overrides FSHE_THREADS)")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_usage;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string kind = sub->get_name();
  try {
    fshe::ExperimentConfig config;
    if (!config_path.empty()) config = fshe::parse_config(read_file(config_path), kind);
    config.kind = kind;
    config = apply_overrides(config, sets);
    if (sub->count("--seed") > 0) config.seed = seed;
    if (sub->count("--out") > 0) config.out = out_dir;
    else if (const char* env = std::getenv("FSHE_OUT_DIR"); env && *env) config.out = env;
    fshe::validate(config);

    fshe::RunOptions options;
    options.threads = threads;
    const auto report = fshe::run_experiment(config, options);
    print_report(report, config.out);
    return report.all_passed() ? 0 : exit_failure;
  } catch (const fshe::ConfigError& e) {
    std::cerr << "fshe " << kind << ": configuration error: " << e.what() << "\n";
    return exit_usage;
  } catch (const fshe::OutputError& e) {
    std::cerr << "fshe " << kind << ": " << e.what() << "\n";
    return exit_usage;
  } catch (const fshe::DomainError& e) {
    std::cerr << "fshe " << kind << ": invalid argument: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "fshe " << kind << ": " << e.what() << "\n";
    return exit_failure;
  }
}
