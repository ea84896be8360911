// twostage: validate | run | sweep experiment configs.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "twostage/commands.hpp"

namespace {

using namespace twostage;

unsigned default_threads() {
  if (const char* env = std::getenv("TWOSTAGE_THREADS")) {
    try {
      return static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring malformed TWOSTAGE_THREADS=" << env << "\n";
    }
  }
  return 0;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigError::Kind::Syntax, "", "cannot open config " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage allocation simulator for estimating a product of means"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string compare;
  std::uint64_t seed = 0;
  std::uint64_t reps = 0;
  std::string format;
  unsigned threads = default_threads();

  auto add_common = [&](CLI::App* sub, bool simulation) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "Master seed (overrides config)");
    sub->add_option("--reps", reps, "Replications (overrides config)");
    sub->add_option("--format", format, "Output format: csv or json");
    sub->add_option("--out", out_path, "Write output to PATH instead of stdout");
    if (simulation) {
      sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
      sub->add_option("--compare", compare, "Comma-separated policies sharing seeds");
    }
  };
  CLI::App* validate = app.add_subcommand("validate", "Check moment conditions of a config");
  CLI::App* run = app.add_subcommand("run", "Estimate the Bayes risk at one cost vector");
  CLI::App* sweep = app.add_subcommand("sweep", "Drive costs to zero and test optimality");
  add_common(validate, false);
  add_common(run, true);
  add_common(sweep, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitParse;
  }

  CommandOptions options;
  CLI::App* active = app.get_subcommands().front();
  if (active->count("--seed")) options.seed = seed;
  if (active->count("--reps")) options.replications = reps;
  if (active->count("--format")) options.format = format;
  options.threads = threads;
  if (!compare.empty()) {
    std::stringstream list(compare);
    for (std::string name; std::getline(list, name, ',');) {
      if (!name.empty()) options.compare.push_back(name);
    }
  }

  ExperimentConfig config;
  try {
    config = parse_config(read_file(config_path));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitParse;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitParse;
  }

  try {
    CommandOutput result;
    if (active == validate) {
      result = cmd_validate(config, options);
    } else if (active == run) {
      result = cmd_run(config, options);
    } else {
      result = cmd_sweep(config, options);
    }
    std::cerr << result.messages;
    if (out_path.empty()) {
      std::cout << result.output;
      std::cerr << result.sidecar;
    } else {
      write_file(out_path, result.output);
      if (!result.sidecar.empty()) write_file(out_path + ".verdict.jsonl", result.sidecar);
    }
    return result.exit_code;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
