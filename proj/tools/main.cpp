#include <chrono>
#include <cstdlib>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "aodkit/errors.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool record_time = false;
  std::optional<double> target;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "YAML system config")->required();
  sub->add_option("--seed", c.seed, "RNG seed (generated and reported when omitted)");
  sub->add_option("-o,--out", c.out, "output directory (else $AODKIT_OUT, config output_dir, ./aodkit_out)");
  sub->add_flag("--record-time", c.record_time, "store wall time in report.json");
}

int execute(const std::string& command, const Common& c) {
  using namespace aodkit;
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto cfg = cli::parse_config(c.config);
    cli::RunOptions opt;
    if (c.seed) {
      opt.seed = *c.seed;
      opt.seed_source = cli::SeedSource::cli;
    } else if (cfg.seed) {
      opt.seed = *cfg.seed;
      opt.seed_source = cli::SeedSource::config;
    } else {
      std::random_device rd;
      opt.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      opt.seed_source = cli::SeedSource::generated;
      std::cerr << "aodkit: generated seed " << opt.seed << "\n";
    }
    if (!c.out.empty()) {
      opt.out_dir = c.out;
    } else if (const char* env = std::getenv("AODKIT_OUT"); env && *env) {
      opt.out_dir = env;
    } else {
      opt.out_dir = cfg.output_dir.value_or("aodkit_out");
    }
    opt.record_time = c.record_time;
    opt.target = c.target;
    cli::run(command, cfg, opt);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    std::cerr << fmt::format("aodkit: {} done in {:.3f} s, artifacts in {}\n", command, dt.count(),
                             cli::command_dir(opt.out_dir, command).string());
    return 0;
  } catch (const cli::ConfigError& e) {
    std::cerr << "aodkit: " << e.what() << "\n";
    return 2;
  } catch (const ConfigurationError& e) {
    std::cerr << "aodkit: configuration error in " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "aodkit: error in " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "aodkit: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AOD individual-addressing design and virtual-lab toolkit"};
  app.require_subcommand(1);
  Common common;
  std::string chosen;

  auto add = [&](CLI::App* parent, const std::string& name, const std::string& full, const std::string& help) {
    auto* sub = parent->add_subcommand(name, help);
    add_common(sub, common);
    sub->callback([&chosen, full] { chosen = full; });
    return sub;
  };

  auto* dp = add(&app, "design-prism", "design-prism", "solve the second-prism angle and map M over the angles");
  dp->add_option("--target", common.target, "target expansion factor");
  add(&app, "tolerance", "tolerance", "sensitivities and Monte-Carlo tolerance budget");
  add(&app, "trace", "trace", "Gaussian beam trace through the train");
  add(&app, "steer", "steer", "RF frequency to Fourier/ion-plane position");
  add(&app, "efficiency", "efficiency", "AOD diffraction efficiency over the band");
  add(&app, "monitor", "monitor", "power-monitor voltage against efficiency");
  add(&app, "crosstalk", "crosstalk", "ideal and clipped crosstalk matrices");
  add(&app, "misalign", "misalign", "steering misalignment power imbalance");
  auto* lab = app.add_subcommand("lab", "virtual characterization experiments");
  lab->require_subcommand(1);
  add(lab, "profile-scan", "lab profile-scan", "Rabi-scan beam profile and waist fit");
  add(lab, "chain-scan", "lab chain-scan", "steering scan across an ion chain");
  add(lab, "crosstalk", "lab crosstalk", "neighbour Rabi-rate crosstalk experiment");
  add(lab, "switching", "lab switching", "AOD switching-time experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return execute(chosen, common);
}
