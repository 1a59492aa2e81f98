#pragma once

// Operator-facing config: lengths in um, frequencies in MHz, times in ns, angles
// in deg. Everything below is already converted to SI.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aodkit/addressing.hpp"
#include "aodkit/aod_model.hpp"
#include "aodkit/beam_optics.hpp"
#include "aodkit/prism_designer.hpp"
#include "aodkit/virtual_lab.hpp"

namespace aodkit::cli {

// Raised for missing files, YAML syntax errors and schema violations. Carries
// every violation found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

struct Grid {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
  std::vector<double> values() const;
};

struct ChainSpec {
  std::optional<std::size_t> count;
  double spacing = 0.0;
  std::vector<double> positions;  // explicit positions win over count/spacing
  addressing::IonChain build() const;
};

struct SteeringSection {
  std::string fourier_plane = "fourier";
  std::string ion_plane = "ion";
  double step = 1e6;
};

struct PrismSection {
  prism::PrismPairDesign design;
  prism::ToleranceSpec tolerances;
  std::size_t samples = 100000;
  double target = prism::kAnchorExpansion;
  Grid alpha{20.0, 60.0, 0.5};        // deg
  Grid alpha_prime{5.0, 45.0, 0.25};  // deg
};

struct MonitorSection {
  aod::MonitorChain chain;
  double beam_power = 0.05;  // W
};

struct CrosstalkSection {
  double ion_waist = 1.5e-6;
  addressing::CouplingMode coupling = addressing::CouplingMode::intensity;
  std::vector<double> clipping_ratios;
};

struct MisalignSection {
  double angle = 0.0;
  std::optional<double> half_range;  // from the ion-plane steering range when absent
  double perpendicular_waist = 0.0;
  double max_angle = 0.0;
  double angle_step = 0.0;
};

struct ProfileScanSection {
  double waist = 0.0;
  std::optional<double> center_frequency;
  Grid frequencies;
  double pi_time = 0.0;
  int shots = 200;
  std::string plane;
  addressing::CouplingMode coupling = addressing::CouplingMode::intensity;
};

struct ChainScanSection {
  ChainSpec chain;
  double waist = 0.0;
  Grid frequencies;
  double pi_time = 0.0;
  int shots = 200;
  std::string plane;
};

struct LabCrosstalkSection {
  std::optional<ChainSpec> chain;          // geometry-derived rates
  std::vector<double> relative_rates;      // or injected rates
  double waist = 0.0;
  std::size_t target = 0;
  Grid target_times;
  Grid neighbor_times;
  double pi_time = 0.0;
  int shots = 200;
};

struct SwitchingSection {
  lab::SwitchSequence sequence;
  Grid extra_times;
  int shots = 200;
};

struct SystemConfig {
  std::string source;   // path as given
  std::string digest;   // SHA-256 of the config bytes, hex
  double wavelength = 0.0;
  double input_waist_x = 0.0;
  double input_waist_z = 0.0;
  aod::AodSpec aod;
  optics::OpticalTrain train;
  SteeringSection steering;
  std::optional<PrismSection> prism;
  std::optional<MonitorSection> monitor;
  std::optional<CrosstalkSection> crosstalk;
  std::optional<ChainSpec> chain;
  std::optional<MisalignSection> misalign;
  std::optional<ProfileScanSection> profile_scan;
  std::optional<ChainScanSection> chain_scan;
  std::optional<LabCrosstalkSection> lab_crosstalk;
  std::optional<SwitchingSection> switching;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;

  optics::AstigmaticBeam input_beam() const;
  int plane_index(const std::string& label) const;
};

SystemConfig parse_config(const std::string& path);
SystemConfig parse_config_text(const std::string& text, const std::string& source = "<string>");

}  // namespace aodkit::cli
