#pragma once

// Acousto-optic deflector physics: frequency-to-angle map, Bragg efficiency
// curve, acoustic-transit switching ramp and the photodiode monitor chain.

#include <optional>

namespace aodkit::aod {

struct AodSpec {
  double center_frequency = 150e6;   // Hz
  double bandwidth = 100e6;          // Hz
  double acoustic_velocity = 5700.0; // m/s
  double optical_wavelength = 355e-9;
  double crystal_waist = 1.5e-3;     // beam waist along the acoustic axis, m
  double peak_efficiency = 0.8;
  // Scale of the sinc^2 efficiency curve; unset -> 0.4 * bandwidth, which keeps
  // the efficiency above half of its peak across the whole band.
  std::optional<double> efficiency_width;
  // Distance of the new acoustic front from the beam centre at the moment of the
  // RF switch; unset -> crystal_waist (front at the 1/e^2 radius).
  std::optional<double> front_offset;

  double resolved_efficiency_width() const { return efficiency_width.value_or(0.4 * bandwidth); }
  double resolved_front_offset() const { return front_offset.value_or(crystal_waist); }
};

// Throws InvalidElementError if any field violates its bounds.
void validate(const AodSpec& spec);

bool in_band(const AodSpec& spec, double frequency);

// Deflection relative to the centre-frequency ray, rad. Out-of-band inputs are
// evaluated on the same linear law; callers use in_band() to flag them.
double deflection_angle(const AodSpec& spec, double frequency);

double full_band_swing(const AodSpec& spec);

double diffraction_efficiency(const AodSpec& spec, double frequency);

enum class TransitModel {
  // Fraction of the Gaussian field covered by the new acoustic column.
  gaussian_overlap,
  // Linear rise while the front crosses [-w0, +w0] about the beam centre.
  linear,
};

// Amplitude factor in [0, 1] of the newly addressed beam `t` seconds after the
// RF frequency change.
double transit_ramp(const AodSpec& spec, double t,
                    TransitModel model = TransitModel::gaussian_overlap);

// Time at which the new front crosses the beam centre (ramp = 0.5).
double transit_center_time(const AodSpec& spec);

// 10%-90% rise time of transit_ramp.
double transit_rise_time(const AodSpec& spec,
                         TransitModel model = TransitModel::gaussian_overlap);

// Classic Gaussian-beam AOD access-time estimate, 1.3 w0 / V.
double theoretical_switch_time(const AodSpec& spec);

struct MonitorChain {
  double sample_fraction = 0.002;
  double responsivity = 0.1;  // A/W
  double tia_gain = 1e5;      // V/A
};

void validate(const MonitorChain& chain);

// Photodiode TIA output for the sampled fraction of the diffracted beam.
double monitor_voltage(const MonitorChain& chain, double beam_power, double efficiency);

}  // namespace aodkit::aod
