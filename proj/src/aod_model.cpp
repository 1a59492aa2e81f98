#include "aodkit/aod_model.hpp"

#include <algorithm>
#include <cmath>

#include "aodkit/errors.hpp"

namespace aodkit::aod {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw InvalidElementError("aod_model", "validate", what); }

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace

void validate(const AodSpec& s) {
  if (!(s.center_frequency > 0.0)) invalid("center_frequency must be positive");
  if (!(s.bandwidth > 0.0)) invalid("bandwidth must be positive");
  if (!(s.acoustic_velocity > 0.0)) invalid("acoustic_velocity must be positive");
  if (!(s.optical_wavelength > 0.0)) invalid("optical_wavelength must be positive");
  if (!(s.crystal_waist > 0.0)) invalid("crystal_waist must be positive");
  if (!(s.peak_efficiency > 0.0 && s.peak_efficiency <= 1.0)) invalid("peak_efficiency must lie in (0, 1]");
  if (!(s.resolved_efficiency_width() > 0.0)) invalid("efficiency_width must be positive");
  if (!std::isfinite(s.resolved_front_offset())) invalid("front_offset must be finite");
}

bool in_band(const AodSpec& spec, double frequency) {
  return std::abs(frequency - spec.center_frequency) <= 0.5 * spec.bandwidth;
}

double deflection_angle(const AodSpec& spec, double frequency) {
  return spec.optical_wavelength * (frequency - spec.center_frequency) / spec.acoustic_velocity;
}

double full_band_swing(const AodSpec& spec) {
  return spec.optical_wavelength * spec.bandwidth / spec.acoustic_velocity;
}

double diffraction_efficiency(const AodSpec& spec, double frequency) {
  const double s = sinc((frequency - spec.center_frequency) / spec.resolved_efficiency_width());
  return std::clamp(spec.peak_efficiency * s * s, 0.0, 1.0);
}

double transit_center_time(const AodSpec& spec) {
  return spec.resolved_front_offset() / spec.acoustic_velocity;
}

double transit_ramp(const AodSpec& spec, double t, TransitModel model) {
  // Front position relative to the beam centre, in units of the waist.
  const double u = (spec.acoustic_velocity * t - spec.resolved_front_offset()) / spec.crystal_waist;
  switch (model) {
    case TransitModel::gaussian_overlap:
      // Integral of exp(-x^2/w0^2) up to the front, normalised.
      return 0.5 * std::erfc(-u);
    case TransitModel::linear:
      return std::clamp(0.5 * (u + 1.0), 0.0, 1.0);
  }
  return 0.0;
}

double transit_rise_time(const AodSpec& spec, TransitModel model) {
  // Both models are monotone in t; bisect for the 10% and 90% crossings.
  const double scale = spec.crystal_waist / spec.acoustic_velocity;
  const double t0 = transit_center_time(spec);
  auto crossing = [&](double level) {
    double lo = t0 - 20.0 * scale;
    double hi = t0 + 20.0 * scale;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (transit_ramp(spec, mid, model) < level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  return crossing(0.9) - crossing(0.1);
}

double theoretical_switch_time(const AodSpec& spec) {
  return 1.3 * spec.crystal_waist / spec.acoustic_velocity;
}

void validate(const MonitorChain& c) {
  if (!(c.sample_fraction > 0.0 && c.sample_fraction < 1.0)) {
    throw InvalidElementError("aod_model", "validate", "sample_fraction must lie in (0, 1)");
  }
  if (!(c.responsivity > 0.0)) throw InvalidElementError("aod_model", "validate", "responsivity must be positive");
  if (!(c.tia_gain > 0.0)) throw InvalidElementError("aod_model", "validate", "tia_gain must be positive");
}

double monitor_voltage(const MonitorChain& chain, double beam_power, double efficiency) {
  return beam_power * efficiency * chain.sample_fraction * chain.responsivity * chain.tia_gain;
}

}  // namespace aodkit::aod
