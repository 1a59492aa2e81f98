#include "aodkit/steering.hpp"

#include <variant>

#include "aodkit/errors.hpp"

namespace aodkit::aod {

namespace {

// Index of the single AOD, after checking the train shape.
std::size_t checked_aod_index(const optics::OpticalTrain& train, int plane_index) {
  int aod_index = -1;
  int count = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (std::holds_alternative<optics::AodDeflector>(train[i].kind)) {
      aod_index = static_cast<int>(i);
      ++count;
    }
  }
  if (count != 1) {
    throw ConfigurationError("aod_model", "steering_map",
                             "train must contain exactly one AOD deflector, found " + std::to_string(count));
  }
  bool lens_after = false;
  for (std::size_t i = static_cast<std::size_t>(aod_index) + 1; i < train.size(); ++i) {
    if (const auto* lens = std::get_if<optics::ThinLens>(&train[i].kind)) {
      if (lens->axes != optics::LensAxes::z_only) lens_after = true;
    }
  }
  if (!lens_after) {
    throw ConfigurationError("aod_model", "steering_map", "no Fourier lens acting on x follows the AOD");
  }
  const int last = static_cast<int>(train.size()) - 1;
  if (plane_index < -1 || plane_index > last) {
    throw ConfigurationError("aod_model", "steering_map", "plane index out of range");
  }
  return static_cast<std::size_t>(aod_index);
}

double centroid_at(const AodSpec& spec, const optics::OpticalTrain& train, std::size_t aod_index,
                   double frequency, std::size_t plane) {
  // Only the centroid ray matters; use a nominal beam.
  optics::AstigmaticBeam beam =
      optics::AstigmaticBeam::collimated(spec.optical_wavelength, spec.crystal_waist, spec.crystal_waist);
  for (std::size_t i = 0; i <= plane; ++i) {
    optics::OpticalElement el = train[i];
    if (i == aod_index) {
      el.kind = optics::AodDeflector{spec, frequency};
    }
    beam = optics::propagate(beam, el);
  }
  return beam.centroid(optics::Axis::x);
}

}  // namespace

double steering_map(const AodSpec& spec, const optics::OpticalTrain& train, double frequency,
                    int plane_index) {
  const std::size_t aod = checked_aod_index(train, plane_index);
  const std::size_t plane = plane_index < 0 ? train.size() - 1 : static_cast<std::size_t>(plane_index);
  return centroid_at(spec, train, aod, frequency, plane) -
         centroid_at(spec, train, aod, spec.center_frequency, plane);
}

double steering_efficiency(const AodSpec& spec, const optics::OpticalTrain& train, int plane_index) {
  // The map is affine in frequency for ideal elements, so a band-edge secant is exact.
  const double half = 0.5 * spec.bandwidth;
  const double hi = steering_map(spec, train, spec.center_frequency + half, plane_index);
  const double lo = steering_map(spec, train, spec.center_frequency - half, plane_index);
  return (hi - lo) / spec.bandwidth;
}

}  // namespace aodkit::aod
