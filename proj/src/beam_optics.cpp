#include "aodkit/beam_optics.hpp"

#include <cmath>
#include <complex>

#include "aodkit/errors.hpp"
#include "aodkit/units.hpp"

namespace aodkit::optics {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void invalid(const std::string& op, const std::string& what) {
  throw InvalidElementError("beam_optics", op, what);
}

bool lens_acts_on(LensAxes axes, Axis axis) {
  switch (axes) {
    case LensAxes::both:
      return true;
    case LensAxes::x_only:
      return axis == Axis::x;
    case LensAxes::z_only:
      return axis == Axis::z;
  }
  return true;
}

}  // namespace

const char* axis_name(Axis axis) { return axis == Axis::x ? "x" : "z"; }

AstigmaticBeam::AstigmaticBeam(double wavelength, AxisState x, AxisState z, double power)
    : wavelength_(wavelength), axes_{x, z}, power_(power) {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
    invalid("AstigmaticBeam", "wavelength must be positive");
  }
  for (Axis a : kAxes) {
    const AxisState& s = axes_[static_cast<int>(a)];
    if (!(s.waist > 0.0) || !std::isfinite(s.waist)) {
      invalid("AstigmaticBeam", std::string("waist_") + axis_name(a) + " must be positive");
    }
    if (!std::isfinite(s.waist_position) || !std::isfinite(s.centroid) || !std::isfinite(s.tilt)) {
      invalid("AstigmaticBeam", std::string("non-finite state on axis ") + axis_name(a));
    }
  }
  if (!(power >= 0.0)) invalid("AstigmaticBeam", "power must be non-negative");
}

AstigmaticBeam AstigmaticBeam::collimated(double wavelength, double waist_x, double waist_z) {
  return AstigmaticBeam(wavelength, AxisState{waist_x, 0.0, 0.0, 0.0},
                        AxisState{waist_z, 0.0, 0.0, 0.0});
}

double AstigmaticBeam::rayleigh_range(Axis a) const noexcept {
  const double w = waist(a);
  return units::pi * w * w / wavelength_;
}

double spot_size_at(const AstigmaticBeam& beam, Axis axis, double distance) {
  // Distance from the waist to the evaluation plane.
  const double z = distance - beam.waist_position(axis);
  const double zr = beam.rayleigh_range(axis);
  return beam.waist(axis) * std::sqrt(1.0 + (z / zr) * (z / zr));
}

RayMatrix operator*(const RayMatrix& l, const RayMatrix& r) {
  return RayMatrix{l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c,
                   l.c * r.b + l.d * r.d};
}

std::string element_type_name(const OpticalElement& element) {
  return std::visit(Overloaded{
                        [](const FreeSpace&) { return "free_space"; },
                        [](const ThinLens&) { return "thin_lens"; },
                        [](const AnamorphicScaler&) { return "anamorphic_scaler"; },
                        [](const AodDeflector&) { return "aod"; },
                        [](const ImagingSystem&) { return "imaging"; },
                        [](const ImageRotator&) { return "rotator"; },
                        [](const Aperture&) { return "aperture"; },
                        [](const BeamSampler&) { return "sampler"; },
                    },
                    element.kind);
}

void validate(const OpticalElement& element) {
  std::visit(Overloaded{
                 [](const FreeSpace& e) {
                   if (!std::isfinite(e.distance)) invalid("validate", "free_space distance must be finite");
                 },
                 [](const ThinLens& e) {
                   if (e.focal_length == 0.0 || !std::isfinite(e.focal_length)) {
                     invalid("validate", "thin_lens focal length must be finite and non-zero");
                   }
                 },
                 [](const AnamorphicScaler& e) {
                   if (!(e.mx > 0.0) || !(e.mz > 0.0) || !std::isfinite(e.mx) || !std::isfinite(e.mz)) {
                     invalid("validate", "anamorphic_scaler factors must be positive");
                   }
                 },
                 [](const AodDeflector& e) {
                   try {
                     aod::validate(e.spec);
                   } catch (const DomainError& err) {
                     invalid("validate", std::string("aod: ") + err.what());
                   }
                   if (!std::isfinite(e.drive_frequency)) invalid("validate", "aod drive frequency must be finite");
                 },
                 [](const ImagingSystem& e) {
                   if (e.magnification == 0.0 || !std::isfinite(e.magnification)) {
                     invalid("validate", "imaging magnification must be finite and non-zero");
                   }
                 },
                 [](const ImageRotator& e) {
                   if (!std::isfinite(e.angle)) invalid("validate", "rotator angle must be finite");
                 },
                 [](const Aperture& e) {
                   if (!(e.half_width_x > 0.0) || !(e.half_width_z > 0.0)) {
                     invalid("validate", "aperture half widths must be positive");
                   }
                 },
                 [](const BeamSampler& e) {
                   if (!(e.fraction >= 0.0 && e.fraction < 1.0)) {
                     invalid("validate", "sampler fraction must lie in [0, 1)");
                   }
                 },
             },
             element.kind);
}

RayMatrix ray_matrix(const OpticalElement& element, Axis axis) {
  return std::visit(Overloaded{
                        [](const FreeSpace& e) { return RayMatrix{1.0, e.distance, 0.0, 1.0}; },
                        [axis](const ThinLens& e) {
                          if (!lens_acts_on(e.axes, axis)) return RayMatrix{};
                          return RayMatrix{1.0, 0.0, -1.0 / e.focal_length, 1.0};
                        },
                        [axis](const AnamorphicScaler& e) {
                          const double m = axis == Axis::x ? e.mx : e.mz;
                          return RayMatrix{m, 0.0, 0.0, 1.0 / m};
                        },
                        [](const AodDeflector&) { return RayMatrix{}; },
                        [](const ImagingSystem& e) {
                          return RayMatrix{e.magnification, 0.0, 0.0, 1.0 / e.magnification};
                        },
                        [](const ImageRotator&) { return RayMatrix{}; },
                        [](const Aperture&) { return RayMatrix{}; },
                        [](const BeamSampler&) { return RayMatrix{}; },
                    },
                    element.kind);
}

AstigmaticBeam propagate(const AstigmaticBeam& beam, const OpticalElement& element) {
  validate(element);
  if (std::holds_alternative<Aperture>(element.kind)) {
    invalid("propagate", "apertures act only on FieldProfile1D; use diffract()");
  }

  const double lambda = beam.wavelength();
  std::array<AxisState, 2> out{};
  for (Axis a : kAxes) {
    const RayMatrix m = ray_matrix(element, a);
    // q = (distance past the waist) + i zR
    const std::complex<double> q(-beam.waist_position(a), beam.rayleigh_range(a));
    const std::complex<double> q2 = (m.a * q + m.b) / (m.c * q + m.d);
    const double zr = q2.imag();
    AxisState s;
    s.waist = std::sqrt(zr * lambda / units::pi);
    s.waist_position = -q2.real();
    s.centroid = m.a * beam.centroid(a) + m.b * beam.tilt(a);
    s.tilt = m.c * beam.centroid(a) + m.d * beam.tilt(a);
    out[static_cast<int>(a)] = s;
  }

  double power = beam.power();
  auto& x = out[static_cast<int>(Axis::x)];
  auto& z = out[static_cast<int>(Axis::z)];
  if (const auto* aod_el = std::get_if<AodDeflector>(&element.kind)) {
    x.tilt += aod::deflection_angle(aod_el->spec, aod_el->drive_frequency);
    power *= aod::diffraction_efficiency(aod_el->spec, aod_el->drive_frequency);
  } else if (const auto* rot = std::get_if<ImageRotator>(&element.kind)) {
    const double c = std::cos(rot->angle);
    const double s = std::sin(rot->angle);
    const double cx = c * x.centroid - s * z.centroid;
    const double cz = s * x.centroid + c * z.centroid;
    const double tx = c * x.tilt - s * z.tilt;
    const double tz = s * x.tilt + c * z.tilt;
    x.centroid = cx;
    z.centroid = cz;
    x.tilt = tx;
    z.tilt = tz;
  } else if (const auto* sampler = std::get_if<BeamSampler>(&element.kind)) {
    power *= 1.0 - sampler->fraction;
  }
  return AstigmaticBeam(lambda, x, z, power);
}

std::vector<AstigmaticBeam> trace_train(const AstigmaticBeam& beam, const OpticalTrain& train) {
  if (train.empty()) invalid("trace_train", "train is empty");
  std::vector<AstigmaticBeam> states;
  states.reserve(train.size());
  const AstigmaticBeam* current = &beam;
  for (const auto& element : train) {
    states.push_back(propagate(*current, element));
    current = &states.back();
  }
  return states;
}

int find_label(const OpticalTrain& train, const std::string& label) {
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].label == label) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace aodkit::optics
