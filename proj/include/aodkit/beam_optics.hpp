#pragma once

// Astigmatic Gaussian beam propagation through per-axis ray-matrix elements.
//
// A beam is stored per transverse axis as (waist radius, waist position) plus a
// paraxial centroid ray (offset, tilt). The complex beam parameter is only used
// internally when an element acts on the beam.

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "aodkit/aod_model.hpp"

namespace aodkit::optics {

enum class Axis { x = 0, z = 1 };

inline constexpr std::array<Axis, 2> kAxes{Axis::x, Axis::z};

const char* axis_name(Axis axis);

// Gaussian state along one transverse axis. waist_position is the signed
// distance from the current reference plane to the waist, positive downstream.
struct AxisState {
  double waist = 0.0;
  double waist_position = 0.0;
  double centroid = 0.0;
  double tilt = 0.0;
};

class AstigmaticBeam {
 public:
  AstigmaticBeam(double wavelength, AxisState x, AxisState z, double power = 1.0);

  // Beam with its waist on the reference plane along both axes.
  static AstigmaticBeam collimated(double wavelength, double waist_x, double waist_z);

  double wavelength() const noexcept { return wavelength_; }
  const AxisState& axis(Axis a) const noexcept { return axes_[static_cast<int>(a)]; }
  double waist(Axis a) const noexcept { return axis(a).waist; }
  double waist_position(Axis a) const noexcept { return axis(a).waist_position; }
  double centroid(Axis a) const noexcept { return axis(a).centroid; }
  double tilt(Axis a) const noexcept { return axis(a).tilt; }
  double rayleigh_range(Axis a) const noexcept;
  // Relative transmitted power (1 at the source).
  double power() const noexcept { return power_; }

 private:
  double wavelength_;
  std::array<AxisState, 2> axes_;
  double power_;
};

// 1/e^2 intensity radius at `distance` downstream of the beam's reference plane.
double spot_size_at(const AstigmaticBeam& beam, Axis axis, double distance = 0.0);

struct RayMatrix {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double d = 1.0;

  double determinant() const noexcept { return a * d - b * c; }
};

// Matrix product: (lhs * rhs) applies rhs first.
RayMatrix operator*(const RayMatrix& lhs, const RayMatrix& rhs);

enum class LensAxes { both, x_only, z_only };

struct FreeSpace {
  double distance = 0.0;
};

struct ThinLens {
  double focal_length = 0.0;
  LensAxes axes = LensAxes::both;
};

// Scales beam width by M and divergence by 1/M on each axis.
struct AnamorphicScaler {
  double mx = 1.0;
  double mz = 1.0;
};

// Deflects along x (the acoustic axis) by the drive-frequency angle and scales
// the transmitted power by the diffraction efficiency.
struct AodDeflector {
  aod::AodSpec spec;
  double drive_frequency = 0.0;
};

// Ideal aberration-free relay from an object plane to its image plane.
struct ImagingSystem {
  double magnification = 1.0;
};

// Ideal image rotator: rotates the steering (centroid and tilt) vector about the
// optical axis. The beam ellipse is assumed already aligned with the ion frame.
struct ImageRotator {
  double angle = 0.0;
};

// Hard-edge aperture; only meaningful for FieldProfile1D diffraction studies.
struct Aperture {
  double half_width_x = 0.0;
  double half_width_z = 0.0;

  double half_width(Axis a) const noexcept { return a == Axis::x ? half_width_x : half_width_z; }
};

struct BeamSampler {
  double fraction = 0.0;
};

using ElementKind = std::variant<FreeSpace, ThinLens, AnamorphicScaler, AodDeflector,
                                 ImagingSystem, ImageRotator, Aperture, BeamSampler>;

struct OpticalElement {
  ElementKind kind;
  // Optional plane name ("fourier", "ion", ...) for lookups after tracing.
  std::string label;
};

using OpticalTrain = std::vector<OpticalElement>;

std::string element_type_name(const OpticalElement& element);

// Throws InvalidElementError for non-physical parameters.
void validate(const OpticalElement& element);

// Unit-determinant ray matrix of the element along one axis. Tilt and power
// side effects (AOD, rotator, sampler) are not part of the matrix.
RayMatrix ray_matrix(const OpticalElement& element, Axis axis);

AstigmaticBeam propagate(const AstigmaticBeam& beam, const OpticalElement& element);

// Beam after each element, in order; result[i] is the state leaving train[i].
std::vector<AstigmaticBeam> trace_train(const AstigmaticBeam& beam, const OpticalTrain& train);

// Index of the first element with this label, or -1.
int find_label(const OpticalTrain& train, const std::string& label);

}  // namespace aodkit::optics
