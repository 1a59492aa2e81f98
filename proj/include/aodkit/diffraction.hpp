#pragma once

// One-dimensional scalar diffraction on a uniform grid: hard apertures, thin
// lens phases, ideal imaging and angular-spectrum free-space propagation.

#include <complex>
#include <span>
#include <vector>

#include "aodkit/beam_optics.hpp"

namespace aodkit::optics {

class FieldProfile1D {
 public:
  // Sample i sits at center + (i - count/2) * pitch. count must be a power of two.
  FieldProfile1D(Axis axis, double wavelength, double center, double pitch,
                 std::vector<std::complex<double>> samples);

  // Gaussian field exp(-(x - offset)^2 / waist^2) with its waist on this plane.
  static FieldProfile1D gaussian(Axis axis, double wavelength, double waist, double pitch,
                                 std::size_t count, double offset = 0.0);

  Axis axis() const noexcept { return axis_; }
  double wavelength() const noexcept { return wavelength_; }
  double center() const noexcept { return center_; }
  double pitch() const noexcept { return pitch_; }
  std::size_t count() const noexcept { return samples_.size(); }
  double span() const noexcept { return pitch_ * static_cast<double>(samples_.size()); }
  double position(std::size_t i) const noexcept;
  std::span<const std::complex<double>> samples() const noexcept { return samples_; }

  // sum |E|^2 * pitch
  double power() const;
  double centroid() const;
  // 1/e^2 intensity radius of the equivalent Gaussian, 2 * sqrt(<(x - <x>)^2>).
  double second_moment_radius() const;
  // |E|^2 at x, interpolated linearly in log intensity (exact for Gaussian
  // tails); 0 outside the grid.
  double intensity_at(double x) const;
  double peak_intensity() const;

 private:
  Axis axis_;
  double wavelength_;
  double center_;
  double pitch_;
  std::vector<std::complex<double>> samples_;
};

// Multiplies by the phase of an ideal lens of focal length f (converging
// cylindrical wavefront, paraxially exp(-i k x^2 / 2f)).
FieldProfile1D apply_thin_lens(const FieldProfile1D& profile, double focal_length);

// Ideal imaging: E'(x) = E(x / m) / sqrt|m|. Power is preserved.
FieldProfile1D apply_imaging(const FieldProfile1D& profile, double magnification);

FieldProfile1D apply_aperture(const FieldProfile1D& profile, const Aperture& aperture);

// Hard aperture (if finite) followed by angular-spectrum propagation over
// `distance`. Throws ResolutionError when the grid has fewer than 16 samples
// across the narrowest beam radius reached, or spans less than 4x the widest
// beam diameter reached, on [0, distance].
FieldProfile1D diffract(const FieldProfile1D& profile, const Aperture& aperture, double distance);

// No aperture.
FieldProfile1D diffract(const FieldProfile1D& profile, double distance);

inline constexpr double kMinSamplesPerWaist = 16.0;
inline constexpr double kMinPaddingFactor = 4.0;

}  // namespace aodkit::optics
