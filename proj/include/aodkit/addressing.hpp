#pragma once

// Ion-chain geometry against the delivered beam: neighbour crosstalk (ideal and
// aperture-clipped), steering-misalignment imbalance and steering-line angles.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace aodkit::addressing {

class IonChain {
 public:
  explicit IonChain(std::vector<double> positions);
  // `count` ions spaced uniformly, centred on the origin.
  static IonChain uniform(std::size_t count, double spacing);

  std::size_t size() const noexcept { return positions_.size(); }
  std::span<const double> positions() const noexcept { return positions_; }
  double operator[](std::size_t i) const { return positions_[i]; }
  // Mean nearest-neighbour spacing; 0 for a single ion.
  double mean_spacing() const;

 private:
  std::vector<double> positions_;
};

enum class CouplingMode {
  // Two RF tones in one beam: Rabi rate follows intensity.
  intensity,
  // One tone in this beam against a global beam: rate follows field amplitude.
  amplitude,
};

const char* coupling_name(CouplingMode mode);

double relative_rate(double waist, double offset, CouplingMode mode = CouplingMode::intensity);

// c(i, j) = relative rate at ion i while targeting ion j.
class CrosstalkMatrix {
 public:
  CrosstalkMatrix(std::size_t n, std::vector<double> values, double waist, std::string source);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  double waist() const noexcept { return waist_; }
  // "ideal_gaussian" or "clipped(ratio=...)".
  const std::string& source() const noexcept { return source_; }
  double worst_off_diagonal() const;
  // Largest off-diagonal in column j (targeting ion j).
  double worst_in_column(std::size_t j) const;

 private:
  std::size_t n_;
  std::vector<double> values_;
  double waist_;
  std::string source_;
};

// One steering centre per ion; pass the ion positions themselves for ideal pointing.
CrosstalkMatrix crosstalk_matrix(const IonChain& chain, double waist, std::span<const double> centers,
                                 CouplingMode mode = CouplingMode::intensity);

// Optical path used for the clipping study: a collimated beam of
// `collimated_waist`, clipped by a hard aperture, focused by a Fourier lens and
// imaged onto the ions.
struct ClippingGeometry {
  double wavelength = 355e-9;
  double focal_length = 0.1;
  double magnification = 0.25;
  double collimated_waist = 1.5e-3;

  // Ion-plane waist of the unclipped beam.
  double ion_plane_waist() const;
  // Collimated waist that yields `ion_waist` at the ion plane.
  static ClippingGeometry for_ion_waist(double ion_waist, double wavelength, double focal_length,
                                        double magnification);
};

inline constexpr double kMinClippingRatio = 0.5;

// clipping_ratio = aperture half-width / collimated waist. The ion-plane field is
// computed with optics::diffract; crosstalk is read from |E|^2 at the ions.
CrosstalkMatrix clipped_crosstalk(const IonChain& chain, const ClippingGeometry& geometry,
                                  double clipping_ratio, CouplingMode mode = CouplingMode::intensity);

// 1 - edge-ion relative intensity when the steering line is rotated by
// `misalignment` against the chain over `half_range`.
double misalignment_imbalance(double misalignment, double half_range, double perpendicular_waist);

struct Point2 {
  double u = 0.0;
  double v = 0.0;
};

class SteeringLine {
 public:
  explicit SteeringLine(std::vector<Point2> points);
  std::span<const Point2> points() const noexcept { return points_; }

 private:
  std::vector<Point2> points_;
};

// Unit direction of the orthogonal least-squares fit. Throws for zero extent.
Point2 fit_direction(const SteeringLine& line);

// Angle between the fitted directions, folded into [0, pi/2].
double relative_steering_error(const SteeringLine& a, const SteeringLine& b);

}  // namespace aodkit::addressing
