#include "aodkit/addressing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "aodkit/diffraction.hpp"
#include "aodkit/errors.hpp"
#include "aodkit/units.hpp"

namespace aodkit::addressing {

IonChain::IonChain(std::vector<double> positions) : positions_(std::move(positions)) {
  if (positions_.empty()) throw InvalidElementError("addressing_analyzer", "IonChain", "chain needs at least one ion");
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (!std::isfinite(positions_[i])) {
      throw InvalidElementError("addressing_analyzer", "IonChain", "ion positions must be finite");
    }
    if (i > 0 && !(positions_[i] > positions_[i - 1])) {
      throw InvalidElementError("addressing_analyzer", "IonChain", "ion positions must be strictly increasing");
    }
  }
}

IonChain IonChain::uniform(std::size_t count, double spacing) {
  if (count == 0 || !(spacing > 0.0)) {
    throw InvalidElementError("addressing_analyzer", "IonChain", "uniform chain needs count >= 1 and spacing > 0");
  }
  std::vector<double> p(count);
  const double mid = 0.5 * static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) p[i] = (static_cast<double>(i) - mid) * spacing;
  return IonChain(std::move(p));
}

double IonChain::mean_spacing() const {
  if (positions_.size() < 2) return 0.0;
  return (positions_.back() - positions_.front()) / static_cast<double>(positions_.size() - 1);
}

const char* coupling_name(CouplingMode mode) {
  return mode == CouplingMode::intensity ? "intensity" : "amplitude";
}

double relative_rate(double waist, double offset, CouplingMode mode) {
  if (!(waist > 0.0)) throw InvalidElementError("addressing_analyzer", "relative_rate", "waist must be positive");
  const double r = offset / waist;
  return mode == CouplingMode::intensity ? std::exp(-2.0 * r * r) : std::exp(-r * r);
}

CrosstalkMatrix::CrosstalkMatrix(std::size_t n, std::vector<double> values, double waist, std::string source)
    : n_(n), values_(std::move(values)), waist_(waist), source_(std::move(source)) {
  if (values_.size() != n_ * n_) {
    throw InvalidElementError("addressing_analyzer", "CrosstalkMatrix", "matrix must be square");
  }
}

double CrosstalkMatrix::worst_off_diagonal() const {
  double w = 0.0;
  for (std::size_t j = 0; j < n_; ++j) w = std::max(w, worst_in_column(j));
  return w;
}

double CrosstalkMatrix::worst_in_column(std::size_t j) const {
  double w = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (i != j) w = std::max(w, (*this)(i, j));
  }
  return w;
}

CrosstalkMatrix crosstalk_matrix(const IonChain& chain, double waist, std::span<const double> centers,
                                 CouplingMode mode) {
  const std::size_t n = chain.size();
  if (centers.size() != n) {
    throw ConfigurationError("addressing_analyzer", "crosstalk_matrix",
                             "expected one steering centre per ion (" + std::to_string(n) + "), got " +
                                 std::to_string(centers.size()));
  }
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) v[i * n + j] = relative_rate(waist, chain[i] - centers[j], mode);
  }
  return CrosstalkMatrix(n, std::move(v), waist, "ideal_gaussian");
}

double ClippingGeometry::ion_plane_waist() const {
  return std::abs(magnification) * wavelength * focal_length / (units::pi * collimated_waist);
}

ClippingGeometry ClippingGeometry::for_ion_waist(double ion_waist, double wavelength, double focal_length,
                                                 double magnification) {
  const double wc = std::abs(magnification) * wavelength * focal_length / (units::pi * ion_waist);
  return ClippingGeometry{wavelength, focal_length, magnification, wc};
}

CrosstalkMatrix clipped_crosstalk(const IonChain& chain, const ClippingGeometry& g, double clipping_ratio,
                                  CouplingMode mode) {
  if (!(clipping_ratio > kMinClippingRatio)) {
    throw InvalidElementError("addressing_analyzer", "clipped_crosstalk", "clipping ratio must exceed 0.5");
  }
  const double focus_waist = g.wavelength * g.focal_length / (units::pi * g.collimated_waist);
  // 20 samples per focused waist; grid spans > 10 collimated waists.
  const double pitch = focus_waist / 20.0;
  const auto needed = static_cast<std::size_t>(std::ceil(10.0 * g.collimated_waist / pitch));
  const std::size_t count = std::bit_ceil(needed);

  using optics::Axis;
  const auto input = optics::FieldProfile1D::gaussian(Axis::x, g.wavelength, g.collimated_waist, pitch, count);
  const auto lensed = optics::apply_thin_lens(input, g.focal_length);
  const optics::Aperture aperture{clipping_ratio * g.collimated_waist, std::numeric_limits<double>::infinity()};
  const auto fourier = optics::diffract(lensed, aperture, g.focal_length);
  const auto ion = optics::apply_imaging(fourier, g.magnification);

  // Steering is shift invariant, so column j is the centred profile read at x_i - x_j.
  const double centre_intensity = ion.intensity_at(0.0);
  const std::size_t n = chain.size();
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double rel = std::min(1.0, ion.intensity_at(chain[i] - chain[j]) / centre_intensity);
      v[i * n + j] = mode == CouplingMode::intensity ? rel : std::sqrt(rel);
    }
  }
  std::ostringstream src;
  src << "clipped(ratio=" << clipping_ratio << ")";
  return CrosstalkMatrix(n, std::move(v), g.ion_plane_waist(), src.str());
}

double misalignment_imbalance(double misalignment, double half_range, double perpendicular_waist) {
  if (!(perpendicular_waist > 0.0)) {
    throw InvalidElementError("addressing_analyzer", "misalignment_imbalance", "waist must be positive");
  }
  const double offset = half_range * std::sin(misalignment);
  const double r = offset / perpendicular_waist;
  return 1.0 - std::exp(-2.0 * r * r);
}

SteeringLine::SteeringLine(std::vector<Point2> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InvalidElementError("addressing_analyzer", "SteeringLine", "need at least 2 points");
  for (const auto& p : points_) {
    if (!std::isfinite(p.u) || !std::isfinite(p.v)) {
      throw InvalidElementError("addressing_analyzer", "SteeringLine", "coordinates must be finite");
    }
  }
}

Point2 fit_direction(const SteeringLine& line) {
  const auto pts = line.points();
  double mu = 0.0;
  double mv = 0.0;
  for (const auto& p : pts) {
    mu += p.u;
    mv += p.v;
  }
  mu /= static_cast<double>(pts.size());
  mv /= static_cast<double>(pts.size());
  double suu = 0.0;
  double svv = 0.0;
  double suv = 0.0;
  for (const auto& p : pts) {
    suu += (p.u - mu) * (p.u - mu);
    svv += (p.v - mv) * (p.v - mv);
    suv += (p.u - mu) * (p.v - mv);
  }
  if (suu + svv <= 0.0) {
    throw InvalidElementError("addressing_analyzer", "relative_steering_error", "steering line has zero extent");
  }
  // Principal axis of the 2x2 scatter matrix.
  const double theta = 0.5 * std::atan2(2.0 * suv, suu - svv);
  return Point2{std::cos(theta), std::sin(theta)};
}

double relative_steering_error(const SteeringLine& a, const SteeringLine& b) {
  const Point2 da = fit_direction(a);
  const Point2 db = fit_direction(b);
  const double cross = std::abs(da.u * db.v - da.v * db.u);
  const double dot = std::abs(da.u * db.u + da.v * db.v);
  return std::atan2(cross, dot);
}

}  // namespace aodkit::addressing
