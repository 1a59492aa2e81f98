#include "aodkit/diffraction.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include "aodkit/errors.hpp"
#include "aodkit/units.hpp"

namespace aodkit::optics {

namespace {

using cplx = std::complex<double>;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// FFTW's planner is not thread safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

enum class Direction { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

void fft_in_place(std::vector<cplx>& data, Direction dir) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, static_cast<int>(dir),
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  if (dir == Direction::backward) {
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
  }
}

// Angular frequency of FFT bin j.
double bin_wavenumber(std::size_t j, std::size_t n, double pitch) {
  const double dk = 2.0 * units::pi / (static_cast<double>(n) * pitch);
  const auto sj = static_cast<double>(j);
  return j < n / 2 ? sj * dk : (sj - static_cast<double>(n)) * dk;
}

// Paraxial second-moment evolution sigma^2(z) = s0 + 2 c z + s2 z^2.
struct MomentLaw {
  double s0;
  double c;
  double s2;

  double variance(double z) const { return s0 + 2.0 * c * z + s2 * z * z; }
};

MomentLaw moment_law(const FieldProfile1D& p) {
  const std::size_t n = p.count();
  const auto samples = p.samples();
  const double k = 2.0 * units::pi / p.wavelength();
  const double power = p.power();
  const double xbar = p.centroid();

  double s0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = p.position(i) - xbar;
    s0 += std::norm(samples[i]) * dx * dx;
  }
  s0 *= p.pitch() / power;

  std::vector<cplx> spec(samples.begin(), samples.end());
  fft_in_place(spec, Direction::forward);
  double sp = 0.0;
  double kbar = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double w = std::norm(spec[j]);
    sp += w;
    kbar += w * bin_wavenumber(j, n, p.pitch());
  }
  kbar /= sp;
  double kvar = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double dk = bin_wavenumber(j, n, p.pitch()) - kbar;
    kvar += std::norm(spec[j]) * dk * dk;
  }
  kvar /= sp;

  // dE/dx via the spectrum, then C = (1/k) <(x - xbar) Im(E* E')> / P.
  for (std::size_t j = 0; j < n; ++j) spec[j] *= cplx(0.0, bin_wavenumber(j, n, p.pitch()));
  fft_in_place(spec, Direction::backward);
  double cross = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cross += (p.position(i) - xbar) * std::imag(std::conj(samples[i]) * spec[i]);
  }
  cross *= p.pitch() / (power * k);

  return MomentLaw{s0, cross, kvar / (k * k)};
}

void check_resolution(const FieldProfile1D& p, double distance) {
  const MomentLaw law = moment_law(p);
  const double z_lo = std::min(0.0, distance);
  const double z_hi = std::max(0.0, distance);
  double var_min = std::min(law.variance(z_lo), law.variance(z_hi));
  if (law.s2 > 0.0) {
    const double z_star = -law.c / law.s2;
    if (z_star > z_lo && z_star < z_hi) var_min = std::min(var_min, law.variance(z_star));
  }
  const double var_max = std::max(law.variance(z_lo), law.variance(z_hi));
  const double w_min = 2.0 * std::sqrt(std::max(var_min, 0.0));
  const double w_max = 2.0 * std::sqrt(var_max);

  if (w_min < kMinSamplesPerWaist * p.pitch()) {
    throw ResolutionError("beam_optics", "diffract",
                          "grid too coarse: narrowest beam radius " + std::to_string(w_min) +
                              " m spans fewer than 16 samples of pitch " +
                              std::to_string(p.pitch()) + " m");
  }
  if (p.span() < kMinPaddingFactor * 2.0 * w_max) {
    throw ResolutionError("beam_optics", "diffract",
                          "grid too narrow: span " + std::to_string(p.span()) +
                              " m is less than 4x the widest beam diameter " +
                              std::to_string(2.0 * w_max) + " m");
  }
}

}  // namespace

FieldProfile1D::FieldProfile1D(Axis axis, double wavelength, double center, double pitch,
                               std::vector<cplx> samples)
    : axis_(axis), wavelength_(wavelength), center_(center), pitch_(pitch), samples_(std::move(samples)) {
  if (!(wavelength > 0.0)) throw InvalidElementError("beam_optics", "FieldProfile1D", "wavelength must be positive");
  if (!(pitch > 0.0)) throw InvalidElementError("beam_optics", "FieldProfile1D", "pitch must be positive");
  if (!is_power_of_two(samples_.size())) {
    throw InvalidElementError("beam_optics", "FieldProfile1D", "sample count must be a power of two");
  }
  const double p = power();
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw InvalidElementError("beam_optics", "FieldProfile1D", "total power must be finite and positive");
  }
}

FieldProfile1D FieldProfile1D::gaussian(Axis axis, double wavelength, double waist, double pitch,
                                        std::size_t count, double offset) {
  std::vector<cplx> s(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = (static_cast<double>(i) - static_cast<double>(count / 2)) * pitch - offset;
    s[i] = std::exp(-x * x / (waist * waist));
  }
  return FieldProfile1D(axis, wavelength, 0.0, pitch, std::move(s));
}

double FieldProfile1D::position(std::size_t i) const noexcept {
  return center_ + (static_cast<double>(i) - static_cast<double>(samples_.size() / 2)) * pitch_;
}

double FieldProfile1D::power() const {
  double sum = 0.0;
  for (const auto& v : samples_) sum += std::norm(v);
  return sum * pitch_;
}

double FieldProfile1D::centroid() const {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double w = std::norm(samples_[i]);
    num += w * position(i);
    den += w;
  }
  return num / den;
}

double FieldProfile1D::second_moment_radius() const {
  const double xbar = centroid();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double w = std::norm(samples_[i]);
    const double dx = position(i) - xbar;
    num += w * dx * dx;
    den += w;
  }
  return 2.0 * std::sqrt(num / den);
}

double FieldProfile1D::intensity_at(double x) const {
  const double u = (x - center_) / pitch_ + static_cast<double>(samples_.size() / 2);
  if (u < 0.0 || u > static_cast<double>(samples_.size() - 1)) return 0.0;
  const auto i0 = static_cast<std::size_t>(std::floor(u));
  const std::size_t i1 = std::min(i0 + 1, samples_.size() - 1);
  const double t = u - static_cast<double>(i0);
  const double a = std::norm(samples_[i0]);
  const double b = std::norm(samples_[i1]);
  if (a > 0.0 && b > 0.0) return std::exp((1.0 - t) * std::log(a) + t * std::log(b));
  return (1.0 - t) * a + t * b;
}

double FieldProfile1D::peak_intensity() const {
  double m = 0.0;
  for (const auto& v : samples_) m = std::max(m, std::norm(v));
  return m;
}

FieldProfile1D apply_thin_lens(const FieldProfile1D& profile, double focal_length) {
  if (focal_length == 0.0 || !std::isfinite(focal_length)) {
    throw InvalidElementError("beam_optics", "apply_thin_lens", "focal length must be finite and non-zero");
  }
  const double k = 2.0 * units::pi / profile.wavelength();
  std::vector<cplx> s(profile.samples().begin(), profile.samples().end());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = profile.position(i);
    // Exact converging-wave phase: aberration-free under angular-spectrum propagation.
    const double sag = std::copysign(std::hypot(x, focal_length) - std::abs(focal_length), focal_length);
    s[i] *= std::polar(1.0, -k * sag);
  }
  return FieldProfile1D(profile.axis(), profile.wavelength(), profile.center(), profile.pitch(),
                        std::move(s));
}

FieldProfile1D apply_imaging(const FieldProfile1D& profile, double magnification) {
  if (magnification == 0.0 || !std::isfinite(magnification)) {
    throw InvalidElementError("beam_optics", "apply_imaging", "magnification must be finite and non-zero");
  }
  const double am = std::abs(magnification);
  const double scale = 1.0 / std::sqrt(am);
  std::vector<cplx> s(profile.samples().begin(), profile.samples().end());
  for (auto& v : s) v *= scale;
  double center = profile.center() * magnification;
  if (magnification < 0.0) {
    std::reverse(s.begin(), s.end());
    center += am * profile.pitch();
  }
  return FieldProfile1D(profile.axis(), profile.wavelength(), center, profile.pitch() * am, std::move(s));
}

FieldProfile1D apply_aperture(const FieldProfile1D& profile, const Aperture& aperture) {
  const double hw = aperture.half_width(profile.axis());
  if (!(hw > 0.0)) throw InvalidElementError("beam_optics", "apply_aperture", "half width must be positive");
  std::vector<cplx> s(profile.samples().begin(), profile.samples().end());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::abs(profile.position(i)) > hw) s[i] = 0.0;
  }
  return FieldProfile1D(profile.axis(), profile.wavelength(), profile.center(), profile.pitch(), std::move(s));
}

FieldProfile1D diffract(const FieldProfile1D& profile, const Aperture& aperture, double distance) {
  if (!std::isfinite(distance)) throw InvalidElementError("beam_optics", "diffract", "distance must be finite");
  // Sampling bounds are judged on the unclipped beam; hard edges have unbounded
  // spectral moments by construction.
  check_resolution(profile, distance);

  const bool clipped = std::isfinite(aperture.half_width(profile.axis()));
  FieldProfile1D clipped_profile = clipped ? apply_aperture(profile, aperture) : profile;
  if (distance == 0.0) return clipped_profile;

  const std::size_t n = clipped_profile.count();
  const double k = 2.0 * units::pi / profile.wavelength();
  std::vector<cplx> s(clipped_profile.samples().begin(), clipped_profile.samples().end());
  fft_in_place(s, Direction::forward);
  for (std::size_t j = 0; j < n; ++j) {
    const double kx = bin_wavenumber(j, n, profile.pitch());
    const double kz2 = k * k - kx * kx;
    if (kz2 <= 0.0) {
      s[j] = 0.0;  // evanescent
      continue;
    }
    // exp(i (kz - k) z); the common k z phase is dropped. kz - k written to avoid cancellation.
    const double dkz = -kx * kx / (std::sqrt(kz2) + k);
    s[j] *= std::polar(1.0, dkz * distance);
  }
  fft_in_place(s, Direction::backward);
  return FieldProfile1D(profile.axis(), profile.wavelength(), profile.center(), profile.pitch(), std::move(s));
}

FieldProfile1D diffract(const FieldProfile1D& profile, double distance) {
  const double inf = std::numeric_limits<double>::infinity();
  return diffract(profile, Aperture{inf, inf}, distance);
}

}  // namespace aodkit::optics
