#pragma once

// Two-prism anamorphic beam expander: forward ray model, inverse solve for the
// second-prism angle, local sensitivities and a seeded tolerance Monte Carlo.
//
// Geometry (2D, angles in radians internally):
//   * Each prism is registered at its apex bisector, so a wedge error relative
//     to the mount rotates both faces by half of it.
//   * alpha orients prism 1 against the input beam; alpha_prime orients prism 2
//     against prism 1's nominal exit face.
//   * Under the grazing convention the entrance incidence angles are
//     90deg - alpha and 90deg - alpha_prime - (prism 1 exit angle); under the
//     normal convention the 90deg offset is dropped.
// Every surface multiplies the beam width by cos(refracted) / cos(incident).

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aodkit::prism {

enum class AngleConvention { normal_referenced, grazing_referenced };

const char* convention_name(AngleConvention c);

struct PrismPairDesign {
  double alpha = 0.0;
  double alpha_prime = 0.0;
  double beta = 0.0;
  double beta_prime = 0.0;
  double n = 1.0;
  // Wedge angles the mounts were machined for; unset means "as designed".
  std::optional<double> beta_mount;
  std::optional<double> beta_prime_mount;

  static PrismPairDesign from_degrees(double alpha_deg, double alpha_prime_deg, double beta_deg,
                                      double beta_prime_deg, double n);
};

// Absolute half-widths, radians.
struct ToleranceSpec {
  double alpha = 0.0;
  double alpha_prime = 0.0;
  double beta = 0.0;
  double beta_prime = 0.0;

  static ToleranceSpec from_degrees(double a, double ap, double b, double bp);
  std::array<double, 4> as_array() const { return {alpha, alpha_prime, beta, beta_prime}; }
};

inline constexpr std::array<const char*, 4> kAngleNames{"alpha", "alpha_prime", "beta", "beta_prime"};

struct PrismTrace {
  double expansion = 1.0;
  // Incidence angle on each of the four surfaces, from the surface normal.
  std::array<double, 4> incidence{};
  // Output ray direction relative to the input beam.
  double exit_direction = 0.0;
};

PrismTrace trace_prisms(const PrismPairDesign& design, AngleConvention convention);

// Throws TotalInternalReflectionError (with the 1-based surface) if the ray is
// totally reflected or misses a face.
double expansion_factor(const PrismPairDesign& design, AngleConvention convention);

struct ContourGrid {
  std::vector<double> alphas;
  std::vector<double> alpha_primes;
  // Row-major, rows follow alpha_primes, columns follow alphas. Infeasible
  // points hold NaN and are flagged.
  std::vector<double> values;
  std::vector<bool> feasible;

  double at(std::size_t alpha_index, std::size_t alpha_prime_index) const {
    return values[alpha_prime_index * alphas.size() + alpha_index];
  }
  bool feasible_at(std::size_t alpha_index, std::size_t alpha_prime_index) const {
    return feasible[alpha_prime_index * alphas.size() + alpha_index];
  }
};

ContourGrid expansion_contour(const std::vector<double>& alphas, const std::vector<double>& alpha_primes,
                              double beta, double beta_prime, double n, AngleConvention convention);

struct AlphaPrimeBracket {
  double low;
  double high;
};

// [5deg, 45deg]: covers the feasible, monotone branch of the grazing convention.
AlphaPrimeBracket default_bracket();

struct AlphaPrimeSolution {
  double alpha_prime = 0.0;
  double achieved = 0.0;
  // True when every alpha_prime on the bracket meets the target (e.g. n = 1).
  bool degenerate = false;
};

AlphaPrimeSolution solve_alpha_prime(double target, double alpha, double beta, double beta_prime,
                                     double n, AngleConvention convention,
                                     AlphaPrimeBracket bracket = default_bracket());

// d lnM / d angle, per radian, by central differences.
struct Sensitivity {
  std::array<double, 4> per_radian{};

  // |d lnM / d angle| * tolerance for each angle.
  std::array<double, 4> relative_errors(const ToleranceSpec& tol) const;
};

inline constexpr double kSensitivityStepDeg = 1e-4;

Sensitivity sensitivity(const PrismPairDesign& design, AngleConvention convention,
                        double step_deg = kSensitivityStepDeg);

struct ToleranceReport {
  std::size_t samples = 0;
  std::size_t infeasible = 0;
  std::uint64_t seed = 0;
  AngleConvention convention = AngleConvention::grazing_referenced;
  double design_expansion = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  // max |M / M_design - 1| over the feasible draws and the single-angle endpoints.
  double worst_case_relative_error = 0.0;
  // max over +-tolerance of |M / M_design - 1| with only that angle perturbed.
  std::array<double, 4> single_angle_errors{};
  // Optional per-draw expansion values, in draw order (feasible only).
  std::vector<double> draws;
};

inline constexpr std::size_t kMonteCarloChunk = 4096;

// Angles drawn independently and uniformly within +-tolerance. Infeasible draws
// are excluded and counted. Chunk c uses a sub-seed derived from (seed, c), so the
// report does not depend on how chunks are scheduled across threads.
ToleranceReport tolerance_monte_carlo(const PrismPairDesign& design, const ToleranceSpec& tolerances,
                                      std::size_t samples, std::uint64_t seed,
                                      AngleConvention convention, bool keep_draws = false);

// Anchor design used to pick the angle convention.
PrismPairDesign anchor_design();
inline constexpr double kAnchorExpansion = 4.7;
inline constexpr double kAnchorTolerance = 0.15;

struct CalibrationResult {
  AngleConvention convention;
  double anchor_expansion;
  double relative_error;
  // Every convention tried, in order, with the expansion it gave at the anchor.
  std::vector<std::pair<AngleConvention, double>> tried;
};

// Tries the normal-referenced convention first and falls back to the grazing one.
CalibrationResult calibrate_convention();

// Convention chosen by calibrate_convention(); computed once.
AngleConvention calibrated_convention();

}  // namespace aodkit::prism
