#include "aodkit/prism_designer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "aodkit/errors.hpp"
#include "aodkit/rng.hpp"
#include "aodkit/units.hpp"

namespace aodkit::prism {

namespace {

constexpr double kHalfPi = units::pi / 2.0;

struct Refraction {
  double refracted;
  double width_factor;
};

// Snell refraction from index n_in to n_out at incidence `incidence`.
Refraction refract(double incidence, double n_in, double n_out, int surface, const char* op) {
  // Index-matched faces are not optical surfaces.
  if (n_in == n_out) return Refraction{incidence, 1.0};
  if (std::abs(incidence) >= kHalfPi) {
    throw TotalInternalReflectionError(op, surface,
                                       "ray misses surface " + std::to_string(surface) +
                                           " (incidence beyond grazing)");
  }
  const double s = n_in * std::sin(incidence) / n_out;
  if (std::abs(s) >= 1.0) {
    throw TotalInternalReflectionError(op, surface,
                                       "total internal reflection at surface " + std::to_string(surface));
  }
  const double r = std::asin(s);
  return Refraction{r, std::cos(r) / std::cos(incidence)};
}

double entrance_reference(AngleConvention c, double angle) {
  return c == AngleConvention::grazing_referenced ? kHalfPi - angle : angle;
}

void check_design(const PrismPairDesign& d, const char* op) {
  if (!(d.n >= 1.0) || !std::isfinite(d.n)) {
    throw InvalidElementError("prism_designer", op, "refractive index must be >= 1");
  }
  for (double b : {d.beta, d.beta_prime}) {
    if (!(b >= 0.0 && b < kHalfPi)) {
      throw InvalidElementError("prism_designer", op, "wedge angles must lie in [0, 90) deg");
    }
  }
  for (double a : {d.alpha, d.alpha_prime}) {
    if (!std::isfinite(a)) throw InvalidElementError("prism_designer", op, "incidence angles must be finite");
  }
}

PrismTrace trace_impl(const PrismPairDesign& d, AngleConvention c, const char* op) {
  check_design(d, op);
  const double b0 = d.beta_mount.value_or(d.beta);
  const double bp0 = d.beta_prime_mount.value_or(d.beta_prime);
  PrismTrace t;

  // Prism 1: bisector orientation fixed by alpha and the mount wedge.
  const double phi1 = entrance_reference(c, d.alpha) - b0 / 2.0;
  const double nu1 = phi1 + d.beta / 2.0;  // entrance normal
  const double nu2 = phi1 - d.beta / 2.0;  // exit normal
  const double dir0 = 0.0;

  t.incidence[0] = nu1 - dir0;
  const Refraction s1 = refract(t.incidence[0], 1.0, d.n, 1, op);
  const double dir1 = nu1 - s1.refracted;
  t.incidence[1] = dir1 - nu2;
  const Refraction s2 = refract(t.incidence[1], d.n, 1.0, 2, op);
  const double dir2 = nu2 + s2.refracted;

  // Prism 2 is placed relative to prism 1's nominal exit face.
  const double nu2_mount = phi1 - b0 / 2.0;
  const double phi2 = nu2_mount + entrance_reference(c, d.alpha_prime) - bp0 / 2.0;
  const double nu3 = phi2 + d.beta_prime / 2.0;
  const double nu4 = phi2 - d.beta_prime / 2.0;

  t.incidence[2] = nu3 - dir2;
  const Refraction s3 = refract(t.incidence[2], 1.0, d.n, 3, op);
  const double dir3 = nu3 - s3.refracted;
  t.incidence[3] = dir3 - nu4;
  const Refraction s4 = refract(t.incidence[3], d.n, 1.0, 4, op);
  t.exit_direction = nu4 + s4.refracted;

  t.expansion = s1.width_factor * s2.width_factor * s3.width_factor * s4.width_factor;
  return t;
}

double expansion_or_nan(const PrismPairDesign& d, AngleConvention c) {
  try {
    return trace_impl(d, c, "expansion_factor").expansion;
  } catch (const TotalInternalReflectionError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

PrismPairDesign perturbed(const PrismPairDesign& d, const std::array<double, 4>& delta) {
  PrismPairDesign p = d;
  p.beta_mount = d.beta_mount.value_or(d.beta);
  p.beta_prime_mount = d.beta_prime_mount.value_or(d.beta_prime);
  p.alpha += delta[0];
  p.alpha_prime += delta[1];
  p.beta += delta[2];
  p.beta_prime += delta[3];
  return p;
}

}  // namespace

const char* convention_name(AngleConvention c) {
  return c == AngleConvention::grazing_referenced ? "grazing_referenced" : "normal_referenced";
}

PrismPairDesign PrismPairDesign::from_degrees(double a, double ap, double b, double bp, double n) {
  return PrismPairDesign{units::deg(a), units::deg(ap), units::deg(b), units::deg(bp), n, {}, {}};
}

ToleranceSpec ToleranceSpec::from_degrees(double a, double ap, double b, double bp) {
  return ToleranceSpec{units::deg(a), units::deg(ap), units::deg(b), units::deg(bp)};
}

PrismTrace trace_prisms(const PrismPairDesign& design, AngleConvention convention) {
  return trace_impl(design, convention, "trace_prisms");
}

double expansion_factor(const PrismPairDesign& design, AngleConvention convention) {
  return trace_impl(design, convention, "expansion_factor").expansion;
}

ContourGrid expansion_contour(const std::vector<double>& alphas, const std::vector<double>& alpha_primes,
                              double beta, double beta_prime, double n, AngleConvention convention) {
  auto monotone = [](const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
  };
  if (!monotone(alphas) || !monotone(alpha_primes)) {
    throw InvalidElementError("prism_designer", "expansion_contour", "grids must be strictly increasing");
  }
  ContourGrid g{alphas, alpha_primes, {}, {}};
  g.values.reserve(alphas.size() * alpha_primes.size());
  g.feasible.reserve(alphas.size() * alpha_primes.size());
  for (double ap : alpha_primes) {
    for (double a : alphas) {
      const double m = expansion_or_nan(PrismPairDesign{a, ap, beta, beta_prime, n, {}, {}}, convention);
      g.values.push_back(m);
      g.feasible.push_back(std::isfinite(m));
    }
  }
  return g;
}

AlphaPrimeBracket default_bracket() { return {units::deg(5.0), units::deg(45.0)}; }

AlphaPrimeSolution solve_alpha_prime(double target, double alpha, double beta, double beta_prime,
                                     double n, AngleConvention convention, AlphaPrimeBracket bracket) {
  if (!(target > 0.0) || !(bracket.low < bracket.high)) {
    throw InvalidElementError("prism_designer", "solve_alpha_prime", "target must be positive and bracket ordered");
  }
  auto m_at = [&](double ap) {
    return expansion_or_nan(PrismPairDesign{alpha, ap, beta, beta_prime, n, {}, {}}, convention);
  };

  // Coarse scan for the achievable range and the first sign change.
  constexpr int kScan = 400;
  double lo_m = std::numeric_limits<double>::infinity();
  double hi_m = -lo_m;
  double prev_ap = bracket.low;
  double prev_r = m_at(prev_ap) - target;
  std::optional<std::pair<double, double>> root_bracket;
  for (int i = 0; i <= kScan; ++i) {
    const double ap = bracket.low + (bracket.high - bracket.low) * i / kScan;
    const double m = m_at(ap);
    if (!std::isfinite(m)) {
      prev_r = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    lo_m = std::min(lo_m, m);
    hi_m = std::max(hi_m, m);
    const double r = m - target;
    if (!root_bracket && i > 0 && std::isfinite(prev_r) && ((prev_r <= 0.0) != (r <= 0.0))) {
      root_bracket = {prev_ap, ap};
    }
    prev_ap = ap;
    prev_r = r;
  }

  if (std::isfinite(lo_m) && hi_m - lo_m <= 1e-12 * target && std::abs(hi_m - target) <= 1e-6 * target) {
    const double mid = 0.5 * (bracket.low + bracket.high);
    return AlphaPrimeSolution{mid, m_at(mid), true};
  }
  if (!root_bracket) {
    throw UnachievableTargetError("target expansion " + std::to_string(target) +
                                      " not bracketed; achievable range on the interval is [" +
                                      std::to_string(lo_m) + ", " + std::to_string(hi_m) + "]",
                                  lo_m, hi_m);
  }

  auto [a, b] = *root_bracket;
  double ra = m_at(a) - target;
  for (int i = 0; i < 200 && b - a > 1e-15; ++i) {
    const double mid = 0.5 * (a + b);
    const double rm = m_at(mid) - target;
    if ((ra <= 0.0) == (rm <= 0.0)) {
      a = mid;
      ra = rm;
    } else {
      b = mid;
    }
  }
  const double ap = 0.5 * (a + b);
  return AlphaPrimeSolution{ap, m_at(ap), false};
}

std::array<double, 4> Sensitivity::relative_errors(const ToleranceSpec& tol) const {
  const auto t = tol.as_array();
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = std::abs(per_radian[i]) * t[i];
  return out;
}

Sensitivity sensitivity(const PrismPairDesign& design, AngleConvention convention, double step_deg) {
  const double h = units::deg(step_deg);
  Sensitivity s;
  for (std::size_t i = 0; i < 4; ++i) {
    std::array<double, 4> plus{};
    std::array<double, 4> minus{};
    plus[i] = h;
    minus[i] = -h;
    try {
      const double mp = trace_impl(perturbed(design, plus), convention, "sensitivity").expansion;
      const double mm = trace_impl(perturbed(design, minus), convention, "sensitivity").expansion;
      s.per_radian[i] = (std::log(mp) - std::log(mm)) / (2.0 * h);
    } catch (const TotalInternalReflectionError& e) {
      throw TotalInternalReflectionError("sensitivity", e.surface(),
                                         std::string("infeasible neighbourhood in ") + kAngleNames[i] +
                                             ": " + e.what());
    }
  }
  return s;
}

ToleranceReport tolerance_monte_carlo(const PrismPairDesign& design, const ToleranceSpec& tolerances,
                                      std::size_t samples, std::uint64_t seed, AngleConvention convention,
                                      bool keep_draws) {
  if (samples < 1) throw InvalidElementError("prism_designer", "tolerance_monte_carlo", "samples must be >= 1");
  const auto tol = tolerances.as_array();
  for (double t : tol) {
    if (!(t >= 0.0)) throw InvalidElementError("prism_designer", "tolerance_monte_carlo", "tolerances must be >= 0");
  }

  ToleranceReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.convention = convention;
  rep.design_expansion = expansion_factor(design, convention);
  const double m0 = rep.design_expansion;

  struct Chunk {
    std::size_t feasible = 0;
    std::size_t infeasible = 0;
    double sum = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    std::vector<double> values;
  };
  const std::size_t chunks = (samples + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<Chunk> results(chunks);

  auto run_chunk = [&](std::size_t c) {
    auto engine = make_engine(seed, c);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const std::size_t begin = c * kMonteCarloChunk;
    const std::size_t end = std::min(samples, begin + kMonteCarloChunk);
    Chunk& out = results[c];
    out.values.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
      std::array<double, 4> delta{};
      for (std::size_t i = 0; i < 4; ++i) delta[i] = unit(engine) * tol[i];
      const double m = expansion_or_nan(perturbed(design, delta), convention);
      if (!std::isfinite(m)) {
        ++out.infeasible;
        continue;
      }
      ++out.feasible;
      out.sum += m - m0;
      out.min = std::min(out.min, m);
      out.max = std::max(out.max, m);
      out.values.push_back(m);
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, chunks);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < chunks; c += workers) run_chunk(c);
      });
    }
  }

  // Ordered reduction keeps the result independent of scheduling.
  std::size_t feasible = 0;
  double sum = 0.0;
  rep.min = std::numeric_limits<double>::infinity();
  rep.max = -rep.min;
  for (const auto& ch : results) {
    feasible += ch.feasible;
    rep.infeasible += ch.infeasible;
    sum += ch.sum;
    rep.min = std::min(rep.min, ch.min);
    rep.max = std::max(rep.max, ch.max);
  }
  if (feasible == 0) {
    throw TotalInternalReflectionError("tolerance_monte_carlo", 0, "every draw was infeasible");
  }
  rep.mean = m0 + sum / static_cast<double>(feasible);
  double ss = 0.0;
  for (const auto& ch : results) {
    for (double v : ch.values) ss += (v - rep.mean) * (v - rep.mean);
  }
  rep.stddev = std::sqrt(ss / static_cast<double>(feasible));
  if (keep_draws) {
    rep.draws.reserve(feasible);
    for (const auto& ch : results) rep.draws.insert(rep.draws.end(), ch.values.begin(), ch.values.end());
  }

  double worst = std::max(std::abs(rep.min / m0 - 1.0), std::abs(rep.max / m0 - 1.0));
  for (std::size_t i = 0; i < 4; ++i) {
    double e = 0.0;
    for (double sign : {-1.0, 1.0}) {
      std::array<double, 4> delta{};
      delta[i] = sign * tol[i];
      const double m = expansion_or_nan(perturbed(design, delta), convention);
      if (std::isfinite(m)) e = std::max(e, std::abs(m / m0 - 1.0));
    }
    rep.single_angle_errors[i] = e;
    worst = std::max(worst, e);
  }
  rep.worst_case_relative_error = worst;
  return rep;
}

PrismPairDesign anchor_design() { return PrismPairDesign::from_degrees(39.0, 14.75, 30.0, 30.0, 1.476); }

CalibrationResult calibrate_convention() {
  CalibrationResult r{AngleConvention::grazing_referenced, 0.0, 0.0, {}};
  for (AngleConvention c : {AngleConvention::normal_referenced, AngleConvention::grazing_referenced}) {
    const double m = expansion_or_nan(anchor_design(), c);
    r.tried.emplace_back(c, m);
    const double err = std::abs(m / kAnchorExpansion - 1.0);
    r.convention = c;
    r.anchor_expansion = m;
    r.relative_error = err;
    if (std::isfinite(m) && err <= kAnchorTolerance) break;
  }
  return r;
}

AngleConvention calibrated_convention() {
  static const AngleConvention c = calibrate_convention().convention;
  return c;
}

}  // namespace aodkit::prism
