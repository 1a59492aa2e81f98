#include "aodkit/virtual_lab.hpp"

#include <algorithm>
#include <array>
#include <complex>
#include <cmath>
#include <limits>
#include <numeric>

#include "aodkit/errors.hpp"
#include "aodkit/fitting.hpp"
#include "aodkit/rng.hpp"
#include "aodkit/units.hpp"

namespace aodkit::lab {

namespace {

using addressing::CouplingMode;
constexpr double kPi = units::pi;

struct Bloch {
  double u;
  double v;
  double w;
};

Bloch bloch_rhs(const Bloch& y, double rabi, double detuning) {
  return Bloch{-detuning * y.v, detuning * y.u - rabi * y.w, rabi * y.v};
}

Bloch axpy(const Bloch& y, double h, const Bloch& k) { return Bloch{y.u + h * k.u, y.v + h * k.v, y.w + h * k.w}; }

Bloch rk4_step(const std::function<double(double)>& rabi, double detuning, double t, const Bloch& y, double h) {
  const double r0 = rabi(t);
  const double rm = rabi(t + 0.5 * h);
  const double r1 = rabi(t + h);
  const Bloch k1 = bloch_rhs(y, r0, detuning);
  const Bloch k2 = bloch_rhs(axpy(y, 0.5 * h, k1), rm, detuning);
  const Bloch k3 = bloch_rhs(axpy(y, 0.5 * h, k2), rm, detuning);
  const Bloch k4 = bloch_rhs(axpy(y, h, k3), r1, detuning);
  return Bloch{y.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
               y.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
               y.w + h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w)};
}

// Composite 5-point Gauss-Legendre on [a, b].
template <class F>
double integrate(F&& f, double a, double b, int panels) {
  static constexpr std::array<double, 5> node{0.0, -0.5384693101056831, 0.5384693101056831,
                                              -0.9061798459386640, 0.9061798459386640};
  static constexpr std::array<double, 5> weight{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                                0.2369268850561891, 0.2369268850561891};
  if (!(b > a)) return 0.0;
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (std::size_t k = 0; k < 5; ++k) sum += weight[k] * f(mid + 0.5 * h * node[k]);
  }
  return 0.5 * h * sum;
}

}  // namespace

RabiDrive RabiDrive::from_pi_time(double pi_time, double duration, double detuning) {
  if (!(pi_time > 0.0)) throw InvalidElementError("virtual_lab", "RabiDrive", "pi time must be positive");
  return RabiDrive{kPi / pi_time, detuning, duration};
}

double RabiDrive::pi_time() const { return kPi / peak_rabi; }

double rabi_probability(const RabiDrive& drive, double t) {
  const double rabi = drive.peak_rabi;
  const double g2 = rabi * rabi + drive.detuning * drive.detuning;
  if (g2 == 0.0) return 0.0;
  const double s = std::sin(0.5 * std::sqrt(g2) * t);
  return rabi * rabi / g2 * s * s;
}

double bloch_probability(const std::function<double(double)>& rabi_rate, double detuning, double duration,
                         double tolerance) {
  if (!(duration > 0.0)) return 0.0;
  Bloch y{0.0, 0.0, -1.0};
  double t = 0.0;
  double h = duration / 1000.0;
  while (t < duration) {
    h = std::min(h, duration - t);
    const Bloch full = rk4_step(rabi_rate, detuning, t, y, h);
    const Bloch half = rk4_step(rabi_rate, detuning, t, y, 0.5 * h);
    const Bloch two = rk4_step(rabi_rate, detuning, t + 0.5 * h, half, 0.5 * h);
    const double err = std::max({std::abs(two.u - full.u), std::abs(two.v - full.v), std::abs(two.w - full.w)}) / 15.0;
    const double allowed = tolerance * h / duration;
    if (err <= allowed || h <= duration * 1e-12) {
      t += h;
      // Richardson-extrapolated step.
      y = Bloch{two.u + (two.u - full.u) / 15.0, two.v + (two.v - full.v) / 15.0, two.w + (two.w - full.w) / 15.0};
    }
    const double factor = err > 0.0 ? 0.9 * std::pow(allowed / err, 0.2) : 2.0;
    h *= std::clamp(factor, 0.2, 2.0);
  }
  return std::clamp(0.5 * (1.0 + y.w), 0.0, 1.0);
}

const char* abscissa_name(Abscissa a) {
  switch (a) {
    case Abscissa::frequency:
      return "frequency";
    case Abscissa::drive_time:
      return "drive_time";
    case Abscissa::extra_time:
      return "extra_time";
  }
  return "unknown";
}

double sample_probability(double p, int shots, std::uint64_t seed, std::uint64_t stream, std::size_t index) {
  const double clamped = std::clamp(p, 0.0, 1.0);
  if (shots == kNoiseless) return clamped;
  if (shots < 0) throw InvalidElementError("virtual_lab", "sample_probability", "shots must be >= 0");
  auto engine = make_engine(seed, stream * kStreamStride + index);
  std::binomial_distribution<int> dist(shots, clamped);
  return static_cast<double>(dist(engine)) / shots;
}

ScanTrace simulate_profile_scan(const ProfileScan& scan, const RabiDrive& drive, std::span<const double> frequencies,
                                int shots, std::uint64_t seed) {
  ScanTrace tr{Abscissa::frequency, {}, {}, shots, seed};
  tr.x.assign(frequencies.begin(), frequencies.end());
  tr.p1.reserve(frequencies.size());
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    const double offset = scan.steering_efficiency * (frequencies[i] - scan.center_frequency) - scan.ion_position;
    const double rel = addressing::relative_rate(scan.waist, offset, scan.coupling);
    const RabiDrive local{drive.peak_rabi * rel, drive.detuning, drive.duration};
    tr.p1.push_back(sample_probability(rabi_probability(local, drive.duration), shots, seed, 0, i));
  }
  return tr;
}

ProfileFit fit_gaussian_profile(const ScanTrace& trace, double drive_time, double steering_efficiency,
                                CouplingMode coupling) {
  const std::size_t n = trace.x.size();
  if (n < 5 || trace.p1.size() != n) {
    throw FitFailure("virtual_lab", "fit_gaussian_profile", "need at least 5 points");
  }
  if (!(drive_time > 0.0) || !(steering_efficiency != 0.0)) {
    throw FitFailure("virtual_lab", "fit_gaussian_profile", "drive time and steering efficiency must be non-zero");
  }
  const auto imax = static_cast<std::size_t>(
      std::distance(trace.p1.begin(), std::max_element(trace.p1.begin(), trace.p1.end())));
  const double pmax = trace.p1[imax];
  if (!(pmax > 1e-12)) {
    throw FitFailure("virtual_lab", "fit_gaussian_profile", "trace carries no signal (max P1 = 0)");
  }

  // Half-max crossings either side of the peak.
  auto crossing = [&](int dir) -> std::optional<double> {
    for (auto i = static_cast<long>(imax); i + dir >= 0 && i + dir < static_cast<long>(n); i += dir) {
      const auto j = static_cast<std::size_t>(i + dir);
      if (trace.p1[j] < 0.5 * pmax) {
        const auto k = static_cast<std::size_t>(i);
        const double t = (trace.p1[k] - 0.5 * pmax) / (trace.p1[k] - trace.p1[j]);
        return trace.x[k] + t * (trace.x[j] - trace.x[k]);
      }
    }
    return std::nullopt;
  };
  const auto left = crossing(-1);
  const auto right = crossing(+1);
  double fwhm = 0.0;
  if (left && right) {
    fwhm = *right - *left;
  } else if (left || right) {
    fwhm = 2.0 * std::abs((left ? *left : *right) - trace.x[imax]);
  } else {
    fwhm = std::abs(trace.x.back() - trace.x.front());
  }
  const double shape = coupling == CouplingMode::intensity ? std::sqrt(2.0 * std::log(2.0))
                                                            : 2.0 * std::sqrt(std::log(2.0));
  const double w0 = std::max(std::abs(fwhm * steering_efficiency) / shape, 1e-12);
  const double f0 = trace.x[imax];
  const double r0 = 2.0 * std::asin(std::sqrt(std::min(pmax, 1.0))) / drive_time;

  // Fit in O(1) units: waist / w0, (centre - f0) * efficiency / w0, rate / r0.
  const auto m = static_cast<int>(n);
  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const double w = std::abs(p[0]) * w0;
    const double fc = f0 + p[1] * w0 / steering_efficiency;
    const double rate = p[2] * r0;
    for (std::size_t i = 0; i < n; ++i) {
      const double offset = steering_efficiency * (trace.x[i] - fc);
      const double rel = addressing::relative_rate(w, offset, coupling);
      const double s = std::sin(0.5 * rate * rel * drive_time);
      r[static_cast<Eigen::Index>(i)] = s * s - trace.p1[i];
    }
  };
  Eigen::VectorXd start(3);
  start << 1.0, 0.0, 1.0;
  const fit::LmResult res = fit::levenberg_marquardt(model, start, m);
  if (!res.converged || !res.params.allFinite()) {
    throw FitFailure("virtual_lab", "fit_gaussian_profile",
                     "no convergence after " + std::to_string(res.iterations) + " iterations, residual " +
                         std::to_string(res.residual_norm));
  }
  return ProfileFit{std::abs(res.params[0]) * w0, f0 + res.params[1] * w0 / steering_efficiency,
                    res.params[2] * r0, res.residual_norm, res.iterations};
}

ChainScanResult simulate_chain_scan(const addressing::IonChain& chain, const ProfileScan& scan, const RabiDrive& drive,
                                    std::span<const double> frequencies, double half_range, int shots,
                                    std::uint64_t seed) {
  std::vector<int> unreachable;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (std::abs(chain[i]) > half_range) unreachable.push_back(static_cast<int>(i));
  }
  if (!unreachable.empty()) {
    std::string list;
    for (int i : unreachable) list += (list.empty() ? "" : ", ") + std::to_string(i);
    throw OutOfRangeError("virtual_lab", "simulate_chain_scan", "ions outside the steering range: " + list,
                          unreachable);
  }
  ChainScanResult out;
  out.envelope = ScanTrace{Abscissa::frequency, {frequencies.begin(), frequencies.end()},
                           std::vector<double>(frequencies.size(), 0.0), shots, seed};
  for (std::size_t ion = 0; ion < chain.size(); ++ion) {
    ScanTrace tr{Abscissa::frequency, {frequencies.begin(), frequencies.end()}, {}, shots, seed};
    tr.p1.reserve(frequencies.size());
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
      const double offset = scan.steering_efficiency * (frequencies[i] - scan.center_frequency) - chain[ion];
      const double rel = addressing::relative_rate(scan.waist, offset, scan.coupling);
      const RabiDrive local{drive.peak_rabi * rel, drive.detuning, drive.duration};
      const double p = sample_probability(rabi_probability(local, drive.duration), shots, seed, ion + 1, i);
      tr.p1.push_back(p);
      out.envelope.p1[i] = std::max(out.envelope.p1[i], p);
    }
    out.per_ion.push_back(std::move(tr));
  }
  return out;
}

std::vector<std::size_t> resolved_peaks(const ScanTrace& trace, double threshold) {
  const auto& p = trace.p1;
  std::vector<std::size_t> peaks;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || p[i] >= p[i - 1];
    const bool right_ok = i + 1 == n || p[i] > p[i + 1];
    if (!(left_ok && right_ok) || p[i] < threshold) continue;
    if (peaks.empty()) {
      peaks.push_back(i);
      continue;
    }
    const std::size_t prev = peaks.back();
    const double valley = *std::min_element(p.begin() + static_cast<long>(prev), p.begin() + static_cast<long>(i) + 1);
    if (valley < 0.5 * std::min(p[prev], p[i])) {
      peaks.push_back(i);
    } else if (p[i] > p[prev]) {
      peaks.back() = i;  // same peak, higher sample
    }
  }
  return peaks;
}

RateFit fit_rabi_rate(std::span<const double> times, std::span<const double> p1) {
  const std::size_t n = times.size();
  if (n < 3 || p1.size() != n) throw FitFailure("virtual_lab", "fit_rabi_rate", "need at least 3 points");
  const double t_max = *std::max_element(times.begin(), times.end());
  if (!(t_max > 0.0)) throw FitFailure("virtual_lab", "fit_rabi_rate", "time grid must extend past 0");
  // A quarter oscillation (P1 = 1/2) within the grid.
  const double quarter_rate = kPi / (2.0 * t_max);
  const double pmax = *std::max_element(p1.begin(), p1.end());
  if (!(pmax > 1e-12)) return RateFit{quarter_rate, 0.0, false};

  double dt = t_max;
  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < n; ++i) {
    if (sorted[i] > sorted[i - 1]) dt = std::min(dt, sorted[i] - sorted[i - 1]);
  }

  // Uniform grids in input order get cos(rate t) by complex rotation.
  const double t0 = times[0];
  const double step_t = (times[n - 1] - times[0]) / static_cast<double>(n - 1);
  bool uniform = step_t > 0.0;
  for (std::size_t i = 0; uniform && i < n; ++i) {
    uniform = std::abs(times[i] - (t0 + step_t * static_cast<double>(i))) <= 1e-9 * t_max;
  }
  std::vector<double> c(n);
  auto fill_cos = [&](double rate) {
    if (uniform) {
      std::complex<double> z = std::polar(1.0, rate * t0);
      const std::complex<double> rot = std::polar(1.0, rate * step_t);
      for (std::size_t i = 0; i < n; ++i) {
        c[i] = z.real();
        z *= rot;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) c[i] = std::cos(rate * times[i]);
    }
  };

  // Coarse scan; the best amplitude for a given rate is linear least squares.
  double pp = 0.0;
  for (double v : p1) pp += v * v;
  auto sse_at = [&](double rate, double* amp_out) {
    fill_cos(rate);
    double ss = 0.0;
    double sp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s2 = 0.5 * (1.0 - c[i]);
      ss += s2 * s2;
      sp += s2 * p1[i];
    }
    const double amp = ss > 0.0 ? std::clamp(sp / ss, 0.0, 1.0) : 0.0;
    if (amp_out) *amp_out = amp;
    return pp - 2.0 * amp * sp + amp * amp * ss;
  };
  const double lo = kPi / (8.0 * t_max);
  const double hi = kPi / dt;
  const double step = 0.05 * kPi / t_max;
  double best_rate = lo;
  double best_sse = std::numeric_limits<double>::infinity();
  for (double r = lo; r <= hi; r += step) {
    const double e = sse_at(r, nullptr);
    if (e < best_sse) {
      best_sse = e;
      best_rate = r;
    }
  }
  double amp0 = 1.0;
  sse_at(best_rate, &amp0);
  if (amp0 <= 0.0) amp0 = 1.0;

  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const double rate = p[0] * best_rate;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::sin(0.5 * rate * times[i]);
      r[static_cast<Eigen::Index>(i)] = p[1] * s * s - p1[i];
    }
  };
  Eigen::VectorXd start(2);
  start << 1.0, amp0;
  const fit::LmResult res = fit::levenberg_marquardt(model, start, static_cast<int>(n));
  const double rate = std::abs(res.params[0]) * best_rate;
  const double sigma = std::sqrt(std::max(res.covariance(0, 0), 0.0)) * best_rate;
  if (!res.params.allFinite() || rate < quarter_rate || res.params[1] < 0.1) {
    return RateFit{quarter_rate, 0.0, false};
  }
  return RateFit{rate, sigma, true};
}

CrosstalkExperiment simulate_crosstalk_experiment(std::span<const double> relative_rates, std::size_t target,
                                                  const CrosstalkGrids& grids, const RabiDrive& drive, int shots,
                                                  std::uint64_t seed) {
  if (target >= relative_rates.size()) {
    throw ConfigurationError("virtual_lab", "simulate_crosstalk_experiment", "target index out of range");
  }
  if (grids.target_times.empty() || grids.neighbor_times.empty()) {
    throw ConfigurationError("virtual_lab", "simulate_crosstalk_experiment", "time grids must be non-empty");
  }
  CrosstalkExperiment out;
  out.target = target;
  for (std::size_t ion = 0; ion < relative_rates.size(); ++ion) {
    const auto& times = ion == target ? grids.target_times : grids.neighbor_times;
    const RabiDrive local{drive.peak_rabi * relative_rates[ion], drive.detuning, 0.0};
    IonRate r;
    r.trace = ScanTrace{Abscissa::drive_time, times, {}, shots, seed};
    for (std::size_t i = 0; i < times.size(); ++i) {
      r.trace.p1.push_back(sample_probability(rabi_probability(local, times[i]), shots, seed, ion, i));
    }
    r.fit = fit_rabi_rate(r.trace.x, r.trace.p1);
    out.ions.push_back(std::move(r));
  }
  const RateFit& tf = out.ions[target].fit;
  if (!tf.resolved) {
    throw FitFailure("virtual_lab", "simulate_crosstalk_experiment", "target oscillation not resolved on its grid");
  }
  for (auto& ion : out.ions) {
    ion.ratio = ion.fit.rate / tf.rate;
    ion.upper_bound = !ion.fit.resolved;
    if (ion.fit.resolved) {
      const double a = ion.fit.sigma / ion.fit.rate;
      const double b = tf.sigma / tf.rate;
      ion.ratio_sigma = ion.ratio * std::sqrt(a * a + b * b);
    }
  }
  return out;
}

CrosstalkExperiment simulate_crosstalk_experiment(const addressing::IonChain& chain, double waist, std::size_t target,
                                                  const CrosstalkGrids& grids, const RabiDrive& drive, int shots,
                                                  std::uint64_t seed, CouplingMode coupling) {
  if (target >= chain.size()) {
    throw ConfigurationError("virtual_lab", "simulate_crosstalk_experiment", "target index out of range");
  }
  std::vector<double> rel(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    rel[i] = addressing::relative_rate(waist, chain[i] - chain[target], coupling);
  }
  return simulate_crosstalk_experiment(rel, target, grids, drive, shots, seed);
}

double switch_amplitude(const SwitchModel& model, double t) {
  if (model.kind == SwitchModelKind::pure_delay) return t >= model.delay ? 1.0 : 0.0;
  return aod::transit_ramp(model.aod, t, model.ramp);
}

double ion1_pulse_area(const SwitchSequence& seq, double duration) {
  const double rate = 0.5 * kPi / seq.pi_half_ion1;
  if (seq.model.kind == SwitchModelKind::pure_delay) {
    return rate * std::max(0.0, duration - seq.model.delay);
  }
  const int power = seq.coupling == CouplingMode::intensity ? 2 : 1;
  auto weight = [&](double t) { return std::pow(switch_amplitude(seq.model, t), power); };
  // Past centre + 12 waists the ramp equals 1 to double precision.
  const double scale = seq.model.aod.crystal_waist / seq.model.aod.acoustic_velocity;
  const double t_cut = std::min(duration, aod::transit_center_time(seq.model.aod) + 12.0 * scale);
  double area = integrate(weight, 0.0, t_cut, 2000);
  if (duration > t_cut) area += duration - t_cut;
  return rate * area;
}

SwitchingResult simulate_switching_experiment(const SwitchSequence& seq, std::span<const double> extra_times, int shots,
                                              std::uint64_t seed) {
  for (double v : {seq.settle_time, seq.pi_half_ion0, seq.pi_half_ion1}) {
    if (!(v >= 0.0)) throw InvalidElementError("virtual_lab", "simulate_switching_experiment", "times must be >= 0");
  }
  if (seq.model.kind == SwitchModelKind::pure_delay && !(seq.model.delay >= 0.0)) {
    throw InvalidElementError("virtual_lab", "simulate_switching_experiment", "delay must be >= 0");
  }
  SwitchingResult out;
  out.ion0 = ScanTrace{Abscissa::extra_time, {extra_times.begin(), extra_times.end()}, {}, shots, seed};
  out.ion1 = out.ion0;
  out.delta = out.ion0;
  // The AOM has settled before the gate starts; ion0 sees a clean pi/2 pulse.
  const RabiDrive ion0_drive = RabiDrive::from_pi_time(2.0 * seq.pi_half_ion0);
  const double p_ion0 = rabi_probability(ion0_drive, seq.pi_half_ion0);
  for (std::size_t i = 0; i < extra_times.size(); ++i) {
    if (!(extra_times[i] >= 0.0)) {
      throw InvalidElementError("virtual_lab", "simulate_switching_experiment", "extra times must be >= 0");
    }
    const double area = ion1_pulse_area(seq, seq.pi_half_ion1 + extra_times[i]);
    const double s = std::sin(0.5 * area);
    const double p0 = sample_probability(p_ion0, shots, seed, 0, i);
    const double p1 = sample_probability(s * s, shots, seed, 1, i);
    out.ion0.p1.push_back(p0);
    out.ion1.p1.push_back(p1);
    out.delta.p1.push_back(std::abs(p0 - p1));
  }
  return out;
}

SwitchTimeFit fit_switch_time(const ScanTrace& delta) {
  const std::size_t n = delta.x.size();
  if (n < kSwitchFitPoints || delta.p1.size() != n) {
    throw FitFailure("virtual_lab", "fit_switch_time", "need at least 7 points");
  }
  const auto imin = static_cast<std::size_t>(
      std::distance(delta.p1.begin(), std::min_element(delta.p1.begin(), delta.p1.end())));
  if (imin == 0 || imin + 1 == n) {
    throw UnbracketedMinimumError("virtual_lab", "fit_switch_time",
                                  "minimum at grid edge (index " + std::to_string(imin) + ")");
  }
  const std::size_t half = kSwitchFitPoints / 2;
  const std::size_t start = std::min(imin > half ? imin - half : 0, n - kSwitchFitPoints);
  const double x0 = delta.x[imin];
  const double scale = (delta.x[start + kSwitchFitPoints - 1] - delta.x[start]) / 6.0;
  std::vector<double> xs(kSwitchFitPoints);
  std::vector<double> ys(kSwitchFitPoints);
  for (std::size_t k = 0; k < kSwitchFitPoints; ++k) {
    xs[k] = (delta.x[start + k] - x0) / scale;
    ys[k] = delta.p1[start + k];
  }
  const fit::Quadratic q = fit::fit_quadratic(xs, ys);
  if (!(q.c > 0.0)) throw FitFailure("virtual_lab", "fit_switch_time", "local fit is not convex");
  const double v = -q.b / (2.0 * q.c);
  // Delta method on the vertex -b / 2c.
  const double db = -1.0 / (2.0 * q.c);
  const double dc = q.b / (2.0 * q.c * q.c);
  const double var = db * db * q.covariance(1, 1) + dc * dc * q.covariance(2, 2) + 2.0 * db * dc * q.covariance(1, 2);
  return SwitchTimeFit{x0 + v * scale, std::sqrt(std::max(var, 0.0)) * scale};
}

}  // namespace aodkit::lab
