#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "aodkit/errors.hpp"
#include "aodkit/units.hpp"
#include "aodkit/virtual_lab.hpp"

using namespace aodkit;
using namespace aodkit::lab;
using addressing::CouplingMode;
using addressing::IonChain;
using units::MHz;
using units::ns;
using units::um;
using units::us;

namespace {

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t i = 0; i <= n; ++i) v.push_back(lo + step * static_cast<double>(i));
  return v;
}

// pi pulse at the beam centre
RabiDrive centre_pi(double t_pi = us(5)) { return RabiDrive::from_pi_time(t_pi, t_pi); }

}  // namespace

TEST_CASE("rabi probability") {
  const auto d = RabiDrive::from_pi_time(us(4.26));
  CHECK(rabi_probability(d, 0.0) == 0.0);
  CHECK(rabi_probability(d, us(4.26)) == doctest::Approx(1.0).epsilon(1e-15));
  RabiDrive det = d;
  det.detuning = d.peak_rabi;
  double best = 0.0;
  for (double t = 0.0; t < us(20); t += ns(1)) best = std::max(best, rabi_probability(det, t));
  CHECK(best == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(rabi_probability(RabiDrive{}, us(1)) == 0.0);
}

TEST_CASE("bloch integrator matches the closed form") {
  for (double detuning_ratio : {0.0, 0.3, 1.0, 2.5}) {
    const auto d = RabiDrive::from_pi_time(us(1.75), 0.0, 0.0);
    const double omega = d.peak_rabi;
    for (double t : {us(0.3), us(1.75), us(3.5), us(7.9)}) {
      RabiDrive dd = d;
      dd.detuning = detuning_ratio * omega;
      const double num = bloch_probability([&](double) { return omega; }, dd.detuning, t);
      CAPTURE(detuning_ratio);
      CAPTURE(t);
      CHECK(std::abs(num - rabi_probability(dd, t)) < 1e-8);
    }
  }
}

TEST_CASE("bloch integrator on a ramped drive equals the pulse-area rule") {
  const double omega = units::pi / us(2);
  auto rate = [&](double t) { return omega * 0.5 * std::erfc(-(t - us(0.5)) / us(0.2)); };
  // Area by dense trapezoid.
  double area = 0.0;
  const int n = 200000;
  const double T = us(3);
  for (int i = 0; i < n; ++i) area += 0.5 * (rate(T * i / n) + rate(T * (i + 1) / n)) * T / n;
  const double s = std::sin(0.5 * area);
  CHECK(std::abs(bloch_probability(rate, 0.0, T) - s * s) < 1e-8);
}

TEST_CASE("sampling") {
  CHECK(sample_probability(0.3, kNoiseless, 1, 0, 0) == 0.3);
  CHECK(sample_probability(1.2, kNoiseless, 1, 0, 0) == 1.0);
  const double a = sample_probability(0.3, 200, 99, 2, 7);
  CHECK(a == sample_probability(0.3, 200, 99, 2, 7));
  CHECK(a * 200 == doctest::Approx(std::round(a * 200)));
  CHECK_THROWS_AS(sample_probability(0.3, -1, 1, 0, 0), InvalidElementError);
  double mean = 0.0;
  for (std::size_t i = 0; i < 2000; ++i) mean += sample_probability(0.3, 200, 5, 0, i);
  CHECK(mean / 2000 == doctest::Approx(0.3).epsilon(0.01));
}

TEST_CASE("profile scan symmetry and zero drive") {
  ProfileScan scan;
  const auto freqs = grid(MHz(145), MHz(155), MHz(0.1));
  const auto tr = simulate_profile_scan(scan, centre_pi(), freqs, kNoiseless, 0);
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    CHECK(tr.p1[i] == doctest::Approx(tr.p1[freqs.size() - 1 - i]).epsilon(1e-9));
    CHECK(tr.p1[i] >= 0.0);
    CHECK(tr.p1[i] <= 1.0);
  }
  RabiDrive off = centre_pi();
  off.peak_rabi = 0.0;
  const auto dark = simulate_profile_scan(scan, off, freqs, kNoiseless, 0);
  for (double p : dark.p1) CHECK(p == 0.0);
  CHECK_THROWS_AS(fit_gaussian_profile(dark, off.duration, scan.steering_efficiency), FitFailure);
}

TEST_CASE("profile fit round trip") {
  for (double w : {um(1.57), um(1.49)}) {
    ProfileScan scan;
    scan.waist = w;
    scan.center_frequency = MHz(150.3);
    const auto freqs = grid(MHz(146), MHz(154), MHz(0.1));
    const auto drive = centre_pi();
    const auto tr = simulate_profile_scan(scan, drive, freqs, kNoiseless, 0);
    const auto fit = fit_gaussian_profile(tr, drive.duration, scan.steering_efficiency);
    CHECK(fit.waist == doctest::Approx(w).epsilon(1e-3));
    CHECK(fit.center_frequency == doctest::Approx(scan.center_frequency).epsilon(1e-6));
    CHECK(fit.peak_rate == doctest::Approx(drive.peak_rabi).epsilon(1e-3));
  }
}

TEST_CASE("profile fit in amplitude coupling") {
  ProfileScan scan;
  scan.coupling = CouplingMode::amplitude;
  const auto freqs = grid(MHz(144), MHz(156), MHz(0.1));
  const auto drive = centre_pi();
  const auto tr = simulate_profile_scan(scan, drive, freqs, kNoiseless, 0);
  const auto fit = fit_gaussian_profile(tr, drive.duration, scan.steering_efficiency, CouplingMode::amplitude);
  CHECK(fit.waist == doctest::Approx(scan.waist).epsilon(1e-3));
}

TEST_CASE("profile fit with shot noise") {
  ProfileScan scan;
  scan.waist = um(1.57);
  // 401 points at 20 kHz; over 400 oracle seeds the worst waist error was 2.0%.
  const auto freqs = grid(MHz(146), MHz(154), MHz(0.02));
  const auto drive = centre_pi();
  int within = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto tr = simulate_profile_scan(scan, drive, freqs, 200, seed);
    const auto fit = fit_gaussian_profile(tr, drive.duration, scan.steering_efficiency);
    if (std::abs(fit.waist / scan.waist - 1.0) < 0.03) ++within;
  }
  CHECK(within == 20);
  const auto a = simulate_profile_scan(scan, drive, freqs, 200, 17);
  const auto b = simulate_profile_scan(scan, drive, freqs, 200, 17);
  CHECK(a.p1 == b.p1);
}

TEST_CASE("profile fit needs five points") {
  ScanTrace tr{Abscissa::frequency, {1, 2, 3, 4}, {0.1, 0.5, 0.9, 0.5}, 0, 0};
  CHECK_THROWS_AS(fit_gaussian_profile(tr, us(5), 1.5e-12), FitFailure);
}

TEST_CASE("chain scan resolves every ion") {
  ProfileScan scan;
  const auto chain = IonChain::uniform(30, um(3.8));
  const auto freqs = grid(MHz(90), MHz(210), MHz(0.05));
  const auto res = simulate_chain_scan(chain, scan, centre_pi(), freqs, um(78), kNoiseless, 0);
  CHECK(res.per_ion.size() == 30);
  const auto peaks = resolved_peaks(res.envelope);
  CHECK(peaks.size() == 30);

  // Valley between neighbours: 1 - P1(midpoint) / peak.
  const double mid = um(1.9);
  const double rel = addressing::relative_rate(um(1.5), mid);
  const double valley = 2.0 * std::pow(std::sin(0.5 * units::pi * rel), 2);
  CHECK(1.0 - valley > 0.9);
  for (std::size_t k = 1; k < peaks.size(); ++k) {
    const auto lo = res.envelope.p1.begin() + static_cast<long>(peaks[k - 1]);
    const auto hi = res.envelope.p1.begin() + static_cast<long>(peaks[k]);
    CHECK(*std::min_element(lo, hi) < 0.1 * std::min(*lo, *hi));
  }
}

TEST_CASE("chain scan noisy and single ion") {
  ProfileScan scan;
  const auto freqs = grid(MHz(90), MHz(210), MHz(0.05));
  const auto chain = IonChain::uniform(30, um(3.8));
  const auto noisy = simulate_chain_scan(chain, scan, centre_pi(), freqs, um(78), 200, 4);
  CHECK(resolved_peaks(noisy.envelope).size() == 30);

  const IonChain one({um(12)});
  const auto res = simulate_chain_scan(one, scan, centre_pi(), freqs, um(78), kNoiseless, 0);
  const auto peaks = resolved_peaks(res.envelope);
  REQUIRE(peaks.size() == 1);
  CHECK(res.envelope.x[peaks[0]] == doctest::Approx(MHz(158)).epsilon(1e-6));
}

TEST_CASE("chain scan range check") {
  ProfileScan scan;
  const auto chain = IonChain::uniform(60, um(3.8));
  const auto freqs = grid(MHz(100), MHz(200), MHz(1));
  try {
    simulate_chain_scan(chain, scan, centre_pi(), freqs, um(75), kNoiseless, 0);
    FAIL("expected OutOfRangeError");
  } catch (const OutOfRangeError& e) {
    CHECK(e.unreachable().size() == 20);
    CHECK(e.unreachable().front() == 0);
    CHECK(e.unreachable().back() == 59);
  }
}

TEST_CASE("resolved peaks merges shoulders") {
  ScanTrace tr{Abscissa::frequency, grid(0, 10, 1), {0, 0.2, 0.9, 0.85, 0.95, 0.3, 0.0, 0.6, 0.1, 0.0, 0.0}, 0, 0};
  const auto p = resolved_peaks(tr);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == 4);
  CHECK(p[1] == 7);
}

TEST_CASE("rabi rate fit") {
  const double omega = units::pi / us(4.98);
  const auto times = grid(0.0, us(40), us(0.1));
  std::vector<double> p(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) p[i] = std::pow(std::sin(0.5 * omega * times[i]), 2);
  const auto fit = fit_rabi_rate(times, p);
  CHECK(fit.resolved);
  CHECK(fit.rate == doctest::Approx(omega).epsilon(1e-6));

  std::vector<double> zeros(times.size(), 0.0);
  const auto none = fit_rabi_rate(times, zeros);
  CHECK_FALSE(none.resolved);
  CHECK(none.rate == doctest::Approx(units::pi / (2 * us(40))));
}

TEST_CASE("crosstalk experiment recovers an injected ratio") {
  const auto drive = RabiDrive::from_pi_time(us(4.98));
  CrosstalkGrids grids{grid(0.0, us(30), us(0.05)), grid(0.0, units::ms(40), units::us(10))};
  const std::vector<double> rates{1.0, 8.6e-4, 0.0};
  const auto exp = simulate_crosstalk_experiment(rates, 0, grids, drive, kNoiseless, 0);
  REQUIRE(exp.ions.size() == 3);
  CHECK(exp.ions[0].ratio == doctest::Approx(1.0));
  CHECK_FALSE(exp.ions[1].upper_bound);
  CHECK(exp.ions[1].ratio == doctest::Approx(8.6e-4).epsilon(0.02));
  CHECK(exp.ions[2].upper_bound);

  // Doubling the drive and halving both grids leaves the ratio unchanged.
  const auto fast = RabiDrive::from_pi_time(us(2.49));
  CrosstalkGrids half{grid(0.0, us(15), us(0.025)), grid(0.0, units::ms(20), units::us(5))};
  const auto exp2 = simulate_crosstalk_experiment(rates, 0, half, fast, kNoiseless, 0);
  CHECK(exp2.ions[1].ratio == doctest::Approx(exp.ions[1].ratio).epsilon(1e-6));
}

TEST_CASE("crosstalk experiment on a gaussian chain") {
  const auto chain = IonChain::uniform(3, um(2.2));
  const auto drive = RabiDrive::from_pi_time(us(4.98));
  CrosstalkGrids grids{grid(0.0, us(30), us(0.05)), grid(0.0, units::ms(40), units::us(10))};
  const auto exp = simulate_crosstalk_experiment(chain, um(1.5), 1, grids, drive, kNoiseless, 0);
  const double expect = addressing::relative_rate(um(1.5), um(2.2));
  for (std::size_t i : {0u, 2u}) {
    CHECK_FALSE(exp.ions[i].upper_bound);
    CHECK(exp.ions[i].ratio == doctest::Approx(expect).epsilon(1e-3));
  }
  CHECK_THROWS_AS(simulate_crosstalk_experiment(chain, um(1.5), 3, grids, drive, kNoiseless, 0),
                  ConfigurationError);
}

TEST_CASE("switch amplitude and pulse area") {
  SwitchSequence seq;
  seq.model.kind = SwitchModelKind::pure_delay;
  seq.model.delay = ns(238);
  CHECK(switch_amplitude(seq.model, ns(237)) == 0.0);
  CHECK(switch_amplitude(seq.model, ns(238)) == 1.0);
  const double rate = 0.5 * units::pi / seq.pi_half_ion1;
  CHECK(ion1_pulse_area(seq, us(2)) == doctest::Approx(rate * (us(2) - ns(238))));

  // Transit ramp: quadrature area against the Bloch integrator.
  seq.model.kind = SwitchModelKind::transit_ramp;
  for (double T : {0.0, ns(200), ns(400), ns(700)}) {
    const double dur = seq.pi_half_ion1 + T;
    const double area = ion1_pulse_area(seq, dur);
    const double s = std::sin(0.5 * area);
    const double num = bloch_probability(
        [&](double t) { return rate * std::pow(switch_amplitude(seq.model, t), 2); }, 0.0, dur);
    CHECK(std::abs(num - s * s) < 1e-8);
  }
}

TEST_CASE("switching experiment: pure delay round trip") {
  for (double ts : {ns(238), ns(100), ns(0)}) {
    SwitchSequence seq;
    seq.model.kind = SwitchModelKind::pure_delay;
    seq.model.delay = ts;
    const double pitch = ns(10);
    const auto T = grid(0.0, ns(600), pitch);
    const auto res = simulate_switching_experiment(seq, T, kNoiseless, 0);
    for (double p : res.ion0.p1) CHECK(p == doctest::Approx(0.5).epsilon(1e-15));
    const auto imin = static_cast<std::size_t>(
        std::min_element(res.delta.p1.begin(), res.delta.p1.end()) - res.delta.p1.begin());
    CAPTURE(ts);
    CHECK(std::abs(T[imin] - ts) <= pitch);
    if (ts > 0.0) {
      const auto fit = fit_switch_time(res.delta);
      CHECK(std::abs(fit.t_star - ts) <= pitch);
    } else {
      CHECK(imin == 0);
      CHECK_THROWS_AS(fit_switch_time(res.delta), UnbracketedMinimumError);
    }
  }
}

TEST_CASE("switching experiment: transit ramp") {
  SwitchSequence seq;
  seq.model.kind = SwitchModelKind::transit_ramp;
  const auto T = grid(0.0, ns(800), ns(5));
  const auto res = simulate_switching_experiment(seq, T, kNoiseless, 0);
  const auto fit = fit_switch_time(res.delta);
  CHECK(fit.t_star > ns(200));
  CHECK(fit.t_star < ns(450));

  // Oracle: the Bloch integrator under the ramped drive, bisected for
  // P1(ion1) = P1(ion0) = 1/2.
  const double rate = 0.5 * units::pi / seq.pi_half_ion1;
  auto p1 = [&](double extra) {
    return bloch_probability([&](double t) { return rate * std::pow(switch_amplitude(seq.model, t), 2); }, 0.0,
                             seq.pi_half_ion1 + extra);
  };
  double lo = ns(200), hi = ns(500);
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    (p1(mid) < 0.5 ? lo : hi) = mid;
  }
  const double oracle = 0.5 * (lo + hi);
  CHECK(units::to_ns(oracle) == doctest::Approx(368.0).epsilon(0.01));
  CHECK(std::abs(fit.t_star - oracle) < ns(5));
}

TEST_CASE("switching noise is seeded") {
  SwitchSequence seq;
  seq.model.delay = ns(238);
  const auto T = grid(0.0, ns(600), ns(10));
  const auto a = simulate_switching_experiment(seq, T, 200, 3);
  const auto b = simulate_switching_experiment(seq, T, 200, 3);
  CHECK(a.delta.p1 == b.delta.p1);
  const auto c = simulate_switching_experiment(seq, T, 200, 4);
  CHECK(a.delta.p1 != c.delta.p1);
  std::vector<double> bad{-1.0};
  CHECK_THROWS_AS(simulate_switching_experiment(seq, bad, 0, 0), InvalidElementError);
}

TEST_CASE("switch-time fit") {
  const auto T = grid(ns(150), ns(330), ns(10));
  ScanTrace tr{Abscissa::extra_time, T, {}, 0, 0};
  for (double t : T) tr.p1.push_back(std::pow((t - ns(238)) / ns(100), 2));
  const auto fit = fit_switch_time(tr);
  CHECK(std::abs(fit.t_star - ns(238)) < 1e-12);
  CHECK(fit.sigma < 1e-12);

  ScanTrace mono{Abscissa::extra_time, T, {}, 0, 0};
  for (double t : T) mono.p1.push_back(t);
  CHECK_THROWS_AS(fit_switch_time(mono), UnbracketedMinimumError);
  ScanTrace small{Abscissa::extra_time, {1, 2, 3}, {1, 0, 1}, 0, 0};
  CHECK_THROWS_AS(fit_switch_time(small), FitFailure);
}
