#pragma once

// In-situ characterisation experiments on two-level ions: Rabi dynamics with
// binomial shot noise, and the fitters that recover beam and timing parameters.
//
// Every experiment is a pure function of its inputs and seed. Point i of stream
// s draws its shots from make_engine(seed, s * kStreamStride + i).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aodkit/addressing.hpp"
#include "aodkit/aod_model.hpp"

namespace aodkit::lab {

struct RabiDrive {
  double peak_rabi = 0.0;  // rad/s
  double detuning = 0.0;   // rad/s
  double duration = 0.0;   // s

  static RabiDrive from_pi_time(double pi_time, double duration = 0.0, double detuning = 0.0);
  double pi_time() const;
};

// Bright-state probability from the dark state after `t` of constant drive.
double rabi_probability(const RabiDrive& drive, double t);

// Numerical two-level (Bloch vector) integration under a time-dependent Rabi
// rate, RK4 with step doubling. Local error per step is held below
// tolerance * h / duration, so the global error is O(tolerance).
double bloch_probability(const std::function<double(double)>& rabi_rate, double detuning,
                         double duration, double tolerance = 1e-9);

enum class Abscissa { frequency, drive_time, extra_time };

const char* abscissa_name(Abscissa a);

inline constexpr int kNoiseless = 0;

struct ScanTrace {
  Abscissa kind = Abscissa::frequency;
  std::vector<double> x;
  std::vector<double> p1;
  int shots = kNoiseless;  // per point; 0 means exact probabilities
  std::uint64_t seed = 0;
};

inline constexpr std::uint64_t kStreamStride = 1u << 20;

// Mean of `shots` Bernoulli trials, or p itself when shots == kNoiseless.
double sample_probability(double p, int shots, std::uint64_t seed, std::uint64_t stream, std::size_t index);

struct ProfileScan {
  double waist = 1.5e-6;                 // ion-plane waist along the chain, m
  double steering_efficiency = 1.5e-12;  // m/Hz
  double center_frequency = 150e6;       // frequency that points at x = 0
  double ion_position = 0.0;
  addressing::CouplingMode coupling = addressing::CouplingMode::intensity;
};

// Beam position x(f) = efficiency * (f - center_frequency).
ScanTrace simulate_profile_scan(const ProfileScan& scan, const RabiDrive& drive,
                                std::span<const double> frequencies, int shots, std::uint64_t seed);

struct ProfileFit {
  double waist = 0.0;
  double center_frequency = 0.0;
  double peak_rate = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
};

// Least-squares fit of the simulate_profile_scan forward model (resonant drive)
// for (waist, centre, peak rate). Initial guess: centre at argmax, waist from the
// half-max width, peak rate from the maximum probability.
ProfileFit fit_gaussian_profile(const ScanTrace& trace, double drive_time, double steering_efficiency,
                                addressing::CouplingMode coupling = addressing::CouplingMode::intensity);

struct ChainScanResult {
  ScanTrace envelope;              // max over ions of P1
  std::vector<ScanTrace> per_ion;  // one per ion, same grid
};

// Steering half-range measured from the centre frequency at the ion plane.
ChainScanResult simulate_chain_scan(const addressing::IonChain& chain, const ProfileScan& scan,
                                    const RabiDrive& drive, std::span<const double> frequencies,
                                    double half_range, int shots, std::uint64_t seed);

// Local maxima above `threshold` that are separated from the previous accepted
// peak by a valley below half of the smaller peak.
std::vector<std::size_t> resolved_peaks(const ScanTrace& trace, double threshold = 0.5);

struct RateFit {
  double rate = 0.0;   // rad/s; when !resolved this is an upper bound
  double sigma = 0.0;
  bool resolved = false;
};

// Fits P1(t) = A sin^2(rate t / 2). A rate that cannot reach a quarter
// oscillation within the grid is reported as an upper bound.
RateFit fit_rabi_rate(std::span<const double> times, std::span<const double> p1);

struct CrosstalkGrids {
  std::vector<double> target_times;
  std::vector<double> neighbor_times;
};

struct IonRate {
  ScanTrace trace;
  RateFit fit;
  double ratio = 0.0;        // fitted rate / fitted target rate (or bound)
  double ratio_sigma = 0.0;
  bool upper_bound = false;
};

struct CrosstalkExperiment {
  std::size_t target = 0;
  std::vector<IonRate> ions;
};

// Beam centred on `target`; each ion's rate follows the beam profile at its
// offset. The target is driven on grids.target_times, every other ion on
// grids.neighbor_times.
CrosstalkExperiment simulate_crosstalk_experiment(const addressing::IonChain& chain, double waist,
                                                  std::size_t target, const CrosstalkGrids& grids,
                                                  const RabiDrive& drive, int shots, std::uint64_t seed,
                                                  addressing::CouplingMode coupling =
                                                      addressing::CouplingMode::intensity);

// Variant taking explicit relative rates per ion (1 at the target).
CrosstalkExperiment simulate_crosstalk_experiment(std::span<const double> relative_rates, std::size_t target,
                                                  const CrosstalkGrids& grids, const RabiDrive& drive,
                                                  int shots, std::uint64_t seed);

enum class SwitchModelKind { pure_delay, transit_ramp };

struct SwitchModel {
  SwitchModelKind kind = SwitchModelKind::pure_delay;
  double delay = 0.0;  // pure_delay only
  aod::AodSpec aod;    // transit_ramp only
  aod::TransitModel ramp = aod::TransitModel::gaussian_overlap;
};

struct SwitchSequence {
  double settle_time = 826e-9;
  double pi_half_ion0 = 1.75e-6;
  double pi_half_ion1 = 1.74e-6;
  SwitchModel model;
  addressing::CouplingMode coupling = addressing::CouplingMode::intensity;
};

// Optical amplitude factor at ion1, `t` after the RF frequency change.
double switch_amplitude(const SwitchModel& model, double t);

// Rabi area accumulated by ion1 over [0, duration].
double ion1_pulse_area(const SwitchSequence& seq, double duration);

struct SwitchingResult {
  ScanTrace ion0;
  ScanTrace ion1;
  ScanTrace delta;  // |P1(ion0) - P1(ion1)|
};

SwitchingResult simulate_switching_experiment(const SwitchSequence& seq, std::span<const double> extra_times,
                                              int shots, std::uint64_t seed);

struct SwitchTimeFit {
  double t_star = 0.0;
  double sigma = 0.0;
};

inline constexpr std::size_t kSwitchFitPoints = 7;

// Quadratic fit over the 7 grid points nearest the discrete minimum.
SwitchTimeFit fit_switch_time(const ScanTrace& delta);

}  // namespace aodkit::lab
