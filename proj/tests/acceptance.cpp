// Acceptance run: one PASS/FAIL line per criterion, with measured values,
// tolerances and wall time. Exits nonzero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "aodkit/addressing.hpp"
#include "aodkit/aod_model.hpp"
#include "aodkit/beam_optics.hpp"
#include "aodkit/prism_designer.hpp"
#include "aodkit/steering.hpp"
#include "aodkit/units.hpp"
#include "aodkit/virtual_lab.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"

using namespace aodkit;
using namespace aodkit::units;
namespace fs = std::filesystem;

namespace {

const std::string kConfig = std::string(AODKIT_SOURCE_DIR) + "/configs/paper_system.yaml";

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "!") + what);
  }
};

bool within(double value, double ref, double rel) { return std::abs(value / ref - 1.0) <= rel; }

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t i = 0; i <= n; ++i) v.push_back(lo + step * static_cast<double>(i));
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome steering_chain() {
  Outcome o;
  const auto cfg = cli::parse_config(kConfig);
  const auto& spec = cfg.aod;
  const int fourier = cfg.plane_index("fourier");
  const int ion = cfg.plane_index("ion");
  const double lo = spec.center_frequency - spec.bandwidth / 2;
  const double hi = spec.center_frequency + spec.bandwidth / 2;

  const double swing = aod::full_band_swing(spec);
  const double fr = aod::steering_map(spec, cfg.train, hi, fourier) - aod::steering_map(spec, cfg.train, lo, fourier);
  const double ir = aod::steering_map(spec, cfg.train, hi, ion) - aod::steering_map(spec, cfg.train, lo, ion);
  const double eff = std::abs(aod::steering_efficiency(spec, cfg.train, ion));
  o.check(std::abs(swing * 1e3 - 6.23) < 0.005, fmt::format("deflection {:.4f} mrad (6.23)", swing * 1e3));
  o.check(within(std::abs(fr), um(600), 0.05), fmt::format("fourier range {:.1f} um (600 +-5%)", to_um(std::abs(fr))));
  o.check(within(std::abs(ir), um(150), 0.05), fmt::format("ion range {:.1f} um (150 +-5%)", to_um(std::abs(ir))));
  o.check(within(eff, 1.5e-12, 0.05), fmt::format("efficiency {:.4f} um/MHz (1.5 +-5%)", eff * 1e12));
  return o;
}

Outcome waist_chain() {
  Outcome o;
  const auto cfg = cli::parse_config(kConfig);
  const auto beams = optics::trace_train(cfg.input_beam(), cfg.train);
  auto spot = [&](const std::string& label, optics::Axis a) {
    return optics::spot_size_at(beams[static_cast<std::size_t>(cfg.plane_index(label))], a);
  };
  const struct {
    const char* plane;
    optics::Axis axis;
    double ref_um;
  } cases[] = {{"fourier", optics::Axis::z, 34.0},
               {"fourier", optics::Axis::x, 7.3},
               {"ion", optics::Axis::z, 8.5},
               {"ion", optics::Axis::x, 1.8}};
  for (const auto& c : cases) {
    const double w = spot(c.plane, c.axis);
    o.check(within(w, um(c.ref_um), 0.05),
            fmt::format("{} {} {:.3f} um ({} +-5%)", c.plane, optics::axis_name(c.axis), to_um(w), c.ref_um));
  }
  return o;
}

Outcome prism_anchor() {
  Outcome o;
  const auto conv = prism::calibrated_convention();
  const auto d = prism::PrismPairDesign::from_degrees(39.0, 14.75, 30.0, 30.0, 1.476);
  const double m = prism::expansion_factor(d, conv);
  o.check(within(m, 4.7, 0.15), fmt::format("M {:.4f} [{}] (4.7 +-15%)", m, prism::convention_name(conv)));

  const auto sol = prism::solve_alpha_prime(m, d.alpha, d.beta, d.beta_prime, d.n, conv);
  o.check(std::abs(to_deg(sol.alpha_prime) - 14.75) < 1e-3,
          fmt::format("round trip {:.6f} deg (14.75 +-1e-3)", to_deg(sol.alpha_prime)));

  const auto tol = prism::ToleranceSpec::from_degrees(1.0, 1.0, 0.25, 0.25);
  const auto rel = prism::sensitivity(d, conv).relative_errors(tol);
  const double paper[] = {0.07, 0.05, 0.02, 0.01};
  for (std::size_t i = 0; i < 4; ++i) {
    const double ratio = std::max(rel[i] / paper[i], paper[i] / rel[i]);
    o.check(ratio <= 1.5, fmt::format("{} {:.2f}% vs {:.0f}% (x{:.2f}, <=1.5)", prism::kAngleNames[i], rel[i] * 100,
                                      paper[i] * 100, ratio));
  }
  const auto mc = prism::tolerance_monte_carlo(d, tol, 100000, 20240611, conv);
  o.check(mc.worst_case_relative_error >= 0.10 && mc.worst_case_relative_error <= 0.20,
          fmt::format("MC worst {:.2f}% over {} draws ([10,20]%)", mc.worst_case_relative_error * 100, mc.samples));
  return o;
}

Outcome switching_time() {
  Outcome o;
  aod::AodSpec spec;
  spec.crystal_waist = mm(1.5);
  spec.acoustic_velocity = 5700.0;
  const double ts = aod::theoretical_switch_time(spec);
  o.check(std::llround(to_ns(ts)) == 342 && std::abs(ts / (1.3 * mm(1.5) / 5700.0) - 1.0) < 1e-12,
          fmt::format("1.3 w0/V = {:.3f} ns (342)", to_ns(ts)));

  const double pitch = ns(2);
  const auto T = grid(0.0, ns(600), pitch);
  double worst = 0.0;
  for (double injected : {ns(50), ns(127), ns(238), ns(342), ns(401.3)}) {
    lab::SwitchSequence seq;
    seq.model.kind = lab::SwitchModelKind::pure_delay;
    seq.model.delay = injected;
    const auto fit = lab::fit_switch_time(lab::simulate_switching_experiment(seq, T, lab::kNoiseless, 0).delta);
    worst = std::max(worst, std::abs(fit.t_star - injected));
  }
  o.check(worst <= pitch, fmt::format("pure delay worst |dT| {:.3f} ns (<= pitch {:.0f} ns)", to_ns(worst),
                                      to_ns(pitch)));

  lab::SwitchSequence ramp;
  ramp.model.kind = lab::SwitchModelKind::transit_ramp;
  ramp.model.aod = spec;
  const auto fit = lab::fit_switch_time(
      lab::simulate_switching_experiment(ramp, grid(0.0, ns(800), ns(5)), lab::kNoiseless, 0).delta);
  o.check(fit.t_star >= ns(200) && fit.t_star <= ns(450),
          fmt::format("transit ramp T* {:.1f} ns ([200,450])", to_ns(fit.t_star)));
  return o;
}

Outcome crosstalk() {
  Outcome o;
  const auto chain = addressing::IonChain::uniform(5, um(3.8));
  const auto ideal = addressing::crosstalk_matrix(chain, um(1.5), chain.positions());
  const double w = ideal.worst_off_diagonal();
  o.check(w < 1e-4 && within(w, 2.6e-6, 0.05), fmt::format("ideal {:.3e} (< 1e-4, ~2.6e-6)", w));

  const auto geom = addressing::ClippingGeometry::for_ion_waist(um(1.5), nm(355), 0.1, 0.25);
  double lo = 1.0, hi = 0.0;
  for (double r : {0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.8, 2.0, 2.5, 3.0}) {
    const double v = addressing::clipped_crosstalk(chain, geom, r).worst_off_diagonal();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  o.check(lo <= 1e-4 && hi >= 1e-2,
          fmt::format("sweep {:.2e} to {:.2e} (covers [1e-4, 1e-2] and 2.6e-4..8.6e-4)", lo, hi));
  return o;
}

Outcome misalignment() {
  Outcome o;
  const double imb = addressing::misalignment_imbalance(deg(1.0), um(75), um(8.5));
  o.check(imb <= 0.10, fmt::format("imbalance {:.2f}% (<= 10%)", imb * 100));
  return o;
}

Outcome lab_round_trips() {
  Outcome o;
  for (double w : {um(1.57), um(1.49)}) {
    lab::ProfileScan scan;
    scan.waist = w;
    const auto drive = lab::RabiDrive::from_pi_time(us(5), us(5));
    const auto tr = lab::simulate_profile_scan(scan, drive, grid(MHz(146), MHz(154), MHz(0.1)), lab::kNoiseless, 0);
    const auto fit = lab::fit_gaussian_profile(tr, drive.duration, scan.steering_efficiency);
    o.check(within(fit.waist, w, 1e-3), fmt::format("profile {:.5f} um ({} +-0.1%)", to_um(fit.waist), to_um(w)));
  }

  const auto chain = addressing::IonChain::uniform(30, um(3.8));
  const auto scan = lab::simulate_chain_scan(chain, lab::ProfileScan{}, lab::RabiDrive::from_pi_time(us(5), us(5)),
                                             grid(MHz(90), MHz(210), MHz(0.05)), um(78), lab::kNoiseless, 0);
  const auto peaks = lab::resolved_peaks(scan.envelope).size();
  o.check(peaks == 30, fmt::format("chain scan {} peaks (30)", peaks));

  const std::vector<double> rates{1.0, 8.6e-4, 0.0};
  const lab::CrosstalkGrids grids{grid(0.0, us(30), us(0.05)), grid(0.0, ms(40), us(10))};
  const auto ex = lab::simulate_crosstalk_experiment(rates, 0, grids, lab::RabiDrive::from_pi_time(us(4.98)),
                                                     lab::kNoiseless, 0);
  o.check(within(ex.ions[1].ratio, 8.6e-4, 0.02), fmt::format("crosstalk ratio {:.4e} (8.6e-4 +-2%)", ex.ions[1].ratio));

  double worst = 0.0;
  for (double det : {0.0, 2 * pi * 50e3, 2 * pi * 250e3}) {
    const auto d = lab::RabiDrive::from_pi_time(us(5), 0.0, det);
    for (double t : {us(1), us(3.3), us(5), us(12.7)}) {
      const double num = lab::bloch_probability([&](double) { return d.peak_rabi; }, det, t);
      worst = std::max(worst, std::abs(num - lab::rabi_probability(d, t)));
    }
  }
  o.check(worst < 1e-8, fmt::format("bloch vs closed form {:.1e} (< 1e-8)", worst));
  return o;
}

int exe(const std::string& args) {
  const int status = std::system((std::string(AODKIT_EXE) + " " + args + " 2>/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  Outcome o;
  const auto root = fs::temp_directory_path() / ("aodkit_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::size_t files = 0;
  for (const auto& cmd : cli::command_names()) {
    for (const char* run : {"a", "b"}) {
      const int code = exe(cmd + " --config " + kConfig + " --seed 4242 --out " + (root / run).string());
      if (code != 0) o.check(false, fmt::format("{} exited {}", cmd, code));
    }
    const auto a = cli::command_dir(root / "a", cmd);
    const auto b = cli::command_dir(root / "b", cmd);
    std::size_t here = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      const auto name = e.path().filename();
      if (e.path().extension() != ".csv" && e.path().extension() != ".json") continue;
      ++here;
      if (slurp(e.path()) != slurp(b / name)) o.check(false, fmt::format("{}/{} differs", cmd, name.string()));
    }
    if (here == 0) o.check(false, cmd + " wrote no csv/json");
    files += here;
  }
  fs::remove_all(root);
  o.check(o.pass, fmt::format("{} commands, {} csv/json files byte-identical", cli::command_names().size(), files));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "steering chain", 1.0, steering_chain},
      {2, "waist chain", 1.0, waist_chain},
      {3, "prism anchor", 10.0, prism_anchor},
      {4, "switching time", 5.0, switching_time},
      {5, "crosstalk", 30.0, crosstalk},
      {6, "misalignment", 1.0, misalignment},
      {7, "virtual-lab round trips", 60.0, lab_round_trips},
      {8, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("threw: ") + e.what());
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    std::string timing = fmt::format("{:.3f} s", dt.count());
    if (c.limit_s > 0) {
      o.check(dt.count() < c.limit_s, fmt::format("runtime {:.3f} s (< {} s)", dt.count(), c.limit_s));
      timing += fmt::format(" / {} s", c.limit_s);
    }
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    fmt::print("{} {} {} [{}]: {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, timing, detail);
    if (!o.pass) ++failed;
  }
  fmt::print("{}/8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}
