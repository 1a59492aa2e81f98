#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <variant>

#include <fmt/format.h>

#include "aodkit/errors.hpp"
#include "aodkit/steering.hpp"
#include "aodkit/units.hpp"

namespace aodkit::cli {

namespace {

using units::to_MHz;
using units::to_ns;
using units::to_um;

struct Run {
  const SystemConfig& cfg;
  const RunOptions& opt;
  ArtifactWriter& out;
  Json results = Json::object();
  Json notes = Json::array();
};

[[noreturn]] void missing(const std::string& section, const std::string& command) {
  throw ConfigurationError("cli", command, "config has no '" + section + "' section");
}

int plane(const SystemConfig& cfg, const std::string& label, const std::string& command) {
  const int i = cfg.plane_index(label);
  if (i < 0) throw ConfigurationError("cli", command, "no train element labelled '" + label + "'");
  return i;
}

std::vector<double> band(const aod::AodSpec& spec, double step) {
  const double lo = spec.center_frequency - spec.bandwidth / 2;
  return Grid{lo, lo + spec.bandwidth, step}.values();
}

std::vector<double> scaled(const std::vector<double>& v, double k) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [k](double x) { return x * k; });
  return out;
}

// Focal length of the first lens after the AOD and the net imaging magnification after it.
addressing::ClippingGeometry clipping_geometry(const SystemConfig& cfg, double ion_waist) {
  std::optional<double> f;
  double mag = 1.0;
  bool after_aod = false;
  for (const auto& el : cfg.train) {
    if (std::holds_alternative<optics::AodDeflector>(el.kind)) after_aod = true;
    if (!after_aod) continue;
    if (const auto* lens = std::get_if<optics::ThinLens>(&el.kind); lens && !f) f = lens->focal_length;
    if (const auto* img = std::get_if<optics::ImagingSystem>(&el.kind); img && f) mag *= std::abs(img->magnification);
  }
  if (!f) throw ConfigurationError("cli", "crosstalk", "train has no lens after the AOD");
  return addressing::ClippingGeometry::for_ion_waist(ion_waist, cfg.wavelength, *f, mag);
}

void steer(Run& r) {
  const auto& cfg = r.cfg;
  const int fp = plane(cfg, cfg.steering.fourier_plane, "steer");
  const int ip = plane(cfg, cfg.steering.ion_plane, "steer");
  CsvTable t({{"f_MHz", "RF drive frequency"},
              {"fourier_um", "beam centroid at the Fourier plane, relative to the centre frequency"},
              {"ion_um", "beam centroid at the ion plane, relative to the centre frequency"}});
  Series sf{"Fourier plane", {}, {}}, si{"ion plane", {}, {}};
  for (double f : band(cfg.aod, cfg.steering.step)) {
    const double xf = to_um(aod::steering_map(cfg.aod, cfg.train, f, fp));
    const double xi = to_um(aod::steering_map(cfg.aod, cfg.train, f, ip));
    t.add_row({to_MHz(f), xf, xi});
    sf.x.push_back(to_MHz(f));
    sf.y.push_back(xf);
    si.x.push_back(to_MHz(f));
    si.y.push_back(xi);
  }
  r.out.write_csv("steer.csv", t);
  r.out.write("steer.svg", Plot{"Steering map", "RF frequency (MHz)", "displacement (um)", false, {sf, si}}.render());

  const double lo = cfg.aod.center_frequency - cfg.aod.bandwidth / 2;
  const double hi = lo + cfg.aod.bandwidth;
  auto range = [&](int p) { return std::abs(aod::steering_map(cfg.aod, cfg.train, hi, p) -
                                            aod::steering_map(cfg.aod, cfg.train, lo, p)); };
  r.results["full_band_deflection_mrad"] = 1e3 * aod::full_band_swing(cfg.aod);
  r.results["fourier_range_um"] = to_um(range(fp));
  r.results["ion_range_um"] = to_um(range(ip));
  r.results["fourier_efficiency_um_per_MHz"] = to_um(aod::steering_efficiency(cfg.aod, cfg.train, fp)) * 1e6;
  r.results["steering_efficiency_um_per_MHz"] = to_um(aod::steering_efficiency(cfg.aod, cfg.train, ip)) * 1e6;
}

void trace(Run& r) {
  const auto& cfg = r.cfg;
  const auto states = optics::trace_train(cfg.input_beam(), cfg.train);
  CsvTable t({{"element", "index of the element just passed (-1 for the input)"},
              {"waist_x_um", "x waist radius"},
              {"waist_z_um", "z waist radius"},
              {"waist_pos_x_mm", "x waist position, positive downstream of this plane"},
              {"waist_pos_z_mm", "z waist position, positive downstream of this plane"},
              {"spot_x_um", "x 1/e^2 radius at this plane"},
              {"spot_z_um", "z 1/e^2 radius at this plane"},
              {"centroid_x_um", "x centroid"},
              {"tilt_x_mrad", "x centroid tilt"}});
  Series sx{"spot x", {}, {}}, sz{"spot z", {}, {}};
  auto row = [&](int index, const optics::AstigmaticBeam& b) {
    using optics::Axis;
    const double spx = to_um(optics::spot_size_at(b, Axis::x));
    const double spz = to_um(optics::spot_size_at(b, Axis::z));
    t.add_row({static_cast<double>(index), to_um(b.waist(Axis::x)), to_um(b.waist(Axis::z)),
               1e3 * b.waist_position(Axis::x), 1e3 * b.waist_position(Axis::z), spx, spz,
               to_um(b.centroid(Axis::x)), 1e3 * b.tilt(Axis::x)});
    sx.x.push_back(index);
    sx.y.push_back(spx);
    sz.x.push_back(index);
    sz.y.push_back(spz);
  };
  row(-1, cfg.input_beam());
  Json elements = Json::array();
  Json planes = Json::object();
  for (std::size_t i = 0; i < states.size(); ++i) {
    row(static_cast<int>(i), states[i]);
    elements.push_back({{"index", i}, {"type", optics::element_type_name(cfg.train[i])}, {"label", cfg.train[i].label}});
    if (!cfg.train[i].label.empty()) {
      using optics::Axis;
      planes[cfg.train[i].label] = {{"spot_x_um", to_um(optics::spot_size_at(states[i], Axis::x))},
                                    {"spot_z_um", to_um(optics::spot_size_at(states[i], Axis::z))},
                                    {"waist_x_um", to_um(states[i].waist(Axis::x))},
                                    {"waist_z_um", to_um(states[i].waist(Axis::z))}};
    }
  }
  r.out.write_csv("trace.csv", t);
  r.out.write("trace.svg", Plot{"Spot size along the train", "element index", "log10 spot radius (um)", true,
                                {sx, sz}}.render());
  r.results["elements"] = elements;
  r.results["planes"] = planes;
}

void efficiency(Run& r) {
  const auto& cfg = r.cfg;
  CsvTable t({{"f_MHz", "RF drive frequency"}, {"efficiency", "first-order diffraction efficiency (fraction)"}});
  Series s{"", {}, {}};
  double lowest = 1.0;
  for (double f : band(cfg.aod, cfg.steering.step)) {
    const double e = aod::diffraction_efficiency(cfg.aod, f);
    lowest = std::min(lowest, e);
    t.add_row({to_MHz(f), e});
    s.x.push_back(to_MHz(f));
    s.y.push_back(e);
  }
  r.out.write_csv("efficiency.csv", t);
  r.out.write("efficiency.svg", Plot{"AOD diffraction efficiency", "RF frequency (MHz)", "efficiency", false, {s}}.render());
  r.results["peak_efficiency"] = cfg.aod.peak_efficiency;
  r.results["efficiency_width_MHz"] = to_MHz(cfg.aod.resolved_efficiency_width());
  r.results["min_efficiency_in_band"] = lowest;
  r.results["min_over_peak"] = lowest / cfg.aod.peak_efficiency;
}

void monitor(Run& r) {
  const auto& cfg = r.cfg;
  if (!cfg.monitor) missing("monitor", "monitor");
  const auto& m = *cfg.monitor;
  CsvTable t({{"f_MHz", "RF drive frequency"},
              {"efficiency", "diffraction efficiency (fraction)"},
              {"monitor_V", "photodiode TIA output"},
              {"monitor_scaled", "monitor voltage divided by the single fitted scale factor"}});
  const auto freqs = band(cfg.aod, cfg.steering.step);
  const double scale = aod::monitor_voltage(m.chain, m.beam_power, 1.0);
  Series se{"efficiency", {}, {}, false}, sv{"monitor / scale", {}, {}, true};
  double worst = 0.0;
  for (double f : freqs) {
    const double e = aod::diffraction_efficiency(cfg.aod, f);
    const double v = aod::monitor_voltage(m.chain, m.beam_power, e);
    const double s = scale > 0.0 ? v / scale : 0.0;
    if (e > 0.0) worst = std::max(worst, std::abs(s - e) / e);
    t.add_row({to_MHz(f), e, v, s});
    se.x.push_back(to_MHz(f));
    se.y.push_back(e);
    sv.x.push_back(to_MHz(f));
    sv.y.push_back(s);
  }
  r.out.write_csv("monitor.csv", t);
  r.out.write("monitor.svg", Plot{"Monitor voltage against efficiency", "RF frequency (MHz)", "efficiency", false,
                                  {se, sv}}.render());
  r.results["scale_V_per_unit_efficiency"] = scale;
  r.results["center_voltage_V"] = aod::monitor_voltage(m.chain, m.beam_power,
                                                       aod::diffraction_efficiency(cfg.aod, cfg.aod.center_frequency));
  r.results["max_relative_deviation"] = worst;
}

void design_prism(Run& r) {
  const auto& cfg = r.cfg;
  if (!cfg.prism) missing("prism", "design-prism");
  const auto& p = *cfg.prism;
  const auto cal = prism::calibrate_convention();
  const auto conv = cal.convention;
  const double target = r.opt.target.value_or(p.target);
  const auto& d = p.design;

  const auto sol = prism::solve_alpha_prime(target, d.alpha, d.beta, d.beta_prime, d.n, conv);
  Json tried = Json::array();
  for (const auto& [c, m] : cal.tried) tried.push_back({{"convention", prism::convention_name(c)}, {"anchor_M", m}});
  r.results["calibration"] = {{"anchor_M", cal.anchor_expansion},
                              {"relative_error", cal.relative_error},
                              {"tried", tried}};
  r.results["design_M"] = prism::expansion_factor(d, conv);
  r.results["target_M"] = target;
  r.results["alpha_deg"] = units::to_deg(d.alpha);
  r.results["alpha_prime_deg"] = units::to_deg(sol.alpha_prime);
  r.results["achieved_M"] = sol.achieved;
  r.results["degenerate"] = sol.degenerate;

  const auto alphas = p.alpha.values();
  const auto primes = p.alpha_prime.values();
  const auto grid = prism::expansion_contour(scaled(alphas, units::pi / 180), scaled(primes, units::pi / 180), d.beta,
                                             d.beta_prime, d.n, conv);
  CsvTable t({{"alpha_deg", "first-prism incidence"},
              {"alpha_prime_deg", "second-prism incidence"},
              {"M", "expansion factor (nan where a surface totally reflects)"},
              {"feasible", "1 when every surface transmits"}});
  for (std::size_t j = 0; j < primes.size(); ++j) {
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      t.add_row({alphas[i], primes[j], grid.at(i, j), grid.feasible_at(i, j) ? 1.0 : 0.0});
    }
  }
  r.out.write_csv("prism_contour.csv", t);
  HeatMap hm{"Expansion factor", "alpha (deg)", "alpha prime (deg)", alphas, primes, grid.values,
             {{units::to_deg(d.alpha), units::to_deg(sol.alpha_prime)}}};
  r.out.write("prism_contour.svg", hm.render());
}

void tolerance(Run& r) {
  const auto& cfg = r.cfg;
  if (!cfg.prism) missing("prism", "tolerance");
  const auto& p = *cfg.prism;
  const auto conv = prism::calibrated_convention();
  const auto sens = prism::sensitivity(p.design, conv);
  const auto rel = sens.relative_errors(p.tolerances);
  const auto rep = prism::tolerance_monte_carlo(p.design, p.tolerances, p.samples, r.opt.seed, conv, true);

  Json per = Json::object();
  const auto tol = p.tolerances.as_array();
  for (std::size_t i = 0; i < 4; ++i) {
    per[prism::kAngleNames[i]] = {{"tolerance_deg", units::to_deg(tol[i])},
                                  {"dlnM_per_deg_pct", 100.0 * std::abs(sens.per_radian[i]) * units::pi / 180},
                                  {"linear_error_pct", 100.0 * rel[i]},
                                  {"single_angle_error_pct", 100.0 * rep.single_angle_errors[i]}};
  }
  r.results["design_M"] = rep.design_expansion;
  r.results["per_angle"] = per;
  r.results["samples"] = rep.samples;
  r.results["infeasible"] = rep.infeasible;
  r.results["mean_M"] = rep.mean;
  r.results["stddev_M"] = rep.stddev;
  r.results["min_M"] = rep.min;
  r.results["max_M"] = rep.max;
  r.results["worst_case_error_pct"] = 100.0 * rep.worst_case_relative_error;

  constexpr int kBins = 60;
  CsvTable t({{"M_low", "bin lower edge"}, {"M_high", "bin upper edge"}, {"count", "draws in the bin"}});
  std::vector<double> counts(kBins, 0.0);
  const double lo = rep.min;
  const double w = rep.max > rep.min ? (rep.max - rep.min) / kBins : 1.0;
  for (double m : rep.draws) {
    const int b = std::clamp(static_cast<int>((m - lo) / w), 0, kBins - 1);
    counts[b] += 1.0;
  }
  Series s{"", {}, {}};
  for (int b = 0; b < kBins; ++b) {
    t.add_row({lo + b * w, lo + (b + 1) * w, counts[b]});
    s.x.push_back(lo + (b + 0.5) * w);
    s.y.push_back(counts[b]);
  }
  r.out.write_csv("tolerance_histogram.csv", t);
  r.out.write("tolerance_histogram.svg",
              Plot{"Monte-Carlo expansion factor", "M", "draws per bin", false, {s}}.render());
}

void crosstalk(Run& r) {
  const auto& cfg = r.cfg;
  if (!cfg.crosstalk) missing("crosstalk", "crosstalk");
  if (!cfg.chain) missing("chain", "crosstalk");
  const auto& c = *cfg.crosstalk;
  const auto chain = cfg.chain->build();
  const auto ideal = addressing::crosstalk_matrix(chain, c.ion_waist, chain.positions(), c.coupling);

  CsvTable m({{"target", "index of the addressed ion"},
              {"ion", "index of the observed ion"},
              {"offset_um", "ion position minus target position"},
              {"crosstalk", "relative Rabi rate, ideal Gaussian"}});
  for (std::size_t j = 0; j < chain.size(); ++j) {
    for (std::size_t i = 0; i < chain.size(); ++i) {
      m.add_row({double(j), double(i), to_um(chain[i] - chain[j]), ideal(i, j)});
    }
  }
  r.out.write_csv("crosstalk_ideal.csv", m);
  r.results["ions"] = chain.size();
  r.results["mean_spacing_um"] = to_um(chain.mean_spacing());
  r.results["ion_waist_um"] = to_um(c.ion_waist);
  r.results["coupling"] = addressing::coupling_name(c.coupling);
  r.results["ideal_worst_off_diagonal"] = ideal.worst_off_diagonal();

  if (!c.clipping_ratios.empty()) {
    const auto geom = clipping_geometry(cfg, c.ion_waist);
    CsvTable s({{"clipping_ratio", "aperture half-width over collimated waist"},
                {"worst_off_diagonal", "largest off-diagonal crosstalk"},
                {"neighbor", "crosstalk on the ion next to the first ion"}});
    Series ser{"worst off-diagonal", {}, {}};
    double lo = 1.0, hi = 0.0;
    Json bracket = Json::array();
    for (double ratio : c.clipping_ratios) {
      const auto cm = addressing::clipped_crosstalk(chain, geom, ratio, c.coupling);
      const double w = cm.worst_off_diagonal();
      s.add_row({ratio, w, chain.size() > 1 ? cm(1, 0) : 0.0});
      ser.x.push_back(ratio);
      ser.y.push_back(w);
      lo = std::min(lo, w);
      hi = std::max(hi, w);
      if (w >= 1e-4 && w <= 1e-2) bracket.push_back(ratio);
    }
    r.out.write_csv("crosstalk_clipping.csv", s);
    r.out.write("crosstalk_clipping.svg", Plot{"Crosstalk against aperture clipping", "clipping ratio",
                                               "log10 worst off-diagonal", true, {ser}}.render());
    r.results["collimated_waist_um"] = to_um(geom.collimated_waist);
    r.results["sweep_min"] = lo;
    r.results["sweep_max"] = hi;
    r.results["ratios_in_1e-4_to_1e-2"] = bracket;
  }
  if (cfg.chain->positions.empty()) {
    r.notes.push_back(fmt::format("uniform chain of {} ions at {} um spacing stands in for measured positions",
                                  chain.size(), to_um(cfg.chain->spacing)));
  }
}

double ion_half_range(const SystemConfig& cfg, int p) {
  const double lo = cfg.aod.center_frequency - cfg.aod.bandwidth / 2;
  const double hi = lo + cfg.aod.bandwidth;
  return std::max(std::abs(aod::steering_map(cfg.aod, cfg.train, lo, p)),
                  std::abs(aod::steering_map(cfg.aod, cfg.train, hi, p)));
}

void misalign(Run& r) {
  const auto& cfg = r.cfg;
  if (!cfg.misalign) missing("misalign", "misalign");
  const auto& m = *cfg.misalign;
  const double half = m.half_range.value_or(ion_half_range(cfg, plane(cfg, cfg.steering.ion_plane, "misalign")));
  CsvTable t({{"angle_deg", "steering-direction misalignment"},
              {"offset_um", "perpendicular offset of the edge ion"},
              {"imbalance", "1 - relative power at the edge ion"}});
  Series s{"", {}, {}};
  double limit = 0.0;
  const auto n = static_cast<int>(std::floor(m.max_angle / m.angle_step + 1e-9));
  for (int i = 0; i <= n; ++i) {
    const double a = i * m.angle_step;
    const double v = addressing::misalignment_imbalance(a, half, m.perpendicular_waist);
    if (v <= 0.10) limit = a;
    t.add_row({units::to_deg(a), to_um(half * std::sin(a)), v});
    s.x.push_back(units::to_deg(a));
    s.y.push_back(v);
  }
  r.out.write_csv("misalign.csv", t);
  r.out.write("misalign.svg", Plot{"Edge-ion power imbalance", "misalignment (deg)", "imbalance", false, {s}}.render());
  const double v = addressing::misalignment_imbalance(m.angle, half, m.perpendicular_waist);
  r.results["half_range_um"] = to_um(half);
  r.results["angle_deg"] = units::to_deg(m.angle);
  r.results["offset_um"] = to_um(half * std::sin(m.angle));
  r.results["imbalance"] = v;
  r.results["within_10pct"] = v <= 0.10;
  r.results["largest_angle_within_10pct_deg"] = units::to_deg(limit);
}

Json trace_meta(const lab::ScanTrace& t) { return {{"shots", t.shots}, {"seed", t.seed}}; }

void lab_profile(Run& r) {
  const auto& cfg = r.cfg;
  if (!cfg.profile_scan) missing("experiments.profile_scan", "lab profile-scan");
  const auto& e = *cfg.profile_scan;
  lab::ProfileScan scan;
  scan.waist = e.waist;
  scan.steering_efficiency = aod::steering_efficiency(cfg.aod, cfg.train, plane(cfg, e.plane, "lab profile-scan"));
  scan.center_frequency = e.center_frequency.value_or(cfg.aod.center_frequency);
  scan.coupling = e.coupling;
  const auto drive = lab::RabiDrive::from_pi_time(e.pi_time, e.pi_time);
  const auto freqs = e.frequencies.values();
  const auto tr = lab::simulate_profile_scan(scan, drive, freqs, e.shots, r.opt.seed);
  const auto fit = lab::fit_gaussian_profile(tr, drive.duration, scan.steering_efficiency, e.coupling);

  lab::ProfileScan fitted = scan;
  fitted.waist = fit.waist;
  fitted.center_frequency = fit.center_frequency;
  lab::RabiDrive fd = drive;
  fd.peak_rabi = fit.peak_rate;
  const auto model = lab::simulate_profile_scan(fitted, fd, freqs, lab::kNoiseless, 0);

  CsvTable t({{"f_MHz", "RF drive frequency"},
              {"P1", "bright-state probability (sampled when shots > 0)"},
              {"P1_fit", "fitted forward model"}});
  Series sd{"data", {}, {}, true}, sm{"fit", {}, {}};
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    t.add_row({to_MHz(freqs[i]), tr.p1[i], model.p1[i]});
    sd.x.push_back(to_MHz(freqs[i]));
    sd.y.push_back(tr.p1[i]);
    sm.x.push_back(to_MHz(freqs[i]));
    sm.y.push_back(model.p1[i]);
  }
  r.out.write_csv("profile_scan.csv", t);
  r.out.write("profile_scan.svg", Plot{"Rabi-scan beam profile", "RF frequency (MHz)", "P1", false, {sd, sm}}.render());
  r.results["true_waist_um"] = to_um(e.waist);
  r.results["steering_efficiency_um_per_MHz"] = to_um(scan.steering_efficiency) * 1e6;
  r.results["fit"] = {{"waist_um", to_um(fit.waist)},
                      {"center_MHz", to_MHz(fit.center_frequency)},
                      {"peak_rabi_rad_per_us", fit.peak_rate * 1e-6},
                      {"residual_norm", fit.residual_norm},
                      {"iterations", fit.iterations}};
  r.results["waist_error_pct"] = 100.0 * (fit.waist / e.waist - 1.0);
  r.results["trace"] = trace_meta(tr);
}

void lab_chain(Run& r) {
  const auto& cfg = r.cfg;
  if (!cfg.chain_scan) missing("experiments.chain_scan", "lab chain-scan");
  const auto& e = *cfg.chain_scan;
  const int p = plane(cfg, e.plane, "lab chain-scan");
  lab::ProfileScan scan;
  scan.waist = e.waist;
  scan.steering_efficiency = aod::steering_efficiency(cfg.aod, cfg.train, p);
  scan.center_frequency = cfg.aod.center_frequency;
  const auto chain = e.chain.build();
  const auto drive = lab::RabiDrive::from_pi_time(e.pi_time, e.pi_time);
  const auto freqs = e.frequencies.values();
  const double half = ion_half_range(cfg, p);
  const auto res = lab::simulate_chain_scan(chain, scan, drive, freqs, half, e.shots, r.opt.seed);
  const auto peaks = lab::resolved_peaks(res.envelope);

  CsvTable t({{"f_MHz", "RF drive frequency"}, {"P1_envelope", "largest bright-state probability over the ions"}});
  Series s{"", {}, {}};
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    t.add_row({to_MHz(freqs[i]), res.envelope.p1[i]});
    s.x.push_back(to_MHz(freqs[i]));
    s.y.push_back(res.envelope.p1[i]);
  }
  r.out.write_csv("chain_scan.csv", t);
  r.out.write("chain_scan.svg", Plot{fmt::format("{}-ion steering scan", chain.size()), "RF frequency (MHz)", "P1",
                                     false, {s}}.render());
  Json pf = Json::array();
  for (auto i : peaks) pf.push_back(to_MHz(freqs[i]));
  r.results["ions"] = chain.size();
  r.results["half_range_um"] = to_um(half);
  r.results["resolved_peaks"] = peaks.size();
  r.results["all_resolved"] = peaks.size() == chain.size();
  r.results["peak_frequencies_MHz"] = pf;
  r.results["trace"] = trace_meta(res.envelope);
}

void lab_crosstalk(Run& r) {
  const auto& cfg = r.cfg;
  if (!cfg.lab_crosstalk) missing("experiments.crosstalk", "lab crosstalk");
  const auto& e = *cfg.lab_crosstalk;
  const auto drive = lab::RabiDrive::from_pi_time(e.pi_time);
  const lab::CrosstalkGrids grids{e.target_times.values(), e.neighbor_times.values()};
  std::vector<double> truth;
  lab::CrosstalkExperiment ex;
  if (e.chain) {
    const auto chain = e.chain->build();
    for (std::size_t i = 0; i < chain.size(); ++i) {
      truth.push_back(addressing::relative_rate(e.waist, chain[i] - chain[e.target]));
    }
    ex = lab::simulate_crosstalk_experiment(chain, e.waist, e.target, grids, drive, e.shots, r.opt.seed);
  } else {
    truth = e.relative_rates;
    ex = lab::simulate_crosstalk_experiment(e.relative_rates, e.target, grids, drive, e.shots, r.opt.seed);
  }

  CsvTable t({{"ion", "ion index"}, {"t_us", "drive time"}, {"P1", "bright-state probability"}});
  std::vector<Series> plots;
  Json ions = Json::array();
  for (std::size_t i = 0; i < ex.ions.size(); ++i) {
    const auto& ion = ex.ions[i];
    Series s{fmt::format("ion {}", i), {}, {}};
    for (std::size_t k = 0; k < ion.trace.x.size(); ++k) {
      t.add_row({double(i), units::to_us(ion.trace.x[k]), ion.trace.p1[k]});
      s.x.push_back(1e3 * ion.trace.x[k]);
      s.y.push_back(ion.trace.p1[k]);
    }
    if (i != ex.target) plots.push_back(std::move(s));
    Json j = {{"ion", i}, {"true_ratio", truth[i]}, {"upper_bound", ion.upper_bound}};
    j["ratio"] = ion.ratio;
    j["ratio_sigma"] = ion.ratio_sigma;
    j["rate_rad_per_s"] = ion.fit.rate;
    if (i != ex.target && !ion.upper_bound && truth[i] > 0.0) j["ratio_error_pct"] = 100.0 * (ion.ratio / truth[i] - 1.0);
    ions.push_back(j);
  }
  r.out.write_csv("crosstalk_traces.csv", t);
  r.out.write("crosstalk_traces.svg",
              Plot{"Neighbour Rabi oscillations", "drive time (ms)", "P1", false, std::move(plots)}.render());
  r.results["target"] = ex.target;
  r.results["target_pi_time_ns"] = to_ns(e.pi_time);
  r.results["ions"] = ions;
  r.results["shots"] = e.shots;
}

void lab_switching(Run& r) {
  const auto& cfg = r.cfg;
  if (!cfg.switching) missing("experiments.switching", "lab switching");
  const auto& e = *cfg.switching;
  const auto times = e.extra_times.values();
  const auto res = lab::simulate_switching_experiment(e.sequence, times, e.shots, r.opt.seed);
  const auto fit = lab::fit_switch_time(res.delta);

  CsvTable t({{"T_ns", "extra drive time on ion 1"},
              {"P1_ion0", "ion 0 bright-state probability"},
              {"P1_ion1", "ion 1 bright-state probability"},
              {"dP1", "|P1_ion0 - P1_ion1|"}});
  Series s{"", {}, {}, true};
  for (std::size_t i = 0; i < times.size(); ++i) {
    t.add_row({to_ns(times[i]), res.ion0.p1[i], res.ion1.p1[i], res.delta.p1[i]});
    s.x.push_back(to_ns(times[i]));
    s.y.push_back(res.delta.p1[i]);
  }
  r.out.write_csv("switching.csv", t);
  r.out.write("switching.svg", Plot{"Switching-time scan", "extra time T (ns)", "|dP1|", false, {s}}.render());
  const bool delay = e.sequence.model.kind == lab::SwitchModelKind::pure_delay;
  r.results["model"] = delay ? "pure_delay" : "transit_ramp";
  if (delay) r.results["injected_delay_ns"] = to_ns(e.sequence.model.delay);
  r.results["T_star_ns"] = to_ns(fit.t_star);
  r.results["T_star_sigma_ns"] = to_ns(fit.sigma);
  r.results["grid_pitch_ns"] = to_ns(e.extra_times.step);
  r.results["theoretical_switch_time_ns"] = to_ns(aod::theoretical_switch_time(cfg.aod));
  r.results["transit_rise_time_ns"] = to_ns(aod::transit_rise_time(cfg.aod, e.sequence.model.ramp));
}

const std::map<std::string, std::function<void(Run&)>>& handlers() {
  static const std::map<std::string, std::function<void(Run&)>> h{
      {"design-prism", design_prism}, {"tolerance", tolerance},
      {"trace", trace},               {"steer", steer},
      {"efficiency", efficiency},     {"monitor", monitor},
      {"crosstalk", crosstalk},       {"misalign", misalign},
      {"lab profile-scan", lab_profile}, {"lab chain-scan", lab_chain},
      {"lab crosstalk", lab_crosstalk},  {"lab switching", lab_switching},
  };
  return h;
}

const char* seed_source_name(SeedSource s) {
  switch (s) {
    case SeedSource::cli: return "cli";
    case SeedSource::config: return "config";
    case SeedSource::generated: return "generated";
  }
  return "";
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"design-prism",     "tolerance",       "trace",
                                              "steer",            "efficiency",      "monitor",
                                              "crosstalk",        "misalign",        "lab profile-scan",
                                              "lab chain-scan",   "lab crosstalk",   "lab switching"};
  return names;
}

std::filesystem::path command_dir(const std::filesystem::path& out_dir, const std::string& command) {
  std::string slug = command;
  std::replace(slug.begin(), slug.end(), ' ', '-');
  return out_dir / slug;
}

Json run(const std::string& command, const SystemConfig& config, const RunOptions& options) {
  const auto it = handlers().find(command);
  if (it == handlers().end()) throw ConfigurationError("cli", "run", "unknown command '" + command + "'");
  const auto start = std::chrono::steady_clock::now();
  ArtifactWriter writer(command_dir(options.out_dir, command));
  Run r{config, options, writer};
  it->second(r);

  Json report = Json::object();
  report["command"] = command;
  report["config"] = {{"path", config.source}, {"sha256", config.digest}};
  report["seed"] = options.seed;
  report["seed_source"] = seed_source_name(options.seed_source);
  report["prism_convention"] = prism::convention_name(prism::calibrated_convention());
  report["results"] = r.results;
  report["columns"] = writer.columns();
  if (!r.notes.empty()) report["notes"] = r.notes;
  Json manifest = Json::array();
  for (const auto& m : writer.manifest()) manifest.push_back({{"file", m.file}, {"bytes", m.bytes}, {"sha256", m.sha256}});
  manifest.push_back({{"file", "report.json"}});
  report["manifest"] = manifest;
  if (options.record_time) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    report["wall_time_s"] = dt.count();
  }
  writer.write("report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace aodkit::cli
