#include "config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "aodkit/errors.hpp"
#include "aodkit/units.hpp"
#include "digest.hpp"

namespace aodkit::cli {

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string s = "invalid configuration:";
  for (const auto& line : v) s += "\n  " + line;
  return s;
}

bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    if (c < 0x80) extra = 0;
    else if ((c >> 5) == 0x6) extra = 1;
    else if ((c >> 4) == 0xe) extra = 2;
    else if ((c >> 3) == 0x1e) extra = 3;
    else return false;
    if (i + extra >= s.size() && extra > 0) return false;
    for (int k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    }
    i += extra + 1;
  }
  return true;
}

enum class Bound { any, positive, nonnegative, nonzero, fraction, efficiency, at_least_one };

const char* bound_text(Bound b) {
  switch (b) {
    case Bound::positive: return "must be > 0";
    case Bound::nonnegative: return "must be >= 0";
    case Bound::nonzero: return "must be nonzero";
    case Bound::fraction: return "must be in (0, 1)";
    case Bound::efficiency: return "must be in (0, 1]";
    case Bound::at_least_one: return "must be >= 1";
    case Bound::any: break;
  }
  return "";
}

bool within(double v, Bound b) {
  switch (b) {
    case Bound::positive: return v > 0.0;
    case Bound::nonnegative: return v >= 0.0;
    case Bound::nonzero: return v != 0.0;
    case Bound::fraction: return v > 0.0 && v < 1.0;
    case Bound::efficiency: return v > 0.0 && v <= 1.0;
    case Bound::at_least_one: return v >= 1.0;
    case Bound::any: return true;
  }
  return true;
}

struct Context {
  std::string source;
  std::vector<std::string> errors;

  void fail(const YAML::Node& at, const std::string& path, const std::string& msg) {
    const auto m = at.Mark();
    if (m.line >= 0) {
      errors.push_back(fmt::format("{}:{}:{}: {}: {}", source, m.line + 1, m.column + 1, path, msg));
    } else {
      errors.push_back(fmt::format("{}: {}: {}", source, path, msg));
    }
  }
};

// A mapping node; every key read is remembered so the rest can be reported as unknown.
class Map {
 public:
  Map(Context& ctx, YAML::Node node, std::string path) : ctx_(ctx), node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) {
      ctx_.fail(node_, path_, "expected a mapping");
      ok_ = false;
    }
  }
  ~Map() {
    if (!ok_) return;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const auto key = it->first.Scalar();
      if (!seen_.count(key)) ctx_.fail(it->first, sub(key), "unknown key");
    }
  }
  Map(const Map&) = delete;
  Map& operator=(const Map&) = delete;

  bool ok() const { return ok_; }
  const std::string& path() const { return path_; }
  Context& ctx() { return ctx_; }
  const YAML::Node& node() const { return node_; }
  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return ok_ && at(key) && !at(key).IsNull();
  }

  YAML::Node get(const std::string& key) {
    seen_.insert(key);
    return ok_ ? at(key) : YAML::Node();
  }

  // const lookup, so a missing key is not inserted
  YAML::Node at(const std::string& key) const {
    const YAML::Node& n = node_;
    return n[key];
  }

  std::optional<double> number(const std::string& key, Bound b = Bound::any, bool required = false) {
    if (!has(key)) {
      if (required && ok_) ctx_.fail(node_, sub(key), "required");
      return std::nullopt;
    }
    const YAML::Node n = at(key);
    double v = 0.0;
    try {
      if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "");
      v = n.as<double>();
    } catch (const YAML::Exception&) {
      ctx_.fail(n, sub(key), "expected a number");
      return std::nullopt;
    }
    if (std::isnan(v) || !within(v, b)) {
      ctx_.fail(n, sub(key), fmt::format("{} (got {})", bound_text(b), n.Scalar()));
      return std::nullopt;
    }
    return v;
  }

  double number_or(const std::string& key, double fallback, Bound b = Bound::any) {
    return number(key, b).value_or(fallback);
  }

  double required(const std::string& key, Bound b = Bound::any) { return number(key, b, true).value_or(0.0); }

  std::optional<long long> integer(const std::string& key, long long min, bool required = false) {
    if (!has(key)) {
      if (required && ok_) ctx_.fail(node_, sub(key), "required");
      return std::nullopt;
    }
    const YAML::Node n = at(key);
    long long v = 0;
    try {
      if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "");
      v = n.as<long long>();
    } catch (const YAML::Exception&) {
      ctx_.fail(n, sub(key), "expected an integer");
      return std::nullopt;
    }
    if (v < min) {
      ctx_.fail(n, sub(key), fmt::format("must be >= {} (got {})", min, v));
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::string> text(const std::string& key, bool required = false) {
    if (!has(key)) {
      if (required && ok_) ctx_.fail(node_, sub(key), "required");
      return std::nullopt;
    }
    const YAML::Node n = at(key);
    if (!n.IsScalar()) {
      ctx_.fail(n, sub(key), "expected a string");
      return std::nullopt;
    }
    return n.Scalar();
  }

  template <class E>
  std::optional<E> choice(const std::string& key, const std::map<std::string, E>& options) {
    const auto s = text(key);
    if (!s) return std::nullopt;
    const auto it = options.find(*s);
    if (it == options.end()) {
      std::string names;
      for (const auto& [k, _] : options) names += (names.empty() ? "" : ", ") + k;
      ctx_.fail(at(key), sub(key), fmt::format("must be one of {} (got '{}')", names, *s));
      return std::nullopt;
    }
    return it->second;
  }

  std::vector<double> numbers(const std::string& key, Bound b = Bound::any) {
    std::vector<double> out;
    if (!has(key)) return out;
    const YAML::Node n = at(key);
    if (!n.IsSequence()) {
      ctx_.fail(n, sub(key), "expected a list of numbers");
      return out;
    }
    for (std::size_t i = 0; i < n.size(); ++i) {
      const auto p = fmt::format("{}[{}]", sub(key), i);
      try {
        const double v = n[i].as<double>();
        if (std::isnan(v) || !within(v, b)) {
          ctx_.fail(n[i], p, fmt::format("{} (got {})", bound_text(b), n[i].Scalar()));
        } else {
          out.push_back(v);
        }
      } catch (const YAML::Exception&) {
        ctx_.fail(n[i], p, "expected a number");
      }
    }
    return out;
  }

 private:
  Context& ctx_;
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
  bool ok_ = true;
};

const std::map<std::string, addressing::CouplingMode> kCoupling{
    {"intensity", addressing::CouplingMode::intensity}, {"amplitude", addressing::CouplingMode::amplitude}};

constexpr std::size_t kMaxGridPoints = 2'000'000;

// {start, stop, step} in the unit named by `scale`.
std::optional<Grid> read_grid(Map& parent, const std::string& key, double scale, bool required = true) {
  if (!parent.has(key)) {
    if (required && parent.ok()) parent.ctx().fail(parent.node(), parent.sub(key), "required");
    return std::nullopt;
  }
  Map m(parent.ctx(), parent.get(key), parent.sub(key));
  if (!m.ok()) return std::nullopt;
  const auto start = m.number("start", Bound::any, true);
  const auto stop = m.number("stop", Bound::any, true);
  const auto step = m.number("step", Bound::positive, true);
  if (!start || !stop || !step) return std::nullopt;
  if (*stop < *start) {
    m.ctx().fail(m.node(), m.path(), "stop must be >= start");
    return std::nullopt;
  }
  if ((*stop - *start) / *step + 1 > static_cast<double>(kMaxGridPoints)) {
    m.ctx().fail(m.node(), m.path(), fmt::format("more than {} grid points", kMaxGridPoints));
    return std::nullopt;
  }
  return Grid{*start * scale, *stop * scale, *step * scale};
}

std::optional<ChainSpec> read_chain(Map& parent, const std::string& key) {
  if (!parent.has(key)) return std::nullopt;
  Map m(parent.ctx(), parent.get(key), parent.sub(key));
  if (!m.ok()) return std::nullopt;
  ChainSpec c;
  if (m.has("positions_um")) {
    for (double p : m.numbers("positions_um")) c.positions.push_back(units::um(p));
    for (std::size_t i = 1; i < c.positions.size(); ++i) {
      if (!(c.positions[i] > c.positions[i - 1])) {
        m.ctx().fail(m.get("positions_um"), m.sub("positions_um"), "positions must be strictly increasing");
        return std::nullopt;
      }
    }
    if (m.has("count") || m.has("spacing_um")) {
      m.ctx().fail(m.node(), m.path(), "give either positions_um or count and spacing_um");
    }
    if (c.positions.empty()) {
      m.ctx().fail(m.node(), m.sub("positions_um"), "must not be empty");
      return std::nullopt;
    }
    return c;
  }
  const auto count = m.integer("count", 1, true);
  const auto spacing = m.number("spacing_um", Bound::positive, true);
  if (!count || !spacing) return std::nullopt;
  c.count = static_cast<std::size_t>(*count);
  c.spacing = units::um(*spacing);
  return c;
}

aod::AodSpec read_aod(Map& top, double wavelength) {
  aod::AodSpec spec;
  spec.optical_wavelength = wavelength;
  if (!top.has("aod")) {
    if (top.ok()) top.ctx().fail(top.node(), "aod", "required");
    return spec;
  }
  Map m(top.ctx(), top.get("aod"), "aod");
  spec.center_frequency = units::MHz(m.required("center_frequency_MHz", Bound::positive));
  spec.bandwidth = units::MHz(m.required("bandwidth_MHz", Bound::positive));
  spec.acoustic_velocity = m.required("acoustic_velocity_m_per_s", Bound::positive);
  spec.crystal_waist = units::um(m.required("crystal_waist_um", Bound::positive));
  spec.peak_efficiency = m.required("peak_efficiency", Bound::efficiency);
  if (auto w = m.number("efficiency_width_MHz", Bound::positive)) spec.efficiency_width = units::MHz(*w);
  if (auto o = m.number("front_offset_um", Bound::any)) spec.front_offset = units::um(*o);
  return spec;
}

std::optional<optics::OpticalElement> read_element(Context& ctx, const YAML::Node& node, const std::string& path,
                                                   const aod::AodSpec& spec) {
  Map m(ctx, node, path);
  if (!m.ok()) return std::nullopt;
  const std::size_t before = ctx.errors.size();
  const auto type = m.text("type", true);
  optics::OpticalElement el{optics::FreeSpace{}, m.text("label").value_or("")};
  if (!type) return std::nullopt;
  if (*type == "free_space") {
    el.kind = optics::FreeSpace{units::um(m.required("distance_um", Bound::nonnegative))};
  } else if (*type == "thin_lens") {
    optics::ThinLens lens{units::um(m.required("focal_length_um", Bound::nonzero))};
    lens.axes = m.choice<optics::LensAxes>("axes", {{"both", optics::LensAxes::both},
                                                    {"x", optics::LensAxes::x_only},
                                                    {"z", optics::LensAxes::z_only}})
                    .value_or(optics::LensAxes::both);
    el.kind = lens;
  } else if (*type == "anamorphic_scaler") {
    el.kind = optics::AnamorphicScaler{m.number_or("mx", 1.0, Bound::positive), m.number_or("mz", 1.0, Bound::positive)};
  } else if (*type == "aod") {
    const double f = m.number("drive_frequency_MHz", Bound::positive).value_or(units::to_MHz(spec.center_frequency));
    el.kind = optics::AodDeflector{spec, units::MHz(f)};
  } else if (*type == "imaging") {
    el.kind = optics::ImagingSystem{m.required("magnification", Bound::nonzero)};
  } else if (*type == "rotator") {
    el.kind = optics::ImageRotator{units::deg(m.required("angle_deg"))};
  } else if (*type == "aperture") {
    el.kind = optics::Aperture{units::um(m.required("half_width_x_um", Bound::positive)),
                               units::um(m.required("half_width_z_um", Bound::positive))};
  } else if (*type == "sampler") {
    el.kind = optics::BeamSampler{m.required("fraction", Bound::fraction)};
  } else {
    ctx.fail(m.get("type"), m.sub("type"),
             fmt::format("unknown element type '{}' (free_space, thin_lens, anamorphic_scaler, aod, imaging, "
                         "rotator, aperture, sampler)",
                         *type));
    return std::nullopt;
  }
  if (ctx.errors.size() != before) return std::nullopt;
  return el;
}

void read_train(Map& top, SystemConfig& cfg) {
  if (!top.has("train")) {
    if (top.ok()) top.ctx().fail(top.node(), "train", "required");
    return;
  }
  const YAML::Node n = top.get("train");
  if (!n.IsSequence() || n.size() == 0) {
    top.ctx().fail(n, "train", "expected a non-empty list of elements");
    return;
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const auto path = fmt::format("train[{}]", i);
    auto el = read_element(top.ctx(), n[i], path, cfg.aod);
    if (!el) continue;
    if (!el->label.empty() && !labels.insert(el->label).second) {
      top.ctx().fail(n[i], path + ".label", fmt::format("duplicate label '{}'", el->label));
    }
    try {
      optics::validate(*el);
    } catch (const DomainError& e) {
      top.ctx().fail(n[i], path, e.what());
    }
    cfg.train.push_back(std::move(*el));
  }
}

void read_prism(Map& top, SystemConfig& cfg) {
  if (!top.has("prism")) return;
  Map m(top.ctx(), top.get("prism"), "prism");
  if (!m.ok()) return;
  PrismSection p;
  p.design = prism::PrismPairDesign::from_degrees(
      m.required("alpha_deg"), m.required("alpha_prime_deg"), m.required("beta_deg", Bound::nonnegative),
      m.required("beta_prime_deg", Bound::nonnegative), m.required("n", Bound::at_least_one));
  if (m.has("tolerance_deg")) {
    Map t(m.ctx(), m.get("tolerance_deg"), "prism.tolerance_deg");
    p.tolerances = prism::ToleranceSpec::from_degrees(
        t.number_or("alpha", 0.0, Bound::nonnegative), t.number_or("alpha_prime", 0.0, Bound::nonnegative),
        t.number_or("beta", 0.0, Bound::nonnegative), t.number_or("beta_prime", 0.0, Bound::nonnegative));
  }
  p.samples = static_cast<std::size_t>(m.integer("samples", 1).value_or(100000));
  p.target = m.number_or("target", prism::kAnchorExpansion, Bound::positive);
  if (m.has("contour")) {
    Map c(m.ctx(), m.get("contour"), "prism.contour");
    if (auto g = read_grid(c, "alpha_deg", 1.0)) p.alpha = *g;
    if (auto g = read_grid(c, "alpha_prime_deg", 1.0)) p.alpha_prime = *g;
  }
  cfg.prism = p;
}

void read_monitor(Map& top, SystemConfig& cfg) {
  if (!top.has("monitor")) return;
  Map m(top.ctx(), top.get("monitor"), "monitor");
  MonitorSection s;
  s.chain.sample_fraction = m.required("sample_fraction", Bound::fraction);
  s.chain.responsivity = m.required("responsivity_A_per_W", Bound::positive);
  s.chain.tia_gain = m.required("tia_gain_V_per_A", Bound::positive);
  s.beam_power = 1e-3 * m.required("beam_power_mW", Bound::nonnegative);
  cfg.monitor = s;
}

void read_crosstalk(Map& top, SystemConfig& cfg) {
  if (!top.has("crosstalk")) return;
  Map m(top.ctx(), top.get("crosstalk"), "crosstalk");
  CrosstalkSection s;
  s.ion_waist = units::um(m.required("ion_waist_um", Bound::positive));
  s.coupling = m.choice("coupling", kCoupling).value_or(addressing::CouplingMode::intensity);
  s.clipping_ratios = m.numbers("clipping_ratios");
  for (double r : s.clipping_ratios) {
    if (!(r > addressing::kMinClippingRatio)) {
      m.ctx().fail(m.get("clipping_ratios"), m.sub("clipping_ratios"),
                   fmt::format("every ratio must exceed {} (got {})", addressing::kMinClippingRatio, r));
      break;
    }
  }
  cfg.crosstalk = s;
}

void read_misalign(Map& top, SystemConfig& cfg) {
  if (!top.has("misalign")) return;
  Map m(top.ctx(), top.get("misalign"), "misalign");
  MisalignSection s;
  s.angle = units::deg(m.required("angle_deg"));
  if (auto h = m.number("half_range_um", Bound::positive)) s.half_range = units::um(*h);
  s.perpendicular_waist = units::um(m.required("perpendicular_waist_um", Bound::positive));
  s.max_angle = units::deg(m.number_or("max_angle_deg", 5.0, Bound::positive));
  s.angle_step = units::deg(m.number_or("angle_step_deg", 0.05, Bound::positive));
  cfg.misalign = s;
}

int shots_of(Map& m) { return static_cast<int>(m.integer("shots", 0).value_or(200)); }

void check_plane(Map& m, const SystemConfig& cfg, const std::string& label, const std::string& key) {
  if (!cfg.train.empty() && cfg.plane_index(label) < 0) {
    m.ctx().fail(m.node(), m.sub(key), fmt::format("no train element labelled '{}'", label));
  }
}

void read_experiments(Map& top, SystemConfig& cfg) {
  if (!top.has("experiments")) return;
  Map ex(top.ctx(), top.get("experiments"), "experiments");
  if (!ex.ok()) return;

  if (ex.has("profile_scan")) {
    Map m(ex.ctx(), ex.get("profile_scan"), "experiments.profile_scan");
    ProfileScanSection s;
    s.waist = units::um(m.required("waist_um", Bound::positive));
    if (auto c = m.number("center_frequency_MHz", Bound::positive)) s.center_frequency = units::MHz(*c);
    if (auto g = read_grid(m, "frequencies_MHz", 1e6)) s.frequencies = *g;
    s.pi_time = units::ns(m.required("pi_time_ns", Bound::positive));
    s.shots = shots_of(m);
    s.plane = m.text("plane").value_or(cfg.steering.ion_plane);
    s.coupling = m.choice("coupling", kCoupling).value_or(addressing::CouplingMode::intensity);
    check_plane(m, cfg, s.plane, "plane");
    cfg.profile_scan = s;
  }
  if (ex.has("chain_scan")) {
    Map m(ex.ctx(), ex.get("chain_scan"), "experiments.chain_scan");
    ChainScanSection s;
    if (auto c = read_chain(m, "chain")) {
      s.chain = *c;
    } else if (cfg.chain) {
      s.chain = *cfg.chain;
    } else if (m.ok()) {
      m.ctx().fail(m.node(), m.sub("chain"), "required (no top-level chain either)");
    }
    s.waist = units::um(m.required("waist_um", Bound::positive));
    if (auto g = read_grid(m, "frequencies_MHz", 1e6)) s.frequencies = *g;
    s.pi_time = units::ns(m.required("pi_time_ns", Bound::positive));
    s.shots = shots_of(m);
    s.plane = m.text("plane").value_or(cfg.steering.ion_plane);
    check_plane(m, cfg, s.plane, "plane");
    cfg.chain_scan = s;
  }
  if (ex.has("crosstalk")) {
    Map m(ex.ctx(), ex.get("crosstalk"), "experiments.crosstalk");
    LabCrosstalkSection s;
    s.relative_rates = m.numbers("relative_rates", Bound::nonnegative);
    s.chain = read_chain(m, "chain");
    const bool injected = m.has("relative_rates");
    if (injected == s.chain.has_value()) {
      m.ctx().fail(m.node(), m.path(), "give exactly one of relative_rates or chain");
    }
    if (s.chain) s.waist = units::um(m.required("waist_um", Bound::positive));
    s.target = static_cast<std::size_t>(m.integer("target", 0, true).value_or(0));
    const std::size_t n = injected ? s.relative_rates.size() : (s.chain ? s.chain->build().size() : 0);
    if (n > 0 && s.target >= n) m.ctx().fail(m.get("target"), m.sub("target"), fmt::format("must be < {}", n));
    if (injected && s.target < s.relative_rates.size() && s.relative_rates[s.target] != 1.0) {
      m.ctx().fail(m.get("relative_rates"), m.sub("relative_rates"), "the target entry must be 1");
    }
    if (auto g = read_grid(m, "target_times_ns", 1e-9)) s.target_times = *g;
    if (auto g = read_grid(m, "neighbor_times_ns", 1e-9)) s.neighbor_times = *g;
    s.pi_time = units::ns(m.required("pi_time_ns", Bound::positive));
    s.shots = shots_of(m);
    cfg.lab_crosstalk = s;
  }
  if (ex.has("switching")) {
    Map m(ex.ctx(), ex.get("switching"), "experiments.switching");
    SwitchingSection s;
    auto& seq = s.sequence;
    seq.settle_time = units::ns(m.number_or("settle_ns", 826.0, Bound::nonnegative));
    seq.pi_half_ion0 = units::ns(m.number_or("pi_half_ion0_ns", 1750.0, Bound::positive));
    seq.pi_half_ion1 = units::ns(m.number_or("pi_half_ion1_ns", 1740.0, Bound::positive));
    seq.coupling = m.choice("coupling", kCoupling).value_or(addressing::CouplingMode::intensity);
    seq.model.kind = m.choice<lab::SwitchModelKind>("model", {{"pure_delay", lab::SwitchModelKind::pure_delay},
                                                              {"transit_ramp", lab::SwitchModelKind::transit_ramp}})
                         .value_or(lab::SwitchModelKind::pure_delay);
    if (seq.model.kind == lab::SwitchModelKind::pure_delay) {
      seq.model.delay = units::ns(m.required("delay_ns", Bound::nonnegative));
    } else if (m.has("delay_ns")) {
      m.ctx().fail(m.get("delay_ns"), m.sub("delay_ns"), "only valid with model: pure_delay");
    }
    seq.model.aod = cfg.aod;
    seq.model.ramp = m.choice<aod::TransitModel>("ramp", {{"gaussian_overlap", aod::TransitModel::gaussian_overlap},
                                                          {"linear", aod::TransitModel::linear}})
                         .value_or(aod::TransitModel::gaussian_overlap);
    if (auto g = read_grid(m, "extra_times_ns", 1e-9)) {
      s.extra_times = *g;
      if (g->start < 0.0) m.ctx().fail(m.get("extra_times_ns"), m.sub("extra_times_ns"), "times must be >= 0");
    }
    s.shots = shots_of(m);
    cfg.switching = s;
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error(join_lines(violations)), violations_(std::move(violations)) {}

std::vector<double> Grid::values() const {
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::llround((stop - start) / step));
  v.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) v.push_back(start + step * static_cast<double>(i));
  return v;
}

addressing::IonChain ChainSpec::build() const {
  if (!positions.empty()) return addressing::IonChain(positions);
  return addressing::IonChain::uniform(count.value_or(1), spacing);
}

optics::AstigmaticBeam SystemConfig::input_beam() const {
  return optics::AstigmaticBeam::collimated(wavelength, input_waist_x, input_waist_z);
}

int SystemConfig::plane_index(const std::string& label) const { return optics::find_label(train, label); }

SystemConfig parse_config_text(const std::string& text, const std::string& source) {
  if (!valid_utf8(text)) throw ConfigError({source + ": not valid UTF-8"});
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError({fmt::format("{}:{}:{}: parse error: {}", source, e.mark.line + 1, e.mark.column + 1, e.msg)});
  }
  if (!root || root.IsNull()) throw ConfigError({source + ":1:1: parse error: empty document"});

  Context ctx{source, {}};
  SystemConfig cfg;
  cfg.source = source;
  cfg.digest = sha256_hex(text);
  {
    Map top(ctx, root, "");
    if (!top.ok()) throw ConfigError(ctx.errors);
    cfg.wavelength = units::um(top.required("wavelength_um", Bound::positive));
    if (top.has("input_beam")) {
      Map b(ctx, top.get("input_beam"), "input_beam");
      cfg.input_waist_x = units::um(b.required("waist_x_um", Bound::positive));
      cfg.input_waist_z = units::um(b.required("waist_z_um", Bound::positive));
    } else {
      ctx.fail(root, "input_beam", "required");
    }
    cfg.aod = read_aod(top, cfg.wavelength);
    if (ctx.errors.empty()) {
      try {
        aod::validate(cfg.aod);
      } catch (const DomainError& e) {
        ctx.fail(top.get("aod"), "aod", e.what());
      }
    }
    if (top.has("steering")) {
      Map s(ctx, top.get("steering"), "steering");
      cfg.steering.fourier_plane = s.text("fourier_plane").value_or(cfg.steering.fourier_plane);
      cfg.steering.ion_plane = s.text("ion_plane").value_or(cfg.steering.ion_plane);
      cfg.steering.step = units::MHz(s.number_or("step_MHz", 1.0, Bound::positive));
    }
    read_train(top, cfg);
    for (const auto* label : {&cfg.steering.fourier_plane, &cfg.steering.ion_plane}) {
      if (!cfg.train.empty() && cfg.plane_index(*label) < 0) {
        ctx.fail(top.has("steering") ? top.get("steering") : root, "steering", fmt::format("no train element labelled '{}'", *label));
      }
    }
    cfg.chain = read_chain(top, "chain");
    read_prism(top, cfg);
    read_monitor(top, cfg);
    read_crosstalk(top, cfg);
    read_misalign(top, cfg);
    read_experiments(top, cfg);
    if (top.has("seed")) {
      try {
        cfg.seed = top.get("seed").as<std::uint64_t>();
      } catch (const YAML::Exception&) {
        ctx.fail(top.get("seed"), "seed", "expected a non-negative integer");
      }
    }
    cfg.output_dir = top.text("output_dir");
  }
  if (!ctx.errors.empty()) throw ConfigError(ctx.errors);
  return cfg;
}

SystemConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path + ": cannot open file"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace aodkit::cli
