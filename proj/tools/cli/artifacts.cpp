#include "artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "digest.hpp"

namespace aodkit::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 24.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1-2-5 tick spacing giving about `target` ticks.
std::vector<double> ticks(double lo, double hi, int target = 6) {
  std::vector<double> t;
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
    t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return t;
}

std::string tick_label(double v) { return fmt::format("{:.6g}", v); }

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void padded(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    lo -= d;
    hi += d;
  }
}

std::string header(const std::string& title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kWidth / 2, escape(title));
}

std::string axes(const Frame& f, const std::string& xl, const std::string& yl, bool log_y) {
  std::string s;
  const double bx = kLeft, by = kHeight - kBottom;
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                   kTop, kWidth - kLeft - kRight, kHeight - kTop - kBottom);
  for (double t : ticks(f.x0, f.x1)) {
    const double x = f.px(t);
    s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"black\"/>\n", x, by, by + 5);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x, by + 18, tick_label(t));
  }
  auto yt = ticks(f.y0, f.y1);
  if (log_y) {
    std::vector<double> decades;
    for (double t : yt) {
      if (t == std::round(t)) decades.push_back(t);
    }
    if (decades.size() >= 2) yt = decades;
  }
  for (double t : yt) {
    const double y = f.py(t);
    const std::string label = log_y ? fmt::format("1e{}", tick_label(t)) : tick_label(t);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n", bx - 5, y, bx);
    s += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", bx - 8, y + 4, label);
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (kLeft + kWidth - kRight) / 2,
                   kHeight - 14, escape(xl));
  s += fmt::format("<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                   (kTop + kHeight - kBottom) / 2, escape(yl));
  return s;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

void CsvTable::add_row(std::vector<double> row) {
  if (row.size() != columns_.size()) throw std::logic_error("csv row width mismatch");
  rows_.push_back(std::move(row));
}

std::string CsvTable::render() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i].name;
  out += '\n';
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_number(r[i]);
    out += '\n';
  }
  return out;
}

std::string Plot::render() const {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double y = ty(s.y[i]);
      if (!std::isfinite(y) || !std::isfinite(s.x[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  padded(x0, x1);
  padded(y0, y1);
  const double margin = 0.04 * (y1 - y0);
  const Frame f{x0, x1, y0 - margin, y1 + margin};

  std::string s = header(title) + axes(f, x_label, y_label, log_y);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (sr.points) {
      for (std::size_t i = 0; i < sr.x.size(); ++i) {
        const double y = ty(sr.y[i]);
        if (!std::isfinite(y)) continue;
        s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2\" fill=\"{}\"/>\n", f.px(sr.x[i]), f.py(y), color);
      }
    } else {
      std::string pts;
      for (std::size_t i = 0; i < sr.x.size(); ++i) {
        const double y = ty(sr.y[i]);
        if (!std::isfinite(y)) continue;
        pts += fmt::format("{:.2f},{:.2f} ", f.px(sr.x[i]), f.py(y));
      }
      s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
    }
    if (!sr.name.empty()) {
      const double ly = kTop + 16 + 16 * static_cast<double>(k);
      s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"3\" fill=\"{}\"/>\n", kWidth - kRight - 170,
                       ly - 4, color);
      s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kWidth - kRight - 152, ly, escape(sr.name));
    }
  }
  return s + "</svg>\n";
}

std::string HeatMap::render() const {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  padded(lo, hi);
  const double dx = xs.size() > 1 ? xs[1] - xs[0] : 1.0;
  const double dy = ys.size() > 1 ? ys[1] - ys[0] : 1.0;
  const Frame f{xs.front() - dx / 2, xs.back() + dx / 2, ys.front() - dy / 2, ys.back() + dy / 2};
  std::string s = header(fmt::format("{} (range {:.3g} to {:.3g})", title, lo, hi));
  const double w = std::abs(f.px(dx) - f.px(0.0)) + 0.3;
  const double h = std::abs(f.py(dy) - f.py(0.0)) + 0.3;
  for (std::size_t j = 0; j < ys.size(); ++j) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double v = values[j * xs.size() + i];
      std::string color = "#cccccc";
      if (std::isfinite(v)) {
        const double t = (v - lo) / (hi - lo);
        // dark blue to yellow
        const int r = static_cast<int>(std::lround(20 + 235 * t));
        const int g = static_cast<int>(std::lround(30 + 200 * t));
        const int b = static_cast<int>(std::lround(120 - 90 * t));
        color = fmt::format("#{:02x}{:02x}{:02x}", r, g, b);
      }
      s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                       f.px(xs[i] - dx / 2), f.py(ys[j] + dy / 2), w, h, color);
    }
  }
  for (const auto& [mx, my] : markers) {
    s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n",
                     f.px(mx), f.py(my));
  }
  s += axes(f, x_label, y_label, false);
  return s + "</svg>\n";
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void ArtifactWriter::write(const std::string& name, const std::string& content) {
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
  manifest_.push_back({name, content.size(), sha256_hex(content)});
}

std::string column_unit(const std::string& name) {
  const auto pos = name.rfind('_');
  if (pos == std::string::npos) return "1";
  const std::string suffix = name.substr(pos + 1);
  for (const char* u : {"MHz", "um", "mm", "ns", "us", "mrad", "deg", "V"}) {
    if (suffix == u) return suffix;
  }
  return "1";
}

void ArtifactWriter::write_csv(const std::string& name, const CsvTable& table) {
  write(name, table.render());
  Json cols = Json::object();
  for (const auto& c : table.columns()) cols[c.name] = {{"unit", column_unit(c.name)}, {"description", c.description}};
  columns_[name] = cols;
}

}  // namespace aodkit::cli
