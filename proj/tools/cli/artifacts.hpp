#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace aodkit::cli {

using Json = nlohmann::ordered_json;

// Column names carry their unit as a suffix (f_MHz, ion_um, ...).
struct Column {
  std::string name;
  std::string description;
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<Column> columns) : columns_(std::move(columns)) {}
  void add_row(std::vector<double> row);
  std::string render() const;
  const std::vector<Column>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<Column> columns_;
  std::vector<std::vector<double>> rows_;
};

// Unit named by the column suffix; "1" for dimensionless columns.
std::string column_unit(const std::string& name);

// Shortest round-trip text for a double; used everywhere numbers are emitted.
std::string format_number(double v);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool points = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
  std::string render() const;
};

// Filled-cell map of values[j * xs.size() + i]; NaN cells drawn grey.
struct HeatMap {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> values;
  std::vector<std::pair<double, double>> markers;
  std::string render() const;
};

struct ManifestEntry {
  std::string file;
  std::size_t bytes = 0;
  std::string sha256;
};

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);
  const std::filesystem::path& dir() const { return dir_; }
  void write(const std::string& name, const std::string& content);
  void write_csv(const std::string& name, const CsvTable& table);
  const std::vector<ManifestEntry>& manifest() const { return manifest_; }
  const Json& columns() const { return columns_; }

 private:
  std::filesystem::path dir_;
  std::vector<ManifestEntry> manifest_;
  Json columns_ = Json::object();
};

}  // namespace aodkit::cli
