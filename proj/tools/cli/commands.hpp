#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artifacts.hpp"
#include "config.hpp"

namespace aodkit::cli {

enum class SeedSource { cli, config, generated };

struct RunOptions {
  std::uint64_t seed = 0;
  SeedSource seed_source = SeedSource::generated;
  std::filesystem::path out_dir;
  bool record_time = false;
  std::optional<double> target;  // design-prism only
};

// design-prism, tolerance, trace, steer, efficiency, monitor, crosstalk, misalign,
// lab profile-scan, lab chain-scan, lab crosstalk, lab switching
const std::vector<std::string>& command_names();

// Artifacts go to out_dir/<command with spaces as dashes>/, ending with report.json.
// Returns the report as written.
Json run(const std::string& command, const SystemConfig& config, const RunOptions& options);

std::filesystem::path command_dir(const std::filesystem::path& out_dir, const std::string& command);

}  // namespace aodkit::cli
