#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hkq/common.hpp"

namespace hkq {

// Experiment runner: seeded sample generation, per-sample checks, and
// machine-readable results. One summary JSON plus one CSV of per-sample
// records per run; identical configs reproduce identical bytes.

struct Record {
  long sample = 0;
  std::string key;
  double value = 0;      // measured quantity (residual, metric entry, ...)
  double threshold = 0;  // pass iff value < threshold (when applicable)
  bool pass = true;
  std::string extra;
};

struct RunOutput {
  bool all_pass = true;
  std::string experiment;
  std::string label;
  std::string digest;
  std::vector<Record> records;
};

// Executes the experiment described by a config JSON. Overrides mirror the
// CLI flags. Writes <label>_records.csv and <label>_summary.json under the
// output directory and returns the in-memory results.
RunOutput run_experiment(const nlohmann::json& config,
                         const std::string& out_dir_override = {},
                         std::optional<std::uint64_t> seed_override = {},
                         int jobs = 1);

// Same, reading the config from a file. Returns process exit status
// semantics: 0 pass, 1 experiment failure, 2 config error.
int run_from_file(const std::string& config_path, const std::string& out_dir_override,
                  std::optional<std::uint64_t> seed_override, int jobs,
                  std::ostream& log);

// Aggregates one or more summary files into a human-readable table.
int report_files(const std::vector<std::string>& summary_paths, std::ostream& os);

// FNV-1a 64-bit digest of the canonical config dump.
std::string config_digest(const nlohmann::json& config);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace hkq
