#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chargeprice/coupled.hpp"
#include "chargeprice/network.hpp"
#include "chargeprice/pricing.hpp"
#include "chargeprice/sensitivity.hpp"
#include "chargeprice/ue.hpp"

namespace chargeprice {

/// Flat `key = value` run configuration. `#` starts a comment. File paths
/// are resolved against the directory of the config file.
struct RunConfig {
  std::filesystem::path network, trips, fcs, power;
  std::filesystem::path output_dir = "out";
  int k_paths = 3;
  ModelParams params;
  UEOptions ue;
  SensitivityOptions sensitivity;
  GDGSAConfig pricing;
  std::optional<std::vector<double>> initial_prices;  // owned stations
  int grid_points = 160;
  long long grid_cap = 1'000'000;
  double fd_delta = 1e-3;
  int fd_points = 20;
  double fd_abs_tol = 2e-3;
  double fd_rel_tol = 1e-2;
  std::uint64_t seed = 1;
  int multistart = 0;  // extra random starts for price-optimize
  double coupled_tol = 1e-3;
  int coupled_max_cycles = 20;
  int threads = 0;  // 0 = all available cores

  /// Applies one key; throws ValidationError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Ordered key/value echo of the effective configuration.
  std::map<std::string, std::string> echo() const;
  /// Checks file existence and cross-field invariants.
  void validate(bool need_power) const;
  CoupledConfig coupled() const;
};

RunConfig parse_config(std::istream& in, const std::string& source, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& file);

}  // namespace chargeprice
