#include "chargeprice/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chargeprice/error.hpp"

namespace chargeprice {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double as_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    throw ValidationError("config key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long as_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError("config key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::vector<double> as_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(as_double(key, trim(item)));
  if (out.empty()) throw ValidationError("config key '" + key + "' expects a comma-separated list");
  return out;
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string& v = value;
  if (key == "network") network = v;
  else if (key == "trips") trips = v;
  else if (key == "fcs") fcs = v;
  else if (key == "power") power = v;
  else if (key == "output_dir") output_dir = v;
  else if (key == "k_paths") k_paths = static_cast<int>(as_int(key, v));
  else if (key == "time_value") params.time_value = as_double(key, v);
  else if (key == "charge_energy") params.charge_energy = as_double(key, v);
  else if (key == "price_lower") params.price_lower = as_double(key, v);
  else if (key == "price_upper") params.price_upper = as_double(key, v);
  else if (key == "ue_tol") ue.tol = as_double(key, v);
  else if (key == "ue_max_iter") ue.max_iter = static_cast<int>(as_int(key, v));
  else if (key == "flow_eps") ue.flow_eps = sensitivity.flow_eps = as_double(key, v);
  else if (key == "cost_eps") sensitivity.cost_eps_rel = as_double(key, v);
  else if (key == "rank_tol") sensitivity.rank_tol = as_double(key, v);
  else if (key == "reg_eps") sensitivity.reg_eps = as_double(key, v);
  else if (key == "gamma") pricing.gamma = as_double(key, v);
  else if (key == "alpha0") pricing.alpha0 = as_double(key, v);
  else if (key == "kbar") pricing.max_multiplier = static_cast<int>(as_int(key, v));
  else if (key == "pricing_tol") pricing.tol = as_double(key, v);
  else if (key == "pricing_max_iter") pricing.max_iter = static_cast<int>(as_int(key, v));
  else if (key == "metric_diag") {
    const auto d = as_list(key, v);
    pricing.metric = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size())).asDiagonal();
  } else if (key == "initial_prices") initial_prices = as_list(key, v);
  else if (key == "grid_points") grid_points = static_cast<int>(as_int(key, v));
  else if (key == "grid_cap") grid_cap = as_int(key, v);
  else if (key == "fd_delta") fd_delta = as_double(key, v);
  else if (key == "fd_points") fd_points = static_cast<int>(as_int(key, v));
  else if (key == "fd_abs_tol") fd_abs_tol = as_double(key, v);
  else if (key == "fd_rel_tol") fd_rel_tol = as_double(key, v);
  else if (key == "seed") seed = static_cast<std::uint64_t>(as_int(key, v));
  else if (key == "multistart") multistart = static_cast<int>(as_int(key, v));
  else if (key == "coupled_tol") coupled_tol = as_double(key, v);
  else if (key == "coupled_max_cycles") coupled_max_cycles = static_cast<int>(as_int(key, v));
  else if (key == "threads") threads = static_cast<int>(as_int(key, v));
  else throw ValidationError("unknown config key '" + key + "'");
}

std::map<std::string, std::string> RunConfig::echo() const {
  std::map<std::string, std::string> e{
      {"network", network.string()},
      {"trips", trips.string()},
      {"fcs", fcs.string()},
      {"power", power.string()},
      {"output_dir", output_dir.string()},
      {"k_paths", std::to_string(k_paths)},
      {"time_value", num(params.time_value)},
      {"charge_energy", num(params.charge_energy)},
      {"price_lower", num(params.price_lower)},
      {"price_upper", num(params.price_upper)},
      {"ue_tol", num(ue.tol)},
      {"ue_max_iter", std::to_string(ue.max_iter)},
      {"flow_eps", num(ue.flow_eps)},
      {"cost_eps", num(sensitivity.cost_eps_rel)},
      {"rank_tol", num(sensitivity.rank_tol)},
      {"reg_eps", num(sensitivity.reg_eps)},
      {"gamma", num(pricing.gamma)},
      {"alpha0", num(pricing.alpha0)},
      {"kbar", std::to_string(pricing.max_multiplier)},
      {"pricing_tol", num(pricing.tol)},
      {"pricing_max_iter", std::to_string(pricing.max_iter)},
      {"grid_points", std::to_string(grid_points)},
      {"grid_cap", std::to_string(grid_cap)},
      {"fd_delta", num(fd_delta)},
      {"fd_points", std::to_string(fd_points)},
      {"fd_abs_tol", num(fd_abs_tol)},
      {"fd_rel_tol", num(fd_rel_tol)},
      {"seed", std::to_string(seed)},
      {"multistart", std::to_string(multistart)},
      {"coupled_tol", num(coupled_tol)},
      {"coupled_max_cycles", std::to_string(coupled_max_cycles)},
      {"threads", std::to_string(threads)},
  };
  if (initial_prices) {
    std::string s;
    for (double p : *initial_prices) s += (s.empty() ? "" : ",") + num(p);
    e["initial_prices"] = s;
  }
  if (pricing.metric) {
    std::string s;
    for (Eigen::Index i = 0; i < pricing.metric->rows(); ++i) s += (s.empty() ? "" : ",") + num((*pricing.metric)(i, i));
    e["metric_diag"] = s;
  }
  return e;
}

void RunConfig::validate(bool need_power) const {
  auto exists = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw ValidationError(std::string("config is missing the ") + what + " file");
    if (!std::filesystem::exists(p)) throw ValidationError("cannot open file " + p.string());
  };
  exists(network, "network");
  exists(trips, "trips");
  exists(fcs, "fcs");
  if (need_power) exists(power, "power");
  params.validate();
  if (k_paths < 1) throw ValidationError("k_paths must be at least 1");
  if (!(ue.tol > 0.0)) throw ValidationError("ue_tol must be positive");
  if (!(ue.tol < sensitivity.cost_eps_rel)) throw ValidationError("ue_tol must be smaller than cost_eps");
  if (grid_points < 1) throw ValidationError("grid_points must be at least 1");
  if (!(fd_delta > 0.0)) throw ValidationError("fd_delta must be positive");
  if (fd_points < 1) throw ValidationError("fd_points must be at least 1");
  if (multistart < 0) throw ValidationError("multistart must be nonnegative");
  if (!(coupled_tol >= 0.0) || coupled_max_cycles < 1) throw ValidationError("invalid coupled loop settings");
  if (threads < 0) throw ValidationError("threads must be nonnegative");
}

CoupledConfig RunConfig::coupled() const {
  CoupledConfig c;
  c.pricing = pricing;
  c.tol = coupled_tol;
  c.max_cycles = coupled_max_cycles;
  return c;
}

RunConfig parse_config(std::istream& in, const std::string& source, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto cut = raw.find('#'); cut != std::string::npos) raw.erase(cut);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, number, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "network" || key == "trips" || key == "fcs" || key == "power" || key == "output_dir") {
      std::filesystem::path p(value);
      if (p.is_relative()) value = (base_dir / p).lexically_normal().string();
    }
    try {
      cfg.set(key, value);
    } catch (const ValidationError& e) {
      throw ParseError(source, number, e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open file " + file.string());
  return parse_config(in, file.string(), file.parent_path());
}

}  // namespace chargeprice
