#include "chargeprice/pricing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "chargeprice/parallel.hpp"

namespace chargeprice {

namespace {

constexpr double kBoundSlack = 1e-12;

bool within(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < lo[i] - kBoundSlack || x[i] > hi[i] + kBoundSlack) return false;
  return true;
}

Eigen::VectorXd clamp(Eigen::VectorXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

std::vector<double> PricingProblem::full_prices(const Eigen::VectorXd& owned_prices) const {
  if (owned_prices.size() != dimension())
    throw ValidationError("price iterate has " + std::to_string(owned_prices.size()) +
                          " entries, expected " + std::to_string(dimension()));
  std::vector<double> out = prices;
  for (int k = 0; k < dimension(); ++k) out[owned[k]] = owned_prices[k];
  return out;
}

Eigen::VectorXd PricingProblem::lower() const {
  return Eigen::VectorXd::Constant(dimension(), params.price_lower);
}

Eigen::VectorXd PricingProblem::upper() const {
  return Eigen::VectorXd::Constant(dimension(), params.price_upper);
}

Eigen::VectorXd PricingProblem::midpoint() const { return 0.5 * (lower() + upper()); }

void PricingProblem::validate() const {
  if (!network || !demand || !paths) throw ValidationError("pricing problem is missing its network");
  params.validate();
  if (static_cast<int>(prices.size()) != network->num_stations())
    throw ValidationError("pricing problem needs one base price per station");
  std::set<int> seen;
  for (int m : owned) {
    if (m < 0 || m >= network->num_stations()) throw ValidationError("owned station index out of range");
    if (!seen.insert(m).second) throw ValidationError("owned station listed twice");
  }
  if (electricity_cost && electricity_cost->size() != dimension())
    throw ValidationError("electricity cost needs one entry per owned station");
}

double profit(const Eigen::VectorXd& prices, const Eigen::VectorXd& owned_flows,
              double charge_energy, const std::optional<Eigen::VectorXd>& electricity_cost) {
  if (prices.size() != owned_flows.size() ||
      (electricity_cost && electricity_cost->size() != prices.size()))
    throw ValidationError("profit: dimension mismatch");
  const Eigen::VectorXd margin = electricity_cost ? Eigen::VectorXd(prices - *electricity_cost) : prices;
  return charge_energy * margin.dot(owned_flows);
}

Eigen::VectorXd profit_gradient(const Eigen::VectorXd& prices, const Eigen::VectorXd& owned_flows,
                                const Eigen::MatrixXd& grad, double charge_energy,
                                const std::optional<Eigen::VectorXd>& electricity_cost) {
  if (prices.size() != owned_flows.size() || grad.rows() != prices.size() ||
      grad.cols() != prices.size() || (electricity_cost && electricity_cost->size() != prices.size()))
    throw ValidationError("profit gradient: dimension mismatch");
  const Eigen::VectorXd margin = electricity_cost ? Eigen::VectorXd(prices - *electricity_cost) : prices;
  return charge_energy * (grad.transpose() * margin + owned_flows);
}

PricePoint evaluate(const PricingProblem& problem, const Eigen::VectorXd& prices,
                    const UESolution* warm) {
  const std::vector<double> all = problem.full_prices(prices);
  UEOptions opts = problem.ue;
  if (warm) opts.initial_flows = warm->path_flows;
  PricePoint pt;
  pt.prices = prices;
  pt.ue = solve_ue(*problem.network, *problem.demand, *problem.paths, problem.params, all, opts);
  pt.owned_flows.resize(problem.dimension());
  for (int k = 0; k < problem.dimension(); ++k) pt.owned_flows[k] = pt.ue.charge_flows[problem.owned[k]];
  pt.profit = profit(prices, pt.owned_flows, problem.params.charge_energy, problem.electricity_cost);
  return pt;
}

SensitivityResult owned_sensitivity(const PricingProblem& problem, const PricePoint& point,
                                    Eigen::MatrixXd& owned_grad) {
  SensitivityResult s = analyze(*problem.network, *problem.demand, *problem.paths, problem.params,
                                point.ue, problem.owned, problem.sensitivity);
  owned_grad.resize(problem.dimension(), problem.dimension());
  for (int i = 0; i < problem.dimension(); ++i) owned_grad.row(i) = s.grad.row(problem.owned[i]);
  return s;
}

void GDGSAConfig::validate(int dimension) const {
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  if (!(alpha0 > 0.0)) throw ValidationError("base stepsize must be positive");
  if (max_multiplier < 1) throw ValidationError("max stepsize multiplier must be at least 1");
  if (!(tol >= 0.0)) throw ValidationError("pricing tolerance must be nonnegative");
  if (max_iter < 1) throw ValidationError("pricing iteration cap must be at least 1");
  if (metric) {
    if (metric->rows() != dimension || metric->cols() != dimension)
      throw ValidationError("direction metric has the wrong size");
    if (!metric->isApprox(metric->transpose()) || metric->llt().info() != Eigen::Success)
      throw ValidationError("direction metric must be symmetric positive definite");
  }
}

StepSearch stepsize_search(const PricingProblem& problem, const PricePoint& current,
                           const Eigen::VectorXd& direction, double alpha0, int max_multiplier,
                           int threads) {
  const Eigen::VectorXd lo = problem.lower(), hi = problem.upper();
  StepSearch out;
  if (threads <= 0) threads = default_threads();
  const int batch = std::max(threads, 1);
  for (int start = 1; start <= max_multiplier; start += batch) {
    const int count = std::min(batch, max_multiplier - start + 1);
    std::vector<std::optional<PricePoint>> trials(count);
    parallel_for(count, threads, [&](int i) {
      const Eigen::VectorXd trial = current.prices + (start + i) * alpha0 * direction;
      if (!within(trial, lo, hi)) return;
      trials[i] = evaluate(problem, clamp(trial, lo, hi), &current.ue);
    });
    for (int i = 0; i < count; ++i) {
      ++out.trials;
      const double reference = out.point ? out.point->profit : current.profit;
      if (!trials[i] || !(trials[i]->profit > reference)) return out;
      out.accepted = true;
      out.multiplier = start + i;
      out.alpha = out.multiplier * alpha0;
      out.point = std::move(trials[i]);
    }
  }
  return out;
}

PricingTrace gdgsa(const PricingProblem& problem, const Eigen::VectorXd& initial,
                   const GDGSAConfig& config, const IterateCallback& on_iterate) {
  using clock = std::chrono::steady_clock;
  problem.validate();
  config.validate(problem.dimension());
  const Eigen::VectorXd lo = problem.lower(), hi = problem.upper();
  if (initial.size() != problem.dimension() || !within(initial, lo, hi))
    throw ValidationError("initial prices must lie within the price bounds");
  const Eigen::MatrixXd metric =
      config.metric ? *config.metric : Eigen::MatrixXd::Identity(problem.dimension(), problem.dimension());

  PricingTrace trace;
  auto t0 = clock::now();
  PricePoint current = evaluate(problem, clamp(initial, lo, hi));
  auto emit = [&](PriceIterate it) {
    it.prices = current.prices;
    it.profit = current.profit;
    it.ue_iterations = current.ue.iterations;
    it.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    if (on_iterate) on_iterate(it);
    trace.iterates.push_back(std::move(it));
    t0 = clock::now();
  };
  emit(PriceIterate{});

  for (int iter = 1;; ++iter) {
    if (iter > config.max_iter) {
      trace.stop_reason = "iteration cap";
      break;
    }
    PriceIterate rec;
    rec.iteration = iter;
    Eigen::MatrixXd owned_grad;
    SensitivityResult sens;
    try {
      sens = owned_sensitivity(problem, current, owned_grad);
    } catch (const NumericalError& e) {
      throw NumericalError("pricing iteration " + std::to_string(iter) + ": " + e.what());
    }
    rec.num_ep = sens.num_ep;
    rec.num_nep = sens.num_nep;
    rec.num_eli = sens.num_eli;
    const Eigen::VectorXd g = profit_gradient(current.prices, current.owned_flows, owned_grad,
                                              problem.params.charge_energy, problem.electricity_cost);
    const DirectionResult dir = feasible_direction(current.prices, g, lo, hi, config.gamma, metric);
    rec.direction = dir.h;
    rec.margin = dir.z;
    if (dir.h.lpNorm<Eigen::Infinity>() <= 1e-12 || dir.z <= 0.0) {
      trace.stop_reason = "stationary";
      trace.converged = true;
      break;
    }
    StepSearch step = stepsize_search(problem, current, dir.h, config.alpha0, config.max_multiplier,
                                      config.threads);
    if (!step.accepted)
      step = stepsize_search(problem, current, dir.h, 0.5 * config.alpha0, config.max_multiplier,
                             config.threads);
    if (!step.accepted) {
      trace.stop_reason = "no improving step";
      trace.converged = true;
      break;
    }
    const double gain = step.point->profit - current.profit;
    current = std::move(*step.point);
    rec.alpha = step.alpha;
    emit(std::move(rec));
    if (gain <= config.tol) {
      trace.stop_reason = "profit improvement below tolerance";
      trace.converged = true;
      break;
    }
  }
  trace.final = std::move(current);
  return trace;
}

CompetitionResult gauss_seidel_competition(const PricingProblem& base,
                                           const std::vector<std::vector<int>>& providers,
                                           const GDGSAConfig& config, double price_tol,
                                           int max_cycles) {
  if (providers.empty()) throw ValidationError("competition needs at least one provider");
  std::set<int> seen;
  for (const auto& owned : providers) {
    if (owned.empty()) throw ValidationError("provider owns no station");
    for (int m : owned)
      if (!seen.insert(m).second) throw ValidationError("providers must own disjoint stations");
  }
  CompetitionResult out;
  out.prices = base.prices;
  out.last_traces.resize(providers.size());
  for (int cycle = 1; cycle <= max_cycles; ++cycle) {
    double change = 0.0;
    for (std::size_t k = 0; k < providers.size(); ++k) {
      PricingProblem sub = base;
      sub.prices = out.prices;
      sub.owned = providers[k];
      sub.electricity_cost.reset();
      Eigen::VectorXd start(sub.dimension());
      for (int i = 0; i < sub.dimension(); ++i) start[i] = out.prices[sub.owned[i]];
      out.last_traces[k] = gdgsa(sub, start, config);
      const Eigen::VectorXd& fin = out.last_traces[k].final.prices;
      for (int i = 0; i < sub.dimension(); ++i) {
        change = std::max(change, std::abs(fin[i] - out.prices[sub.owned[i]]));
        out.prices[sub.owned[i]] = fin[i];
      }
    }
    out.cycles = cycle;
    out.last_change = change;
    // A lone provider's gdgsa run is already its best response.
    if (providers.size() == 1 || change <= price_tol) return out;
  }
  std::ostringstream os;
  os << "cycle cap reached after " << max_cycles << " competition cycles (last price change "
     << out.last_change << ")";
  throw CycleCapError(os.str(), out.prices);
}

}  // namespace chargeprice
