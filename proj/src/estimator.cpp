#include "tailq/estimator.hpp"

#include <algorithm>
#include <ostream>

#include "tailq/divergence.hpp"
#include "tailq/error.hpp"
#include "tailq/format.hpp"

namespace tailq {

void EstimatorConfig::validate() const {
  if (initial_rounds < 2) throw ConfigError("initial rounds must be >= 2");
  if (refit_step < 1) throw ConfigError("refit step must be >= 1");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (!(tolerance > 0.0 && tolerance <= 1.0)) throw ConfigError("tolerance must be in (0, 1]");
  if (max_rounds <= initial_rounds) throw ConfigError("max rounds must exceed initial rounds");
  if (grid_points < 2) throw ConfigError("grid points must be >= 2");
}

void FitWindow::push(DensityModel model) {
  recent_fits.push_back(std::move(model));
  while (recent_fits.size() > window + 1) recent_fits.pop_front();
}

bool check_convergence(const FitWindow& win, const DensityModel& candidate, double tolerance, double* max_rjsd) {
  const std::size_t available = std::min(win.window, win.recent_fits.size());
  double worst = 0.0;
  bool within = true;
  for (std::size_t k = win.recent_fits.size() - available; k < win.recent_fits.size(); ++k) {
    const double d = rjsd(win.recent_fits[k], candidate);
    worst = std::max(worst, d);
    if (d > tolerance) within = false;
  }
  if (max_rjsd) *max_rjsd = worst;
  return within && win.recent_fits.size() >= win.window;
}

std::optional<std::size_t> EstimationResult::find_unit(const std::string& id) const {
  auto it = std::find(unit_ids.begin(), unit_ids.end(), id);
  if (it == unit_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - unit_ids.begin());
}

Estimation estimate(WorkloadDriver& driver, std::span<const TimedUnit> units, const EstimatorConfig& cfg,
                    RunContext context) {
  cfg.validate();
  if (units.empty()) throw DataError("no units to estimate");

  TimingStore store(std::move(context), std::vector<TimedUnit>(units.begin(), units.end()));
  driver.warmup(units, cfg.warmup);
  for (std::size_t j = 0; j < cfg.initial_rounds; ++j) store.append_round(driver.run_round(units));

  const std::size_t n = units.size();
  EstimationResult result;
  result.final_models.resize(n);
  result.converged.assign(n, false);
  result.fit_history.resize(n);
  std::vector<FitWindow> windows(n, FitWindow{cfg.window, {}, false});
  std::vector<std::size_t> fit_count(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    result.unit_ids.push_back(units[i].id);
    DensityModel first = fit_kde(store.latencies(i), std::nullopt, cfg.grid_points);
    result.final_models[i] = first;
    windows[i].push(std::move(first));
    result.fit_log.push_back(FitEvent{units[i].id, fit_count[i]++, store.rounds(), std::nullopt, false});
  }

  auto all_converged = [&] { return std::all_of(windows.begin(), windows.end(), [](const FitWindow& w) { return w.converged; }); };

  // Timing continues for converged units so the matrix stays rectangular;
  // only unconverged units are refit.
  std::size_t iteration = 0;
  while (!all_converged() && store.rounds() < cfg.max_rounds) {
    store.append_round(driver.run_round(units));
    ++iteration;
    if (iteration % cfg.refit_step != 0) continue;

    for (std::size_t i = 0; i < n; ++i) {
      if (windows[i].converged) continue;
      DensityModel candidate = fit_kde(store.latencies(i), std::nullopt, cfg.grid_points);
      double max_rjsd = 0.0;
      const bool ok = check_convergence(windows[i], candidate, cfg.tolerance, &max_rjsd);
      result.fit_history[i].push_back(max_rjsd);
      result.fit_log.push_back(FitEvent{units[i].id, fit_count[i]++, store.rounds(), max_rjsd, ok});
      result.final_models[i] = candidate;
      windows[i].push(std::move(candidate));
      windows[i].converged = ok;
    }
  }

  for (std::size_t i = 0; i < n; ++i) result.converged[i] = windows[i].converged;
  result.total_rounds = store.rounds();
  result.total_inferences = store.rounds() * n;
  result.converged_all = all_converged();
  return Estimation{std::move(result), std::move(store)};
}

void write_fit_log_csv(const EstimationResult& result, std::ostream& out) {
  out << "unit_id,fit_index,rounds,max_rjsd,converged\n";
  for (const auto& e : result.fit_log) {
    out << csv_field(e.unit_id) << ',' << e.fit_index << ',' << e.rounds << ','
        << (e.max_rjsd ? format_double(*e.max_rjsd) : std::string()) << ',' << (e.converged ? 1 : 0) << '\n';
  }
}

}  // namespace tailq
