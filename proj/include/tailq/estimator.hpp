#pragma once

// Adaptive estimation of per-unit latency densities: collect an initial batch
// of rounds, then keep timing and refit every `refit_step` rounds until each
// unit's newest fit is within `tolerance` rJSD of its previous `window` fits.

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailq/kde.hpp"
#include "tailq/runner.hpp"
#include "tailq/trace.hpp"

namespace tailq {

struct EstimatorConfig {
  std::size_t initial_rounds = 30;
  std::size_t refit_step = 5;
  std::size_t window = 5;
  double tolerance = 0.2;
  std::size_t max_rounds = 1000;
  std::size_t grid_points = kDefaultGridPoints;
  std::size_t warmup = 0;

  void validate() const;
  bool operator==(const EstimatorConfig&) const = default;
};

/// Sliding window of a unit's most recent fits (newest last), holding at most
/// window + 1 models.
struct FitWindow {
  std::size_t window = 5;
  std::deque<DensityModel> recent_fits;
  bool converged = false;

  void push(DensityModel model);
};

/// True iff `win` holds at least `win.window` fits and the candidate is within
/// `tolerance` rJSD of each of the most recent `win.window` of them. The
/// largest rJSD against the available fits is written to `max_rjsd`.
bool check_convergence(const FitWindow& win, const DensityModel& candidate, double tolerance,
                       double* max_rjsd = nullptr);

/// One fit event, as written to the fit-progress CSV.
struct FitEvent {
  std::string unit_id;
  std::size_t fit_index = 0;
  std::size_t rounds = 0;
  std::optional<double> max_rjsd;
  bool converged = false;
};

struct EstimationResult {
  std::vector<std::string> unit_ids;
  std::vector<DensityModel> final_models;
  std::vector<bool> converged;
  std::vector<std::vector<double>> fit_history;  // max rJSD per refit, per unit
  std::vector<FitEvent> fit_log;
  std::size_t total_rounds = 0;
  std::size_t total_inferences = 0;
  bool converged_all = false;

  std::optional<std::size_t> find_unit(const std::string& id) const;
};

struct Estimation {
  EstimationResult result;
  TimingStore store;
};

Estimation estimate(WorkloadDriver& driver, std::span<const TimedUnit> units, const EstimatorConfig& cfg,
                    RunContext context = {});

void write_fit_log_csv(const EstimationResult& result, std::ostream& out);

}  // namespace tailq
