#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fb5/estimators.hpp"
#include "fb5/special.hpp"

namespace fb5 {

/// Estimators compared by the simulation harness.
enum class EstimatorId { Moment, Ml, Map1, Map2, Rosenblatt, Mml };

std::string estimator_name(EstimatorId id);
std::optional<EstimatorId> estimator_from_name(const std::string& name);

/// Dispatch to the estimator behind an id (moment init for the iterative
/// ones).
EstimationResult run_estimator(EstimatorId id, const SufficientStats& stats);

struct StudyConfig {
  KentParams true_params;
  int sample_size = 10;
  int trials = 100;
  std::uint64_t seed = 1;
  std::vector<EstimatorId> estimators = {EstimatorId::Moment, EstimatorId::Ml,
                                         EstimatorId::Map1, EstimatorId::Map2,
                                         EstimatorId::Mml};
  // exactly one of the two grids is active; both empty means a single cell
  std::vector<double> eccentricity_grid;  // vary e, fixed N
  std::vector<int> sample_size_grid;      // vary N, fixed e
  int threads = 1;
};

struct EstimatorOutcome {
  bool ok = false;
  KentParams estimate;
  double kl_to_truth = 0;
  double lambda_stat = 0;
  double p_value = 1;
};

struct TrialSummary {
  int cell = 0;
  int trial = 0;
  std::map<EstimatorId, EstimatorOutcome> per_estimator;
};

/// Bias^2 = |E[theta-hat] - theta|^2 and MSE = Bias^2 + tr Var(theta-hat)
/// over the 5-vector (psi, alpha, eta, kappa, beta); angular coordinates are
/// compared through wrapped differences.
struct BiasMse {
  double bias_sq = 0;
  double mse = 0;
};
BiasMse bias_mse(const std::vector<KentParams>& estimates,
                 const KentParams& truth);

/// Per-estimator fraction of trials with the strictly smallest KL; ties are
/// split evenly. Rates sum to 1.
std::map<EstimatorId, double> kl_win_fractions(
    const std::vector<TrialSummary>& trials);

/// Likelihood-ratio statistic Lambda = 2 (NLL(estimate) - NLL(ML)) with the
/// chi-squared(5) upper-tail p-value. The null is rejected at p < 0.01
/// (threshold Lambda > 13.086).
struct LrtResult {
  double lambda_stat = 0;
  double p_value = 1;
  bool reject = false;
};
LrtResult lrt(const SufficientStats& stats, const KentParams& estimate,
              const std::optional<EstimationResult>& ml_fit = {});

struct CellReport {
  int cell = 0;
  double cell_value = 0;  // eccentricity or sample size of this cell
  std::map<EstimatorId, BiasMse> errors;
  std::map<EstimatorId, double> win_rates;
  std::map<EstimatorId, double> mean_lambda;
  std::map<EstimatorId, double> rejection_rate;
};

struct StudyReport {
  StudyConfig config;
  std::vector<CellReport> cells;
  std::vector<TrialSummary> trials;

  std::string summary_csv() const;
  std::string trials_csv() const;
  std::string summary_json() const;
};

/// Deterministic simulation study: per-trial seeds derived from the master
/// seed, trials independent (and parallelizable) within each cell.
StudyReport run_study(const StudyConfig& cfg);

}  // namespace fb5
