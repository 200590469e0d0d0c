#include "fb5/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fb5/rng.hpp"

namespace fb5 {

namespace {

constexpr double kLrtThreshold = 13.086;  // 99th percentile of chi^2_5

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string estimator_name(EstimatorId id) {
  switch (id) {
    case EstimatorId::Moment: return "moment";
    case EstimatorId::Ml: return "ml";
    case EstimatorId::Map1: return "map1";
    case EstimatorId::Map2: return "map2";
    case EstimatorId::Rosenblatt: return "rosenblatt";
    case EstimatorId::Mml: return "mml";
  }
  return "unknown";
}

std::optional<EstimatorId> estimator_from_name(const std::string& name) {
  for (EstimatorId id : {EstimatorId::Moment, EstimatorId::Ml, EstimatorId::Map1,
                         EstimatorId::Map2, EstimatorId::Rosenblatt,
                         EstimatorId::Mml}) {
    if (estimator_name(id) == name) return id;
  }
  return std::nullopt;
}

EstimationResult run_estimator(EstimatorId id, const SufficientStats& stats) {
  switch (id) {
    case EstimatorId::Moment: return moment_estimate(stats);
    case EstimatorId::Ml: return ml_estimate(stats);
    case EstimatorId::Map1:
      return map_estimate(stats, PriorSpec::ThreeD_KappaBeta);
    case EstimatorId::Map2:
      return map_estimate(stats, PriorSpec::ThreeD_KappaEcc);
    case EstimatorId::Rosenblatt:
      return map_estimate(stats, PriorSpec::TwoD_Rosenblatt);
    case EstimatorId::Mml: return mml_estimate(stats);
  }
  throw std::logic_error("run_estimator: unknown estimator");
}

BiasMse bias_mse(const std::vector<KentParams>& estimates,
                 const KentParams& truth) {
  if (estimates.empty()) throw std::invalid_argument("bias_mse: empty input");
  const double n = static_cast<double>(estimates.size());

  // wrapped signed residuals per coordinate; psi has period pi (the FB5
  // density is invariant under psi -> psi + pi)
  auto residual = [&](const KentParams& p, int coord) {
    switch (coord) {
      case 0: {
        double d = p.angles().psi - truth.angles().psi;
        d = std::remainder(d, kPi);
        return d;
      }
      case 1: {
        double d = p.angles().alpha - truth.angles().alpha;
        d = std::remainder(d, kTwoPi);
        return d;
      }
      case 2: {
        double d = p.angles().eta - truth.angles().eta;
        d = std::remainder(d, kTwoPi);
        return d;
      }
      case 3: return p.kappa() - truth.kappa();
      default: return p.beta() - truth.beta();
    }
  };

  double mean_res[5] = {0, 0, 0, 0, 0};
  double mean_sq[5] = {0, 0, 0, 0, 0};
  for (const auto& p : estimates) {
    for (int c = 0; c < 5; ++c) {
      const double r = residual(p, c);
      mean_res[c] += r / n;
      mean_sq[c] += r * r / n;
    }
  }
  BiasMse out;
  for (int c = 0; c < 5; ++c) {
    out.bias_sq += mean_res[c] * mean_res[c];
    out.mse += mean_sq[c];
  }
  return out;
}

std::map<EstimatorId, double> kl_win_fractions(
    const std::vector<TrialSummary>& trials) {
  if (trials.empty()) throw std::invalid_argument("kl_win_fractions: empty");
  std::map<EstimatorId, double> wins;
  for (const auto& [id, _] : trials.front().per_estimator) wins[id] = 0;

  for (const auto& t : trials) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [id, o] : t.per_estimator) {
      if (wins.find(id) == wins.end()) {
        throw std::invalid_argument("kl_win_fractions: inconsistent estimators");
      }
      best = std::min(best, o.kl_to_truth);
    }
    std::vector<EstimatorId> winners;
    for (const auto& [id, o] : t.per_estimator) {
      if (o.kl_to_truth <= best) winners.push_back(id);
    }
    for (EstimatorId id : winners) {
      wins[id] += 1.0 / (winners.size() * static_cast<double>(trials.size()));
    }
  }
  return wins;
}

LrtResult lrt(const SufficientStats& stats, const KentParams& estimate,
              const std::optional<EstimationResult>& ml_fit) {
  const EstimationResult ml =
      ml_fit ? *ml_fit : ml_estimate(stats, estimate);
  LrtResult out;
  out.lambda_stat = std::max(
      0.0, 2.0 * (negative_log_likelihood(stats, estimate) - ml.objective));
  out.p_value = chi_squared_sf(out.lambda_stat, 5.0);
  out.reject = out.p_value < 0.01;
  return out;
}

namespace {

TrialSummary run_trial(const StudyConfig& cfg, const KentParams& truth,
                       int cell, int n, int trial) {
  TrialSummary summary;
  summary.cell = cell;
  summary.trial = trial;

  const std::uint64_t seed =
      derive_seed(cfg.seed, (static_cast<std::uint64_t>(cell) << 32) |
                                static_cast<std::uint64_t>(trial));
  const auto data = kent_sample(truth, static_cast<size_t>(n), seed);
  const SufficientStats stats = sufficient_stats(data);

  std::optional<EstimationResult> ml_fit;
  try {
    ml_fit = ml_estimate(stats);
  } catch (const std::exception&) {
    ml_fit = std::nullopt;
  }

  for (EstimatorId id : cfg.estimators) {
    EstimatorOutcome o;
    try {
      EstimationResult est = (id == EstimatorId::Ml && ml_fit)
                                 ? *ml_fit
                                 : run_estimator(id, stats);
      o.estimate = est.params;
      o.kl_to_truth = kent_kl(truth, est.params);
      if (ml_fit) {
        const LrtResult l = lrt(stats, est.params, ml_fit);
        o.lambda_stat = l.lambda_stat;
        o.p_value = l.p_value;
      }
      o.ok = true;
    } catch (const std::exception&) {
      o.ok = false;  // recorded, not fatal
    }
    summary.per_estimator[id] = o;
  }
  return summary;
}

}  // namespace

StudyReport run_study(const StudyConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("run_study: trials >= 1");
  if (cfg.sample_size < 6) {
    throw std::invalid_argument("run_study: sample_size >= 6");
  }
  if (!cfg.eccentricity_grid.empty() && !cfg.sample_size_grid.empty()) {
    throw std::invalid_argument("run_study: only one grid may be active");
  }

  StudyReport report;
  report.config = cfg;

  struct Cell {
    double value;
    KentParams truth;
    int n;
  };
  std::vector<Cell> cells;
  if (!cfg.eccentricity_grid.empty()) {
    for (double e : cfg.eccentricity_grid) {
      const double kappa = cfg.true_params.kappa();
      cells.push_back({e,
                       KentParams(cfg.true_params.angles(), kappa,
                                  0.5 * kappa * e),
                       cfg.sample_size});
    }
  } else if (!cfg.sample_size_grid.empty()) {
    for (int n : cfg.sample_size_grid) {
      cells.push_back({static_cast<double>(n), cfg.true_params, n});
    }
  } else {
    cells.push_back({cfg.true_params.eccentricity(), cfg.true_params,
                     cfg.sample_size});
  }

  for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
    const Cell& cell = cells[static_cast<size_t>(c)];
    std::vector<TrialSummary> cell_trials(static_cast<size_t>(cfg.trials));

    const int workers = std::max(1, cfg.threads);
    if (workers == 1) {
      for (int t = 0; t < cfg.trials; ++t) {
        cell_trials[static_cast<size_t>(t)] =
            run_trial(cfg, cell.truth, c, cell.n, t);
      }
    } else {
      std::vector<std::future<void>> futs;
      std::atomic<int> next{0};
      for (int w = 0; w < workers; ++w) {
        futs.push_back(std::async(std::launch::async, [&]() {
          for (int t = next++; t < cfg.trials; t = next++) {
            cell_trials[static_cast<size_t>(t)] =
                run_trial(cfg, cell.truth, c, cell.n, t);
          }
        }));
      }
      for (auto& f : futs) f.get();
    }

    CellReport cr;
    cr.cell = c;
    cr.cell_value = cell.value;
    for (EstimatorId id : cfg.estimators) {
      std::vector<KentParams> estimates;
      double lambda_sum = 0;
      double rejections = 0;
      int ok_count = 0;
      for (const auto& t : cell_trials) {
        const auto& o = t.per_estimator.at(id);
        if (!o.ok) continue;
        ++ok_count;
        estimates.push_back(o.estimate);
        lambda_sum += o.lambda_stat;
        if (o.p_value < 0.01) rejections += 1;
      }
      if (ok_count > 0) {
        cr.errors[id] = bias_mse(estimates, cell.truth);
        cr.mean_lambda[id] = lambda_sum / ok_count;
        cr.rejection_rate[id] = rejections / ok_count;
      }
    }
    cr.win_rates = kl_win_fractions(cell_trials);
    report.cells.push_back(cr);
    for (auto& t : cell_trials) report.trials.push_back(std::move(t));
  }
  return report;
}

std::string StudyReport::summary_csv() const {
  std::ostringstream os;
  os << "cell,cell_value,estimator,bias_sq,mse,kl_win_rate,mean_lambda,"
        "rejection_rate\n";
  for (const auto& c : cells) {
    for (EstimatorId id : config.estimators) {
      os << c.cell << ',' << fmt(c.cell_value) << ',' << estimator_name(id);
      if (c.errors.count(id)) {
        os << ',' << fmt(c.errors.at(id).bias_sq) << ','
           << fmt(c.errors.at(id).mse);
      } else {
        os << ",,";
      }
      os << ',' << fmt(c.win_rates.count(id) ? c.win_rates.at(id) : 0.0);
      os << ',' << (c.mean_lambda.count(id) ? fmt(c.mean_lambda.at(id)) : "");
      os << ','
         << (c.rejection_rate.count(id) ? fmt(c.rejection_rate.at(id)) : "");
      os << '\n';
    }
  }
  return os.str();
}

std::string StudyReport::trials_csv() const {
  std::ostringstream os;
  os << "cell,trial,estimator,ok,psi,alpha,eta,kappa,beta,kl,lambda,p_value\n";
  for (const auto& t : trials) {
    for (EstimatorId id : config.estimators) {
      const auto& o = t.per_estimator.at(id);
      os << t.cell << ',' << t.trial << ',' << estimator_name(id) << ','
         << (o.ok ? 1 : 0);
      if (o.ok) {
        os << ',' << fmt(o.estimate.angles().psi) << ','
           << fmt(o.estimate.angles().alpha) << ','
           << fmt(o.estimate.angles().eta) << ',' << fmt(o.estimate.kappa())
           << ',' << fmt(o.estimate.beta()) << ',' << fmt(o.kl_to_truth) << ','
           << fmt(o.lambda_stat) << ',' << fmt(o.p_value);
      } else {
        os << ",,,,,,,,";
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string StudyReport::summary_json() const {
  std::ostringstream os;
  os << "{\n  \"trials\": " << config.trials
     << ",\n  \"sample_size\": " << config.sample_size
     << ",\n  \"seed\": " << config.seed << ",\n  \"lrt_threshold\": "
     << kLrtThreshold << ",\n  \"cells\": [\n";
  for (size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    os << "    {\"cell\": " << c.cell << ", \"value\": " << fmt(c.cell_value)
       << ", \"win_rates\": {";
    bool first = true;
    for (const auto& [id, rate] : c.win_rates) {
      if (!first) os << ", ";
      first = false;
      os << '"' << estimator_name(id) << "\": " << fmt(rate);
    }
    os << "}}" << (i + 1 < cells.size() ? "," : "") << '\n';
  }
  os << "  ]\n}\n";
  return os.str();
}

}  // namespace fb5
