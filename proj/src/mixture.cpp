#include "fb5/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fb5/rng.hpp"

namespace fb5 {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ComponentCache {
  Vec3 kg1;
  Vec3 g2, g3;
  double beta;
  double log_w_minus_log_c;
};

std::vector<ComponentCache> build_cache(const MixtureModel& m) {
  std::vector<ComponentCache> cache(m.components.size());
  for (size_t j = 0; j < m.components.size(); ++j) {
    const KentParams& p = m.components[j];
    cache[j].kg1 = p.kappa() * p.gamma1();
    cache[j].g2 = p.gamma2();
    cache[j].g3 = p.gamma3();
    cache[j].beta = p.beta();
    cache[j].log_w_minus_log_c =
        std::log(std::max(m.weights[j], kWeightFloor)) - p.log_c();
  }
  return cache;
}

inline double cached_log_wf(const ComponentCache& c, const Vec3& x) {
  const double d2 = c.g2.dot(x);
  const double d3 = c.g3.dot(x);
  return c.kg1.dot(x) + c.beta * (d2 * d2 - d3 * d3) + c.log_w_minus_log_c;
}

// Kent parameters whose mean axis is `dir`, major axis oriented by `major`
// (projected orthogonal to dir), with the given kappa and eccentricity.
KentParams kent_from_axes_hint(const Vec3& dir, const Vec3& major,
                               double kappa, double ecc) {
  const Vec3 g1 = dir.normalized();
  Vec3 g2 = major - major.dot(g1) * g1;
  if (g2.norm() < 1e-12) {
    Vec3 u, v;
    tangent_basis(g1, u, v);
    g2 = u;
  } else {
    g2.normalize();
  }
  const Vec3 g3 = g1.cross(g2);
  Mat3 q;
  q.col(0) = g1;
  q.col(1) = g2;
  q.col(2) = g3;
  const auto rec = angles_from_axes(q);
  kappa = std::clamp(kappa, 1e-6, 1e8);
  ecc = std::clamp(ecc, 0.0, kMaxEccentricity);
  return KentParams(rec.angles, kappa, 0.5 * kappa * ecc);
}

double safe_weight(double w) { return std::max(w, kWeightFloor); }

}  // namespace

int MixtureModel::free_params() const {
  const int per = family == Family::Kent ? 5 : 3;
  return per * k() + (k() - 1);
}

double mixture_log_density(const Vec3& x, const MixtureModel& m) {
  const auto cache = build_cache(m);
  double best = -kInf;
  for (const auto& c : cache) best = std::max(best, cached_log_wf(c, x));
  double sum = 0;
  for (const auto& c : cache) sum += std::exp(cached_log_wf(c, x) - best);
  return best + std::log(sum);
}

double mixture_nll(std::span<const Vec3> data, const MixtureModel& m) {
  const auto cache = build_cache(m);
  double nll = 0;
  for (const auto& x : data) {
    double best = -kInf;
    for (const auto& c : cache) best = std::max(best, cached_log_wf(c, x));
    double sum = 0;
    for (const auto& c : cache) sum += std::exp(cached_log_wf(c, x) - best);
    nll -= best + std::log(sum);
  }
  return nll;
}

Responsibilities e_step(std::span<const Vec3> data, const MixtureModel& m) {
  const auto cache = build_cache(m);
  const int n = static_cast<int>(data.size());
  const int k = m.k();
  Responsibilities resp;
  resp.r.resize(n, k);
  for (int i = 0; i < n; ++i) {
    double best = -kInf;
    for (int j = 0; j < k; ++j) {
      resp.r(i, j) = cached_log_wf(cache[j], data[i]);
      best = std::max(best, resp.r(i, j));
    }
    double sum = 0;
    for (int j = 0; j < k; ++j) {
      resp.r(i, j) = std::exp(resp.r(i, j) - best);
      sum += resp.r(i, j);
    }
    resp.r.row(i) /= sum;
  }
  resp.n_eff = resp.r.colwise().sum();
  return resp;
}

// ---------------------------------------------------------------------------
// vMF estimation helpers

double vmf_mean_resultant_prime(double kappa) {
  if (kappa < 1e-2) {
    const double k2 = kappa * kappa;
    return 1.0 / 3.0 - k2 / 15.0 + 2.0 * k2 * k2 / 189.0;
  }
  const double s = std::sinh(kappa);
  double inv_s2 = 0.0;
  if (kappa < 350.0) inv_s2 = 1.0 / (s * s);
  return 1.0 / (kappa * kappa) - inv_s2;
}

double vmf_ml_kappa(double rbar) {
  rbar = std::clamp(rbar, 0.0, 1.0 - 1e-12);
  if (rbar < 1e-12) return 1e-8;
  double kappa = rbar * (3.0 - rbar * rbar) / (1.0 - rbar * rbar);
  kappa = std::clamp(kappa, 1e-8, 1e12);
  for (int it = 0; it < 50; ++it) {
    const double g = vmf_mean_resultant(kappa) - rbar;
    const double gp = vmf_mean_resultant_prime(kappa);
    if (gp <= 0) break;
    double next = kappa - g / gp;
    if (next <= 0) next = kappa / 2.0;
    if (std::abs(next - kappa) < 1e-12 * std::max(1.0, kappa)) {
      kappa = next;
      break;
    }
    kappa = next;
  }
  return std::clamp(kappa, 1e-8, 1e12);
}

double vmf_first_part_nats(double kappa, double n) {
  // The sin(alpha) factors of the prior and the Fisher determinant cancel:
  //   -log h + 0.5 log|F| =
  //     2 log pi + 2 log(1+k^2) - log k + log A + 0.5 log A' + 1.5 log n
  const double a = vmf_mean_resultant(kappa);
  const double ap = vmf_mean_resultant_prime(kappa);
  return 1.5 * std::log(lattice_constant(3)) + 2.0 * std::log(kPi) +
         2.0 * std::log1p(kappa * kappa) - std::log(kappa) + std::log(a) +
         0.5 * std::log(ap) + 1.5 * std::log(n);
}

double vmf_mml_kappa(double rbar, double n) {
  rbar = std::clamp(rbar, 1e-12, 1.0 - 1e-12);
  const double k_ml = vmf_ml_kappa(rbar);
  auto obj = [&](const std::vector<double>& u) {
    const double kappa = std::exp(std::clamp(u[0], -25.0, 30.0));
    return vmf_first_part_nats(kappa, n) +
           n * (vmf_log_norm(kappa) - kappa * rbar);
  };
  NelderMeadOptions opts;
  opts.max_evals = 200;
  opts.x_tol = 1e-8;
  const auto r = nelder_mead(obj, {std::log(k_ml)}, {0.3}, opts);
  return std::clamp(std::exp(r.x[0]), 1e-8, 1e12);
}

// ---------------------------------------------------------------------------
// M-step

namespace {

// Weighted single-component fit, warm-started at `current` so the local
// objective cannot get worse.
KentParams fit_component(std::span<const Vec3> data,
                         const Eigen::VectorXd& column,
                         const KentParams& current, Family family,
                         MixtureObjective objective) {
  SufficientStats ws = weighted_stats(
      data, std::span<const double>(column.data(), size_t(column.size())));

  if (family == Family::Vmf) {
    const double rbar = ws.resultant_mean.norm();
    if (rbar < 1e-12) return current;
    const double kappa = objective == MixtureObjective::ML
                             ? vmf_ml_kappa(rbar)
                             : vmf_mml_kappa(rbar, ws.n);
    return vmf_as_kent(VmfParams(UnitVector3(ws.resultant_mean), kappa));
  }

  std::optional<KentParams> init;
  try {
    EstimationResult mom = moment_estimate(ws);
    init = mom.params;
  } catch (const std::exception&) {
    init = current;
  }
  // pick the better of {moment init, current params} as the NM start
  auto score_of = [&](const KentParams& p) {
    if (objective == MixtureObjective::ML)
      return negative_log_likelihood(ws, p);
    const double beta_ok = std::max(p.beta(), beta_floor(p.kappa()) * 1.0000001);
    const KentParams q(p.angles(), p.kappa(), beta_ok);
    const auto ml = message_length(ws, q);
    return ml.total_bits * kLn2;
  };
  double s_init, s_cur;
  try {
    s_init = score_of(*init);
  } catch (...) {
    s_init = kInf;
  }
  try {
    s_cur = score_of(current);
  } catch (...) {
    s_cur = kInf;
  }
  const KentParams start = s_cur < s_init ? current : *init;

  // warm-started incremental refit: a leaner search budget than the
  // from-scratch estimator contract
  NelderMeadOptions opts;
  opts.x_tol = 1e-5;
  opts.max_evals = 600;
  opts.restarts = 0;
  EstimationResult est = objective == MixtureObjective::ML
                             ? ml_estimate(ws, start, opts)
                             : mml_estimate(ws, start, opts);
  return est.params;
}

}  // namespace

MixtureModel m_step(std::span<const Vec3> data, const Responsibilities& resp,
                    const MixtureModel& current, MixtureObjective objective) {
  const int k = current.k();
  const double n = static_cast<double>(data.size());
  MixtureModel next;
  next.family = current.family;
  next.weights.resize(k);
  next.components.reserve(k);
  for (int j = 0; j < k; ++j) {
    const Eigen::VectorXd col = resp.r.col(j);
    next.components.push_back(
        fit_component(data, col, current.components[j], current.family,
                      objective));
    if (objective == MixtureObjective::ML) {
      next.weights[j] = safe_weight(resp.n_eff[j] / n);
    } else {
      next.weights[j] = safe_weight((resp.n_eff[j] + 0.5) / (n + 0.5 * k));
    }
  }
  double wsum = 0;
  for (double w : next.weights) wsum += w;
  for (double& w : next.weights) w /= wsum;
  return next;
}

// ---------------------------------------------------------------------------
// Message length of a mixture

MessageLength mixture_message_length(std::span<const Vec3> data,
                                     const MixtureModel& m,
                                     const Responsibilities& resp,
                                     bool clamp_singular) {
  const int k = m.k();
  const double n = static_cast<double>(data.size());

  // I(K): geometric prior, 1 bit per unit increase in K
  double first_nats = k * kLn2;
  // I(w): multinomial weight code
  if (k > 1) {
    double sum_log_w = 0;
    for (double w : m.weights) sum_log_w += std::log(safe_weight(w));
    first_nats += 0.5 * (k - 1) * std::log(n) - 0.5 * sum_log_w -
                  std::lgamma(static_cast<double>(k));
  }
  // sum_j I(Theta_j) with the effective sample size n_j
  for (int j = 0; j < k; ++j) {
    const KentParams& p = m.components[j];
    const double n_j = std::max(resp.n_eff[j], 1.0);
    if (m.family == Family::Vmf) {
      first_nats += std::max(vmf_first_part_nats(p.kappa(), n_j), 0.0);
      continue;
    }
    double beta = p.beta();
    const double floor = beta_floor(p.kappa());
    if (beta < floor) {
      if (!clamp_singular) {
        throw std::domain_error(
            "mixture_message_length: singular component Fisher");
      }
      beta = floor * 1.0000001;
    }
    const KentParams q = beta == p.beta()
                             ? p
                             : KentParams(p.angles(), p.kappa(), beta);
    const FisherInfo fi = fisher_info(q, n_j);
    const double part = 2.5 * std::log(lattice_constant(5)) -
                        log_prior(q, PriorSpec::ThreeD_KappaBeta) +
                        0.5 * fi.log_det;
    first_nats += std::max(part, 0.0);  // coding probability <= 1
  }

  const double second_nats =
      mixture_nll(data, m) + 0.5 * m.free_params();

  MessageLength out;
  out.first_bits = first_nats / kLn2;
  out.second_bits = second_nats / kLn2;
  out.total_bits = out.first_bits + out.second_bits;
  return out;
}

double criterion_score(std::span<const Vec3> data, const MixtureModel& m,
                       const Responsibilities& resp, CriterionKind kind) {
  switch (kind) {
    case CriterionKind::MML:
      return mixture_message_length(data, m, resp, true).total_bits;
    case CriterionKind::AIC:
      return m.free_params() + mixture_nll(data, m);
    case CriterionKind::BIC:
      return 0.5 * m.free_params() * std::log(double(data.size())) +
             mixture_nll(data, m);
  }
  throw std::logic_error("criterion_score: unknown criterion");
}

// ---------------------------------------------------------------------------
// EM loop

namespace {

double em_score(std::span<const Vec3> data, const MixtureModel& m,
                const Responsibilities& resp, MixtureObjective objective) {
  if (objective == MixtureObjective::MML) {
    return mixture_message_length(data, m, resp, true).total_bits;
  }
  return mixture_nll(data, m);
}

// Removes the most starved component and renormalizes.
MixtureModel drop_component(const MixtureModel& m, int j) {
  MixtureModel out;
  out.family = m.family;
  for (int i = 0; i < m.k(); ++i) {
    if (i == j) continue;
    out.weights.push_back(m.weights[i]);
    out.components.push_back(m.components[i]);
  }
  double s = 0;
  for (double w : out.weights) s += w;
  for (double& w : out.weights) w /= s;
  return out;
}

}  // namespace

EmResult em_fit(std::span<const Vec3> data, const MixtureModel& init,
                MixtureObjective objective) {
  if (init.k() < 1) throw std::invalid_argument("em_fit: empty mixture");

  EmResult best;
  best.model = init;
  best.resp = e_step(data, best.model);
  best.score = em_score(data, best.model, best.resp, objective);
  best.score_trace.push_back(best.score);

  MixtureModel model = best.model;
  Responsibilities resp = best.resp;

  const int max_iter = 200;
  for (int iter = 0; iter < max_iter; ++iter) {
    // starvation check
    if (model.k() > 1) {
      int starved = -1;
      double worst = kSupportThreshold;
      for (int j = 0; j < model.k(); ++j) {
        if (resp.n_eff[j] < worst) {
          worst = resp.n_eff[j];
          starved = j;
        }
      }
      if (starved >= 0) {
        model = drop_component(model, starved);
        resp = e_step(data, model);
        best.model = model;
        best.resp = resp;
        best.score = em_score(data, model, resp, objective);
        best.score_trace.push_back(best.score);
        continue;
      }
    }

    model = m_step(data, resp, model, objective);
    resp = e_step(data, model);
    const double score = em_score(data, model, resp, objective);
    best.iterations = iter + 1;

    const double tol = objective == MixtureObjective::MML
                           ? 1e-4
                           : 1e-6 * std::max(1.0, std::abs(best.score));
    if (score < best.score) {
      const bool settled = best.score - score < tol;
      best.model = model;
      best.resp = resp;
      best.score = score;
      best.score_trace.push_back(score);
      if (settled) {
        best.converged = true;
        break;
      }
    } else {
      // no improvement: keep the best state seen and stop
      best.converged = true;
      break;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Perturbations

namespace {

// Moment frame of weighted data: mean-aligned dispersion eigen-structure.
struct MomentFrame {
  Vec3 mean_dir;
  Vec3 major_dir;
  double l1 = 0;  // larger eigenvalue of the lower 2x2 dispersion block
  bool ok = false;
};

MomentFrame moment_frame(const SufficientStats& ws) {
  MomentFrame f;
  const double r1 = ws.resultant_mean.norm();
  if (r1 < 1e-10) return f;
  const Vec3 mdir = ws.resultant_mean / r1;
  const double alpha = std::acos(std::clamp(mdir.x(), -1.0, 1.0));
  const double eta = std::hypot(mdir.y(), mdir.z()) < 1e-14
                         ? 0.0
                         : wrap_two_pi(std::atan2(mdir.z(), mdir.y()));
  const Mat3 g = axes_from_angles(0.0, alpha, eta).as_matrix();
  const Mat3 b = g.transpose() * ws.dispersion * g;
  double psi = 0.5 * std::atan2(2.0 * b(1, 2), b(1, 1) - b(2, 2));
  const double r2 = std::hypot(b(1, 1) - b(2, 2), 2.0 * b(1, 2));
  f.l1 = 0.5 * (b(1, 1) + b(2, 2) + r2);
  const AxisTriple ax = axes_from_angles(psi, alpha, eta);
  f.mean_dir = ax.gamma1;
  f.major_dir = ax.gamma2;
  f.ok = true;
  return f;
}

}  // namespace

SplitSeeds split_seed_means(const SufficientStats& weighted) {
  SplitSeeds seeds;
  const MomentFrame frame = moment_frame(weighted);
  if (!frame.ok) return seeds;
  seeds.l1 = std::clamp(frame.l1, 1e-9, 1.0 - 1e-12);
  seeds.colatitude = std::acos(std::sqrt(1.0 - seeds.l1));
  const double ct = std::cos(seeds.colatitude);
  const double st = std::sin(seeds.colatitude);
  seeds.mean1 = ct * frame.mean_dir + st * frame.major_dir;
  seeds.mean2 = ct * frame.mean_dir - st * frame.major_dir;
  seeds.ok = true;
  return seeds;
}

EmResult split_component(std::span<const Vec3> data, const MixtureModel& m,
                         const Responsibilities& resp, int j,
                         MixtureObjective objective) {
  EmResult failed;
  failed.score = kInf;
  if (resp.n_eff[j] < 2.0 * kSupportThreshold) return failed;

  const Eigen::VectorXd col = resp.r.col(j);
  SufficientStats ws = weighted_stats(
      data, std::span<const double>(col.data(), size_t(col.size())));
  const SplitSeeds seeds = split_seed_means(ws);
  if (!seeds.ok) return failed;
  const MomentFrame frame = moment_frame(ws);
  const Vec3& mean1 = seeds.mean1;
  const Vec3& mean2 = seeds.mean2;

  const KentParams& parent = m.components[j];
  const double child_ecc =
      m.family == Family::Vmf ? 0.0 : std::min(parent.eccentricity(), 0.8);
  KentParams child[2] = {
      kent_from_axes_hint(mean1, frame.major_dir, parent.kappa(), child_ecc),
      kent_from_axes_hint(mean2, frame.major_dir, parent.kappa(), child_ecc)};
  double child_w[2] = {0.5, 0.5};

  // local EM on the parent's weighted data, children only
  const int n = static_cast<int>(data.size());
  Eigen::MatrixXd sub(n, 2);
  for (int it = 0; it < 30; ++it) {
    for (int i = 0; i < n; ++i) {
      double l0 = std::log(child_w[0]) + kent_log_density(data[i], child[0]);
      double l1c = std::log(child_w[1]) + kent_log_density(data[i], child[1]);
      const double mx = std::max(l0, l1c);
      const double z0 = std::exp(l0 - mx), z1 = std::exp(l1c - mx);
      sub(i, 0) = col[i] * z0 / (z0 + z1);
      sub(i, 1) = col[i] * z1 / (z0 + z1);
    }
    const double n0 = sub.col(0).sum(), n1 = sub.col(1).sum();
    if (n0 < kSupportThreshold || n1 < kSupportThreshold) break;
    KentParams next0 = fit_component(data, sub.col(0), child[0], m.family,
                                     objective);
    KentParams next1 = fit_component(data, sub.col(1), child[1], m.family,
                                     objective);
    const double move = (next0.gamma1() - child[0].gamma1()).norm() +
                        (next1.gamma1() - child[1].gamma1()).norm();
    child[0] = next0;
    child[1] = next1;
    child_w[0] = n0 / (n0 + n1);
    child_w[1] = n1 / (n0 + n1);
    if (move < 1e-6) break;
  }

  // integrate children with the untouched components and refit globally
  MixtureModel candidate;
  candidate.family = m.family;
  for (int i = 0; i < m.k(); ++i) {
    if (i == j) continue;
    candidate.weights.push_back(m.weights[i]);
    candidate.components.push_back(m.components[i]);
  }
  candidate.weights.push_back(m.weights[j] * child_w[0]);
  candidate.components.push_back(child[0]);
  candidate.weights.push_back(m.weights[j] * child_w[1]);
  candidate.components.push_back(child[1]);

  return em_fit(data, candidate, objective);
}

EmResult delete_component(std::span<const Vec3> data, const MixtureModel& m,
                          const Responsibilities& resp, int j,
                          MixtureObjective objective) {
  if (m.k() < 2) {
    EmResult failed;
    failed.score = kInf;
    return failed;
  }
  const int n = static_cast<int>(data.size());
  const int k = m.k();

  // proportional redistribution of the deleted column
  Eigen::MatrixXd r2(n, k - 1);
  for (int i = 0; i < n; ++i) {
    const double keep = 1.0 - resp.r(i, j);
    int c = 0;
    for (int jj = 0; jj < k; ++jj) {
      if (jj == j) continue;
      r2(i, c++) = keep > 1e-12 ? resp.r(i, jj) / keep : 1.0 / (k - 1);
    }
  }
  Responsibilities resp2;
  resp2.r = r2;
  resp2.n_eff = r2.colwise().sum();

  MixtureModel reduced = drop_component(m, j);
  MixtureModel refit = m_step(data, resp2, reduced, objective);
  return em_fit(data, refit, objective);
}

EmResult merge_components(std::span<const Vec3> data, const MixtureModel& m,
                          const Responsibilities& resp, int j,
                          MixtureObjective objective) {
  if (m.k() < 2) {
    EmResult failed;
    failed.score = kInf;
    return failed;
  }
  // closest partner by KL divergence
  int partner = -1;
  double best_kl = kInf;
  for (int i = 0; i < m.k(); ++i) {
    if (i == j) continue;
    const double kl = kent_kl(m.components[j], m.components[i]);
    if (kl < best_kl) {
      best_kl = kl;
      partner = i;
    }
  }

  const Eigen::VectorXd merged_col = resp.r.col(j) + resp.r.col(partner);
  KentParams merged = fit_component(data, merged_col, m.components[j],
                                    m.family, objective);

  MixtureModel candidate;
  candidate.family = m.family;
  for (int i = 0; i < m.k(); ++i) {
    if (i == j || i == partner) continue;
    candidate.weights.push_back(m.weights[i]);
    candidate.components.push_back(m.components[i]);
  }
  candidate.weights.push_back(m.weights[j] + m.weights[partner]);
  candidate.components.push_back(merged);

  return em_fit(data, candidate, objective);
}

// ---------------------------------------------------------------------------
// Search

EmResult fit_single(std::span<const Vec3> data, Family family,
                    MixtureObjective objective) {
  const SufficientStats stats = sufficient_stats(data);
  MixtureModel init;
  init.family = family;
  init.weights = {1.0};
  if (family == Family::Vmf) {
    const double rbar = stats.resultant_mean.norm();
    const double kappa = objective == MixtureObjective::ML
                             ? vmf_ml_kappa(rbar)
                             : vmf_mml_kappa(rbar, stats.n);
    init.components.push_back(
        vmf_as_kent(VmfParams(UnitVector3(stats.resultant_mean), kappa)));
  } else {
    KentParams start = moment_estimate(stats).params;
    EstimationResult est = objective == MixtureObjective::ML
                               ? ml_estimate(stats, start)
                               : mml_estimate(stats, start);
    init.components.push_back(est.params);
  }
  return em_fit(data, init, objective);
}

SearchResult search_optimal(std::span<const Vec3> data, Family family,
                            CriterionKind criterion) {
  if (data.size() < 10) {
    throw std::invalid_argument("search_optimal: need at least 10 points");
  }
  const MixtureObjective objective = criterion == CriterionKind::MML
                                         ? MixtureObjective::MML
                                         : MixtureObjective::ML;

  SearchResult out;
  EmResult cur = fit_single(data, family, objective);
  out.score = criterion_score(data, cur.model, cur.resp, criterion);
  out.trace.push_back({0, "init", -1, 1, out.score, true});

  const double accept_margin = 1e-6;
  for (int iteration = 1; iteration <= 64; ++iteration) {
    const int k = cur.model.k();
    EmResult best_cand;
    best_cand.score = kInf;
    double best_cand_score = kInf;
    std::string best_op;
    int best_comp = -1;

    auto consider = [&](EmResult&& cand, const std::string& op, int comp) {
      if (cand.score == kInf) return;
      const double score =
          criterion_score(data, cand.model, cand.resp, criterion);
      out.trace.push_back(
          {iteration, op, comp, cand.model.k(), score, false});
      const bool better =
          score < best_cand_score - accept_margin ||
          (std::abs(score - best_cand_score) <= accept_margin &&
           cand.model.k() < best_cand.model.k());
      if (best_cand_score == kInf || better) {
        best_cand = std::move(cand);
        best_cand_score = score;
        best_op = op;
        best_comp = comp;
      }
    };

    for (int j = 0; j < k; ++j) {
      consider(split_component(data, cur.model, cur.resp, j, objective),
               "split", j);
    }
    if (k >= 2) {
      for (int j = 0; j < k; ++j) {
        consider(delete_component(data, cur.model, cur.resp, j, objective),
                 "delete", j);
      }
      for (int j = 0; j < k; ++j) {
        consider(merge_components(data, cur.model, cur.resp, j, objective),
                 "merge", j);
      }
    }

    if (best_cand_score < out.score - accept_margin) {
      cur = std::move(best_cand);
      out.score = best_cand_score;
      out.trace.push_back(
          {iteration, best_op, best_comp, cur.model.k(), out.score, true});
    } else {
      break;
    }
  }

  out.model = cur.model;
  out.resp = cur.resp;
  return out;
}

EmResult fit_fixed_k(std::span<const Vec3> data, Family family, int k,
                     MixtureObjective objective, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("fit_fixed_k: k must be >= 1");
  if (k == 1) return fit_single(data, family, objective);
  const int n = static_cast<int>(data.size());
  Rng rng(seed);

  // k-means++-style seeding with angular distances
  std::vector<Vec3> centers;
  centers.push_back(data[rng.below(n)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0;
    for (int i = 0; i < n; ++i) {
      double best = kInf;
      for (const auto& c : centers) best = std::min(best, 1.0 - c.dot(data[i]));
      d2[i] = best * best;
      total += d2[i];
    }
    double u = rng.uniform() * total;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      u -= d2[i];
      if (u <= 0) {
        pick = i;
        break;
      }
    }
    centers.push_back(data[pick]);
  }

  // hard assignment, then per-cluster component estimates
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, k);
  for (int i = 0; i < n; ++i) {
    int bestj = 0;
    double best = -kInf;
    for (int j = 0; j < k; ++j) {
      const double dot = centers[size_t(j)].dot(data[i]);
      if (dot > best) {
        best = dot;
        bestj = j;
      }
    }
    r(i, bestj) = 1.0;
  }

  MixtureModel init;
  init.family = family;
  for (int j = 0; j < k; ++j) {
    const Eigen::VectorXd col = r.col(j);
    const double nj = col.sum();
    KentParams fallback = kent_from_axes_hint(centers[size_t(j)],
                                              Vec3(0, 0, 1), 10.0, 0.0);
    KentParams comp = fallback;
    if (nj >= kSupportThreshold) {
      try {
        comp = fit_component(data, col, fallback, family, objective);
      } catch (const std::exception&) {
        comp = fallback;
      }
    }
    init.components.push_back(comp);
    init.weights.push_back(std::max(nj, 1.0));
  }
  double s = 0;
  for (double w : init.weights) s += w;
  for (double& w : init.weights) w /= s;

  return em_fit(data, init, objective);
}

// ---------------------------------------------------------------------------
// Serialization

std::string mixture_to_json(const MixtureModel& m) {
  nlohmann::json j;
  j["format"] = "fb5-mixture";
  j["version"] = 1;
  j["family"] = m.family == Family::Kent ? "kent" : "vmf";
  j["k"] = m.k();
  j["weights"] = m.weights;
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : m.components) {
    comps.push_back({{"psi", c.angles().psi},
                     {"alpha", c.angles().alpha},
                     {"eta", c.angles().eta},
                     {"kappa", c.kappa()},
                     {"beta", c.beta()}});
  }
  j["components"] = comps;
  return j.dump(2);
}

MixtureModel mixture_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "fb5-mixture") {
    throw std::invalid_argument("mixture_from_json: not a mixture document");
  }
  if (j.value("version", 0) != 1) {
    throw std::invalid_argument("mixture_from_json: unsupported version");
  }
  MixtureModel m;
  m.family = j.at("family").get<std::string>() == "vmf" ? Family::Vmf
                                                        : Family::Kent;
  m.weights = j.at("weights").get<std::vector<double>>();
  for (const auto& c : j.at("components")) {
    m.components.emplace_back(
        OrientationAngles(c.at("psi").get<double>(),
                          c.at("alpha").get<double>(),
                          c.at("eta").get<double>()),
        c.at("kappa").get<double>(), c.at("beta").get<double>());
  }
  if (m.weights.size() != m.components.size() || m.weights.empty()) {
    throw std::invalid_argument("mixture_from_json: inconsistent sizes");
  }
  double s = 0;
  for (double w : m.weights) s += w;
  if (std::abs(s - 1.0) > 1e-6) {
    throw std::invalid_argument("mixture_from_json: weights must sum to 1");
  }
  for (double& w : m.weights) w /= s;
  return m;
}

}  // namespace fb5
