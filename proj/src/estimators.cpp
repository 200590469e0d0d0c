#include "fb5/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fb5 {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kEccLoMml = 2e-5;   // = 2 * beta_floor / kappa
constexpr double kEccLoFree = 1e-12;

double clamp01(double z) { return std::clamp(z, 1e-12, 1.0 - 1e-12); }

double logit(double z) { return std::log(z / (1.0 - z)); }
double sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double t = std::exp(u);
  return t / (1.0 + t);
}

// NLL of the angular part for raw axes; log c supplied by the caller.
double nll_from_parts(const SufficientStats& s, const AxisTriple& ax,
                      double kappa, double beta, double log_c) {
  const double term1 = kappa * ax.gamma1.dot(s.resultant_mean);
  const double term2 = beta * ax.gamma2.dot(s.dispersion * ax.gamma2);
  const double term3 = beta * ax.gamma3.dot(s.dispersion * ax.gamma3);
  return s.n * (log_c - term1 - term2 + term3);
}

struct LambdaTriple {
  double l1, l2, l3;
};

LambdaTriple lambdas_from(const NormTerms& t) {
  const double ckk_c = std::exp(t.log_c_kk - t.log_c);
  const double cb_c = std::isinf(t.log_c_b) ? 0.0 : std::exp(t.log_c_b - t.log_c);
  return {ckk_c, 0.5 * (1.0 - ckk_c + cb_c), 0.5 * (1.0 - ckk_c - cb_c)};
}

Mat3 fisher_angles_closed(double psi, double alpha, double kappa, double beta,
                          const NormTerms& t, const LambdaTriple& lam) {
  const double ck_c = std::exp(t.log_c_k - t.log_c);
  const double cb_c = std::isinf(t.log_c_b) ? 0.0 : std::exp(t.log_c_b - t.log_c);
  const double sp = std::sin(psi), cp = std::cos(psi);
  const double sa = std::sin(alpha), ca = std::cos(alpha);

  const double f_pp = 4.0 * beta * cb_c;
  const double f_ep = ca * f_pp;
  const double f_aa =
      kappa * ck_c +
      2.0 * beta * ((lam.l1 - lam.l3) * sp * sp - (lam.l1 - lam.l2) * cp * cp);
  const double f_ea = beta * (1.0 - 3.0 * lam.l1) * std::sin(2.0 * psi) * sa;
  const double f_ee =
      sa * sa * kappa * ck_c +
      2.0 * beta *
          (lam.l2 * (cp * cp * ca * ca + sp * sp) + (lam.l2 - lam.l3) * ca * ca -
           lam.l3 * (sp * sp * ca * ca + cp * cp) +
           lam.l1 * sa * sa * std::cos(2.0 * psi));

  Mat3 f;
  f << f_pp, 0.0, f_ep,
       0.0, f_aa, f_ea,
       f_ep, f_ea, f_ee;
  return f;
}

Mat2 fisher_scale_closed(const NormTerms& t) {
  const double ck_c = std::exp(t.log_c_k - t.log_c);
  const double ckk_c = std::exp(t.log_c_kk - t.log_c);
  const double cb_c = std::isinf(t.log_c_b) ? 0.0 : std::exp(t.log_c_b - t.log_c);
  const double ckb_c =
      std::isinf(t.log_c_kb) ? 0.0 : std::exp(t.log_c_kb - t.log_c);
  const double cbb_c = std::exp(t.log_c_bb - t.log_c);
  Mat2 f;
  f << ckk_c - ck_c * ck_c, ckb_c - ck_c * cb_c,
       ckb_c - ck_c * cb_c, cbb_c - cb_c * cb_c;
  return f;
}

// log(n^5 |F_A| |F_S|) from raw pieces; throws on a non-positive block.
double fisher_log_det(double n, const Mat3& fa, const Mat2& fs) {
  const double det_a = fa.determinant();
  const double det_s = fs.determinant();
  if (!(det_a > 0) || !(det_s > 0)) {
    throw std::domain_error("fisher_info: singular Fisher information");
  }
  return 5.0 * std::log(n) + std::log(det_a) + std::log(det_s);
}

enum class ScaleSearch { LogitEcc, LogBeta, MmlEcc };

struct Transform {
  ScaleSearch mode = ScaleSearch::LogitEcc;
  double ecc_lo = kEccLoFree;

  std::vector<double> pack(const KentParams& p) const {
    const double e = clamp_ecc(p.eccentricity());
    std::vector<double> u(5);
    u[0] = p.angles().psi;
    u[1] = p.angles().alpha;
    u[2] = p.angles().eta;
    u[3] = std::log(p.kappa());
    if (mode == ScaleSearch::LogBeta) {
      u[4] = std::log(std::max(p.beta(), 0.5 * p.kappa() * ecc_lo));
    } else {
      u[4] = logit(clamp01((e - ecc_lo) / (kMaxEccentricity - ecc_lo)));
    }
    return u;
  }

  // psi/alpha/eta raw (axes formulas are periodic), kappa and beta mapped
  // back into the admissible wedge.
  void unpack(const std::vector<double>& u, double& psi, double& alpha,
              double& eta, double& kappa, double& beta) const {
    psi = u[0];
    alpha = u[1];
    eta = u[2];
    kappa = std::exp(std::clamp(u[3], -23.0, 20.0));
    if (mode == ScaleSearch::LogBeta) {
      beta = std::exp(std::clamp(u[4], -700.0, 700.0));
      beta = std::min(beta, 0.5 * kappa * kMaxEccentricity);
      beta = std::max(beta, 0.5 * kappa * ecc_lo);
    } else {
      const double e = ecc_lo + (kMaxEccentricity - ecc_lo) * sigmoid(u[4]);
      beta = 0.5 * kappa * e;
    }
  }

  double clamp_ecc(double e) const {
    return std::clamp(e, ecc_lo, kMaxEccentricity);
  }
};

KentParams canonical_params(double psi, double alpha, double eta, double kappa,
                            double beta) {
  const AxisTriple ax = axes_from_angles(psi, alpha, eta);
  const auto rec = angles_from_axes(ax.as_matrix());
  beta = std::min(beta, 0.5 * kappa * kMaxEccentricity);
  return KentParams(rec.angles, kappa, beta);
}

using Objective =
    std::function<double(const AxisTriple&, double psi, double alpha,
                         double kappa, double beta, const NormTerms&)>;

EstimationResult run_optimizer(const SufficientStats& stats,
                               const std::optional<KentParams>& init,
                               const Transform& tf, const Objective& obj,
                               const NelderMeadOptions& opts = {}) {
  const KentParams start = init ? *init : moment_estimate(stats).params;

  auto f = [&](const std::vector<double>& u) {
    // out-of-domain probes (extreme kappa makes the Fisher arithmetic
    // collapse) count as infinitely bad rather than aborting the search
    try {
      double psi, alpha, eta, kappa, beta;
      tf.unpack(u, psi, alpha, eta, kappa, beta);
      const AxisTriple ax = axes_from_angles(psi, alpha, eta);
      const NormTerms t = norm_terms(kappa, beta);
      return obj(ax, psi, alpha, kappa, beta, t);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::max();
    }
  };

  const auto r =
      nelder_mead(f, tf.pack(start), {0.1, 0.1, 0.1, 0.25, 0.5}, opts);

  double psi, alpha, eta, kappa, beta;
  tf.unpack(r.x, psi, alpha, eta, kappa, beta);
  EstimationResult out{canonical_params(psi, alpha, eta, kappa, beta), r.fmin,
                       r.converged, false, r.evals};
  return out;
}

}  // namespace

SufficientStats sufficient_stats(std::span<const Vec3> data) {
  if (data.empty()) throw std::invalid_argument("sufficient_stats: empty data");
  SufficientStats s;
  s.n = static_cast<double>(data.size());
  for (const auto& x : data) {
    s.resultant_mean += x;
    s.dispersion += x * x.transpose();
  }
  s.resultant_mean /= s.n;
  s.dispersion /= s.n;
  return s;
}

SufficientStats weighted_stats(std::span<const Vec3> data,
                               std::span<const double> weights) {
  if (data.size() != weights.size()) {
    throw std::invalid_argument("weighted_stats: size mismatch");
  }
  SufficientStats s;
  for (size_t i = 0; i < data.size(); ++i) {
    s.n += weights[i];
    s.resultant_mean += weights[i] * data[i];
    s.dispersion += weights[i] * data[i] * data[i].transpose();
  }
  if (!(s.n > 0)) throw std::invalid_argument("weighted_stats: zero total weight");
  s.resultant_mean /= s.n;
  s.dispersion /= s.n;
  return s;
}

ScaleApprox moment_scale_approx(double r1, double r2) {
  const double d1 = 2.0 - 2.0 * r1 - r2;
  const double d2 = 2.0 - 2.0 * r1 + r2;
  if (!(d1 > 0)) {
    throw std::domain_error("moment_scale_approx: data fully concentrated");
  }
  const double a = 1.0 / d1, b = 1.0 / d2;
  double kappa = a + b;
  double beta = 0.5 * (a - b);
  beta = std::clamp(beta, 0.0, 0.5 * kappa * kMaxEccentricity);
  return {kappa, beta};
}

double negative_log_likelihood(const SufficientStats& s, const KentParams& p) {
  return nll_from_parts(s, p.axes(), p.kappa(), p.beta(), p.log_c());
}

double negative_log_likelihood(std::span<const Vec3> data,
                               const KentParams& p) {
  return negative_log_likelihood(sufficient_stats(data), p);
}

namespace {

// Solve c_k/c = r1, c_b/c = r2 by damped Newton with a finite-difference
// Jacobian. Returns false when it fails to converge.
bool moment_root_find(double r1, double r2, double& kappa, double& beta) {
  auto residual = [&](double k, double b, double& g1, double& g2) {
    // keep finite-difference probes inside the admissible wedge
    b = std::min(b, 0.5 * k * kMaxEccentricity);
    const NormTerms t = norm_terms(k, b);
    g1 = std::exp(t.log_c_k - t.log_c) - r1;
    g2 = (std::isinf(t.log_c_b) ? 0.0 : std::exp(t.log_c_b - t.log_c)) - r2;
  };
  auto inside = [](double k, double b) {
    return k > 1e-8 && k < 1e9 && b >= 0 && b <= 0.5 * k * kMaxEccentricity;
  };

  double g1, g2;
  residual(kappa, beta, g1, g2);
  for (int iter = 0; iter < 100; ++iter) {
    double norm = std::max(std::abs(g1), std::abs(g2));
    if (norm < 1e-9) return true;

    const double hk = 1e-6 * std::max(kappa, 1.0);
    const double hb = std::max(1e-6 * beta, 1e-9 * kappa);
    double a1, a2, b1, b2, c1, c2, d1, d2;
    residual(std::min(kappa + hk, kappa * 2), beta, a1, a2);
    residual(std::max(kappa - hk, kappa * 0.5), beta, b1, b2);
    const double dk = std::min(kappa + hk, kappa * 2) - std::max(kappa - hk, kappa * 0.5);
    double bp = std::min(beta + hb, 0.5 * kappa * kMaxEccentricity);
    double bm = std::max(beta - hb, 0.0);
    residual(kappa, bp, c1, c2);
    residual(kappa, bm, d1, d2);
    const double db = bp - bm;
    if (!(db > 0)) return false;

    const double j11 = (a1 - b1) / dk, j12 = (c1 - d1) / db;
    const double j21 = (a2 - b2) / dk, j22 = (c2 - d2) / db;
    const double det = j11 * j22 - j12 * j21;
    if (std::abs(det) < 1e-14) return false;
    const double sk = (-g1 * j22 + g2 * j12) / det;
    const double sb = (-g2 * j11 + g1 * j21) / det;

    double t = 1.0;
    bool stepped = false;
    for (int half = 0; half < 40; ++half, t *= 0.5) {
      const double kn = kappa + t * sk;
      const double bn = std::max(beta + t * sb, 0.0);
      if (!inside(kn, bn)) continue;
      double n1, n2;
      residual(kn, bn, n1, n2);
      if (std::max(std::abs(n1), std::abs(n2)) < norm) {
        kappa = kn;
        beta = bn;
        g1 = n1;
        g2 = n2;
        stepped = true;
        break;
      }
    }
    if (!stepped) return false;
  }
  return std::max(std::abs(g1), std::abs(g2)) < 1e-9;
}

}  // namespace

EstimationResult moment_estimate(const SufficientStats& stats) {
  const double r1 = stats.resultant_mean.norm();
  if (r1 < 1e-10) {
    throw std::domain_error("moment_estimate: mean direction undefined");
  }
  const Vec3 mdir = stats.resultant_mean / r1;
  const double alpha = std::acos(std::clamp(mdir.x(), -1.0, 1.0));
  const double eta =
      std::hypot(mdir.y(), mdir.z()) < 1e-14
          ? 0.0
          : wrap_two_pi(std::atan2(mdir.z(), mdir.y()));

  // dispersion in the frame with the sample mean aligned to X1
  const Mat3 g = axes_from_angles(0.0, alpha, eta).as_matrix();
  const Mat3 b = g.transpose() * stats.dispersion * g;
  double psi = 0.5 * std::atan2(2.0 * b(1, 2), b(1, 1) - b(2, 2));
  if (psi < 0) psi += kPi;
  const double r2 = std::hypot(b(1, 1) - b(2, 2), 2.0 * b(1, 2));

  const ScaleApprox approx = moment_scale_approx(std::min(r1, 1.0 - 1e-12), r2);
  double kappa = approx.kappa, beta = approx.beta;
  const bool ok = moment_root_find(r1, std::max(r2, 0.0), kappa, beta);
  if (!ok) {
    kappa = approx.kappa;
    beta = approx.beta;
  }

  EstimationResult out{canonical_params(psi, alpha, eta, kappa, beta), 0.0,
                       true, !ok, 0};
  out.objective = negative_log_likelihood(stats, out.params);
  return out;
}

EstimationResult moment_estimate(std::span<const Vec3> data) {
  return moment_estimate(sufficient_stats(data));
}

EstimationResult ml_estimate(const SufficientStats& stats,
                             const std::optional<KentParams>& init,
                             const NelderMeadOptions& opts) {
  Transform tf;
  return run_optimizer(stats, init, tf,
                       [&](const AxisTriple& ax, double, double, double kappa,
                           double beta, const NormTerms& t) {
                         return nll_from_parts(stats, ax, kappa, beta, t.log_c);
                       },
                       opts);
}

EstimationResult ml_estimate_beta_coords(const SufficientStats& stats,
                                         const std::optional<KentParams>& init) {
  Transform tf;
  tf.mode = ScaleSearch::LogBeta;
  return run_optimizer(stats, init, tf,
                       [&](const AxisTriple& ax, double, double, double kappa,
                           double beta, const NormTerms& t) {
                         return nll_from_parts(stats, ax, kappa, beta, t.log_c);
                       });
}

double log_prior(const KentParams& p, PriorSpec prior) {
  const double kappa = p.kappa();
  const double sin_alpha = std::max(std::sin(p.angles().alpha), 1e-300);
  switch (prior) {
    case PriorSpec::ThreeD_KappaBeta:
    case PriorSpec::ThreeD_KappaEcc:
      // h = 2 kappa sin(alpha) / (pi^3 (1+kappa^2)^2)
      return std::log(2.0) + std::log(kappa) + std::log(sin_alpha) -
             3.0 * std::log(kPi) - 2.0 * std::log1p(kappa * kappa);
    case PriorSpec::TwoD_KappaBeta:
    case PriorSpec::TwoD_Rosenblatt:
      // h = sin(alpha) / (2 pi^2 (1+kappa^2)^{3/2})
      return std::log(sin_alpha) - std::log(2.0) - 2.0 * std::log(kPi) -
             1.5 * std::log1p(kappa * kappa);
  }
  throw std::logic_error("log_prior: unknown prior");
}

namespace {

double log_prior_parts(PriorSpec prior, double sin_alpha, double kappa) {
  sin_alpha = std::max(std::abs(sin_alpha), 1e-300);
  switch (prior) {
    case PriorSpec::ThreeD_KappaBeta:
    case PriorSpec::ThreeD_KappaEcc:
      return std::log(2.0) + std::log(kappa) + std::log(sin_alpha) -
             3.0 * std::log(kPi) - 2.0 * std::log1p(kappa * kappa);
    case PriorSpec::TwoD_KappaBeta:
    case PriorSpec::TwoD_Rosenblatt:
      return std::log(sin_alpha) - std::log(2.0) - 2.0 * std::log(kPi) -
             1.5 * std::log1p(kappa * kappa);
  }
  throw std::logic_error("log_prior_parts: unknown prior");
}

}  // namespace

EstimationResult map_estimate(const SufficientStats& stats, PriorSpec prior,
                              const std::optional<KentParams>& init) {
  if (prior == PriorSpec::TwoD_Rosenblatt) {
    // z-space search over [0,1]^5 with a uniform prior; the objective is
    // the bare negative log-likelihood expressed through the inverse
    // Rosenblatt maps.
    const KentParams start = init ? *init : moment_estimate(stats).params;
    const double k0 = start.kappa();
    std::vector<double> z0 = {
        logit(clamp01(start.angles().psi / kPi)),
        logit(clamp01(0.5 * (1.0 - std::cos(start.angles().alpha)))),
        logit(clamp01(start.angles().eta / kTwoPi)),
        logit(clamp01(1.0 - 1.0 / std::sqrt(1.0 + k0 * k0))),
        logit(clamp01(start.eccentricity()))};

    auto kent_from_z = [](const std::vector<double>& u, double& psi,
                          double& alpha, double& eta, double& kappa,
                          double& beta) {
      const double z1 = clamp01(sigmoid(u[0]));
      const double z2 = clamp01(sigmoid(u[1]));
      const double z3 = clamp01(sigmoid(u[2]));
      const double z4 = clamp01(sigmoid(u[3]));
      const double z5 = std::clamp(sigmoid(u[4]), 1e-12, kMaxEccentricity);
      psi = kPi * z1;
      alpha = std::acos(1.0 - 2.0 * z2);
      eta = kTwoPi * z3;
      kappa = std::clamp(std::tan(std::acos(1.0 - z4)), 1e-10, 5e8);
      beta = 0.5 * kappa * z5;
    };

    auto f = [&](const std::vector<double>& u) {
      try {
        double psi, alpha, eta, kappa, beta;
        kent_from_z(u, psi, alpha, eta, kappa, beta);
        const AxisTriple ax = axes_from_angles(psi, alpha, eta);
        const NormTerms t = norm_terms(kappa, beta);
        return nll_from_parts(stats, ax, kappa, beta, t.log_c);
      } catch (const std::exception&) {
        return std::numeric_limits<double>::max();
      }
    };
    NelderMeadOptions opts;
    const auto r = nelder_mead(f, z0, {0.3, 0.3, 0.3, 0.3, 0.3}, opts);
    double psi, alpha, eta, kappa, beta;
    kent_from_z(r.x, psi, alpha, eta, kappa, beta);
    return {canonical_params(psi, alpha, eta, kappa, beta), r.fmin,
            r.converged, false, r.evals};
  }

  Transform tf;
  return run_optimizer(
      stats, init, tf,
      [&, prior](const AxisTriple& ax, double, double alpha, double kappa,
                 double beta, const NormTerms& t) {
        double obj = nll_from_parts(stats, ax, kappa, beta, t.log_c) -
                     log_prior_parts(prior, std::sin(alpha), kappa);
        if (prior == PriorSpec::ThreeD_KappaEcc) {
          // posterior density over (kappa, e): h' = h * kappa/2
          obj -= std::log(kappa / 2.0);
        }
        return obj;
      });
}

AxisPartials axis_partials(double psi, double alpha, double eta) {
  const double cp = std::cos(psi), sp = std::sin(psi);
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double ce = std::cos(eta), se = std::sin(eta);

  const AxisTriple ax = axes_from_angles(psi, alpha, eta);
  const Vec3 g1 = ax.gamma1, g2 = ax.gamma2, g3 = ax.gamma3;

  AxisPartials p{};
  constexpr int kPsi = 0, kAlpha = 1, kEta = 2;

  const Vec3 dg1_da(-sa, ca * ce, ca * se);
  const Vec3 dg1_de(0.0, -sa * se, sa * ce);
  p.first[0][kPsi] = Vec3::Zero();
  p.first[0][kAlpha] = dg1_da;
  p.first[0][kEta] = dg1_de;

  const Vec3 dg2_de(0.0, -cp * ca * se - sp * ce, cp * ca * ce - sp * se);
  p.first[1][kPsi] = g3;
  p.first[1][kAlpha] = -cp * g1;
  p.first[1][kEta] = dg2_de;

  const Vec3 dg3_de(0.0, sp * ca * se - cp * ce, -sp * ca * ce - cp * se);
  p.first[2][kPsi] = -g2;
  p.first[2][kAlpha] = sp * g1;
  p.first[2][kEta] = dg3_de;

  auto set2 = [&](int axis, int i, int j, const Vec3& v) {
    p.second[axis][i][j] = v;
    p.second[axis][j][i] = v;
  };

  // gamma1
  set2(0, kPsi, kPsi, Vec3::Zero());
  set2(0, kPsi, kAlpha, Vec3::Zero());
  set2(0, kPsi, kEta, Vec3::Zero());
  set2(0, kAlpha, kAlpha, -g1);
  set2(0, kAlpha, kEta, Vec3(0.0, -ca * se, ca * ce));
  set2(0, kEta, kEta, Vec3(0.0, -sa * ce, -sa * se));

  // gamma2
  set2(1, kPsi, kPsi, -g2);
  set2(1, kPsi, kAlpha, sp * g1);
  set2(1, kPsi, kEta, dg3_de);
  set2(1, kAlpha, kAlpha, -cp * dg1_da);
  set2(1, kAlpha, kEta, -cp * dg1_de);
  set2(1, kEta, kEta,
       Vec3(0.0, -cp * ca * ce + sp * se, -cp * ca * se - sp * ce));

  // gamma3
  set2(2, kPsi, kPsi, -g3);
  set2(2, kPsi, kAlpha, cp * g1);
  set2(2, kPsi, kEta, -dg2_de);
  set2(2, kAlpha, kAlpha, sp * dg1_da);
  set2(2, kAlpha, kEta, sp * dg1_de);
  set2(2, kEta, kEta,
       Vec3(0.0, sp * ca * ce + cp * se, sp * ca * se - cp * ce));

  return p;
}

AxisPartials axis_partials(const OrientationAngles& a) {
  return axis_partials(a.psi, a.alpha, a.eta);
}

double beta_floor(double kappa) { return 1e-5 * kappa; }

FisherInfo fisher_info(const KentParams& p, double n, const NormTerms& t) {
  if (p.beta() < beta_floor(p.kappa())) {
    throw std::domain_error("fisher_info: beta below the singular floor");
  }
  const LambdaTriple lam = lambdas_from(t);
  FisherInfo f;
  f.f_angles = fisher_angles_closed(p.angles().psi, p.angles().alpha,
                                    p.kappa(), p.beta(), t, lam);
  f.f_scale = fisher_scale_closed(t);
  f.log_det = fisher_log_det(n, f.f_angles, f.f_scale);
  return f;
}

FisherInfo fisher_info(const KentParams& p, double n) {
  return fisher_info(p, n, norm_terms(p.kappa(), p.beta()));
}

double lattice_constant(int d) {
  // optimal quantizing lattice constants (Conway & Sloane)
  static const double q[5] = {1.0 / 12.0, 0.0801875, 0.0785433, 0.0766032,
                              0.075625};
  if (d < 1 || d > 5) throw std::domain_error("lattice_constant: d outside 1..5");
  return q[d - 1];
}

namespace {

struct MsgLenParts {
  double first_nats;
  double second_nats;
};

MsgLenParts message_length_parts(const SufficientStats& stats,
                                 const AxisTriple& ax, double psi, double alpha,
                                 double kappa, double beta, const NormTerms& t,
                                 PriorSpec prior, bool ecc_expression) {
  const LambdaTriple lam = lambdas_from(t);
  const Mat3 fa = fisher_angles_closed(psi, alpha, kappa, beta, t, lam);
  const Mat2 fs = fisher_scale_closed(t);
  double log_det = fisher_log_det(stats.n, fa, fs);
  double log_h = log_prior_parts(prior, std::sin(alpha), kappa);
  if (ecc_expression) {
    // (kappa, e) coordinates: prior picks up the Jacobian kappa/2 and the
    // Fisher determinant the square of it; the sum is unchanged.
    log_h += std::log(kappa / 2.0);
    log_det += 2.0 * std::log(kappa / 2.0);
  }
  const double d = 5.0;
  MsgLenParts parts;
  parts.first_nats =
      0.5 * d * std::log(lattice_constant(5)) - log_h + 0.5 * log_det;
  // The coding probability h(Theta) * q^{-d/2} / sqrt(|F|) cannot exceed 1:
  // when the Fisher volume outgrows the prior mass (weak data, small kappa)
  // the statement cost floors at zero instead of diverging to -infinity.
  parts.first_nats = std::max(parts.first_nats, 0.0);
  parts.second_nats =
      nll_from_parts(stats, ax, kappa, beta, t.log_c) + 0.5 * d;
  return parts;
}

}  // namespace

MessageLength message_length(const SufficientStats& stats, const KentParams& p,
                             PriorSpec prior) {
  if (p.beta() < beta_floor(p.kappa())) {
    throw std::domain_error("message_length: beta below the singular floor");
  }
  const NormTerms t = norm_terms(p.kappa(), p.beta());
  const auto parts =
      message_length_parts(stats, p.axes(), p.angles().psi, p.angles().alpha,
                           p.kappa(), p.beta(), t, prior, false);
  MessageLength m;
  m.first_bits = parts.first_nats / kLn2;
  m.second_bits = parts.second_nats / kLn2;
  m.total_bits = m.first_bits + m.second_bits;
  return m;
}

namespace {

EstimationResult mml_impl(const SufficientStats& stats,
                          const std::optional<KentParams>& init,
                          bool ecc_expression,
                          const NelderMeadOptions& opts = {}) {
  Transform tf;
  tf.ecc_lo = kEccLoMml;
  auto result = run_optimizer(
      stats, init, tf,
      [&, ecc_expression](const AxisTriple& ax, double psi, double alpha,
                          double kappa, double beta, const NormTerms& t) {
        const auto parts = message_length_parts(stats, ax, psi, alpha, kappa,
                                                beta, t, PriorSpec::ThreeD_KappaBeta,
                                                ecc_expression);
        return parts.first_nats + parts.second_nats;
      },
      opts);
  result.objective /= kLn2;  // report in bits
  return result;
}

}  // namespace

EstimationResult mml_estimate(const SufficientStats& stats,
                              const std::optional<KentParams>& init,
                              const NelderMeadOptions& opts) {
  return mml_impl(stats, init, false, opts);
}

EstimationResult mml_estimate_ecc_coords(const SufficientStats& stats,
                                         const std::optional<KentParams>& init) {
  return mml_impl(stats, init, true);
}

}  // namespace fb5
