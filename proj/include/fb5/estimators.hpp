#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fb5/distributions.hpp"
#include "fb5/optim.hpp"

namespace fb5 {

/// Sample resultant mean and dispersion matrix. `n` is the sample count for
/// plain data and the effective membership for responsibility-weighted data.
struct SufficientStats {
  double n = 0;
  Vec3 resultant_mean = Vec3::Zero();
  Mat3 dispersion = Mat3::Zero();
};

SufficientStats sufficient_stats(std::span<const Vec3> data);
SufficientStats weighted_stats(std::span<const Vec3> data,
                               std::span<const double> weights);

/// Limiting-case approximations of (kappa, beta) from the shape and size
/// quantities r1 = |x-bar| and r2 = l1 - l2.
struct ScaleApprox {
  double kappa;
  double beta;
};
ScaleApprox moment_scale_approx(double r1, double r2);

enum class PriorSpec {
  ThreeD_KappaBeta,  // h over (psi,alpha,eta,kappa,beta), 3D vMF kappa prior
  ThreeD_KappaEcc,   // same h expressed over (psi,alpha,eta,kappa,e)
  TwoD_KappaBeta,    // 2D vMF kappa prior variant
  TwoD_Rosenblatt,   // 2D prior pushed onto the unit hypercube (uniform)
};

struct EstimationResult {
  KentParams params;
  double objective = 0;      // value of the estimator's own objective
  bool converged = true;
  bool used_fallback = false;  // moment: root-find replaced by approximation
  int evals = 0;
};

double negative_log_likelihood(const SufficientStats& stats,
                               const KentParams& p);
double negative_log_likelihood(std::span<const Vec3> data,
                               const KentParams& p);

EstimationResult moment_estimate(const SufficientStats& stats);
EstimationResult moment_estimate(std::span<const Vec3> data);

EstimationResult ml_estimate(const SufficientStats& stats,
                             const std::optional<KentParams>& init = {},
                             const NelderMeadOptions& opts = {});
/// Same optimum searched in (log kappa, log beta) coordinates; exercised by
/// the reparameterization-invariance checks.
EstimationResult ml_estimate_beta_coords(const SufficientStats& stats,
                                         const std::optional<KentParams>& init = {});

EstimationResult map_estimate(const SufficientStats& stats, PriorSpec prior,
                              const std::optional<KentParams>& init = {});

EstimationResult mml_estimate(const SufficientStats& stats,
                              const std::optional<KentParams>& init = {},
                              const NelderMeadOptions& opts = {});
/// MML objective re-expressed in (kappa, eccentricity): prior multiplied by
/// the Jacobian kappa/2 and Fisher determinant by (kappa/2)^2. Identical
/// optimum by construction; exercised by the invariance checks.
EstimationResult mml_estimate_ecc_coords(const SufficientStats& stats,
                                         const std::optional<KentParams>& init = {});

/// First and second partial derivatives of the axes with respect to
/// (psi, alpha, eta). Indexing: axis in {0,1,2} for gamma1..gamma3, angle
/// in {0,1,2} for psi, alpha, eta; second[...] is symmetric in the two
/// angle indices.
struct AxisPartials {
  Vec3 first[3][3];
  Vec3 second[3][3][3];
};
AxisPartials axis_partials(const OrientationAngles& a);
AxisPartials axis_partials(double psi, double alpha, double eta);

struct FisherInfo {
  Mat3 f_angles;   // F_A over (psi, alpha, eta)
  Mat2 f_scale;    // F_S over (kappa, beta)
  double log_det;  // log(n^5 |F_A| |F_S|)
};

/// Below this beta the psi row of F_A collapses and the determinant is
/// numerically singular; MML evaluation clamps to it.
double beta_floor(double kappa);

/// Fisher information blocks from the closed forms. Throws
/// std::domain_error when beta < beta_floor(kappa) (singular Fisher).
FisherInfo fisher_info(const KentParams& p, double n);
FisherInfo fisher_info(const KentParams& p, double n, const NormTerms& terms);

struct MessageLength {
  double first_bits = 0;
  double second_bits = 0;
  double total_bits = 0;
};

/// Two-part message length for data described by a single FB5 component.
/// The second part is the negative log-likelihood plus d/2; the constant
/// data-precision cost is added only in the protein encoding context.
MessageLength message_length(const SufficientStats& stats, const KentParams& p,
                             PriorSpec prior = PriorSpec::ThreeD_KappaBeta);

/// log h(Theta) in the (psi,alpha,eta,kappa,beta) space for the given prior
/// family (the eccentricity/Rosenblatt variants share their family's h).
double log_prior(const KentParams& p, PriorSpec prior);

/// Optimal quantizing lattice constants q_d, d = 1..5.
double lattice_constant(int d);

}  // namespace fb5
