#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fb5/estimators.hpp"

namespace fb5 {

enum class Family { Kent, Vmf };
enum class MixtureObjective { ML, MML };
enum class CriterionKind { MML, AIC, BIC };

inline constexpr double kWeightFloor = 1e-8;
inline constexpr double kSupportThreshold = 5.0;  // minimum effective members

/// Weighted mixture of FB5 components. vMF mixtures reuse the same storage
/// with beta pinned to 0; the family tag switches the estimators and the
/// parameter accounting.
struct MixtureModel {
  Family family = Family::Kent;
  std::vector<double> weights;
  std::vector<KentParams> components;

  int k() const { return static_cast<int>(components.size()); }
  /// free parameters: 6K-1 for Kent, 4K-1 for vMF
  int free_params() const;
};

struct Responsibilities {
  Eigen::MatrixXd r;       // N x K, rows sum to 1
  Eigen::VectorXd n_eff;   // column sums
};

double mixture_log_density(const Vec3& x, const MixtureModel& m);
double mixture_nll(std::span<const Vec3> data, const MixtureModel& m);

Responsibilities e_step(std::span<const Vec3> data, const MixtureModel& m);

/// Re-estimates every component from its responsibility-weighted moments
/// and updates the weights (n_j/N for ML, (n_j+1/2)/(N+K/2) for MML).
/// Components are warm-started at their current parameters so the weighted
/// objective can only improve.
MixtureModel m_step(std::span<const Vec3> data, const Responsibilities& resp,
                    const MixtureModel& current, MixtureObjective objective);

struct EmResult {
  MixtureModel model;
  Responsibilities resp;
  double score = 0;  // total message length in bits (MML) or NLL in nats (ML)
  int iterations = 0;
  bool converged = false;
  std::vector<double> score_trace;
};

/// Alternates e_step/m_step until the score settles (|dI| < 1e-4 bits for
/// MML, 1e-6 relative NLL for ML) or 200 iterations. Starved components
/// (n_j < kSupportThreshold) are removed and the loop restarted.
EmResult em_fit(std::span<const Vec3> data, const MixtureModel& init,
                MixtureObjective objective);

/// Total two-part message length of a mixture: I(K) + I(w) + sum_j I(Theta_j)
/// plus the mixture NLL and half the free-parameter count.
MessageLength mixture_message_length(std::span<const Vec3> data,
                                     const MixtureModel& m,
                                     const Responsibilities& resp,
                                     bool clamp_singular = false);

/// MML -> total bits; AIC = p + L; BIC = (p/2) log N + L, both in nats.
double criterion_score(std::span<const Vec3> data, const MixtureModel& m,
                       const Responsibilities& resp, CriterionKind kind);

/// Child means for a split: one standard deviation along the major axis of
/// the weighted dispersion, mapped back onto the sphere at colatitude
/// theta = arccos(sqrt(1 - l1)) on either side of the mean.
struct SplitSeeds {
  Vec3 mean1, mean2;
  double l1 = 0;
  double colatitude = 0;
  bool ok = false;
};
SplitSeeds split_seed_means(const SufficientStats& weighted);

/// Split component j into two children seeded one standard deviation apart
/// along the parent's major axis, locally optimized, then globally refit.
EmResult split_component(std::span<const Vec3> data, const MixtureModel& m,
                         const Responsibilities& resp, int j,
                         MixtureObjective objective);

/// Remove component j, redistributing its memberships proportionally, and
/// refit the (K-1)-mixture.
EmResult delete_component(std::span<const Vec3> data, const MixtureModel& m,
                          const Responsibilities& resp, int j,
                          MixtureObjective objective);

/// Merge component j with its closest partner (smallest KL divergence) and
/// refit the (K-1)-mixture.
EmResult merge_components(std::span<const Vec3> data, const MixtureModel& m,
                          const Responsibilities& resp, int j,
                          MixtureObjective objective);

struct SearchTraceEntry {
  int iteration = 0;
  std::string op;      // "init", "split", "delete", "merge"
  int component = -1;
  int candidate_k = 0;
  double score = 0;
  bool accepted = false;
};

struct SearchResult {
  MixtureModel model;
  Responsibilities resp;
  double score = 0;
  std::vector<SearchTraceEntry> trace;
};

/// Greedy perturbation search from K=1: every component is split, deleted
/// and merged; the best-scoring candidate is accepted while it improves the
/// criterion by more than 1e-6 (ties keep the smaller K).
SearchResult search_optimal(std::span<const Vec3> data, Family family,
                            CriterionKind criterion);

/// Deterministic fixed-K fit: k-means++-style seeding (seeded RNG) followed
/// by EM under the given objective.
EmResult fit_fixed_k(std::span<const Vec3> data, Family family, int k,
                     MixtureObjective objective, std::uint64_t seed);

/// Single-component mixture fitted to the whole data set.
EmResult fit_single(std::span<const Vec3> data, Family family,
                    MixtureObjective objective);

std::string mixture_to_json(const MixtureModel& m);
MixtureModel mixture_from_json(const std::string& text);

/// vMF estimation helpers shared by the mixture machinery.
double vmf_ml_kappa(double rbar);
double vmf_mml_kappa(double rbar, double n);
/// d/dkappa of the mean resultant A(kappa).
double vmf_mean_resultant_prime(double kappa);
/// First-part nats of a single vMF component with effective size n.
double vmf_first_part_nats(double kappa, double n);

}  // namespace fb5
