#pragma once

#include <string>
#include <vector>

#include "fb5/geometry.hpp"
#include "fb5/mixture.hpp"

namespace fb5 {

/// Ordered C-alpha coordinates of one chain, in Angstroms. Breaks are
/// flagged where the successive distance leaves (2.0, 6.0) A.
struct CaTrace {
  std::string chain_id;
  std::vector<Vec3> coords;
  std::vector<bool> break_after;  // break between residue i and i+1

  std::size_t size() const { return coords.size(); }
};

/// Successive C-alpha directions as (theta, phi) pairs in the intrinsic
/// local frame, with the step lengths r in Angstroms.
struct DirectionalDataset {
  std::vector<SphericalAngles> pairs;
  std::vector<double> radii;

  std::size_t size() const { return pairs.size(); }
  std::vector<Vec3> unit_vectors() const;
};

/// Local frame: bond i is expressed in the frame built by Gram-Schmidt from
/// the two preceding bond vectors (e1 along bond i-1, e2 from bond i-2).
/// Bootstrap: the very first bond uses the global frame; the second uses its
/// predecessor with a global reference axis completing the frame. From the
/// third bond on, the frame is intrinsic and the angles are invariant to
/// rigid motions of the trace.
DirectionalDataset directions_from_trace(const CaTrace& trace);

struct NullModelBits {
  double total_bits = 0;
  double bits_per_residue = 0;
};

/// Uniform null: sum of log2(4 pi) - 2 log2(eps/r_i).
NullModelBits null_model_bits_uniform(const DirectionalDataset& ds,
                                      double epsilon);

/// Mixture null: sum of -log2 f(x_i) - 2 log2(eps/r_i).
NullModelBits null_model_bits(const DirectionalDataset& ds,
                              const MixtureModel& model, double epsilon);

/// Reads C-alpha traces from either a PDB subset (ATOM records with atom
/// name CA, altloc blank or 'A') or a CSV of x,y,z[,chain] rows. Chain
/// breaks are inferred from the successive distances.
std::vector<CaTrace> parse_ca_file(const std::string& path);

/// Default coordinate precision, in Angstroms.
inline constexpr double kDefaultEpsilon = 0.001;

}  // namespace fb5
