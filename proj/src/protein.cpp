#include "fb5/protein.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fb5 {

namespace {

constexpr double kMinStep = 2.0;
constexpr double kMaxStep = 6.0;

bool plausible_step(double d) { return d > kMinStep && d < kMaxStep; }

SphericalAngles direction_in_frame(const Vec3& dir, const Vec3& e1,
                                   const Vec3& e2, const Vec3& e3) {
  const Vec3 u(dir.dot(e1), dir.dot(e2), dir.dot(e3));
  return cartesian_to_spherical(UnitVector3(u));
}

// Completes e1 to a right-handed frame using `hint` for the e2 direction;
// falls back to an arbitrary tangent basis when hint is (anti)parallel.
void frame_from(const Vec3& e1, const Vec3& hint, Vec3& e2, Vec3& e3) {
  e2 = hint - hint.dot(e1) * e1;
  if (e2.norm() < 1e-9) {
    tangent_basis(e1, e2, e3);
    return;
  }
  e2.normalize();
  e3 = e1.cross(e2);
}

}  // namespace

std::vector<Vec3> DirectionalDataset::unit_vectors() const {
  std::vector<Vec3> out;
  out.reserve(pairs.size());
  for (const auto& a : pairs) out.push_back(spherical_to_cartesian(a).vec());
  return out;
}

DirectionalDataset directions_from_trace(const CaTrace& trace) {
  if (trace.coords.size() < 2) {
    throw std::invalid_argument("directions_from_trace: need >= 2 residues");
  }
  DirectionalDataset ds;

  // bond vectors, skipping pairs across chain breaks
  const std::size_t n_bonds = trace.coords.size() - 1;
  std::vector<Vec3> bond(n_bonds);
  std::vector<bool> valid(n_bonds);
  for (std::size_t i = 0; i < n_bonds; ++i) {
    bond[i] = trace.coords[i + 1] - trace.coords[i];
    const double len = bond[i].norm();
    const bool flagged =
        i < trace.break_after.size() && trace.break_after[i];
    valid[i] = !flagged && len > 1e-9;
    if (valid[i] && len <= 1e-9) valid[i] = false;
  }

  int history = 0;  // count of consecutive valid preceding bonds
  Vec3 prev1 = Vec3::UnitX(), prev2 = Vec3::UnitX();
  for (std::size_t i = 0; i < n_bonds; ++i) {
    if (!valid[i]) {
      history = 0;
      continue;
    }
    const double r = bond[i].norm();
    const Vec3 dir = bond[i] / r;

    Vec3 e1, e2, e3;
    if (history >= 2) {
      e1 = prev1.normalized();
      frame_from(e1, prev2.normalized(), e2, e3);
    } else if (history == 1) {
      // only one preceding bond: complete with a global reference axis
      e1 = prev1.normalized();
      const Vec3 ref =
          std::abs(e1.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
      frame_from(e1, ref, e2, e3);
    } else {
      e1 = Vec3::UnitX();
      e2 = Vec3::UnitY();
      e3 = Vec3::UnitZ();
    }

    ds.pairs.push_back(direction_in_frame(dir, e1, e2, e3));
    ds.radii.push_back(r);

    prev2 = prev1;
    prev1 = bond[i];
    ++history;
  }
  return ds;
}

NullModelBits null_model_bits_uniform(const DirectionalDataset& ds,
                                      double epsilon) {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
  NullModelBits out;
  const double log2_4pi = std::log2(4.0 * kPi);
  for (double r : ds.radii) {
    out.total_bits += log2_4pi - 2.0 * std::log2(epsilon / r);
  }
  if (!ds.radii.empty()) {
    out.bits_per_residue = out.total_bits / static_cast<double>(ds.size());
  }
  return out;
}

NullModelBits null_model_bits(const DirectionalDataset& ds,
                              const MixtureModel& model, double epsilon) {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
  NullModelBits out;
  constexpr double kLn2Local = 0.6931471805599453;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Vec3 x = spherical_to_cartesian(ds.pairs[i]).vec();
    out.total_bits += -mixture_log_density(x, model) / kLn2Local -
                      2.0 * std::log2(epsilon / ds.radii[i]);
  }
  if (!ds.radii.empty()) {
    out.bits_per_residue = out.total_bits / static_cast<double>(ds.size());
  }
  return out;
}

namespace {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void flag_breaks(CaTrace& t) {
  if (t.coords.size() < 2) return;
  t.break_after.assign(t.coords.size() - 1, false);
  for (std::size_t i = 0; i + 1 < t.coords.size(); ++i) {
    const double d = (t.coords[i + 1] - t.coords[i]).norm();
    if (!plausible_step(d)) t.break_after[i] = true;
  }
}

bool looks_like_pdb(const std::string& line) {
  return line.rfind("ATOM", 0) == 0 || line.rfind("HETATM", 0) == 0 ||
         line.rfind("HEADER", 0) == 0 || line.rfind("REMARK", 0) == 0 ||
         line.rfind("MODEL", 0) == 0;
}

std::vector<CaTrace> parse_pdb(std::istream& in, std::string& warnings) {
  std::vector<CaTrace> traces;
  std::string line;
  int lineno = 0;
  std::string current_chain;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("ATOM", 0) != 0) continue;
    if (line.size() < 54) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": ATOM record shorter than 54 columns");
    }
    const std::string name = line.substr(12, 4);
    if (name != " CA " && name != "CA  ") continue;
    const char altloc = line[16];
    if (altloc != ' ' && altloc != 'A') {
      warnings += "line " + std::to_string(lineno) +
                  ": skipped altloc '" + std::string(1, altloc) + "' CA\n";
      continue;
    }
    const std::string chain(1, line[21]);
    double x, y, z;
    try {
      x = std::stod(line.substr(30, 8));
      y = std::stod(line.substr(38, 8));
      z = std::stod(line.substr(46, 8));
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": malformed coordinates");
    }
    if (traces.empty() || chain != current_chain) {
      traces.push_back(CaTrace{chain, {}, {}});
      current_chain = chain;
    }
    traces.back().coords.emplace_back(x, y, z);
  }
  return traces;
}

std::vector<CaTrace> parse_csv(std::istream& in) {
  std::vector<CaTrace> traces;
  std::string line;
  int lineno = 0;
  std::string current_chain = "\x01";  // sentinel: no chain seen yet
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    // header row
    if (lineno == 1 && line.find_first_not_of(
                           "xyzchain, \t\r") == std::string::npos) {
      continue;
    }
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 3) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected x,y,z[,chain]");
    }
    double x, y, z;
    try {
      x = std::stod(fields[0]);
      y = std::stod(fields[1]);
      z = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": malformed coordinates");
    }
    const std::string chain = fields.size() > 3 ? fields[3] : "";
    if (traces.empty() || chain != current_chain) {
      traces.push_back(CaTrace{chain.empty() ? "A" : chain, {}, {}});
      current_chain = chain;
    }
    traces.back().coords.emplace_back(x, y, z);
  }
  return traces;
}

}  // namespace

std::vector<CaTrace> parse_ca_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_ca_file: cannot open " + path);

  // sniff the format from the first non-empty line
  std::string first;
  std::streampos start = in.tellg();
  while (std::getline(in, first) && first.empty()) {
  }
  in.clear();
  in.seekg(start);

  std::string warnings;
  std::vector<CaTrace> traces =
      looks_like_pdb(first) ? parse_pdb(in, warnings) : parse_csv(in);
  if (!warnings.empty()) std::fputs(warnings.c_str(), stderr);

  std::erase_if(traces, [](const CaTrace& t) { return t.coords.size() < 2; });
  if (traces.empty()) {
    throw std::runtime_error("parse_ca_file: no usable C-alpha trace in " +
                             path);
  }
  for (auto& t : traces) flag_breaks(t);
  return traces;
}

}  // namespace fb5
