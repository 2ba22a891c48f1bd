#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "amalgam/errors.hpp"
#include "json.hpp"

namespace amalgam::flags {

// Every tolerance used by the numerical flag layer, in one place.
struct NumericPolicy {
  double orthonormality = 1e-10;    // max deviation of basis^T basis from I
  double gap_floor = 1e-8;          // spectral gaps at or below this count as absent
  double membership_margin = 1e-3;  // default margin demanded of set membership
};
const NumericPolicy& policy();

// A partial flag shape in R^d: the list of subspace dimensions.
struct FlagType {
  std::vector<int> dims;  // strictly increasing, each in (0, d)
  int d = 0;

  bool operator==(const FlagType& o) const { return d == o.d && dims == o.dims; }
  bool operator!=(const FlagType& o) const { return !(*this == o); }

  // Throws ConfigInvalid unless dims is strictly increasing inside (0, d).
  void validate() const;

  // True when dims is closed under i -> d - i.
  bool iota_invariant() const;

  static FlagType full(int d);
};

// dims -> sorted {d - i}; applying it twice is the identity.
FlagType opposition_involution(const FlagType& t);

// A flag stored as a full orthonormal basis: stage i is the span of the first
// type.dims[i] columns.
struct Flag {
  Eigen::MatrixXd basis;
  FlagType type;

  int d() const { return type.d; }
};

// Validates orthonormality against policy().orthonormality.
Flag make_flag(const Eigen::MatrixXd& orthonormal_basis, FlagType type);

// Orthonormalizes the columns of m (Householder QR with a positive-diagonal
// sign convention, so prefix column spans are preserved). Throws Singular if
// m is rank-deficient.
Flag flag_from_columns(const Eigen::MatrixXd& m, FlagType type);

Flag standard_flag(FlagType type);           // identity basis
Flag reversed_standard_flag(FlagType type);  // columns e_d, ..., e_1

// Deterministic pseudo-random flag (entries from a raw mt19937 stream, so the
// result is identical across platforms and standard libraries).
Flag seeded_flag(unsigned seed, FlagType type);

// Smallest singular value over all stage concatenations [F_k | G_{d-k}];
// positive exactly when every stage of f is transverse to the complementary
// stage of g. Requires g's type to be the opposition involution of f's.
double antipodality_margin(const Flag& f, const Flag& g);

// Max over stages of the sine of the largest principal angle; a metric with
// values in [0, 1]. Computed after a canonical argument ordering so that
// flag_distance(f, g) and flag_distance(g, f) are bitwise equal.
double flag_distance(const Flag& f, const Flag& g);

// Applies an invertible matrix to every stage and re-orthonormalizes.
Flag act(const Eigen::MatrixXd& g, const Flag& f);

// Limit flag of the iteration g^n: leading left singular vectors of a
// moderate power seed the ordering, orthogonal iteration refines. Requires
// the eigenvalue-modulus gap at every dim of t to exceed policy().gap_floor;
// throws NoGap otherwise. Accuracy degrades as gaps approach the floor.
Flag attracting_flag(const Eigen::MatrixXd& g, const FlagType& t);

// Log singular-value gaps of g at the dims of t.
struct GapVector {
  std::vector<double> gaps;  // entry j is log(sigma_k / sigma_{k+1}) for k = dims[j]
};
GapVector singular_gaps(const Eigen::MatrixXd& g, const FlagType& t);
double min_gap(const GapVector& v);

// A compact set of flags modeled as a finite net inflated by radius r:
// the union of closed d-balls of radius r about the net points.
struct FlagSet {
  std::vector<Flag> net;
  double r = 0.0;
  std::string label;
};

// r - min_p d(f, p): positive means f lies in the modeled set with that margin.
double set_membership_margin(const FlagSet& s, const Flag& f);

// Minimum antipodality margin over all cross pairs of two flag nets, with an
// optional argmin (indices into xs and ys). Throws EmptyNet when either net
// is empty. Types must pair stage-wise (ys of the opposition-involuted type).
double min_antipodality_margin(const std::vector<Flag>& xs, const std::vector<Flag>& ys,
                               int* xi = nullptr, int* yi = nullptr);

// Max pairwise net distance plus 2r.
double set_diameter(const FlagSet& s);

nlohmann::ordered_json flag_to_json(const Flag& f);
Flag flag_from_json(const nlohmann::json& j);
nlohmann::ordered_json flag_set_to_json(const FlagSet& s);
FlagSet flag_set_from_json(const nlohmann::json& j);

// One row per net flag: label, net index, then the basis entries row-major.
std::string flag_set_to_csv(const FlagSet& s);

}  // namespace amalgam::flags
