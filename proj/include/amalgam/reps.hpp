#pragma once

#include <string>
#include <utility>
#include <vector>

#include "amalgam/flags.hpp"
#include "amalgam/matrix.hpp"
#include "amalgam/words.hpp"

namespace amalgam::reps {

// A representation given by named generator matrices. Stays exact whenever
// all generators carry exact rational entries.
struct MatrixRep {
  std::vector<std::string> names;
  std::vector<GroupMatrix> gens;
  int dim = 0;

  bool exact() const;
  int index_of(const std::string& name) const;            // -1 when absent
  const GroupMatrix& at(const std::string& name) const;   // throws UnboundGenerator
  // Checks square shapes and |det| = 1 (exact reps: det = +-1 exactly).
  void validate(double det_tol = 1e-9) const;
};

// Letters are +-(i+1) for generator index i, evaluated left to right.
GroupMatrix evaluate(const MatrixRep& rep, const words::FreeWord& w);
// Name/exponent pairs, e.g. {{"a1", 1}, {"b1", -2}}.
GroupMatrix evaluate(const MatrixRep& rep, const std::vector<std::pair<std::string, int>>& named);

// Action of a 2x2 matrix on degree-(d-1) homogeneous polynomials in x, y with
// the monomial basis x^{d-1}, x^{d-2} y, ..., y^{d-1}; multiplicative in m and
// exact when m is exact.
GroupMatrix sym_power_lift(const GroupMatrix& m, int d);
MatrixRep lift_rep(const MatrixRep& rep, int d);

// Genus-2 surface group in SL(2,R) built from the regular-octagon hyperbolic
// trigonometry: generators a1, b1, a2, b2 with a2, b2 the conjugates of
// a1, b1 by the half-turn about the axis of [a1, b1], which makes the surface
// relator [a1,b1][a2,b2] evaluate to the identity up to roundoff.
MatrixRep fuchsian_genus2();
// The separating curve [a1, b1] as a word over (a1, b1, a2, b2).
words::FreeWord genus2_separating_word();
// Genus-2 surface relator as a word over (a1, b1, a2, b2).
words::FreeWord genus2_relator_word();

// Eigen data of a proximal element: attracting flag of type t, repelling flag
// of the involuted type, eigenvalue moduli in descending order, and the
// antipodality margin between the two flags.
struct LoxodromicData {
  GroupMatrix element;
  flags::Flag attracting;
  flags::Flag repelling;
  std::vector<double> moduli;
  double antipodality = 0.0;
};
LoxodromicData axis_flags(const GroupMatrix& g, const flags::FlagType& t);

// Identity component of the centralizer of a matrix with distinct real
// eigenvalues, parametrized by R^{d-1}: s maps to P diag(e^{s_1}, ...,
// e^{s_{d-1}}, e^{-sum}) P^{-1}, which has determinant one and commutes with
// the base element.
struct CentralizerChart {
  GroupMatrix eta;
  Eigen::MatrixXd basis;      // eigenbasis, columns by descending eigenvalue
  Eigen::MatrixXd basis_inv;
  int dim = 0;

  GroupMatrix at(const std::vector<double>& s) const;  // s.size() == dim - 1
};
CentralizerChart centralizer_chart(const GroupMatrix& eta);

// How the generator set splits for a bending deformation.
struct BendSplit {
  bool hnn = false;
  std::vector<std::string> fixed;   // amalgam: Gamma_A generators; HNN: vertex-group generators
  std::vector<std::string> moved;   // amalgam: Gamma_B generators; unused for HNN
  std::string stable;               // HNN stable-letter name
  words::FreeWord edge_word;        // the edge element eta over the rep's letters
};

// Amalgam: conjugates the moved generators by t; HNN: multiplies the stable
// letter by t on the right. Requires t to commute with the evaluated edge
// element within tol; throws NotInCentralizer otherwise.
MatrixRep bend(const MatrixRep& rep, const BendSplit& split, const GroupMatrix& t,
               double tol = 1e-9);

// Attracting flags of all reduced words of length <= depth, deduplicated at
// flag distance 1e-6, in (length, lex) source order. Words without the
// required gaps are skipped and counted.
struct LimitSetSample {
  flags::FlagType type;
  std::vector<flags::Flag> net;
  std::vector<words::FreeWord> sources;  // one source word per net entry
  int skipped = 0;
};
LimitSetSample limit_set_sample(const MatrixRep& rep, int depth, const flags::FlagType& t);

// Smallest pairwise antipodality margin over the sample net. Requires an
// iota-invariant type; throws EmptyNet when fewer than two flags are present.
double min_pairwise_antipodality(const LimitSetSample& s);

// Boundary-circle coordinate of a fixed point of a hyperbolic 2x2 matrix:
// the eigenvector direction v1 : v2 sent through the Cayley transform
// (x - i)/(x + i) to an angle in (-pi, pi]. Throws OrderUnavailable for
// non-hyperbolic input.
double boundary_angle(const GroupMatrix& m, bool attracting);

// Splits the sample along the axis endpoints of the cut words, read through a
// 2x2 shadow representation that fixes a circular order. Each cut word
// contributes its attracting and repelling boundary angles; the circle is cut
// there into arcs (labeled in angular order), and every sample point joins
// the arc its shadow angle lands in, with points at a cut joining both
// neighbors. The arcs come back as flag nets with inflation radius zero.
std::vector<flags::FlagSet> arc_split(const LimitSetSample& sample, const MatrixRep& shadow,
                                      const std::vector<words::FreeWord>& cuts,
                                      const std::vector<std::string>& labels);

}  // namespace amalgam::reps
