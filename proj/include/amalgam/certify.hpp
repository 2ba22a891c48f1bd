#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "amalgam/flags.hpp"
#include "amalgam/reps.hpp"
#include "amalgam/words.hpp"
#include "json.hpp"

namespace amalgam::certify {

// One quantified condition checked at finite depth. `margin` is the worst
// value observed; the condition passes when margin > the scene margin,
// fails when margin < -tolerance, and is inconclusive in between. Vacuous
// conditions (nothing to quantify over) pass with no margin.
struct ConditionReport {
  std::string name;
  std::string status;  // "pass" | "fail" | "inconclusive" | "vacuous"
  double margin = 0.0;
  long checked = 0;    // number of (element, flag) instances examined
  bool vacuous = false;
  std::string witness_word;            // offending group element, if any
  Eigen::MatrixXd witness_basis;       // offending image flag basis (0x0 if none)
  std::string detail;
};

// Verdict plus per-condition margins for one certification run. A "certified"
// verdict (without depth qualifier) is only issued in the documented special
// cases where the finite checks exhaust the quantifiers.
struct CertReport {
  std::string kind;
  std::string verdict;  // "certified" | "certified-at-depth" | "falsified" | "inconclusive"
  int depth = 0;
  double margin_required = 0.0;
  double tolerance = 0.0;
  std::vector<ConditionReport> conditions;
  std::vector<std::string> assumptions;
  std::vector<std::string> notes;
  nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();

  bool certified() const { return verdict == "certified" || verdict == "certified-at-depth"; }
  // Smallest margin over non-vacuous conditions; +infinity when all vacuous.
  double min_margin() const;
  const ConditionReport* find(const std::string& name) const;
};

// Serializes with a stable field order, "schema": 1, and floating-point
// values rounded to 12 significant digits so identical runs emit identical
// bytes.
nlohmann::ordered_json report_to_json(const CertReport& r);

// Rounds to 12 significant digits (non-finite values pass through).
double round_sig(double v);
// Recursively rounds every float in a JSON tree with round_sig; non-finite
// floats become null so the tree always serializes.
void round_floats(nlohmann::ordered_json& j);

// Ping-pong data for an amalgamated product: two compact flag sets modeled as
// finite nets inflated by a radius, the edge subgroup's limit flags, and the
// per-set excision radii that were carved out around those limit flags when
// the nets were built (the two sets meet only at the edge limit flags in the
// ideal picture, which a ball model cannot represent; each set keeps a hole
// scaled to its own resolution).
struct PairScene {
  words::AmalgamPresentation presentation;
  reps::MatrixRep rep;  // combined named generators, for reporting
  flags::FlagSet A, B;
  std::vector<flags::Flag> h_limits;
  double excision_a = 0.0, excision_b = 0.0;
  flags::FlagType type;
  int depth = 4;          // factor-word length bound L
  double margin = 1e-3;   // m: demanded of every condition margin
  double tol = 1e-9;      // falsification threshold
  int sample_depth = 4;   // limit-set sampling depth for antipodality audits
  std::uint64_t seed = 1;

  // Structural consistency (flag types, dimensions, parameter ranges).
  // Emptiness of the nets is checked by the verifier, not here, so that
  // matrix-only injectivity audits can run on scenes without sets.
  void validate() const;
};

// Ping-pong data for an HNN extension: A (both components in one net),
// B_plus, B_minus, the stable letter, and the limit flags of the two edge
// subgroups.
struct TripleScene {
  words::HnnPresentation presentation;
  reps::MatrixRep rep;
  std::string stable_name = "f";
  flags::FlagSet A, B_plus, B_minus;
  std::vector<flags::Flag> h_plus_limits, h_minus_limits;
  double excision_a = 0.0, excision_plus = 0.0, excision_minus = 0.0;
  flags::FlagType type;
  int depth = 4;
  double margin = 1e-3;
  double tol = 1e-9;
  int sample_depth = 4;
  std::uint64_t seed = 1;

  void validate() const;
};

// Checks, at factor-word length <= depth, every hypothesis of the
// amalgamated combination setup against the scene's modeled sets:
//   interiors-disjoint        A and B ball models have disjoint interiors
//   h-invariance-A/B          edge-subgroup generators map each net into its
//                             own modeled set (net balls or excised zone)
//   maps-B-into-A / A-into-B  alpha(B net) lands inside A with margin, and
//                             symmetrically, for factor elements not in H
//   interior-antipodality     every A-net/B-net pair of flags is transverse
//   limitset-antipodality-A/B A is antipodal to the sampled limit set of the
//                             other factor away from the edge limit flags
// plus a limit-containment diagnostic. Verdict rules: all margins > m gives
// certified-at-depth (upgraded to certified when H is trivial, both factors
// are cyclic, and generator-level nesting holds); any margin < -tol gives
// falsified with a witness; anything else is inconclusive.
CertReport verify_interactive_pair(const PairScene& scene);

// HNN analog: pairwise interior disjointness (and B_+ vs B_- full
// disjointness), H_+/H_- invariance of B_+/B_-, mu(B_+-/B_--net) inside A
// for mu outside H_+/H_-, f(A) in B_+, f^-1(A) in B_-, f(B_+) inside B_+,
// f^-1(B_-) inside B_-, the three pairwise antipodality conditions, and
// antipodality of B_+/B_- with the sampled limit set of M away from the
// respective edge limit flags.
CertReport verify_interactive_triple(const TripleScene& scene);

// Enumerates all nontrivial normal forms of relative length <= rl_bound with
// factor syllables of word length <= factor_len, evaluates each, and checks:
// the matrix is not the identity (and not +-identity, since +-I act equally
// on flags); when the scene's nets are nonempty, that the element maps a
// subsample of the designated net strictly inside the union of the scene's
// open sets. probe = subsample size per element (0 means the full net).
CertReport ping_pong_injectivity(const PairScene& scene, int rl_bound, int factor_len,
                                 int probe = 24);
CertReport ping_pong_injectivity(const TripleScene& scene, int rl_bound, int factor_len,
                                 int probe = 24);

// Nested-image diagnostic along an alternating sequence: delta_n is the net
// diameter of the n-th word's image of the designated set (amalgam: B for
// words ending in a factor-A syllable and vice versa; HNN: A together with
// B_{sign of last stable letter}). Nesting of consecutive images is checked
// with tolerance `tol`; a violation throws NotNested naming the step.
struct ShrinkReport {
  std::vector<double> diameters;
  std::vector<double> nesting_margins;  // step n -> worst containment margin
  bool pass = false;
  flags::Flag limit;    // minimax center of the final image net
  std::string detail;
};

ShrinkReport shrink_diagnostic(const std::vector<words::Word>& seq, const flags::FlagSet& A,
                               const flags::FlagSet& B, int dim, double tol = 1e-9);
ShrinkReport shrink_diagnostic_hnn(const std::vector<words::Word>& seq, const flags::FlagSet& A,
                                   const flags::FlagSet& B_plus, const flags::FlagSet& B_minus,
                                   int dim, double tol = 1e-9);

// Singular-value gap growth scan: for each word length n <= length_bound,
// takes the minimum over words (exhaustive below `exhaust_cap` words per
// length, else `samples_per_length` seeded samples) of the smallest
// type-gap of the evaluated matrix. PASS requires the least-squares slope of
// (n, min gap) to exceed slope_floor and every per-length minimum at n >= 3
// to exceed positivity_floor.
struct GapScanOptions {
  int samples_per_length = 64;
  int exhaust_cap = 2000;
  double slope_floor = 0.05;
  double positivity_floor = 1e-6;
  std::uint64_t seed = 1;
};

struct GapScanReport {
  std::vector<int> lengths;
  std::vector<double> min_gaps;
  std::vector<words::FreeWord> argmin_words;
  double slope = 0.0;
  double min_gap_from_three = 0.0;
  bool pass = false;
  std::string detail;
};

GapScanReport anosov_gap_scan(const reps::MatrixRep& rep, const flags::FlagType& type,
                              int length_bound, const GapScanOptions& opts = {});
nlohmann::ordered_json gap_scan_to_json(const GapScanReport& r);
std::string gap_scan_to_csv(const GapScanReport& r);

// Minimum pairwise antipodality margin of a sampled limit set; PASS iff > 0.
struct AntipodalityAudit {
  double min_margin = 0.0;
  bool pass = false;
};
AntipodalityAudit antipodality_audit(const reps::LimitSetSample& sample);

// Confirms that the forward orbit of B_plus under f (and of B_minus under
// f^-1) collapses onto the attracting (repelling) flag of f, that those
// limits match axis_flags(f) within `flag_tol`, and that they lie m-interior
// to the respective set.
CertReport hnn_cyclic_check(const GroupMatrix& f, const flags::FlagSet& B_plus,
                            const flags::FlagSet& B_minus, const flags::FlagType& type,
                            double margin = 1e-3, double flag_tol = 1e-6);

// Bending ray scan: certifies the base scene, then bisects the largest scale
// c <= c_hi along the given centralizer-chart direction for which the scene
// with factor B bent by chart.at(c * direction) still certifies. The
// returned s_max is the largest certified scale; ray_margins holds the
// verify margins at `ray_points` evenly spaced scales in (0, s_max].
struct BendScanOptions {
  double c_hi = 1.0;
  int bisect_iters = 12;
  int ray_points = 5;
};

struct BendScanReport {
  double s_max = 0.0;
  bool hi_certified = false;         // whole tested range certified
  std::vector<double> ray_scales;
  std::vector<double> ray_margins;   // min condition margin at each scale
  std::vector<bool> ray_certified;
  std::string detail;
};

BendScanReport bend_scan(const PairScene& scene, const reps::BendSplit& split,
                         const reps::CentralizerChart& chart, const Eigen::VectorXd& direction,
                         const BendScanOptions& opts = {});

// Applies the bend to both the representation and the presentation's moved
// factor, leaving the sets untouched (the same sets stay interactive for the
// bent group when the bend parameter centralizes the edge element).
PairScene bent_scene(const PairScene& scene, const reps::BendSplit& split, const GroupMatrix& t);

// Arc-pipeline scene construction for a surface-group representation whose
// limit set is the boundary circle carried into the flag manifold by the
// symmetric-square embedding: the representation must be the 3-dimensional
// symmetric lift of the 2x2 shadow on the boundary (checked on a probe grid;
// SceneInvalid otherwise). The circle is cut at the edge element's fixed
// points (read through the shadow), each arc receives net_cap evenly spaced
// osculating flags, the ball radius is twice the largest consecutive spacing
// (unless an explicit radius is given), and a neighborhood of the edge limit
// flags is excised.
struct ArcSceneConfig {
  reps::MatrixRep rep;      // 3-dimensional generators (the lifted rep)
  reps::MatrixRep shadow;   // 2x2 generators with the same names
  flags::FlagType type;     // full flags in dimension 3
  int net_cap = 600;        // net points laid per arc before excision
  double inflation = 0.0;   // ball radius r; 0 = auto
  double excision_factor = 25.0;  // per-set excision radius = factor * that set's r
  int depth = 4;
  double margin = 1e-3;
  double tol = 1e-9;
  int sample_depth = 4;
  std::uint64_t seed = 1;
};

// Amalgam scene split along an edge word (a word in rep letters lying in both
// factors). factor_a / factor_b name the generators of each factor;
// edge_in_a / edge_in_b express the edge word in each factor's own letters.
PairScene build_pair_scene(const ArcSceneConfig& cfg, const std::vector<std::string>& factor_a,
                           const std::vector<std::string>& factor_b,
                           const words::FreeWord& edge_word, const words::FreeWord& edge_in_a,
                           const words::FreeWord& edge_in_b);

// HNN scene cut along edge_word with the named stable letter: the four arcs
// determined by the fixed flags of the edge element and its stable-letter
// conjugate become B_plus (containing the stable letter's attracting flag),
// B_minus (its repelling flag), and A (the remaining two arcs).
// base_names lists the generators of the base group M within cfg.rep;
// edge_in_m expresses the edge word in those letters, and conj_in_m the
// stable-letter conjugate of the edge word in those letters.
TripleScene build_triple_scene(const ArcSceneConfig& cfg, const std::vector<std::string>& base_names,
                               const std::string& stable_name, const words::FreeWord& edge_word,
                               const words::FreeWord& edge_in_m, const words::FreeWord& conj_in_m);

}  // namespace amalgam::certify
