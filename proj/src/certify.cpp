#include "amalgam/certify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "amalgam/errors.hpp"

namespace amalgam::certify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using flags::Flag;
using flags::FlagSet;
using flags::FlagType;
using words::Factor;
using words::FreeWord;
using words::Membership;

// ---------------------------------------------------------------------------
// Net scanning with a first-stage prefilter.
//
// For flag types whose first stage is a line, the sine of the angle between
// the top lines is a lower bound for the flag distance, so a candidate whose
// top line is too far from the query's cannot beat the running best and the
// exact distance is skipped.
struct NetScan {
  const std::vector<Flag>* net = nullptr;
  bool fast = false;
  Eigen::MatrixXd tops;  // d x n top-line directions

  NetScan() = default;
  explicit NetScan(const std::vector<Flag>& n) : net(&n) {
    if (n.empty()) return;
    const FlagType& t = n.front().type;
    fast = !t.dims.empty() && t.dims[0] == 1;
    if (fast) {
      tops.resize(t.d, static_cast<int>(n.size()));
      for (int i = 0; i < static_cast<int>(n.size()); ++i) tops.col(i) = n[i].basis.col(0);
    }
  }

  // Smallest distance from f to the net; distances >= cutoff may be reported
  // loosely (the caller only cares when the result beats the cutoff).
  double min_dist(const Flag& f, int* arg = nullptr, double cutoff = kInf) const {
    const std::vector<Flag>& v = *net;
    if (v.empty()) throw EmptyNet("distance scan over an empty net");
    double best = cutoff;
    int bi = -1;
    if (fast) {
      Eigen::VectorXd dots = tops.transpose() * f.basis.col(0);
      int i0 = 0;
      dots.cwiseAbs().maxCoeff(&i0);
      double d0 = flags::flag_distance(f, v[i0]);
      if (d0 < best) {
        best = d0;
        bi = i0;
      }
      for (int i = 0; i < static_cast<int>(dots.size()); ++i) {
        if (i == i0) continue;
        if (best <= 1.0 && 1.0 - dots[i] * dots[i] >= best * best) continue;
        double d = flags::flag_distance(f, v[i]);
        if (d < best) {
          best = d;
          bi = i;
        }
      }
    } else {
      for (size_t i = 0; i < v.size(); ++i) {
        double d = flags::flag_distance(f, v[i]);
        if (d < best) {
          best = d;
          bi = static_cast<int>(i);
        }
      }
    }
    if (arg) *arg = bi;
    return best;
  }
};

// Membership slack granted near excised limit flags: inside the excision
// zone the model cannot tell the two sets apart, so image points that land
// there count as contained up to the model resolution.
struct SeamGrant {
  std::vector<Flag> limits;
  double radius = 0.0;  // excision + ball radius

  double margin(const Flag& f) const {
    double best = -kInf;
    for (const Flag& h : limits) best = std::max(best, radius - flags::flag_distance(f, h));
    return best;
  }
};

// ---------------------------------------------------------------------------
// Condition accumulator: tracks the worst margin, its witness, and the count.
struct CondAcc {
  ConditionReport c;
  double m = 0.0;
  double tol = 0.0;
  bool any = false;

  CondAcc(std::string name, double m_, double tol_) : m(m_), tol(tol_) {
    c.name = std::move(name);
    c.margin = kInf;
    c.witness_basis.resize(0, 0);
  }

  bool would_record(double margin) const { return !any || margin < c.margin; }

  void feed(double margin) {
    ++c.checked;
    if (would_record(margin)) c.margin = margin;
    any = true;
  }

  void feed(double margin, const std::string& word, const Eigen::MatrixXd& basis) {
    ++c.checked;
    if (would_record(margin)) {
      c.margin = margin;
      c.witness_word = word;
      c.witness_basis = basis;
    }
    any = true;
  }

  ConditionReport done() {
    if (!any) {
      c.vacuous = true;
      c.status = "vacuous";
      c.margin = 0.0;
      if (c.detail.empty()) c.detail = "nothing to quantify over";
    } else if (c.margin < -tol) {
      c.status = "fail";
    } else if (c.margin > m) {
      c.status = "pass";
    } else {
      c.status = "inconclusive";
    }
    return c;
  }
};

std::string verdict_from(const std::vector<ConditionReport>& conds, bool undecided) {
  bool fail = false, inconclusive = false;
  for (const ConditionReport& c : conds) {
    if (c.status == "fail") fail = true;
    else if (c.status == "inconclusive") inconclusive = true;
  }
  if (fail) return "falsified";
  if (inconclusive || undecided) return "inconclusive";
  return "certified-at-depth";
}

std::vector<const Flag*> probe_subsample(const std::vector<Flag>& net, int probe) {
  std::vector<const Flag*> out;
  int n = static_cast<int>(net.size());
  if (n == 0) return out;
  int take = (probe <= 0 || probe >= n) ? n : probe;
  out.reserve(take);
  for (int i = 0; i < take; ++i)
    out.push_back(&net[static_cast<int>(static_cast<long>(i) * (n - 1) / std::max(1, take - 1))]);
  return out;
}

reps::MatrixRep sub_rep(const words::FactorGroup& fac) {
  reps::MatrixRep rep;
  rep.names = fac.gen_names;
  rep.gens = fac.gens;
  rep.dim = fac.gens.empty() ? 0 : fac.gens[0].dim();
  return rep;
}

// Sampled limit flags of a factor, minus those inside the excision zones.
struct KeptLimits {
  std::vector<Flag> flags;
  std::vector<FreeWord> sources;
  int dropped = 0;
  int skipped_words = 0;
  bool sampled = false;
};

KeptLimits kept_limit_sample(const words::FactorGroup& fac, int depth, const FlagType& type,
                             const std::vector<Flag>& limits, double excision) {
  KeptLimits out;
  if (fac.gens.empty()) return out;
  reps::LimitSetSample sample;
  try {
    sample = reps::limit_set_sample(sub_rep(fac), depth, type);
  } catch (const NoGap&) {
    return out;
  } catch (const EmptyNet&) {
    return out;
  }
  out.sampled = true;
  out.skipped_words = sample.skipped;
  for (size_t i = 0; i < sample.net.size(); ++i) {
    bool clear = true;
    for (const Flag& h : limits)
      if (flags::flag_distance(sample.net[i], h) <= excision) {
        clear = false;
        break;
      }
    if (!clear) {
      ++out.dropped;
      continue;
    }
    out.flags.push_back(sample.net[i]);
    out.sources.push_back(sample.sources[i]);
  }
  return out;
}

// Cross-net antipodality condition with witnesses.
ConditionReport antipodality_condition(const std::string& name, const std::vector<Flag>& xs,
                                       const std::vector<Flag>& ys, double m, double tol) {
  CondAcc acc(name, m, tol);
  int xi = -1, yi = -1;
  double margin = flags::min_antipodality_margin(xs, ys, &xi, &yi);
  acc.feed(margin, "", xi >= 0 ? xs[xi].basis : Eigen::MatrixXd());
  acc.c.checked = static_cast<long>(xs.size()) * static_cast<long>(ys.size());
  return acc.done();
}

// Scale-free distance of a matrix from +-identity (0 exactly on scalar
// matrices): largest off-diagonal entry or diagonal spread over the largest
// entry.
double projective_identity_distance(const Eigen::MatrixXd& m) {
  double scale = m.cwiseAbs().maxCoeff();
  if (!(scale > 0)) return 0.0;
  double off = 0.0, spread = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      if (i == j) spread = std::max(spread, std::abs(m(i, i) - m(0, 0)));
      else off = std::max(off, std::abs(m(i, j)));
    }
  return std::max(off, spread) / scale;
}

std::string join_words(const std::vector<const std::string*>& parts) {
  std::string out;
  for (const std::string* p : parts) {
    if (!out.empty()) out += " ";
    out += *p;
  }
  return out;
}

// Generator-level nesting for a cyclic factor with trivial edge subgroup:
// partitions the factor's set around the generator's axis and checks that the
// generator maps its own attracting half together with the other sets into
// that half. Returns the worst margin, or -inf with a reason when the
// partition is unavailable.
struct NestingCheck {
  double margin = -kInf;
  std::string reason;
  bool available = false;
};

NestingCheck generator_nesting(const GroupMatrix& gen, const FlagType& type, const FlagSet& own,
                               const std::vector<const std::vector<Flag>*>& others) {
  NestingCheck out;
  reps::LoxodromicData ax;
  try {
    ax = reps::axis_flags(gen, type);
  } catch (const Error& e) {
    out.reason = std::string("axis unavailable: ") + e.what();
    return out;
  }
  std::vector<Flag> plus, minus;
  for (const Flag& f : own.net) {
    double da = flags::flag_distance(f, ax.attracting);
    double dr = flags::flag_distance(f, ax.repelling);
    if (da < 0.5 * dr) plus.push_back(f);
    else if (dr < 0.5 * da) minus.push_back(f);
    else {
      out.reason = "a net point sits ambiguously between the generator's fixed flags";
      return out;
    }
  }
  if (plus.empty() || minus.empty()) {
    out.reason = "the generator's fixed flags do not split the set in two";
    return out;
  }
  NetScan sp(plus), sm(minus);
  Eigen::MatrixXd g = gen.approx();
  Eigen::MatrixXd gi = gen.inverse().approx();
  double worst = kInf;
  auto run = [&](const Eigen::MatrixXd& mat, const std::vector<Flag>& half, const NetScan& half_scan) {
    for (const Flag& x : half)
      worst = std::min(worst, own.r - half_scan.min_dist(flags::act(mat, x)));
    for (const std::vector<Flag>* other : others)
      for (const Flag& x : *other)
        worst = std::min(worst, own.r - half_scan.min_dist(flags::act(mat, x)));
  };
  run(g, plus, sp);
  run(gi, minus, sm);
  out.margin = worst;
  out.available = true;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Report plumbing.

double CertReport::min_margin() const {
  double m = kInf;
  for (const ConditionReport& c : conditions)
    if (!c.vacuous) m = std::min(m, c.margin);
  return m;
}

const ConditionReport* CertReport::find(const std::string& name) const {
  for (const ConditionReport& c : conditions)
    if (c.name == name) return &c;
  return nullptr;
}

double round_sig(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

void round_floats(nlohmann::ordered_json& j) {
  if (j.is_object() || j.is_array()) {
    for (auto& v : j) round_floats(v);
  } else if (j.is_number_float()) {
    double d = j.get<double>();
    if (std::isfinite(d)) j = round_sig(d);
    else j = nullptr;
  }
}

nlohmann::ordered_json report_to_json(const CertReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["kind"] = r.kind;
  j["verdict"] = r.verdict;
  j["depth"] = r.depth;
  j["margin_required"] = r.margin_required;
  j["tolerance"] = r.tolerance;
  double mm = r.min_margin();
  if (std::isfinite(mm)) j["min_margin"] = mm;
  else j["min_margin"] = nullptr;
  nlohmann::ordered_json conds = nlohmann::ordered_json::array();
  for (const ConditionReport& c : r.conditions) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["status"] = c.status;
    cj["margin"] = c.margin;
    cj["checked"] = c.checked;
    if (c.vacuous) cj["vacuous"] = true;
    if (!c.witness_word.empty()) cj["witness_word"] = c.witness_word;
    if (c.status == "fail" && c.witness_basis.size() > 0) {
      nlohmann::ordered_json basis = nlohmann::ordered_json::array();
      for (int i = 0; i < c.witness_basis.rows(); ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (int k = 0; k < c.witness_basis.cols(); ++k) row.push_back(c.witness_basis(i, k));
        basis.push_back(row);
      }
      cj["witness_basis"] = basis;
    }
    if (!c.detail.empty()) cj["detail"] = c.detail;
    conds.push_back(cj);
  }
  j["conditions"] = conds;
  j["assumptions"] = r.assumptions;
  j["notes"] = r.notes;
  j["diagnostics"] = r.diagnostics;
  round_floats(j);
  return j;
}

// ---------------------------------------------------------------------------
// Scene validation.

namespace {
void validate_common(const FlagType& type, const reps::MatrixRep& rep, int depth, double margin,
                     double tol, int sample_depth) {
  type.validate();
  if (!rep.gens.empty() && rep.gens[0].dim() != type.d)
    throw SceneInvalid("representation dimension does not match the flag type");
  if (depth < 1) throw SceneInvalid("depth must be at least 1");
  if (!(margin > 0)) throw SceneInvalid("margin must be positive");
  if (!(tol > 0)) throw SceneInvalid("tolerance must be positive");
  if (sample_depth < 1) throw SceneInvalid("sample depth must be at least 1");
}

void validate_set(const FlagSet& s, const FlagType& type, const char* what) {
  if (s.r < 0) throw SceneInvalid(std::string(what) + " has a negative radius");
  for (const Flag& f : s.net)
    if (!(f.type == type)) throw SceneInvalid(std::string(what) + " holds a mismatched flag type");
}

void validate_limits(const std::vector<Flag>& limits, const FlagType& type, const char* what) {
  for (const Flag& f : limits)
    if (!(f.type == type)) throw SceneInvalid(std::string(what) + " has a mismatched flag type");
}
}  // namespace

void PairScene::validate() const {
  validate_common(type, rep, depth, margin, tol, sample_depth);
  if (excision_a < 0 || excision_b < 0)
    throw SceneInvalid("excision radii must be nonnegative");
  validate_set(A, type, "set A");
  validate_set(B, type, "set B");
  validate_limits(h_limits, type, "edge limit list");
}

void TripleScene::validate() const {
  validate_common(type, rep, depth, margin, tol, sample_depth);
  if (excision_a < 0 || excision_plus < 0 || excision_minus < 0)
    throw SceneInvalid("excision radii must be nonnegative");
  validate_set(A, type, "set A");
  validate_set(B_plus, type, "set B+");
  validate_set(B_minus, type, "set B-");
  validate_limits(h_plus_limits, type, "H+ limit list");
  validate_limits(h_minus_limits, type, "H- limit list");
  if (stable_name.empty()) throw SceneInvalid("stable letter name must be set");
}

// ---------------------------------------------------------------------------
// Interactive pair verification.

CertReport verify_interactive_pair(const PairScene& scene) {
  scene.validate();
  if (scene.A.net.empty() || scene.B.net.empty())
    throw EmptyNet("interactive-pair verification needs nonempty nets");
  const words::AmalgamPresentation& p = scene.presentation;
  p.validate();

  CertReport out;
  out.kind = "interactive-pair";
  out.depth = scene.depth;
  out.margin_required = scene.margin;
  out.tolerance = scene.tol;

  NetScan scanA(scene.A.net), scanB(scene.B.net);
  // Membership in a set is granted inside that set's excised zone, whose width
  // is the set's own hole size plus its ball radius.
  SeamGrant seamA{scene.h_limits, scene.excision_a + scene.A.r};
  SeamGrant seamB{scene.h_limits, scene.excision_b + scene.B.r};
  long undecided = 0;

  // The two ball models must have disjoint interiors.
  {
    CondAcc acc("interiors-disjoint", scene.margin, scene.tol);
    double cutoff = kInf;
    for (const Flag& b : scene.B.net) {
      double d = scanA.min_dist(b, nullptr, cutoff);
      double margin = d - (scene.A.r + scene.B.r);
      if (acc.would_record(margin)) acc.feed(margin, "", b.basis);
      else acc.feed(margin);
      cutoff = acc.c.margin + (scene.A.r + scene.B.r);
    }
    out.conditions.push_back(acc.done());
  }

  // Each edge-subgroup generator (and inverse) must map the net into the
  // modeled set: image points either land within the ball radius of the net
  // or inside the excised zone around the edge limit flags. Applying both
  // directions renders the set equality h(A) = A at model resolution.
  auto h_invariance = [&](const char* name, const FlagSet& S, const NetScan& scan,
                          const SeamGrant& seam) {
    CondAcc acc(name, scene.margin, scene.tol);
    for (size_t gi = 0; gi < p.h.gens.size(); ++gi) {
      for (int dir = 0; dir < 2; ++dir) {
        GroupMatrix g = dir ? p.h.gens[gi].inverse() : p.h.gens[gi];
        Eigen::MatrixXd ga = g.approx();
        std::string w = gi < p.h.gen_names.size() ? p.h.gen_names[gi] : std::string("h");
        if (dir) w += "^-1";
        for (const Flag& f : S.net) {
          Flag img = flags::act(ga, f);
          double margin = std::max(S.r - scan.min_dist(img), seam.margin(img));
          if (acc.would_record(margin)) acc.feed(margin, w, img.basis);
          else acc.feed(margin);
        }
      }
    }
    out.conditions.push_back(acc.done());
  };
  h_invariance("h-invariance-A", scene.A, scanA, seamA);
  h_invariance("h-invariance-B", scene.B, scanB, seamB);

  // Factor elements outside the edge subgroup must map the other set into
  // this one's interior.
  auto maps_into = [&](const char* name, const words::FactorGroup& fac, Factor which,
                       const FlagSet& target, const NetScan& tscan, const SeamGrant& seam,
                       const FlagSet& source) {
    CondAcc acc(name, scene.margin, scene.tol);
    for (const auto& [w, mat] : fac.elements_up_to(scene.depth, p.cmp)) {
      words::Syllable s;
      s.factor = which;
      s.elt = mat;
      s.gens = w;
      Membership mem = p.in_h(s);
      if (mem == Membership::yes) continue;
      if (mem == Membership::undecidable) {
        ++undecided;
        continue;
      }
      Eigen::MatrixXd g = mat.approx();
      for (const Flag& x : source.net) {
        Flag img = flags::act(g, x);
        double margin = std::max(target.r - tscan.min_dist(img), seam.margin(img));
        if (acc.would_record(margin))
          acc.feed(margin, words::word_to_string(w, fac.gen_names), img.basis);
        else acc.feed(margin);
      }
    }
    out.conditions.push_back(acc.done());
  };
  maps_into("maps-B-into-A", p.a, Factor::A, scene.A, scanA, seamA, scene.B);
  maps_into("maps-A-into-B", p.b, Factor::B, scene.B, scanB, seamB, scene.A);

  // Every A-net/B-net pair of flags must be transverse.
  out.conditions.push_back(
      antipodality_condition("interior-antipodality", scene.A.net, scene.B.net, scene.margin,
                             scene.tol));

  // Each set must be antipodal to the other factor's sampled limit set away
  // from the edge limit flags.
  auto limit_antipodal = [&](const char* name, const words::FactorGroup& other,
                             double other_excision, const FlagSet& target) {
    KeptLimits kept =
        kept_limit_sample(other, scene.sample_depth, scene.type, scene.h_limits, other_excision);
    if (kept.flags.empty()) {
      CondAcc acc(name, scene.margin, scene.tol);
      acc.c.detail = kept.sampled ? "no sampled limit flags survive the excision"
                                  : "limit-set sampling unavailable for this factor";
      out.conditions.push_back(acc.done());
      return;
    }
    CondAcc acc(name, scene.margin, scene.tol);
    int ki = -1, ti = -1;
    double margin = flags::min_antipodality_margin(kept.flags, target.net, &ki, &ti);
    std::string w =
        ki >= 0 ? words::word_to_string(kept.sources[ki], other.gen_names) : std::string();
    acc.feed(margin, w, ki >= 0 ? kept.flags[ki].basis : Eigen::MatrixXd());
    acc.c.checked = static_cast<long>(kept.flags.size()) * static_cast<long>(target.net.size());
    out.conditions.push_back(acc.done());
    out.diagnostics["limit_sample"][name] = {{"kept", static_cast<int>(kept.flags.size())},
                                             {"dropped", kept.dropped},
                                             {"skipped_words", kept.skipped_words}};
  };
  limit_antipodal("limitset-antipodality-A", p.b, scene.excision_b, scene.A);
  limit_antipodal("limitset-antipodality-B", p.a, scene.excision_a, scene.B);

  // Diagnostic: each factor's own sampled limit set should sit inside its set.
  auto limit_containment = [&](const char* key, const words::FactorGroup& own, double own_excision,
                               const FlagSet& S, const NetScan& scan) {
    KeptLimits kept =
        kept_limit_sample(own, scene.sample_depth, scene.type, scene.h_limits, own_excision);
    if (kept.flags.empty()) {
      out.diagnostics["limit_containment"][key] = nullptr;
      return;
    }
    double worst = kInf;
    for (const Flag& f : kept.flags) worst = std::min(worst, S.r - scan.min_dist(f));
    out.diagnostics["limit_containment"][key] = worst;
  };
  limit_containment("A", p.a, scene.excision_a, scene.A, scanA);
  limit_containment("B", p.b, scene.excision_b, scene.B, scanB);

  out.diagnostics["undecided_memberships"] = undecided;
  out.diagnostics["net_sizes"] = {static_cast<int>(scene.A.net.size()),
                                  static_cast<int>(scene.B.net.size())};
  out.diagnostics["radii"] = {scene.A.r, scene.B.r};
  out.diagnostics["excision"] = {scene.excision_a, scene.excision_b};

  out.assumptions.push_back(
      "margins are measured on the finite net models; the certified statement is about the "
      "modeled sets");
  out.assumptions.push_back("edge-subgroup membership is decided by bounded enumeration");
  if (!p.h.trivial())
    out.assumptions.push_back(
        "near the excised edge limit flags the sets are indistinguishable at model resolution, "
        "so containment is granted there up to radius + excision");

  out.verdict = verdict_from(out.conditions, undecided > 0);

  // Upgrade: a trivial edge subgroup with cyclic factors lets generator-level
  // nesting exhaust the element quantifiers.
  if (out.verdict == "certified-at-depth" && p.h.trivial() && p.a.gens.size() == 1 &&
      p.b.gens.size() == 1) {
    nlohmann::ordered_json nest = nlohmann::ordered_json::object();
    NestingCheck na = generator_nesting(p.a.gens[0], scene.type, scene.A, {&scene.B.net});
    NestingCheck nb = generator_nesting(p.b.gens[0], scene.type, scene.B, {&scene.A.net});
    nest["A"] = na.available ? nlohmann::ordered_json(na.margin) : nlohmann::ordered_json(na.reason);
    nest["B"] = nb.available ? nlohmann::ordered_json(nb.margin) : nlohmann::ordered_json(nb.reason);
    out.diagnostics["generator_nesting"] = nest;
    if (na.available && nb.available && na.margin > scene.margin && nb.margin > scene.margin) {
      out.verdict = "certified";
      out.notes.push_back(
          "upgrade: trivial edge subgroup, cyclic factors, and generator-level nesting margins "
          "exhaust the element quantifiers (net-level geometry, as assumed)");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interactive triple verification.

CertReport verify_interactive_triple(const TripleScene& scene) {
  scene.validate();
  if (scene.A.net.empty() || scene.B_plus.net.empty() || scene.B_minus.net.empty())
    throw EmptyNet("interactive-triple verification needs nonempty nets");
  const words::HnnPresentation& p = scene.presentation;
  const bool base_trivial = p.m.gens.empty();
  if (!base_trivial) p.validate();
  else if (p.stable.dim() != scene.type.d)
    throw SceneInvalid("stable letter dimension does not match the flag type");

  CertReport out;
  out.kind = "interactive-triple";
  out.depth = scene.depth;
  out.margin_required = scene.margin;
  out.tolerance = scene.tol;

  NetScan scanA(scene.A.net), scanP(scene.B_plus.net), scanM(scene.B_minus.net);
  std::vector<Flag> all_limits = scene.h_plus_limits;
  all_limits.insert(all_limits.end(), scene.h_minus_limits.begin(), scene.h_minus_limits.end());
  // Membership in a set is granted inside that set's excised zone, whose width
  // is the set's own hole size plus its ball radius.
  SeamGrant seamA{all_limits, scene.excision_a + scene.A.r};
  SeamGrant seamP{all_limits, scene.excision_plus + scene.B_plus.r};
  SeamGrant seamM{all_limits, scene.excision_minus + scene.B_minus.r};
  long undecided = 0;

  // Pairwise separation of the three models.
  auto disjoint = [&](const char* name, const FlagSet& X, const NetScan& xscan, const FlagSet& Y) {
    CondAcc acc(name, scene.margin, scene.tol);
    double cutoff = kInf;
    for (const Flag& y : Y.net) {
      double d = xscan.min_dist(y, nullptr, cutoff);
      double margin = d - (X.r + Y.r);
      if (acc.would_record(margin)) acc.feed(margin, "", y.basis);
      else acc.feed(margin);
      cutoff = acc.c.margin + (X.r + Y.r);
    }
    out.conditions.push_back(acc.done());
  };
  disjoint("interiors-disjoint-A-Bplus", scene.A, scanA, scene.B_plus);
  disjoint("interiors-disjoint-A-Bminus", scene.A, scanA, scene.B_minus);
  disjoint("sets-disjoint-Bplus-Bminus", scene.B_plus, scanP, scene.B_minus);

  // Edge-subgroup invariance of the two half-sets: images of net points must
  // stay inside the modeled set (ball radius or the excised zone).
  auto h_invariance = [&](const char* name, const words::Subgroup& h, const FlagSet& S,
                          const NetScan& scan, const SeamGrant& seam) {
    CondAcc acc(name, scene.margin, scene.tol);
    for (size_t gi = 0; gi < h.gens.size(); ++gi) {
      for (int dir = 0; dir < 2; ++dir) {
        GroupMatrix g = dir ? h.gens[gi].inverse() : h.gens[gi];
        Eigen::MatrixXd ga = g.approx();
        std::string w = gi < h.gen_names.size() ? h.gen_names[gi] : std::string("h");
        if (dir) w += "^-1";
        for (const Flag& f : S.net) {
          Flag img = flags::act(ga, f);
          double margin = std::max(S.r - scan.min_dist(img), seam.margin(img));
          if (acc.would_record(margin)) acc.feed(margin, w, img.basis);
          else acc.feed(margin);
        }
      }
    }
    out.conditions.push_back(acc.done());
  };
  h_invariance("h-invariance-Bplus", p.h_plus, scene.B_plus, scanP, seamP);
  h_invariance("h-invariance-Bminus", p.h_minus, scene.B_minus, scanM, seamM);

  // Base-group elements outside the matching edge subgroup must map the
  // half-set into A's interior.
  auto maps_into_a = [&](const char* name, bool plus, const FlagSet& source) {
    CondAcc acc(name, scene.margin, scene.tol);
    if (!base_trivial) {
      for (const auto& [w, mat] : p.m.elements_up_to(scene.depth, p.cmp)) {
        words::Syllable s = p.m_syllable(w);
        Membership mem = p.in_h(s, plus);
        if (mem == Membership::yes) continue;
        if (mem == Membership::undecidable) {
          ++undecided;
          continue;
        }
        Eigen::MatrixXd g = mat.approx();
        for (const Flag& x : source.net) {
          Flag img = flags::act(g, x);
          double margin = std::max(scene.A.r - scanA.min_dist(img), seamA.margin(img));
          if (acc.would_record(margin))
            acc.feed(margin, words::word_to_string(w, p.m.gen_names), img.basis);
          else acc.feed(margin);
        }
      }
    }
    out.conditions.push_back(acc.done());
  };
  maps_into_a("maps-Bplus-into-A", true, scene.B_plus);
  maps_into_a("maps-Bminus-into-A", false, scene.B_minus);

  // Stable-letter conditions: f(A) inside B+, f^-1(A) inside B-, and the two
  // half-sets nested into their own interiors.
  auto stable_cond = [&](const char* name, const GroupMatrix& g, const FlagSet& source,
                         const FlagSet& target, const NetScan& tscan, const SeamGrant& tseam,
                         const char* label) {
    CondAcc acc(name, scene.margin, scene.tol);
    Eigen::MatrixXd ga = g.approx();
    for (const Flag& x : source.net) {
      Flag img = flags::act(ga, x);
      double margin = std::max(target.r - tscan.min_dist(img), tseam.margin(img));
      if (acc.would_record(margin)) acc.feed(margin, label, img.basis);
      else acc.feed(margin);
    }
    out.conditions.push_back(acc.done());
  };
  GroupMatrix finv = p.stable.inverse();
  std::string fname = scene.stable_name;
  std::string finame = fname + "^-1";
  stable_cond("stable-A-into-Bplus", p.stable, scene.A, scene.B_plus, scanP, seamP, fname.c_str());
  stable_cond("stable-A-into-Bminus", finv, scene.A, scene.B_minus, scanM, seamM, finame.c_str());
  stable_cond("stable-Bplus-nested", p.stable, scene.B_plus, scene.B_plus, scanP, seamP,
              fname.c_str());
  stable_cond("stable-Bminus-nested", finv, scene.B_minus, scene.B_minus, scanM, seamM,
              finame.c_str());

  // Transversality of the three models pairwise.
  out.conditions.push_back(antipodality_condition("interior-antipodality-A-Bplus", scene.A.net,
                                                  scene.B_plus.net, scene.margin, scene.tol));
  out.conditions.push_back(antipodality_condition("interior-antipodality-A-Bminus", scene.A.net,
                                                  scene.B_minus.net, scene.margin, scene.tol));
  out.conditions.push_back(antipodality_condition("interior-antipodality-Bplus-Bminus",
                                                  scene.B_plus.net, scene.B_minus.net,
                                                  scene.margin, scene.tol));

  // The base group's limit set, away from the matching edge limit flags, must
  // be antipodal to each half-set.
  auto limit_antipodal = [&](const char* name, const std::vector<Flag>& limits,
                             const FlagSet& target) {
    KeptLimits kept =
        kept_limit_sample(p.m, scene.sample_depth, scene.type, limits, scene.excision_a);
    CondAcc acc(name, scene.margin, scene.tol);
    if (kept.flags.empty()) {
      acc.c.detail = kept.sampled ? "no sampled limit flags survive the excision"
                                  : "limit-set sampling unavailable for the base group";
      out.conditions.push_back(acc.done());
      return;
    }
    int ki = -1, ti = -1;
    double margin = flags::min_antipodality_margin(kept.flags, target.net, &ki, &ti);
    std::string w =
        ki >= 0 ? words::word_to_string(kept.sources[ki], p.m.gen_names) : std::string();
    acc.feed(margin, w, ki >= 0 ? kept.flags[ki].basis : Eigen::MatrixXd());
    acc.c.checked = static_cast<long>(kept.flags.size()) * static_cast<long>(target.net.size());
    out.conditions.push_back(acc.done());
    out.diagnostics["limit_sample"][name] = {{"kept", static_cast<int>(kept.flags.size())},
                                             {"dropped", kept.dropped},
                                             {"skipped_words", kept.skipped_words}};
  };
  limit_antipodal("limitset-antipodality-Bplus", scene.h_plus_limits, scene.B_plus);
  limit_antipodal("limitset-antipodality-Bminus", scene.h_minus_limits, scene.B_minus);

  out.diagnostics["undecided_memberships"] = undecided;
  out.diagnostics["net_sizes"] = {static_cast<int>(scene.A.net.size()),
                                  static_cast<int>(scene.B_plus.net.size()),
                                  static_cast<int>(scene.B_minus.net.size())};
  out.diagnostics["radii"] = {scene.A.r, scene.B_plus.r, scene.B_minus.r};
  out.diagnostics["excision"] = {scene.excision_a, scene.excision_plus, scene.excision_minus};

  out.assumptions.push_back(
      "margins are measured on the finite net models; the certified statement is about the "
      "modeled sets");
  if (!base_trivial)
    out.assumptions.push_back("edge-subgroup membership is decided by bounded enumeration");
  if (!all_limits.empty())
    out.assumptions.push_back(
        "near the excised edge limit flags the sets are indistinguishable at model resolution, "
        "so containment is granted there up to radius + excision");

  out.verdict = verdict_from(out.conditions, undecided > 0);

  // Upgrades that exhaust the quantifiers.
  if (out.verdict == "certified-at-depth") {
    if (base_trivial) {
      out.verdict = "certified";
      out.notes.push_back(
          "upgrade: trivial base group, so the stable-letter conditions exhaust the element "
          "quantifiers for the infinite cyclic group (net-level geometry, as assumed)");
    } else if (p.m.gens.size() == 1 && p.h_plus.trivial() && p.h_minus.trivial()) {
      NestingCheck nc = generator_nesting(p.m.gens[0], scene.type, scene.A,
                                          {&scene.B_plus.net, &scene.B_minus.net});
      out.diagnostics["generator_nesting"] =
          nc.available ? nlohmann::ordered_json(nc.margin) : nlohmann::ordered_json(nc.reason);
      if (nc.available && nc.margin > scene.margin) {
        out.verdict = "certified";
        out.notes.push_back(
            "upgrade: cyclic base group with trivial edge subgroups and generator-level nesting "
            "margins exhaust the element quantifiers (net-level geometry, as assumed)");
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ping-pong injectivity sweeps.

namespace {
struct PoolElt {
  FreeWord w;
  GroupMatrix mat;
  std::string str;
};
}  // namespace

CertReport ping_pong_injectivity(const PairScene& scene, int rl_bound, int factor_len, int probe) {
  scene.validate();
  const words::AmalgamPresentation& p = scene.presentation;
  p.validate();
  if (rl_bound < 1 || factor_len < 1)
    throw ConfigInvalid("injectivity bounds must be positive");

  CertReport out;
  out.kind = "ping-pong-injectivity";
  out.depth = rl_bound;
  out.margin_required = 0.0;
  out.tolerance = scene.tol;

  long undecided = 0;
  auto build_pool = [&](const words::FactorGroup& fac, Factor which) {
    std::vector<PoolElt> pool;
    for (const auto& [w, mat] : fac.elements_up_to(factor_len, p.cmp)) {
      words::Syllable s;
      s.factor = which;
      s.elt = mat;
      s.gens = w;
      Membership mem = p.in_h(s);
      if (mem == Membership::yes) continue;
      if (mem == Membership::undecidable) {
        ++undecided;
        continue;
      }
      pool.push_back({w, mat, words::word_to_string(w, fac.gen_names)});
    }
    return pool;
  };
  std::vector<PoolElt> pool[2] = {build_pool(p.a, Factor::A), build_pool(p.b, Factor::B)};
  if (pool[0].empty() || pool[1].empty())
    throw ConfigInvalid("a factor has no elements outside the edge subgroup at this length");

  const bool with_flags = !scene.A.net.empty() && !scene.B.net.empty();
  NetScan scanA, scanB;
  std::vector<const Flag*> probeA, probeB;
  SeamGrant seam{scene.h_limits,
                 std::max(scene.excision_a + scene.A.r, scene.excision_b + scene.B.r)};
  if (with_flags) {
    scanA = NetScan(scene.A.net);
    scanB = NetScan(scene.B.net);
    probeA = probe_subsample(scene.A.net, probe);
    probeB = probe_subsample(scene.B.net, probe);
  }

  const double idtol = std::max(p.cmp.tol, 10.0 * scene.tol);
  CondAcc mat_acc("nontrivial-matrix", 0.0, scene.tol);
  CondAcc flag_acc("maps-into-union", 0.0, scene.tol);
  if (!with_flags) flag_acc.c.detail = "scene carries no nets; matrix check only";
  long words_tested = 0;

  std::vector<const std::string*> stack;
  std::function<void(int, const GroupMatrix&)> rec = [&](int last, const GroupMatrix& g) {
    ++words_tested;
    double pd = projective_identity_distance(g.approx()) - idtol;
    if (mat_acc.would_record(pd)) mat_acc.feed(pd, join_words(stack), Eigen::MatrixXd());
    else mat_acc.feed(pd);
    if (with_flags) {
      const std::vector<const Flag*>& probes = (last == 0) ? probeB : probeA;
      Eigen::MatrixXd ga = g.approx();
      for (const Flag* x : probes) {
        Flag img = flags::act(ga, *x);
        double margin = std::max({scene.A.r - scanA.min_dist(img), scene.B.r - scanB.min_dist(img),
                                  seam.margin(img)});
        if (flag_acc.would_record(margin)) flag_acc.feed(margin, join_words(stack), img.basis);
        else flag_acc.feed(margin);
      }
    }
    if (static_cast<int>(stack.size()) < rl_bound) {
      int next = 1 - last;
      for (const PoolElt& e : pool[next]) {
        stack.push_back(&e.str);
        rec(next, g * e.mat);
        stack.pop_back();
      }
    }
  };
  for (int f0 = 0; f0 < 2; ++f0)
    for (const PoolElt& e : pool[f0]) {
      stack.push_back(&e.str);
      rec(f0, e.mat);
      stack.pop_back();
    }

  out.conditions.push_back(mat_acc.done());
  out.conditions.push_back(flag_acc.done());
  out.diagnostics["words_tested"] = words_tested;
  out.diagnostics["pool_sizes"] = {static_cast<int>(pool[0].size()),
                                   static_cast<int>(pool[1].size())};
  out.diagnostics["factor_length"] = factor_len;
  out.diagnostics["probe"] = probe;
  out.diagnostics["undecided_memberships"] = undecided;
  out.notes.push_back(
      "alternating words over factor elements outside the edge subgroup; matrices must stay away "
      "from +-identity and images of net probes must stay inside the union of the open sets");
  out.verdict = verdict_from(out.conditions, undecided > 0);
  return out;
}

CertReport ping_pong_injectivity(const TripleScene& scene, int rl_bound, int factor_len,
                                 int probe) {
  scene.validate();
  const words::HnnPresentation& p = scene.presentation;
  const bool base_trivial = p.m.gens.empty();
  if (!base_trivial) p.validate();
  if (rl_bound < 1 || factor_len < 1)
    throw ConfigInvalid("injectivity bounds must be positive");

  CertReport out;
  out.kind = "ping-pong-injectivity";
  out.depth = rl_bound;
  out.margin_required = 0.0;
  out.tolerance = scene.tol;

  std::vector<PoolElt> pool;
  if (!base_trivial)
    for (const auto& [w, mat] : p.m.elements_up_to(factor_len, p.cmp))
      pool.push_back({w, mat, words::word_to_string(w, p.m.gen_names)});

  const bool with_flags =
      !scene.A.net.empty() && !scene.B_plus.net.empty() && !scene.B_minus.net.empty();
  NetScan scanA, scanP, scanM;
  std::vector<const Flag*> probeA;
  std::vector<Flag> all_limits = scene.h_plus_limits;
  all_limits.insert(all_limits.end(), scene.h_minus_limits.begin(), scene.h_minus_limits.end());
  SeamGrant seam{all_limits,
                 std::max({scene.excision_a + scene.A.r, scene.excision_plus + scene.B_plus.r,
                           scene.excision_minus + scene.B_minus.r})};
  if (with_flags) {
    scanA = NetScan(scene.A.net);
    scanP = NetScan(scene.B_plus.net);
    scanM = NetScan(scene.B_minus.net);
    probeA = probe_subsample(scene.A.net, probe);
  }

  const double idtol = std::max(p.cmp.tol, 10.0 * scene.tol);
  CondAcc mat_acc("nontrivial-matrix", 0.0, scene.tol);
  CondAcc flag_acc("maps-into-union", 0.0, scene.tol);
  if (!with_flags) flag_acc.c.detail = "scene carries no nets; matrix check only";
  long words_tested = 0;
  long undecided = 0;

  const std::string fstr = scene.stable_name;
  const std::string fistr = scene.stable_name + "^-1";
  GroupMatrix fmat[2] = {p.stable.inverse(), p.stable};  // index by (exp+1)/2

  std::vector<const std::string*> stack;

  auto test = [&](const GroupMatrix& g, bool trailing_stable) {
    ++words_tested;
    double pd = projective_identity_distance(g.approx()) - idtol;
    if (mat_acc.would_record(pd)) mat_acc.feed(pd, join_words(stack), Eigen::MatrixXd());
    else mat_acc.feed(pd);
    if (with_flags && trailing_stable) {
      Eigen::MatrixXd ga = g.approx();
      for (const Flag* x : probeA) {
        Flag img = flags::act(ga, *x);
        double margin = std::max({scene.A.r - scanA.min_dist(img),
                                  scene.B_plus.r - scanP.min_dist(img),
                                  scene.B_minus.r - scanM.min_dist(img), seam.margin(img)});
        if (flag_acc.would_record(margin)) flag_acc.feed(margin, join_words(stack), img.basis);
        else flag_acc.feed(margin);
      }
    }
  };

  // After appending f^{last}, the word is Britton reduced with an identity
  // trailing base element; extend by an optional base element and another
  // stable letter, rejecting pinches.
  std::function<void(const GroupMatrix&, int, int)> rec = [&](const GroupMatrix& g, int last,
                                                              int n) {
    test(g, true);
    if (n >= rl_bound) {
      for (const PoolElt& e : pool) {
        stack.push_back(&e.str);
        test(g * e.mat, false);
        stack.pop_back();
      }
      return;
    }
    // Trailing identity base element: only a same-sign stable letter extends.
    {
      const std::string* fs = last > 0 ? &fstr : &fistr;
      stack.push_back(fs);
      rec(g * fmat[(last + 1) / 2], last, n + 1);
      stack.pop_back();
    }
    for (const PoolElt& e : pool) {
      stack.push_back(&e.str);
      GroupMatrix gm = g * e.mat;
      test(gm, false);
      for (int exp : {+1, -1}) {
        if (exp == -last) {
          words::Syllable s = p.m_syllable(e.w);
          Membership mem = p.in_h(s, /*plus=*/last == -1);
          if (mem == Membership::yes) {
            continue;  // pinch: not Britton reduced
          }
          if (mem == Membership::undecidable) {
            ++undecided;
            continue;
          }
        }
        const std::string* fs = exp > 0 ? &fstr : &fistr;
        stack.push_back(fs);
        rec(gm * fmat[(exp + 1) / 2], exp, n + 1);
        stack.pop_back();
      }
    }
  };

  // Leading base element (optional), then the first stable letter.
  for (int exp : {+1, -1}) {
    const std::string* fs = exp > 0 ? &fstr : &fistr;
    stack.push_back(fs);
    rec(fmat[(exp + 1) / 2], exp, 1);
    stack.pop_back();
  }
  for (const PoolElt& e : pool) {
    stack.push_back(&e.str);
    test(e.mat, false);  // relative length 0: base elements themselves
    for (int exp : {+1, -1}) {
      const std::string* fs = exp > 0 ? &fstr : &fistr;
      stack.push_back(fs);
      rec(e.mat * fmat[(exp + 1) / 2], exp, 1);
      stack.pop_back();
    }
    stack.pop_back();
  }

  out.conditions.push_back(mat_acc.done());
  out.conditions.push_back(flag_acc.done());
  out.diagnostics["words_tested"] = words_tested;
  out.diagnostics["pool_size"] = static_cast<int>(pool.size());
  out.diagnostics["factor_length"] = factor_len;
  out.diagnostics["probe"] = probe;
  out.diagnostics["undecided_memberships"] = undecided;
  out.notes.push_back(
      "Britton-reduced words up to the stable-letter bound; matrices must stay away from "
      "+-identity and, for words ending in a stable letter, images of A-net probes must stay "
      "inside the union of the open sets");
  out.verdict = verdict_from(out.conditions, undecided > 0);
  return out;
}

// ---------------------------------------------------------------------------
// Shrinking-image diagnostic.

namespace {
ShrinkReport shrink_core(const std::vector<words::Word>& seq,
                         const std::function<std::vector<const Flag*>(const words::Word&)>& pick,
                         int dim, double tol) {
  if (seq.empty()) throw ConfigInvalid("shrink diagnostic needs a nonempty word sequence");
  ShrinkReport out;
  const int cap = 256;
  std::vector<Flag> prev;
  Flag prev_center;
  double prev_radius = 0.0;
  bool monotone = true;

  for (size_t n = 0; n < seq.size(); ++n) {
    std::vector<const Flag*> base = pick(seq[n]);
    if (base.empty()) throw EmptyNet("shrink diagnostic needs nonempty designated nets");
    GroupMatrix g = words::evaluate(seq[n], dim, /*exact_identity=*/false);
    Eigen::MatrixXd ga = g.approx();

    int k = static_cast<int>(base.size());
    int take = std::min(k, cap);
    std::vector<Flag> img;
    img.reserve(take);
    for (int i = 0; i < take; ++i) {
      int idx = static_cast<int>(static_cast<long>(i) * (k - 1) / std::max(1, take - 1));
      img.push_back(flags::act(ga, *base[idx]));
    }

    int m = static_cast<int>(img.size());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) D(i, j) = D(j, i) = flags::flag_distance(img[i], img[j]);
    double diam = m > 1 ? D.maxCoeff() : 0.0;
    int center = 0;
    double radius = 0.0;
    if (m > 1) {
      Eigen::VectorXd worst = D.rowwise().maxCoeff();
      radius = worst.minCoeff(&center);
    }
    out.diameters.push_back(diam);

    if (n > 0) {
      double far = 0.0;
      for (const Flag& f : img) far = std::max(far, flags::flag_distance(f, prev_center));
      double margin = prev_radius - far;
      out.nesting_margins.push_back(margin);
      // The ball model's own slack: images of net points may exit the
      // previous finite net's hull by a fraction of its radius.
      if (margin < -(tol + 0.25 * prev_radius))
        throw NotNested("image at step " + std::to_string(n + 1) +
                        " leaves the previous image ball");
      if (diam > out.diameters[n - 1] + tol) monotone = false;
    }
    prev = std::move(img);
    prev_center = prev[center];
    prev_radius = radius;
  }

  out.limit = prev_center;
  size_t N = seq.size();
  out.pass = (N == 1) ||
             (monotone && out.diameters.back() < 0.05 * out.diameters.front() + tol);
  std::ostringstream os;
  os << "image diameters over " << N << " steps; shrink ratio "
     << (out.diameters.front() > 0 ? out.diameters.back() / out.diameters.front() : 0.0);
  out.detail = os.str();
  return out;
}
}  // namespace

ShrinkReport shrink_diagnostic(const std::vector<words::Word>& seq, const flags::FlagSet& A,
                               const flags::FlagSet& B, int dim, double tol) {
  auto pick = [&](const words::Word& w) {
    std::vector<const Flag*> out;
    if (w.syllables.empty()) throw ConfigInvalid("shrink diagnostic words must be nonempty");
    const std::vector<Flag>& net = w.syllables.back().factor == Factor::A ? B.net : A.net;
    out.reserve(net.size());
    for (const Flag& f : net) out.push_back(&f);
    return out;
  };
  return shrink_core(seq, pick, dim, tol);
}

ShrinkReport shrink_diagnostic_hnn(const std::vector<words::Word>& seq, const flags::FlagSet& A,
                                   const flags::FlagSet& B_plus, const flags::FlagSet& B_minus,
                                   int dim, double tol) {
  auto pick = [&](const words::Word& w) {
    std::vector<const Flag*> out;
    if (w.syllables.empty()) throw ConfigInvalid("shrink diagnostic words must be nonempty");
    int last_exp = 0;
    for (auto it = w.syllables.rbegin(); it != w.syllables.rend(); ++it)
      if (it->factor == Factor::Stable) {
        last_exp = it->stable_exp;
        break;
      }
    for (const Flag& f : A.net) out.push_back(&f);
    if (last_exp != 0) {
      const std::vector<Flag>& net = last_exp > 0 ? B_plus.net : B_minus.net;
      for (const Flag& f : net) out.push_back(&f);
    }
    return out;
  };
  return shrink_core(seq, pick, dim, tol);
}

// ---------------------------------------------------------------------------
// Singular-value gap growth scan.

GapScanReport anosov_gap_scan(const reps::MatrixRep& rep, const flags::FlagType& type,
                              int length_bound, const GapScanOptions& opts) {
  if (length_bound < 1) throw ConfigInvalid("gap scan needs a positive length bound");
  if (rep.gens.empty()) throw ConfigInvalid("gap scan needs generators");
  type.validate();
  if (rep.gens[0].dim() != type.d)
    throw TypeMismatch("gap scan type dimension does not match the representation");
  if (opts.samples_per_length < 1 || opts.exhaust_cap < 0)
    throw ConfigInvalid("gap scan options out of range");

  const int k = static_cast<int>(rep.gens.size());
  GapScanReport out;
  int exhausted_to = 0;

  for (int n = 1; n <= length_bound; ++n) {
    double count = 2.0 * k * std::pow(2.0 * k - 1, n - 1);
    double best = kInf;
    FreeWord arg;
    auto eval_word = [&](const FreeWord& w) {
      GroupMatrix g = reps::evaluate(rep, w);
      double mg = 0.0;
      try {
        mg = flags::min_gap(flags::singular_gaps(g.approx(), type));
      } catch (const Error&) {
        mg = 0.0;
      }
      if (mg < best) {
        best = mg;
        arg = w;
      }
    };
    if (count <= static_cast<double>(opts.exhaust_cap)) {
      exhausted_to = n;
      FreeWord w;
      std::function<void()> dfs = [&]() {
        if (static_cast<int>(w.size()) == n) {
          eval_word(w);
          return;
        }
        for (int g = 1; g <= k; ++g)
          for (int s : {+1, -1}) {
            int letter = s * g;
            if (!w.empty() && w.back() == -letter) continue;
            w.push_back(letter);
            dfs();
            w.pop_back();
          }
      };
      dfs();
    } else {
      std::mt19937_64 rng(opts.seed * 1000003ULL + static_cast<std::uint64_t>(n));
      std::uniform_int_distribution<int> first(0, 2 * k - 1);
      std::uniform_int_distribution<int> step(0, 2 * k - 2);
      auto letter_of = [&](int idx) { return (idx % 2 == 0) ? idx / 2 + 1 : -(idx / 2 + 1); };
      for (int s = 0; s < opts.samples_per_length; ++s) {
        FreeWord w;
        w.reserve(n);
        w.push_back(letter_of(first(rng)));
        while (static_cast<int>(w.size()) < n) {
          int idx = step(rng);
          int cand = letter_of(idx);
          if (cand == -w.back()) cand = letter_of(2 * k - 1);  // remap onto the excluded slot
          w.push_back(cand);
        }
        eval_word(w);
      }
    }
    out.lengths.push_back(n);
    out.min_gaps.push_back(best);
    out.argmin_words.push_back(arg);
  }

  // Least-squares slope of (length, min gap).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = static_cast<int>(out.lengths.size());
  for (int i = 0; i < n; ++i) {
    sx += out.lengths[i];
    sy += out.min_gaps[i];
    sxx += static_cast<double>(out.lengths[i]) * out.lengths[i];
    sxy += out.lengths[i] * out.min_gaps[i];
  }
  double denom = n * sxx - sx * sx;
  out.slope = denom > 0 ? (n * sxy - sx * sy) / denom : 0.0;

  out.min_gap_from_three = kInf;
  int start = std::min(3, length_bound);
  for (int i = 0; i < n; ++i)
    if (out.lengths[i] >= start) out.min_gap_from_three = std::min(out.min_gap_from_three, out.min_gaps[i]);
  out.pass = out.slope > opts.slope_floor && out.min_gap_from_three > opts.positivity_floor;

  std::ostringstream os;
  os << "lengths 1.." << length_bound << "; exhaustive through length " << exhausted_to
     << ", sampled " << opts.samples_per_length << " words per longer length";
  out.detail = os.str();
  return out;
}

nlohmann::ordered_json gap_scan_to_json(const GapScanReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["kind"] = "gap-scan";
  j["lengths"] = r.lengths;
  j["min_gaps"] = r.min_gaps;
  nlohmann::ordered_json args = nlohmann::ordered_json::array();
  for (const FreeWord& w : r.argmin_words) {
    nlohmann::ordered_json jw = nlohmann::ordered_json::array();
    for (int letter : w) jw.push_back(letter);
    args.push_back(jw);
  }
  j["argmin_words"] = args;
  j["slope"] = r.slope;
  j["min_gap_from_three"] = std::isfinite(r.min_gap_from_three)
                                ? nlohmann::ordered_json(r.min_gap_from_three)
                                : nlohmann::ordered_json();
  j["pass"] = r.pass;
  j["detail"] = r.detail;
  round_floats(j);
  return j;
}

std::string gap_scan_to_csv(const GapScanReport& r) {
  std::ostringstream os;
  os << "length,min_gap,word\n";
  for (size_t i = 0; i < r.lengths.size(); ++i) {
    os << r.lengths[i] << "," << round_sig(r.min_gaps[i]) << ",";
    const FreeWord& w = r.argmin_words[i];
    for (size_t k = 0; k < w.size(); ++k) os << (k ? " " : "") << w[k];
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Audits and the cyclic HNN check.

AntipodalityAudit antipodality_audit(const reps::LimitSetSample& sample) {
  AntipodalityAudit out;
  out.min_margin = reps::min_pairwise_antipodality(sample);
  out.pass = out.min_margin > 0;
  return out;
}

CertReport hnn_cyclic_check(const GroupMatrix& f, const flags::FlagSet& B_plus,
                            const flags::FlagSet& B_minus, const flags::FlagType& type,
                            double margin, double flag_tol) {
  if (B_plus.net.empty() || B_minus.net.empty())
    throw EmptyNet("the cyclic check needs nonempty sets");
  if (!(margin > 0) || !(flag_tol > 0)) throw ConfigInvalid("margins must be positive");
  type.validate();
  if (f.dim() != type.d) throw TypeMismatch("stable letter dimension does not match the type");

  CertReport out;
  out.kind = "hnn-cyclic-check";
  out.margin_required = margin;
  out.tolerance = flag_tol;

  reps::LoxodromicData ax = reps::axis_flags(f, type);

  auto run = [&](const GroupMatrix& g, const flags::FlagSet& S, const Flag& target,
                 const char* limit_name, const char* interior_name) {
    Eigen::MatrixXd ga = g.approx();
    Flag x = S.net.front();
    int iters = 0;
    double step = kInf;
    for (; iters < 500; ++iters) {
      Flag nx = flags::act(ga, x);
      step = flags::flag_distance(nx, x);
      x = nx;
      if (step < 1e-12) break;
    }
    CondAcc la(limit_name, 0.0, flag_tol);
    la.feed(flag_tol - flags::flag_distance(x, target), "", x.basis);
    out.conditions.push_back(la.done());
    CondAcc ia(interior_name, margin, flag_tol);
    ia.feed(flags::set_membership_margin(S, x), "", x.basis);
    out.conditions.push_back(ia.done());
    out.depth = std::max(out.depth, iters + 1);
    out.diagnostics[std::string(limit_name) + "_iterations"] = iters + 1;
    out.diagnostics[std::string(limit_name) + "_final_step"] = step;
  };
  run(f, B_plus, ax.attracting, "forward-limit-matches-axis", "forward-limit-interior");
  run(f.inverse(), B_minus, ax.repelling, "backward-limit-matches-axis",
      "backward-limit-interior");

  out.verdict = verdict_from(out.conditions, false);
  return out;
}

// ---------------------------------------------------------------------------
// Bending.

PairScene bent_scene(const PairScene& scene, const reps::BendSplit& split, const GroupMatrix& t) {
  PairScene out = scene;
  out.rep = reps::bend(scene.rep, split, t);
  auto refresh = [&](const words::FactorGroup& src) {
    words::FactorGroup fresh;
    fresh.gen_names = src.gen_names;
    fresh.free_group = src.free_group;
    fresh.budget = src.budget;
    fresh.gens.reserve(src.gen_names.size());
    for (const std::string& name : src.gen_names) fresh.gens.push_back(out.rep.at(name));
    return fresh;
  };
  out.presentation.a = refresh(scene.presentation.a);
  out.presentation.b = refresh(scene.presentation.b);
  // The bend parameter centralizes the edge element, so the edge subgroup and
  // the sets are unchanged.
  return out;
}

BendScanReport bend_scan(const PairScene& scene, const reps::BendSplit& split,
                         const reps::CentralizerChart& chart, const Eigen::VectorXd& direction,
                         const BendScanOptions& opts) {
  if (direction.size() != chart.dim - 1)
    throw ConfigInvalid("bend direction must match the chart dimension");
  if (!(opts.c_hi > 0) || opts.bisect_iters < 1 || opts.ray_points < 1)
    throw ConfigInvalid("bend scan options out of range");

  BendScanReport out;
  auto at_scale = [&](double c) -> std::pair<bool, double> {
    std::vector<double> s(direction.size());
    for (int i = 0; i < direction.size(); ++i) s[i] = c * direction[i];
    try {
      PairScene bent = bent_scene(scene, split, chart.at(s));
      CertReport r = verify_interactive_pair(bent);
      return {r.certified(), r.min_margin()};
    } catch (const Error&) {
      return {false, -kInf};
    }
  };

  CertReport base = verify_interactive_pair(scene);
  if (!base.certified()) {
    out.detail = "base scene does not certify";
    return out;
  }

  auto [hi_ok, hi_margin] = at_scale(opts.c_hi);
  (void)hi_margin;
  if (hi_ok) {
    out.s_max = opts.c_hi;
    out.hi_certified = true;
    out.detail = "entire tested range certifies";
  } else {
    double lo = 0.0, hi = opts.c_hi;
    for (int i = 0; i < opts.bisect_iters; ++i) {
      double mid = 0.5 * (lo + hi);
      if (at_scale(mid).first) lo = mid;
      else hi = mid;
    }
    out.s_max = lo;
    std::ostringstream os;
    os << "bisection bracket [" << lo << ", " << hi << "] after " << opts.bisect_iters
       << " iterations";
    out.detail = os.str();
  }

  for (int i = 1; i <= opts.ray_points; ++i) {
    double c = out.s_max * i / opts.ray_points;
    auto [ok, m] = at_scale(c);
    out.ray_scales.push_back(c);
    out.ray_margins.push_back(m);
    out.ray_certified.push_back(ok);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Arc-pipeline scene builders.

namespace {
double max_consecutive_spacing(const std::vector<Flag>& net) {
  double worst = 0.0;
  for (size_t i = 0; i + 1 < net.size(); ++i)
    worst = std::max(worst, flags::flag_distance(net[i], net[i + 1]));
  return worst;
}

std::vector<Flag> excise_near(const std::vector<Flag>& net, const std::vector<Flag>& limits,
                              double eps) {
  std::vector<Flag> out;
  out.reserve(net.size());
  for (const Flag& f : net) {
    bool clear = true;
    for (const Flag& h : limits)
      if (flags::flag_distance(f, h) <= eps) {
        clear = false;
        break;
      }
    if (clear) out.push_back(f);
  }
  return out;
}

// Osculating flag of the boundary circle inside the symmetric square: the
// boundary angle phi corresponds to the direction v(phi) in the plane, the
// top line is the squared direction, and the plane is spanned together with
// its derivative along the circle.
Flag osculating_flag(double phi, const FlagType& type) {
  double a = -std::cos(0.5 * phi), b = std::sin(0.5 * phi);
  double da = 0.5 * std::sin(0.5 * phi), db = 0.5 * std::cos(0.5 * phi);
  Eigen::MatrixXd cols(3, 3);
  cols.col(0) << a * a, 2.0 * a * b, b * b;
  cols.col(1) << 2.0 * a * da, 2.0 * (da * b + a * db), 2.0 * b * db;
  cols.col(2) = cols.col(0).head<3>().cross(cols.col(1).head<3>());
  return flags::flag_from_columns(cols, type);
}

// Shadow boundary angle of a direction in the plane (Cayley angle of v1:v2).
double direction_angle(double v1, double v2) {
  // x = v1/v2 maps to (x - i)/(x + i); with x = -cot(phi/2) this is e^{i phi}.
  // Invert: phi = 2 * atan2(-v2, v1) normalized to (-pi, pi].
  double phi = 2.0 * std::atan2(v2, -v1);
  if (phi <= -M_PI) phi += 2.0 * M_PI;
  if (phi > M_PI) phi -= 2.0 * M_PI;
  return phi;
}

void check_arc_config(const ArcSceneConfig& cfg) {
  if (cfg.net_cap < 8) throw ConfigInvalid("net cap must be at least 8");
  if (cfg.inflation < 0) throw ConfigInvalid("inflation radius must be nonnegative");
  if (cfg.excision_factor < 0) throw ConfigInvalid("excision factor must be nonnegative");
  if (cfg.rep.names != cfg.shadow.names)
    throw ConfigInvalid("shadow representation must use the same generator names");
  if (cfg.rep.gens.empty()) throw ConfigInvalid("scene construction needs generators");
  if (cfg.type.d != 3 || cfg.rep.gens[0].dim() != 3 || cfg.shadow.gens[0].dim() != 2)
    throw ConfigInvalid("the arc pipeline builds full flags in dimension 3 over a 2x2 shadow");
  if (cfg.type.dims.size() != 2)
    throw ConfigInvalid("the arc pipeline builds full flags in dimension 3 over a 2x2 shadow");
  // The construction is only valid when the representation restricts on the
  // boundary circle to the symmetric square of the shadow.
  for (size_t gi = 0; gi < cfg.rep.gens.size(); ++gi) {
    Eigen::MatrixXd g2 = cfg.shadow.gens[gi].approx();
    Eigen::MatrixXd g3 = cfg.rep.gens[gi].approx();
    for (double phi : {0.37, 1.41, 2.83}) {
      double a = -std::cos(0.5 * phi), b = std::sin(0.5 * phi);
      Eigen::Vector2d w = g2 * Eigen::Vector2d(a, b);
      Flag moved = osculating_flag(direction_angle(w(0), w(1)), cfg.type);
      Flag pushed = flags::act(g3, osculating_flag(phi, cfg.type));
      if (flags::flag_distance(moved, pushed) > 1e-8)
        throw SceneInvalid(
            "the representation does not restrict to the symmetric square of the shadow on the "
            "boundary circle");
    }
  }
}

// Cut angles of the boundary circle (attracting and repelling fixed angles of
// the cut words read through the shadow), sorted, plus an arc walker.
std::vector<double> cut_angles(const reps::MatrixRep& shadow,
                               const std::vector<FreeWord>& cuts) {
  std::vector<double> angles;
  for (const FreeWord& w : cuts) {
    GroupMatrix g = reps::evaluate(shadow, w);
    angles.push_back(reps::boundary_angle(g, true));
    angles.push_back(reps::boundary_angle(g, false));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

// Evenly spaced osculating flags on the open arc (lo, hi) (unwrapped angles).
std::vector<Flag> arc_net(double lo, double hi, int count, const FlagType& type) {
  std::vector<Flag> net;
  net.reserve(count);
  double len = hi - lo;
  for (int i = 0; i < count; ++i) {
    double phi = lo + len * (i + 0.5) / count;
    if (phi > M_PI) phi -= 2.0 * M_PI;
    net.push_back(osculating_flag(phi, type));
  }
  return net;
}

// Index of the arc of the cyclic partition that contains the angle.
int arc_of(const std::vector<double>& sorted_cuts, double phi) {
  int k = static_cast<int>(sorted_cuts.size());
  for (int i = 0; i + 1 < k; ++i)
    if (phi > sorted_cuts[i] && phi < sorted_cuts[i + 1]) return i;
  return k - 1;  // wrap-around arc from the last cut to the first
}
}  // namespace

PairScene build_pair_scene(const ArcSceneConfig& cfg, const std::vector<std::string>& factor_a,
                           const std::vector<std::string>& factor_b,
                           const words::FreeWord& edge_word, const words::FreeWord& edge_in_a,
                           const words::FreeWord& edge_in_b) {
  check_arc_config(cfg);
  if (factor_a.empty() || factor_b.empty()) throw ConfigInvalid("factors must be nonempty");
  if (edge_word.empty()) throw ConfigInvalid("edge word must be nonempty");

  std::vector<double> cuts = cut_angles(cfg.shadow, {edge_word});
  // Two arcs: (cuts[0], cuts[1]) and the wrap-around (cuts[1], cuts[0] + 2pi).
  std::vector<std::vector<Flag>> nets = {
      arc_net(cuts[0], cuts[1], cfg.net_cap, cfg.type),
      arc_net(cuts[1], cuts[0] + 2.0 * M_PI, cfg.net_cap, cfg.type)};

  GroupMatrix eta = reps::evaluate(cfg.rep, edge_word);
  reps::LoxodromicData eta_axis = reps::axis_flags(eta, cfg.type);

  // The factor-A arc is the one containing A's generator's attracting angle.
  double a_angle = reps::boundary_angle(cfg.shadow.at(factor_a[0]), true);
  int a_arc = (a_angle > cuts[0] && a_angle < cuts[1]) ? 0 : 1;

  PairScene scene;
  scene.type = cfg.type;
  scene.rep = cfg.rep;
  scene.depth = cfg.depth;
  scene.margin = cfg.margin;
  scene.tol = cfg.tol;
  scene.sample_depth = cfg.sample_depth;
  scene.seed = cfg.seed;
  scene.h_limits = {eta_axis.attracting, eta_axis.repelling};

  auto build_set = [&](std::vector<Flag> net, const std::string& label) {
    FlagSet s;
    s.label = label;
    s.net = std::move(net);
    s.r = cfg.inflation > 0 ? cfg.inflation : 2.0 * max_consecutive_spacing(s.net);
    return s;
  };
  scene.A = build_set(std::move(nets[a_arc]), "A");
  scene.B = build_set(std::move(nets[1 - a_arc]), "B");

  scene.excision_a = cfg.excision_factor * scene.A.r;
  scene.excision_b = cfg.excision_factor * scene.B.r;
  scene.A.net = excise_near(scene.A.net, scene.h_limits, scene.excision_a);
  scene.B.net = excise_near(scene.B.net, scene.h_limits, scene.excision_b);
  if (scene.A.net.size() < 2 || scene.B.net.size() < 2)
    throw SceneInvalid("excision removed nearly all net points; lower the excision factor");

  auto make_factor = [&](const std::vector<std::string>& names) {
    words::FactorGroup f;
    f.gen_names = names;
    f.free_group = true;
    f.gens.reserve(names.size());
    for (const std::string& name : names) f.gens.push_back(cfg.rep.at(name));
    return f;
  };
  scene.presentation.a = make_factor(factor_a);
  scene.presentation.b = make_factor(factor_b);
  scene.presentation.h.gen_names = {"eta"};
  scene.presentation.h.gens = {eta};
  scene.presentation.h.words_in_a = {edge_in_a};
  scene.presentation.h.words_in_b = {edge_in_b};
  scene.presentation.cmp.tol = 1e-7;
  scene.presentation.validate();
  scene.validate();
  return scene;
}

TripleScene build_triple_scene(const ArcSceneConfig& cfg,
                               const std::vector<std::string>& base_names,
                               const std::string& stable_name, const words::FreeWord& edge_word,
                               const words::FreeWord& edge_in_m,
                               const words::FreeWord& conj_in_m) {
  check_arc_config(cfg);
  if (base_names.empty()) throw ConfigInvalid("base group names must be nonempty");
  if (edge_word.empty()) throw ConfigInvalid("edge word must be nonempty");
  int s_idx = cfg.rep.index_of(stable_name);
  if (s_idx < 0) throw UnboundGenerator("stable letter is not a generator of the representation");
  int s_letter = s_idx + 1;

  FreeWord conj_word;
  conj_word.push_back(s_letter);
  conj_word.insert(conj_word.end(), edge_word.begin(), edge_word.end());
  conj_word.push_back(-s_letter);
  conj_word = words::free_reduce(conj_word);

  std::vector<double> cuts = cut_angles(cfg.shadow, {edge_word, conj_word});
  std::vector<std::vector<Flag>> nets;
  for (size_t i = 0; i < cuts.size(); ++i) {
    double lo = cuts[i];
    double hi = i + 1 < cuts.size() ? cuts[i + 1] : cuts[0] + 2.0 * M_PI;
    nets.push_back(arc_net(lo, hi, cfg.net_cap, cfg.type));
  }

  GroupMatrix eta = reps::evaluate(cfg.rep, edge_word);
  GroupMatrix eta_conj = reps::evaluate(cfg.rep, conj_word);
  reps::LoxodromicData minus_axis = reps::axis_flags(eta, cfg.type);
  reps::LoxodromicData plus_axis = reps::axis_flags(eta_conj, cfg.type);

  // B+ holds the stable letter's attracting fixed point, B- its repelling one.
  int plus_arc = arc_of(cuts, reps::boundary_angle(cfg.shadow.at(stable_name), true));
  int minus_arc = arc_of(cuts, reps::boundary_angle(cfg.shadow.at(stable_name), false));
  if (plus_arc == minus_arc)
    throw SceneInvalid("the stable letter's fixed flags land in the same arc");

  TripleScene scene;
  scene.type = cfg.type;
  scene.rep = cfg.rep;
  scene.stable_name = stable_name;
  scene.depth = cfg.depth;
  scene.margin = cfg.margin;
  scene.tol = cfg.tol;
  scene.sample_depth = cfg.sample_depth;
  scene.seed = cfg.seed;
  scene.h_plus_limits = {plus_axis.attracting, plus_axis.repelling};
  scene.h_minus_limits = {minus_axis.attracting, minus_axis.repelling};

  auto radius_of = [&](const std::vector<Flag>& net) {
    return cfg.inflation > 0 ? cfg.inflation : 2.0 * max_consecutive_spacing(net);
  };
  scene.B_plus.label = "B+";
  scene.B_plus.net = nets[plus_arc];
  scene.B_plus.r = radius_of(scene.B_plus.net);
  scene.B_minus.label = "B-";
  scene.B_minus.net = nets[minus_arc];
  scene.B_minus.r = radius_of(scene.B_minus.net);

  scene.A.label = "A";
  double a_r = cfg.inflation;
  for (int i = 0; i < static_cast<int>(nets.size()); ++i) {
    if (i == plus_arc || i == minus_arc) continue;
    if (cfg.inflation <= 0) a_r = std::max(a_r, radius_of(nets[i]));
    scene.A.net.insert(scene.A.net.end(), nets[i].begin(), nets[i].end());
  }
  scene.A.r = a_r;

  std::vector<Flag> all_limits = scene.h_plus_limits;
  all_limits.insert(all_limits.end(), scene.h_minus_limits.begin(), scene.h_minus_limits.end());
  scene.excision_a = cfg.excision_factor * scene.A.r;
  scene.excision_plus = cfg.excision_factor * scene.B_plus.r;
  scene.excision_minus = cfg.excision_factor * scene.B_minus.r;
  scene.A.net = excise_near(scene.A.net, all_limits, scene.excision_a);
  scene.B_plus.net = excise_near(scene.B_plus.net, all_limits, scene.excision_plus);
  scene.B_minus.net = excise_near(scene.B_minus.net, all_limits, scene.excision_minus);
  if (scene.A.net.size() < 2 || scene.B_plus.net.size() < 2 || scene.B_minus.net.size() < 2) {
    std::ostringstream msg;
    msg << "excision removed nearly all net points; lower the excision factor "
        << "(kept A=" << scene.A.net.size() << " B+=" << scene.B_plus.net.size()
        << " B-=" << scene.B_minus.net.size() << ", radii A=" << scene.A.r
        << " B+=" << scene.B_plus.r << " B-=" << scene.B_minus.r << ")";
    throw SceneInvalid(msg.str());
  }

  words::FactorGroup m;
  m.gen_names = base_names;
  m.free_group = true;
  m.gens.reserve(base_names.size());
  for (const std::string& name : base_names) m.gens.push_back(cfg.rep.at(name));
  scene.presentation.m = m;
  scene.presentation.stable = cfg.rep.at(stable_name);
  scene.presentation.h_minus.gen_names = {"eta"};
  scene.presentation.h_minus.gens = {eta};
  scene.presentation.h_minus.words_in_m = {edge_in_m};
  scene.presentation.h_plus.gen_names = {"eta_conj"};
  scene.presentation.h_plus.gens = {eta_conj};
  scene.presentation.h_plus.words_in_m = {conj_in_m};
  scene.presentation.cmp.tol = 1e-7;
  scene.presentation.validate();
  scene.validate();
  return scene;
}

}  // namespace amalgam::certify
