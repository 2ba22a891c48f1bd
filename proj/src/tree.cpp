#include "amalgam/tree.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "amalgam/errors.hpp"

namespace amalgam::tree {

using words::AmalgamPresentation;
using words::Factor;
using words::FreeWord;
using words::HnnPresentation;
using words::NormalForm;
using words::Subgroup;
using words::Syllable;
using words::Word;

namespace {

Factor opposite(Factor f) { return f == Factor::A ? Factor::B : Factor::A; }

struct EdgeCandidate {
  GroupMatrix elt;    // element of the edge subgroup
  FreeWord sub_word;  // word in the subgroup's own generators
  FreeWord right;     // the same element as a word in the ambient group's generators
};

// Express a subgroup element as a word in the HNN base group.
FreeWord sub_word_in_m(const HnnPresentation& p, const Subgroup& h, const GroupMatrix& elt,
                       const FreeWord& sub_word) {
  if (h.trivial()) return {};
  if (!h.words_in_m.empty() && h.words_in_m.size() == h.gens.size())
    return h.embed_word(sub_word, h.words_in_m);
  if (!p.m.free_group) {
    const words::Ball& b = p.m.ball(p.cmp);
    const int idx = b.find(elt, p.cmp);
    if (idx >= 0) return b.word_of[static_cast<size_t>(idx)];
  }
  throw Error("edge subgroup element has no word in the base group");
}

// Edge-subgroup elements a canonicaliser may multiply in, each carrying its
// word in the ambient group, sorted by that word's length so searches can
// stop once no remaining candidate can shorten the result.
//
// In a free ambient group |reduce(u v)| >= |v| - |u|, so only candidates with
// embedded length <= bound can beat the identity candidate; for a cyclic edge
// subgroup whose embedded generator word is cyclically reduced the embedded
// length is k|w|, which lets us enumerate the complete relevant set directly
// and never touch the (possibly enormous) matrix ball. Other subgroups fall
// back to the budget-limited ball enumeration.
template <typename EmbedFn>
std::vector<EdgeCandidate> edge_candidates(const Subgroup& h, const CompareOptions& cmp, int dim,
                                           bool ambient_free, int bound, EmbedFn&& embed) {
  std::vector<EdgeCandidate> out;
  out.push_back({GroupMatrix::identity(dim, true), {}, {}});
  if (h.trivial()) return out;
  if (ambient_free && h.gens.size() == 1) {
    const FreeWord w1 = embed(h.gens[0], {1});
    if (!w1.empty() && w1.front() != -w1.back()) {
      GroupMatrix pos = h.gens[0];
      GroupMatrix neg = h.gens[0].inverse();
      FreeWord sw_pos{1}, sw_neg{-1};
      for (int k = 1; static_cast<int>(w1.size()) * k <= bound; ++k) {
        out.push_back({pos, sw_pos, embed(pos, sw_pos)});
        out.push_back({neg, sw_neg, embed(neg, sw_neg)});
        pos = pos * h.gens[0];
        neg = neg * h.gens[0].inverse();
        sw_pos.push_back(1);
        sw_neg.push_back(-1);
      }
    } else {
      const words::Ball& b = h.ball(cmp);
      for (size_t i = 0; i < b.elts.size(); ++i)
        if (!b.word_of[i].empty()) out.push_back({b.elts[i], b.word_of[i], embed(b.elts[i], b.word_of[i])});
    }
  } else {
    const words::Ball& b = h.ball(cmp);
    for (size_t i = 0; i < b.elts.size(); ++i)
      if (!b.word_of[i].empty()) out.push_back({b.elts[i], b.word_of[i], embed(b.elts[i], b.word_of[i])});
  }
  std::stable_sort(out.begin(), out.end(), [](const EdgeCandidate& x, const EdgeCandidate& y) {
    if (x.right.size() != y.right.size()) return x.right.size() < y.right.size();
    return words::word_less(x.right, y.right);
  });
  return out;
}

std::string word_key(const FreeWord& w) {
  std::ostringstream os;
  for (size_t i = 0; i < w.size(); ++i) {
    if (i) os << '.';
    os << w[i];
  }
  return os.str();
}

std::string amalgam_vertex_key(Factor side, const NormalForm& rep) {
  std::ostringstream os;
  os << (side == Factor::A ? "VA|" : "VB|");
  for (const Syllable& s : rep.syllables)
    os << (s.factor == Factor::A ? 'a' : 'b') << word_key(s.gens) << ';';
  return os.str();
}

std::string hnn_vertex_key(const NormalForm& rep) {
  std::ostringstream os;
  os << "VM|";
  for (const Syllable& s : rep.syllables) {
    if (s.factor == Factor::Stable)
      os << 'f' << s.stable_exp << ';';
    else
      os << 'm' << word_key(s.gens) << ';';
  }
  return os.str();
}

// Left-greedy coset minimisation of an alternating syllable sequence. For each
// position i < n (and also i = n-1 when `coset` is set) the syllable is
// replaced by the least element of carry^-1 * s_i * H under (word length, lex)
// on canonical factor words; the chosen subgroup element is carried rightward.
// Returns the rewritten syllables; the final carry is dropped when `coset`.
std::vector<Syllable> minimize_amalgam(std::vector<Syllable> s, const AmalgamPresentation& p,
                                       bool coset) {
  if (s.empty()) return s;
  const int dim = p.dim();
  GroupMatrix carry = GroupMatrix::identity(dim, true);
  FreeWord carry_sub;
  const size_t last = s.size() - 1;
  for (size_t i = 0; i < s.size(); ++i) {
    const Factor f = s[i].factor;
    const bool fac_free = p.factor(f).free_group;
    const FreeWord left =
        words::free_inverse(words::edge_word_in_factor(p, f, carry, carry_sub));
    const GroupMatrix head = carry.inverse() * s[i].elt;
    const FreeWord head_word = words::free_concat(left, s[i].gens);

    if (i == last && !coset) {
      s[i].elt = head;
      s[i].gens = words::factor_word_for(p, f, head, head_word);
      break;
    }

    bool have = false;
    GroupMatrix best_elt = head;
    FreeWord best_word;
    EdgeCandidate best_cand{GroupMatrix::identity(dim, true), {}, {}};
    const int slack = static_cast<int>(head_word.size());
    const std::vector<EdgeCandidate> cands = edge_candidates(
        p.h, p.cmp, dim, fac_free, 2 * slack, [&](const GroupMatrix& g, const FreeWord& sw) {
          return words::edge_word_in_factor(p, f, g, sw);
        });
    for (const EdgeCandidate& c : cands) {
      // In a free factor |reduce(head * eta)| >= |eta| - |head|, so once the
      // candidates (sorted by |eta|) pass best + slack none can win.
      if (fac_free && have &&
          static_cast<int>(c.right.size()) > static_cast<int>(best_word.size()) + slack)
        break;
      const GroupMatrix elt = head * c.elt;
      const FreeWord w =
          words::factor_word_for(p, f, elt, words::free_concat(head_word, c.right));
      if (!have || words::word_less(w, best_word)) {
        have = true;
        best_elt = elt;
        best_word = w;
        best_cand = c;
      }
    }
    s[i].elt = best_elt;
    s[i].gens = best_word;
    carry = best_cand.elt;
    carry_sub = best_cand.sub_word;
  }
  return s;
}

// Britton syllables unpacked into alternating (mu_i, f^{eps_{i+1}}) runs.
struct HnnRuns {
  std::vector<GroupMatrix> mu;
  std::vector<FreeWord> mu_word;
  std::vector<int> eps;  // eps.size() = stable letters, mu.size() = eps.size() + 1
};

HnnRuns unpack_hnn(const NormalForm& nf, const HnnPresentation& p) {
  HnnRuns r;
  const int dim = p.dim();
  r.mu.push_back(GroupMatrix::identity(dim, true));
  r.mu_word.push_back({});
  for (const Syllable& s : nf.syllables) {
    if (s.factor == Factor::Stable) {
      const int sign = s.stable_exp > 0 ? 1 : -1;
      for (int j = 0; j < std::abs(s.stable_exp); ++j) {
        r.eps.push_back(sign);
        r.mu.push_back(GroupMatrix::identity(dim, true));
        r.mu_word.push_back({});
      }
    } else {
      r.mu.back() = r.mu.back() * s.elt;
      r.mu_word.back() = words::free_concat(r.mu_word.back(), s.gens);
    }
  }
  return r;
}

std::vector<Syllable> minimize_hnn(const NormalForm& nf, const HnnPresentation& p, bool coset) {
  HnnRuns r = unpack_hnn(nf, p);
  const int dim = p.dim();
  const size_t n = r.eps.size();
  GroupMatrix carry = GroupMatrix::identity(dim, true);
  FreeWord carry_m;  // word of carry in the base group
  for (size_t i = 0; i < n; ++i) {
    const Subgroup& h = r.eps[i] > 0 ? p.h_plus : p.h_minus;
    const FreeWord left = words::free_inverse(carry_m);
    const GroupMatrix head = carry.inverse() * r.mu[i];
    const FreeWord head_word = words::free_concat(left, r.mu_word[i]);

    bool have = false;
    GroupMatrix best_elt = head;
    FreeWord best_word;
    EdgeCandidate best_cand{GroupMatrix::identity(dim, true), {}, {}};
    const int slack = static_cast<int>(head_word.size());
    const std::vector<EdgeCandidate> cands = edge_candidates(
        h, p.cmp, dim, p.m.free_group, 2 * slack,
        [&](const GroupMatrix& g, const FreeWord& sw) { return sub_word_in_m(p, h, g, sw); });
    for (const EdgeCandidate& c : cands) {
      if (p.m.free_group && have &&
          static_cast<int>(c.right.size()) > static_cast<int>(best_word.size()) + slack)
        break;
      const GroupMatrix elt = head * c.elt;
      const FreeWord w = words::m_word_for(p, elt, words::free_concat(head_word, c.right));
      if (!have || words::word_less(w, best_word)) {
        have = true;
        best_elt = elt;
        best_word = w;
        best_cand = c;
      }
    }
    r.mu[i] = best_elt;
    r.mu_word[i] = best_word;
    // Push the chosen subgroup element through the stable letter:
    // eta f^e = f^e (f^-e eta f^e).
    if (r.eps[i] > 0) {
      carry = p.phi_inv(best_cand.elt);
      carry_m = sub_word_in_m(p, p.h_minus, carry, best_cand.sub_word);
    } else {
      carry = p.phi(best_cand.elt);
      carry_m = sub_word_in_m(p, p.h_plus, carry, best_cand.sub_word);
    }
  }
  // Trailing base-group factor: absorbed by the coset, corrected otherwise.
  GroupMatrix tail = carry.inverse() * r.mu[n];
  FreeWord tail_word =
      words::m_word_for(p, tail, words::free_concat(words::free_inverse(carry_m), r.mu_word[n]));

  std::vector<Syllable> out;
  for (size_t i = 0; i <= n; ++i) {
    const bool last = i == n;
    if (!last || !coset) {
      const GroupMatrix& g = last ? tail : r.mu[i];
      const FreeWord& w = last ? tail_word : r.mu_word[i];
      if (!w.empty() || !is_identity(g, p.cmp)) {
        Syllable s;
        s.factor = Factor::M;
        s.elt = g;
        s.gens = w;
        out.push_back(s);
      }
    }
    // Stable letters stay as unit syllables, the Britton reducer's convention.
    if (!last) out.push_back(p.stable_syllable(r.eps[i]));
  }
  return out;
}

NormalForm assemble_amalgam(const std::vector<Syllable>& s, const AmalgamPresentation& p) {
  Word w;
  for (const Syllable& syl : s)
    if (!syl.gens.empty() || !is_identity(syl.elt, p.cmp)) w.syllables.push_back(syl);
  return words::amalgam_normal_form(w, p);
}

NormalForm assemble_hnn(const std::vector<Syllable>& s) {
  NormalForm nf;
  nf.syllables = s;
  int rl = 0;
  for (const Syllable& syl : s)
    if (syl.factor == Factor::Stable) rl += std::abs(syl.stable_exp);
  nf.relative_length = rl;
  return nf;
}

// Number of syllables of the canonical representative of (element)Factor(side),
// with the leading factor tag when nonzero. Cheap: no coset minimisation is
// needed because length and tags are invariants of the coset.
std::pair<int, Factor> coset_shape(const NormalForm& nf, Factor side,
                                   const AmalgamPresentation& p) {
  const size_t l = nf.syllables.size();
  if (l == 0) return {0, side};
  if (l == 1) {
    const Syllable& s = nf.syllables[0];
    if (s.factor == side) return {0, side};
    const words::Membership m = p.in_h(s);
    if (m == words::Membership::undecidable)
      throw MembershipUndecidable("edge-subgroup oracle cannot classify a one-syllable coset");
    if (m == words::Membership::yes) return {0, side};
    return {1, s.factor};
  }
  const int m =
      nf.syllables.back().factor == side ? static_cast<int>(l) - 1 : static_cast<int>(l);
  return {m, nf.syllables.front().factor};
}

}  // namespace

NormalForm canonical_element(const NormalForm& nf, const AmalgamPresentation& p) {
  if (nf.syllables.empty()) return nf;
  return assemble_amalgam(minimize_amalgam(nf.syllables, p, false), p);
}

NormalForm canonical_element(const NormalForm& nf, const HnnPresentation& p) {
  if (nf.syllables.empty()) return nf;
  return assemble_hnn(minimize_hnn(nf, p, false));
}

TreeVertex base_vertex(Factor side, const AmalgamPresentation&) {
  if (side != Factor::A && side != Factor::B)
    throw TypeMismatch("amalgam vertices live over factor A or B");
  TreeVertex v;
  v.side = side;
  v.key = amalgam_vertex_key(side, v.rep);
  return v;
}

TreeVertex base_vertex(const HnnPresentation&) {
  TreeVertex v;
  v.hnn = true;
  v.side = Factor::M;
  v.key = hnn_vertex_key(v.rep);
  return v;
}

TreeVertex vertex_of(const NormalForm& nf, Factor side, const AmalgamPresentation& p) {
  if (side != Factor::A && side != Factor::B)
    throw TypeMismatch("amalgam vertices live over factor A or B");
  std::vector<Syllable> s = nf.syllables;
  if (s.size() == 1) {
    const Syllable& only = s[0];
    if (only.factor == side) {
      s.clear();
    } else {
      const words::Membership m = p.in_h(only);
      if (m == words::Membership::undecidable)
        throw MembershipUndecidable("edge-subgroup oracle cannot classify a one-syllable coset");
      if (m == words::Membership::yes) s.clear();
    }
  } else if (!s.empty() && s.back().factor == side) {
    s.pop_back();
  }
  TreeVertex v;
  v.side = side;
  if (!s.empty()) {
    v.rep.syllables = minimize_amalgam(std::move(s), p, true);
    v.rep.relative_length = static_cast<int>(v.rep.syllables.size());
  }
  v.key = amalgam_vertex_key(side, v.rep);
  return v;
}

TreeVertex vertex_of(const NormalForm& nf, const HnnPresentation& p) {
  TreeVertex v;
  v.hnn = true;
  v.side = Factor::M;
  v.rep = assemble_hnn(minimize_hnn(nf, p, true));
  v.key = hnn_vertex_key(v.rep);
  return v;
}

int tree_distance(const TreeVertex& v, const TreeVertex& w, const AmalgamPresentation& p) {
  if (v.hnn || w.hnn) throw TypeMismatch("HNN vertex passed to an amalgam tree");
  const Word delta =
      words::concat(words::inverse_word(v.rep.as_word()), w.rep.as_word());
  const NormalForm nf = words::amalgam_normal_form(delta, p);
  const auto [m, first] = coset_shape(nf, w.side, p);
  if (m == 0) return v.side == w.side ? 0 : 1;
  return m + (first == v.side ? 0 : 1);
}

int tree_distance(const TreeVertex& v, const TreeVertex& w, const HnnPresentation& p) {
  if (!v.hnn || !w.hnn) throw TypeMismatch("amalgam vertex passed to an HNN tree");
  const Word delta =
      words::concat(words::inverse_word(v.rep.as_word()), w.rep.as_word());
  return words::hnn_britton_reduce(delta, p).relative_length;
}

std::vector<TreeVertex> normal_form_path(const NormalForm& nf, const AmalgamPresentation& p) {
  std::vector<TreeVertex> path;
  if (nf.relative_length == 0) {
    path.push_back(base_vertex(Factor::A, p));
    return path;
  }
  const Factor first = nf.syllables.front().factor;
  path.push_back(base_vertex(opposite(first), p));
  path.push_back(base_vertex(first, p));
  NormalForm prefix;
  for (const Syllable& s : nf.syllables) {
    prefix.syllables.push_back(s);
    prefix.relative_length = static_cast<int>(prefix.syllables.size());
    path.push_back(vertex_of(prefix, opposite(s.factor), p));
  }
  return path;
}

std::vector<TreeVertex> normal_form_path(const NormalForm& nf, const HnnPresentation& p) {
  std::vector<TreeVertex> path;
  path.push_back(base_vertex(p));
  NormalForm prefix;
  int rl = 0;
  for (const Syllable& s : nf.syllables) {
    if (s.factor != Factor::Stable) {
      prefix.syllables.push_back(s);
      continue;
    }
    const int sign = s.stable_exp > 0 ? 1 : -1;
    for (int j = 0; j < std::abs(s.stable_exp); ++j) {
      prefix.syllables.push_back(p.stable_syllable(sign));
      prefix.relative_length = ++rl;
      path.push_back(vertex_of(prefix, p));
    }
  }
  return path;
}

}  // namespace amalgam::tree
