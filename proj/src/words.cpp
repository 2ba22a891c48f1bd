#include "amalgam/words.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <sstream>

namespace amalgam::words {

FreeWord free_reduce(const FreeWord& w) {
  FreeWord out;
  for (int x : w) {
    if (x == 0) throw UnboundGenerator("generator index 0 is invalid");
    if (!out.empty() && out.back() == -x)
      out.pop_back();
    else
      out.push_back(x);
  }
  return out;
}

FreeWord free_concat(const FreeWord& a, const FreeWord& b) {
  FreeWord w = a;
  w.insert(w.end(), b.begin(), b.end());
  return free_reduce(w);
}

FreeWord free_inverse(const FreeWord& w) {
  FreeWord out(w.rbegin(), w.rend());
  for (int& x : out) x = -x;
  return out;
}

namespace {

// Letter order: generator index ascending, a generator before its inverse
// (1 < -1 < 2 < -2 < ...).
bool letter_less(int x, int y) {
  const int ax = std::abs(x), ay = std::abs(y);
  if (ax != ay) return ax < ay;
  return x > 0 && y < 0;
}

}  // namespace

bool word_less(const FreeWord& a, const FreeWord& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), letter_less);
}

std::vector<int> signed_alphabet(int num_gens) {
  std::vector<int> out;
  for (int i = 1; i <= num_gens; ++i) {
    out.push_back(i);
    out.push_back(-i);
  }
  return out;
}

std::string word_to_string(const FreeWord& w, const std::vector<std::string>& names) {
  if (w.empty()) return "1";
  std::ostringstream os;
  for (size_t i = 0; i < w.size();) {
    const int g = w[i];
    size_t j = i;
    while (j < w.size() && w[j] == g) ++j;
    const size_t idx = static_cast<size_t>(std::abs(g)) - 1;
    os << (idx < names.size() ? names[idx] : "g" + std::to_string(idx + 1));
    const long long exp = static_cast<long long>(j - i) * (g > 0 ? 1 : -1);
    if (exp != 1) os << '^' << exp;
    i = j;
    if (i < w.size()) os << '.';
  }
  return os.str();
}

std::string factor_name(Factor f) {
  switch (f) {
    case Factor::A: return "A";
    case Factor::B: return "B";
    case Factor::M: return "M";
    case Factor::Stable: return "f";
  }
  return "?";
}

Word concat(const Word& a, const Word& b) {
  Word w = a;
  w.syllables.insert(w.syllables.end(), b.syllables.begin(), b.syllables.end());
  return w;
}

Word inverse_word(const Word& w) {
  Word out;
  out.syllables.reserve(w.syllables.size());
  for (auto it = w.syllables.rbegin(); it != w.syllables.rend(); ++it) {
    Syllable s = *it;
    s.elt = it->elt.inverse();
    s.gens = free_inverse(it->gens);
    s.stable_exp = -it->stable_exp;
    out.syllables.push_back(std::move(s));
  }
  return out;
}

GroupMatrix evaluate(const Word& w, int dim, bool exact_identity) {
  GroupMatrix g = GroupMatrix::identity(dim, exact_identity);
  for (const Syllable& s : w.syllables) g = g * s.elt;
  return g;
}

int relative_length(const NormalForm& nf) { return nf.relative_length; }

int Ball::find(const GroupMatrix& g, const CompareOptions& cmp) const {
  if (g.is_exact() && !index.empty()) {
    auto it = index.find(g.key());
    if (it != index.end()) return it->second;
    if (!cmp.projective) return -1;
    auto it2 = index.find(GroupMatrix(g.exact().negated()).key());
    return it2 == index.end() ? -1 : it2->second;
  }
  for (size_t i = 0; i < elts.size(); ++i)
    if (matrices_equal(elts[i], g, cmp)) return static_cast<int>(i);
  return -1;
}

Ball enumerate_ball(const std::vector<GroupMatrix>& gens, int radius, const CompareOptions& cmp,
                    size_t max_elements, double norm_cap) {
  Ball ball;
  ball.radius = radius;
  const bool exact_mode =
      std::all_of(gens.begin(), gens.end(), [](const GroupMatrix& g) { return g.is_exact(); });
  const int dim = gens.empty() ? 1 : gens[0].dim();

  // Alphabet in canonical letter order so breadth-first discovery yields the
  // lexicographically least shortest word for every element.
  std::vector<std::pair<int, GroupMatrix>> alphabet;
  for (int i : signed_alphabet(static_cast<int>(gens.size())))
    alphabet.emplace_back(i, i > 0 ? gens[i - 1] : gens[-i - 1].inverse());

  auto store = [&](const GroupMatrix& g, const FreeWord& w) -> bool {
    if (exact_mode) {
      const std::string k = g.key();
      if (ball.index.count(k)) return false;
      ball.index.emplace(k, static_cast<int>(ball.elts.size()));
    } else {
      for (const GroupMatrix& e : ball.elts)
        if (matrices_equal(e, g, cmp)) return false;
    }
    ball.elts.push_back(g);
    ball.word_of.push_back(w);
    return true;
  };

  store(GroupMatrix::identity(dim, exact_mode), {});
  std::vector<int> frontier{0};
  bool truncated = false;
  bool capped = false;
  for (int level = 0; level < radius && !frontier.empty(); ++level) {
    std::vector<int> next;
    for (int idx : frontier) {
      const GroupMatrix base = ball.elts[static_cast<size_t>(idx)];
      const FreeWord base_word = ball.word_of[static_cast<size_t>(idx)];
      for (const auto& [sig, mat] : alphabet) {
        // Immediate backtrack can never discover a new shortest word.
        if (!base_word.empty() && base_word.back() == -sig) continue;
        GroupMatrix g = base * mat;
        if (!g.is_exact() && g.approx().cwiseAbs().maxCoeff() > norm_cap) {
          truncated = true;
          continue;
        }
        if (ball.elts.size() >= max_elements) {
          capped = true;
          break;
        }
        FreeWord w = base_word;
        w.push_back(sig);
        if (store(g, w)) next.push_back(static_cast<int>(ball.elts.size()) - 1);
      }
      if (capped) break;
    }
    if (capped) break;
    frontier = std::move(next);
  }
  ball.complete = frontier.empty() && !truncated && !capped;
  return ball;
}

namespace {

bool all_exact(const std::vector<GroupMatrix>& gens) {
  return std::all_of(gens.begin(), gens.end(),
                     [](const GroupMatrix& g) { return g.is_exact(); });
}

std::string embed_key(const std::vector<FreeWord>& embed) {
  std::ostringstream os;
  for (const FreeWord& w : embed) {
    for (int x : w) os << x << ',';
    os << ';';
  }
  return os.str();
}

}  // namespace

int FactorGroup::dim() const {
  if (gens.empty()) throw UnboundGenerator("factor group has no generators");
  return gens[0].dim();
}

GroupMatrix FactorGroup::eval(const FreeWord& w) const {
  GroupMatrix g = GroupMatrix::identity(dim(), all_exact(gens));
  for (int x : w) {
    const size_t i = static_cast<size_t>(std::abs(x)) - 1;
    if (x == 0 || i >= gens.size()) throw UnboundGenerator("generator index out of range");
    g = g * (x > 0 ? gens[i] : gens[i].inverse());
  }
  return g;
}

const Ball& FactorGroup::ball(const CompareOptions& cmp) const {
  if (free_group) throw Error("free factors are never enumerated as matrix balls");
  if (!ball_) ball_ = enumerate_ball(gens, budget, cmp);
  return *ball_;
}

std::vector<std::pair<FreeWord, GroupMatrix>> FactorGroup::elements_up_to(
    int maxlen, const CompareOptions& cmp) const {
  std::vector<std::pair<FreeWord, GroupMatrix>> out;
  if (free_group) {
    // All freely reduced nontrivial words in (length, lex) order.
    std::deque<std::pair<FreeWord, GroupMatrix>> frontier;
    frontier.emplace_back(FreeWord{}, GroupMatrix::identity(dim(), all_exact(gens)));
    const auto alphabet = signed_alphabet(static_cast<int>(gens.size()));
    for (int level = 0; level < maxlen; ++level) {
      std::deque<std::pair<FreeWord, GroupMatrix>> next;
      for (const auto& [w, g] : frontier) {
        for (int sig : alphabet) {
          if (!w.empty() && w.back() == -sig) continue;
          FreeWord w2 = w;
          w2.push_back(sig);
          const size_t i = static_cast<size_t>(std::abs(sig)) - 1;
          GroupMatrix g2 = g * (sig > 0 ? gens[i] : gens[i].inverse());
          out.emplace_back(w2, g2);
          next.emplace_back(std::move(w2), std::move(g2));
        }
      }
      frontier = std::move(next);
    }
    return out;
  }
  const Ball& b = ball(cmp);
  if (!b.complete && b.radius < maxlen)
    throw MembershipUndecidable("factor ball shallower than requested enumeration depth");
  for (size_t i = 0; i < b.elts.size(); ++i) {
    if (b.word_of[i].empty()) continue;
    if (static_cast<int>(b.word_of[i].size()) <= maxlen) out.emplace_back(b.word_of[i], b.elts[i]);
  }
  return out;
}

const Ball& Subgroup::ball(const CompareOptions& cmp) const {
  if (!ball_) ball_ = enumerate_ball(gens, budget, cmp);
  return *ball_;
}

Membership Subgroup::contains(const GroupMatrix& g, const CompareOptions& cmp,
                              FreeWord* subgroup_word) const {
  if (trivial()) {
    if (is_identity(g, cmp)) {
      if (subgroup_word) subgroup_word->clear();
      return Membership::yes;
    }
    return Membership::no;
  }
  const Ball& b = ball(cmp);
  const int idx = b.find(g, cmp);
  if (idx >= 0) {
    if (subgroup_word) *subgroup_word = b.word_of[static_cast<size_t>(idx)];
    return Membership::yes;
  }
  return b.complete ? Membership::no : Membership::undecidable;
}

const Subgroup::WordBall& Subgroup::word_ball(const std::vector<FreeWord>& embed) const {
  const std::string key = embed_key(embed);
  auto it = word_balls_.find(key);
  if (it != word_balls_.end()) return it->second;
  if (embed.size() != gens.size())
    throw SceneInvalid("subgroup embedding words do not match generator count");

  WordBall wb;
  std::vector<FreeWord> gen_words;
  gen_words.reserve(embed.size());
  for (const FreeWord& w : embed) gen_words.push_back(free_reduce(w));
  wb.monotone = gen_words.size() == 1 && !gen_words[0].empty() &&
                gen_words[0].front() != -gen_words[0].back();

  std::map<FreeWord, int> seen;
  std::deque<std::pair<FreeWord, FreeWord>> frontier;  // (factor word, subgroup word)
  seen[{}] = 0;
  wb.factor_words.push_back({});
  wb.subgroup_words.push_back({});
  frontier.emplace_back(FreeWord{}, FreeWord{});
  const auto alphabet = signed_alphabet(static_cast<int>(gen_words.size()));
  for (int level = 0; level < budget && !frontier.empty(); ++level) {
    std::deque<std::pair<FreeWord, FreeWord>> next;
    int min_len = -1;
    for (const auto& [fw, sw] : frontier) {
      for (int sig : alphabet) {
        if (!sw.empty() && sw.back() == -sig) continue;
        const size_t i = static_cast<size_t>(std::abs(sig)) - 1;
        FreeWord fw2 = free_concat(fw, sig > 0 ? gen_words[i] : free_inverse(gen_words[i]));
        if (seen.count(fw2)) continue;
        seen[fw2] = static_cast<int>(wb.factor_words.size());
        FreeWord sw2 = sw;
        sw2.push_back(sig);
        if (min_len < 0 || static_cast<int>(fw2.size()) < min_len)
          min_len = static_cast<int>(fw2.size());
        wb.factor_words.push_back(fw2);
        wb.subgroup_words.push_back(sw2);
        next.emplace_back(std::move(fw2), std::move(sw2));
      }
    }
    if (min_len >= 0) wb.min_last_level = min_len;
    frontier = std::move(next);
  }
  wb.complete = frontier.empty();
  auto [pos, inserted] = word_balls_.emplace(key, std::move(wb));
  (void)inserted;
  return pos->second;
}

Membership Subgroup::contains_factor_word(const FreeWord& w, const std::vector<FreeWord>& embed,
                                          FreeWord* subgroup_word) const {
  const FreeWord rw = free_reduce(w);
  if (trivial()) {
    if (rw.empty() && subgroup_word) subgroup_word->clear();
    return rw.empty() ? Membership::yes : Membership::no;
  }
  const WordBall& wb = word_ball(embed);
  for (size_t i = 0; i < wb.factor_words.size(); ++i) {
    if (wb.factor_words[i] == rw) {
      if (subgroup_word) *subgroup_word = wb.subgroup_words[i];
      return Membership::yes;
    }
  }
  if (wb.complete) return Membership::no;
  if (wb.monotone && static_cast<int>(rw.size()) < wb.min_last_level) return Membership::no;
  return Membership::undecidable;
}

FreeWord Subgroup::embed_word(const FreeWord& subgroup_word,
                              const std::vector<FreeWord>& embed) const {
  FreeWord out;
  for (int sig : subgroup_word) {
    const size_t i = static_cast<size_t>(std::abs(sig)) - 1;
    if (sig == 0 || i >= embed.size())
      throw UnboundGenerator("subgroup generator index out of range");
    out = free_concat(out, sig > 0 ? embed[i] : free_inverse(embed[i]));
  }
  return out;
}

Syllable AmalgamPresentation::syllable(Factor f, const FreeWord& w) const {
  if (f != Factor::A && f != Factor::B) throw FactorMismatch("amalgam syllables are A or B");
  Syllable s;
  s.factor = f;
  s.gens = free_reduce(w);
  s.elt = factor(f).eval(s.gens);
  return s;
}

Word AmalgamPresentation::word(const std::vector<std::pair<Factor, FreeWord>>& sylls) const {
  Word w;
  for (const auto& [f, fw] : sylls) w.syllables.push_back(syllable(f, fw));
  return w;
}

const FactorGroup& AmalgamPresentation::factor(Factor f) const {
  if (f == Factor::A) return a;
  if (f == Factor::B) return b;
  throw FactorMismatch("no such amalgam factor");
}

Membership AmalgamPresentation::in_h(const Syllable& s, FreeWord* h_word) const {
  const FactorGroup& fac = factor(s.factor);
  const std::vector<FreeWord>& embed = s.factor == Factor::A ? h.words_in_a : h.words_in_b;
  if (fac.free_group && !h.trivial() && embed.size() == h.gens.size() && !embed.empty())
    return h.contains_factor_word(s.gens, embed, h_word);
  return h.contains(s.elt, cmp, h_word);
}

void AmalgamPresentation::validate() const {
  if (a.gens.empty() || b.gens.empty()) throw SceneInvalid("amalgam factors need generators");
  if (a.dim() != b.dim()) throw SceneInvalid("factor dimension mismatch");
  for (const GroupMatrix& g : h.gens)
    if (g.dim() != a.dim()) throw SceneInvalid("edge subgroup dimension mismatch");
  auto check_side = [&](const FactorGroup& fac, const std::vector<FreeWord>& embed,
                        const char* side) {
    if (embed.empty()) return;
    if (embed.size() != h.gens.size())
      throw SceneInvalid(std::string("edge embedding words (") + side +
                         ") mismatch generator count");
    for (size_t i = 0; i < h.gens.size(); ++i)
      if (!matrices_equal(fac.eval(embed[i]), h.gens[i], cmp))
        throw SceneInvalid(std::string("edge generator does not match its word in factor ") +
                           side);
  };
  check_side(a, h.words_in_a, "A");
  check_side(b, h.words_in_b, "B");
}

Syllable HnnPresentation::m_syllable(const FreeWord& w) const {
  Syllable s;
  s.factor = Factor::M;
  s.gens = free_reduce(w);
  s.elt = m.eval(s.gens);
  return s;
}

Syllable HnnPresentation::stable_syllable(int exp) const {
  if (exp != 1 && exp != -1) throw ConfigInvalid("stable syllable exponent must be +1 or -1");
  Syllable s;
  s.factor = Factor::Stable;
  s.stable_exp = exp;
  s.elt = exp > 0 ? stable : stable.inverse();
  return s;
}

std::vector<Syllable> HnnPresentation::stable_power(int k) const {
  std::vector<Syllable> out;
  for (int i = 0; i < std::abs(k); ++i) out.push_back(stable_syllable(k > 0 ? 1 : -1));
  return out;
}

Word HnnPresentation::word(const std::vector<std::pair<int, FreeWord>>& parts) const {
  Word w;
  for (const auto& [k, fw] : parts) {
    if (k == 0) {
      w.syllables.push_back(m_syllable(fw));
    } else {
      for (const Syllable& s : stable_power(k)) w.syllables.push_back(s);
    }
  }
  return w;
}

Membership HnnPresentation::in_h(const Syllable& s, bool plus, FreeWord* h_word) const {
  const Subgroup& sub = plus ? h_plus : h_minus;
  if (m.free_group && !sub.trivial() && sub.words_in_m.size() == sub.gens.size() &&
      !sub.words_in_m.empty())
    return sub.contains_factor_word(s.gens, sub.words_in_m, h_word);
  return sub.contains(s.elt, cmp, h_word);
}

GroupMatrix HnnPresentation::phi(const GroupMatrix& g) const {
  return stable * g * stable.inverse();
}

GroupMatrix HnnPresentation::phi_inv(const GroupMatrix& g) const {
  return stable.inverse() * g * stable;
}

void HnnPresentation::validate() const {
  if (m.gens.empty()) throw SceneInvalid("base group needs generators");
  if (stable.dim() != m.dim()) throw SceneInvalid("stable letter dimension mismatch");
  if (h_plus.gens.size() != h_minus.gens.size())
    throw SceneInvalid("associated subgroups must have paired generators");
  for (size_t i = 0; i < h_minus.gens.size(); ++i)
    if (!matrices_equal(phi(h_minus.gens[i]), h_plus.gens[i], cmp))
      throw SceneInvalid("stable letter does not conjugate paired edge generators");
  auto check_embed = [&](const Subgroup& sub, const char* side) {
    if (sub.words_in_m.empty()) return;
    if (sub.words_in_m.size() != sub.gens.size())
      throw SceneInvalid(std::string(side) + ": embedding words mismatch generator count");
    for (size_t i = 0; i < sub.gens.size(); ++i)
      if (!matrices_equal(m.eval(sub.words_in_m[i]), sub.gens[i], cmp))
        throw SceneInvalid(std::string(side) + ": edge generator does not match its base word");
  };
  check_embed(h_plus, "H+");
  check_embed(h_minus, "H-");
}

// Canonical word for a factor element after a merge: ball lookup for
// enumerable factors, freely reduced concatenation otherwise.
FreeWord factor_word_for(const AmalgamPresentation& p, Factor f, const GroupMatrix& elt,
                         const FreeWord& fallback) {
  const FactorGroup& fac = p.factor(f);
  if (!fac.free_group) {
    const Ball& b = fac.ball(p.cmp);
    const int idx = b.find(elt, p.cmp);
    if (idx >= 0) return b.word_of[static_cast<size_t>(idx)];
  }
  return free_reduce(fallback);
}

FreeWord m_word_for(const HnnPresentation& p, const GroupMatrix& elt, const FreeWord& fallback) {
  if (!p.m.free_group) {
    const Ball& b = p.m.ball(p.cmp);
    const int idx = b.find(elt, p.cmp);
    if (idx >= 0) return b.word_of[static_cast<size_t>(idx)];
  }
  return free_reduce(fallback);
}

// Express an edge-subgroup element (known by matrix and subgroup word) as a
// word in factor f's generators.
FreeWord edge_word_in_factor(const AmalgamPresentation& p, Factor f, const GroupMatrix& elt,
                             const FreeWord& h_word) {
  const std::vector<FreeWord>& embed = f == Factor::A ? p.h.words_in_a : p.h.words_in_b;
  if (!embed.empty() && embed.size() == p.h.gens.size()) return p.h.embed_word(h_word, embed);
  if (p.h.trivial()) return {};
  const FactorGroup& fac = p.factor(f);
  if (!fac.free_group) {
    const Ball& b = fac.ball(p.cmp);
    const int idx = b.find(elt, p.cmp);
    if (idx >= 0) return b.word_of[static_cast<size_t>(idx)];
  }
  throw Error("cannot express edge element as a word in factor " + factor_name(f));
}

namespace {

void check_amalgam_syllable(const AmalgamPresentation& p, const Syllable& s) {
  if (s.factor != Factor::A && s.factor != Factor::B)
    throw FactorMismatch("HNN syllable inside an amalgam word");
  const FactorGroup& fac = p.factor(s.factor);
  if (!s.gens.empty() || fac.free_group) return;  // constructed from a factor word
  const Ball& b = fac.ball(p.cmp);
  if (b.find(s.elt, p.cmp) >= 0) return;
  if (b.complete) throw FactorMismatch("syllable element not in its factor");
  throw MembershipUndecidable("factor ball too shallow to verify syllable membership");
}

}  // namespace

NormalForm amalgam_normal_form(const Word& w, const AmalgamPresentation& p) {
  for (const Syllable& s : w.syllables) check_amalgam_syllable(p, s);
  std::vector<Syllable> s = w.syllables;

  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < s.size(); ++i) {
      if (is_identity(s[i].elt, p.cmp)) {
        s.erase(s.begin() + static_cast<long>(i));
        changed = true;
        break;
      }
      if (i + 1 < s.size() && s[i].factor == s[i + 1].factor) {
        GroupMatrix prod = s[i].elt * s[i + 1].elt;
        FreeWord fw =
            factor_word_for(p, s[i].factor, prod, free_concat(s[i].gens, s[i + 1].gens));
        s[i].elt = std::move(prod);
        s[i].gens = std::move(fw);
        s.erase(s.begin() + static_cast<long>(i) + 1);
        changed = true;
        break;
      }
      if (s.size() >= 2) {
        FreeWord h_word;
        const Membership mem = p.in_h(s[i], &h_word);
        if (mem == Membership::undecidable)
          throw MembershipUndecidable("edge membership oracle exceeded its budget");
        if (mem == Membership::yes) {
          if (i + 1 < s.size()) {
            Syllable& t = s[i + 1];
            const FreeWord h_in_t = edge_word_in_factor(p, t.factor, s[i].elt, h_word);
            GroupMatrix prod = s[i].elt * t.elt;
            t.gens = factor_word_for(p, t.factor, prod, free_concat(h_in_t, t.gens));
            t.elt = std::move(prod);
          } else {
            Syllable& t = s[i - 1];
            const FreeWord h_in_t = edge_word_in_factor(p, t.factor, s[i].elt, h_word);
            GroupMatrix prod = t.elt * s[i].elt;
            t.gens = factor_word_for(p, t.factor, prod, free_concat(t.gens, h_in_t));
            t.elt = std::move(prod);
          }
          s.erase(s.begin() + static_cast<long>(i));
          changed = true;
          break;
        }
      }
    }
  }

  NormalForm nf;
  nf.syllables = std::move(s);
  if (nf.syllables.empty()) {
    nf.relative_length = 0;
  } else if (nf.syllables.size() == 1) {
    const Membership mem = p.in_h(nf.syllables[0], nullptr);
    if (mem == Membership::undecidable)
      throw MembershipUndecidable("edge membership oracle exceeded its budget");
    nf.relative_length = mem == Membership::yes ? 0 : 1;
  } else {
    nf.relative_length = static_cast<int>(nf.syllables.size());
  }
  return nf;
}

NormalForm hnn_britton_reduce(const Word& w, const HnnPresentation& p) {
  std::vector<Syllable> s;
  for (const Syllable& syl : w.syllables) {
    if (syl.factor == Factor::A || syl.factor == Factor::B)
      throw FactorMismatch("amalgam syllable inside an HNN word");
    if (syl.factor == Factor::Stable && syl.stable_exp != 1 && syl.stable_exp != -1)
      throw ConfigInvalid("stable syllable exponent must be +1 or -1");
    s.push_back(syl);
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i].factor == Factor::M && is_identity(s[i].elt, p.cmp)) {
        s.erase(s.begin() + static_cast<long>(i));
        changed = true;
        break;
      }
      if (s[i].factor == Factor::M && i + 1 < s.size() && s[i + 1].factor == Factor::M) {
        GroupMatrix prod = s[i].elt * s[i + 1].elt;
        s[i].gens = m_word_for(p, prod, free_concat(s[i].gens, s[i + 1].gens));
        s[i].elt = std::move(prod);
        s.erase(s.begin() + static_cast<long>(i) + 1);
        changed = true;
        break;
      }
      if (s[i].factor == Factor::Stable && i + 1 < s.size() &&
          s[i + 1].factor == Factor::Stable && s[i].stable_exp == -s[i + 1].stable_exp) {
        // f^e f^-e: a pinch with the implicit identity in between.
        s.erase(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(i) + 2);
        changed = true;
        break;
      }
      if (s[i].factor == Factor::Stable && i + 2 < s.size() && s[i + 1].factor == Factor::M &&
          s[i + 2].factor == Factor::Stable && s[i].stable_exp == -s[i + 2].stable_exp) {
        const bool down = s[i].stable_exp == -1;  // f^-1 (H_+) f -> phi^-1
        FreeWord h_word;
        const Membership mem = p.in_h(s[i + 1], down, &h_word);
        if (mem == Membership::undecidable)
          throw MembershipUndecidable("associated subgroup oracle exceeded its budget");
        if (mem == Membership::yes) {
          const Subgroup& target = down ? p.h_minus : p.h_plus;
          GroupMatrix conj = down ? p.phi_inv(s[i + 1].elt) : p.phi(s[i + 1].elt);
          FreeWord fallback;
          if (target.words_in_m.size() == target.gens.size() && !target.words_in_m.empty())
            fallback = target.embed_word(h_word, target.words_in_m);
          Syllable replacement;
          replacement.factor = Factor::M;
          replacement.gens = m_word_for(p, conj, fallback);
          replacement.elt = std::move(conj);
          s.erase(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(i) + 3);
          s.insert(s.begin() + static_cast<long>(i), std::move(replacement));
          changed = true;
          break;
        }
      }
    }
  }

  NormalForm nf;
  nf.relative_length = static_cast<int>(std::count_if(
      s.begin(), s.end(), [](const Syllable& x) { return x.factor == Factor::Stable; }));
  nf.syllables = std::move(s);
  return nf;
}

bool is_normal_form(const Word& w, const AmalgamPresentation& p) {
  const auto& s = w.syllables;
  if (s.empty()) return true;
  for (const Syllable& syl : s)
    if (syl.factor != Factor::A && syl.factor != Factor::B) return false;
  if (s.size() == 1) return !is_identity(s[0].elt, p.cmp);
  for (size_t i = 0; i < s.size(); ++i) {
    if (i + 1 < s.size() && s[i].factor == s[i + 1].factor) return false;
    const Membership mem = p.in_h(s[i], nullptr);
    if (mem == Membership::undecidable)
      throw MembershipUndecidable("edge membership oracle exceeded its budget");
    if (mem == Membership::yes) return false;
  }
  return true;
}

bool is_britton_reduced(const Word& w, const HnnPresentation& p) {
  const auto& s = w.syllables;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i].factor == Factor::M && is_identity(s[i].elt, p.cmp)) return false;
    if (s[i].factor == Factor::M && i + 1 < s.size() && s[i + 1].factor == Factor::M) return false;
    if (s[i].factor != Factor::Stable) continue;
    if (i + 1 < s.size() && s[i + 1].factor == Factor::Stable &&
        s[i].stable_exp == -s[i + 1].stable_exp)
      return false;
    if (i + 2 < s.size() && s[i + 1].factor == Factor::M && s[i + 2].factor == Factor::Stable &&
        s[i].stable_exp == -s[i + 2].stable_exp) {
      const bool down = s[i].stable_exp == -1;
      const Membership mem = p.in_h(s[i + 1], down, nullptr);
      if (mem == Membership::undecidable)
        throw MembershipUndecidable("associated subgroup oracle exceeded its budget");
      if (mem == Membership::yes) return false;
    }
  }
  return true;
}

std::vector<Word> alternating_sequence(const AlternatingLetters& letters, int n,
                                       const AmalgamPresentation& p) {
  const int need_a = (n + 1) / 2, need_b = n / 2;
  if (static_cast<int>(letters.a_letters.size()) < need_a ||
      static_cast<int>(letters.b_letters.size()) < need_b)
    throw ConfigInvalid("not enough alternating letters supplied");
  auto check = [&](const Syllable& s, Factor f) {
    if (s.factor != f) throw LetterRejected("letter tagged with the wrong factor");
    const Membership mem = p.in_h(s, nullptr);
    if (mem == Membership::undecidable)
      throw MembershipUndecidable("edge membership oracle exceeded its budget");
    if (mem == Membership::yes)
      throw LetterRejected("alternating letters must avoid the edge subgroup");
  };
  for (int i = 0; i < need_a; ++i) check(letters.a_letters[static_cast<size_t>(i)], Factor::A);
  for (int i = 0; i < need_b; ++i) check(letters.b_letters[static_cast<size_t>(i)], Factor::B);

  std::vector<Word> out;
  Word prefix;
  for (int k = 1; k <= n; ++k) {
    const size_t idx = static_cast<size_t>((k - 1) / 2);
    prefix.syllables.push_back(k % 2 == 1 ? letters.a_letters[idx] : letters.b_letters[idx]);
    out.push_back(prefix);
  }
  return out;
}

std::vector<Word> alternating_sequence(const HnnAlternatingLetters& letters, int n,
                                       const HnnPresentation& p) {
  if (static_cast<int>(letters.eps.size()) < n || static_cast<int>(letters.mu.size()) < n)
    throw ConfigInvalid("not enough alternating letters supplied");
  for (int i = 0; i < n; ++i)
    if (letters.eps[static_cast<size_t>(i)] != 1 && letters.eps[static_cast<size_t>(i)] != -1)
      throw ConfigInvalid("stable exponents must be +1 or -1");
  // Sign condition: no pinch may appear anywhere in the infinite string.
  for (int i = 1; i < n; ++i) {
    const int prev = letters.eps[static_cast<size_t>(i - 1)];
    const int cur = letters.eps[static_cast<size_t>(i)];
    const Syllable& mu = letters.mu[static_cast<size_t>(i)];
    if (prev == -1 && cur == 1) {
      const Membership mem = p.in_h(mu, true, nullptr);
      if (mem == Membership::undecidable)
        throw MembershipUndecidable("associated subgroup oracle exceeded its budget");
      if (mem == Membership::yes)
        throw LetterRejected("sign condition violated: mu in H+ between f^-1 and f");
    }
    if (prev == 1 && cur == -1) {
      const Membership mem = p.in_h(mu, false, nullptr);
      if (mem == Membership::undecidable)
        throw MembershipUndecidable("associated subgroup oracle exceeded its budget");
      if (mem == Membership::yes)
        throw LetterRejected("sign condition violated: mu in H- between f and f^-1");
    }
  }

  std::vector<Word> out;
  Word prefix;
  for (int k = 1; k <= n; ++k) {
    const Syllable& mu = letters.mu[static_cast<size_t>(k - 1)];
    if (!is_identity(mu.elt, p.cmp)) prefix.syllables.push_back(mu);
    prefix.syllables.push_back(p.stable_syllable(letters.eps[static_cast<size_t>(k - 1)]));
    out.push_back(prefix);
  }
  return out;
}

AlternatingLetters sample_alternating_letters(const AmalgamPresentation& p, int n, int max_len,
                                              uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&](const FactorGroup& fac, Factor tag, std::vector<Syllable>& out, int count) {
    auto elems = fac.elements_up_to(max_len, p.cmp);
    std::vector<Syllable> pool;
    for (auto& [fw, g] : elems) {
      Syllable s;
      s.factor = tag;
      s.gens = fw;
      s.elt = g;
      const Membership mem = p.in_h(s, nullptr);
      if (mem == Membership::yes || mem == Membership::undecidable) continue;
      pool.push_back(std::move(s));
    }
    if (pool.empty()) throw LetterRejected("no admissible letters outside the edge subgroup");
    for (int i = 0; i < count; ++i)
      out.push_back(pool[static_cast<size_t>(rng() % pool.size())]);
  };
  AlternatingLetters letters;
  draw(p.a, Factor::A, letters.a_letters, (n + 1) / 2);
  draw(p.b, Factor::B, letters.b_letters, n / 2);
  return letters;
}

HnnAlternatingLetters sample_alternating_letters(const HnnPresentation& p, int n, int max_len,
                                                 uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto elems = p.m.elements_up_to(max_len, p.cmp);
  std::vector<Syllable> pool;
  for (auto& [fw, g] : elems) {
    Syllable s;
    s.factor = Factor::M;
    s.gens = fw;
    s.elt = g;
    pool.push_back(std::move(s));
  }
  if (pool.empty()) throw LetterRejected("base group has no nontrivial elements within budget");
  HnnAlternatingLetters letters;
  for (int i = 0; i < n; ++i) {
    Syllable mu = pool[static_cast<size_t>(rng() % pool.size())];
    int eps = (rng() & 1) ? 1 : -1;
    if (i > 0) {
      const int prev = letters.eps[static_cast<size_t>(i - 1)];
      if (prev == -1 && eps == 1 && p.in_h(mu, true, nullptr) == Membership::yes) eps = -1;
      if (prev == 1 && eps == -1 && p.in_h(mu, false, nullptr) == Membership::yes) eps = 1;
    }
    letters.mu.push_back(std::move(mu));
    letters.eps.push_back(eps);
  }
  return letters;
}

}  // namespace amalgam::words
