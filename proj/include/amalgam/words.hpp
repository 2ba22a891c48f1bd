#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "amalgam/matrix.hpp"

namespace amalgam::words {

// Signed 1-based generator indices: +i is the i-th generator, -i its inverse.
using FreeWord = std::vector<int>;

FreeWord free_reduce(const FreeWord& w);
FreeWord free_concat(const FreeWord& a, const FreeWord& b);  // reduced
FreeWord free_inverse(const FreeWord& w);
// Order by length, then lexicographically with letter order 1 < -1 < 2 < -2 < ...
// (each generator precedes its inverse).
bool word_less(const FreeWord& a, const FreeWord& b);
// Signed generator indices in the canonical letter order above.
std::vector<int> signed_alphabet(int num_gens);
std::string word_to_string(const FreeWord& w, const std::vector<std::string>& names);

enum class Factor { A, B, M, Stable };

std::string factor_name(Factor f);

struct Syllable {
  Factor factor = Factor::A;
  int stable_exp = 0;   // +1/-1 when factor == Stable, else 0
  GroupMatrix elt;      // the element's matrix (for Stable: the stable letter power)
  FreeWord gens;        // word in the owning factor's generators (empty for Stable)
};

struct Word {
  std::vector<Syllable> syllables;

  bool empty() const { return syllables.empty(); }
  size_t size() const { return syllables.size(); }
};

Word concat(const Word& a, const Word& b);
Word inverse_word(const Word& w);
GroupMatrix evaluate(const Word& w, int dim, bool exact_identity = true);

// Normal form of an element. Amalgam: syllables alternate between the factors
// and none lies in the edge subgroup unless the whole element does
// (relative_length 0, at most one syllable kept). HNN: mu_0 f^{e_1} mu_1 ...
// f^{e_n} mu_n with no pinchable subword; relative_length = n.
struct NormalForm {
  std::vector<Syllable> syllables;
  int relative_length = 0;

  Word as_word() const { return Word{syllables}; }
};

int relative_length(const NormalForm& nf);

// Breadth-first enumeration of a matrix group ball: element -> canonical
// shortest word (lexicographically least among shortest). Exact matrices are
// deduplicated by hash key; float matrices by tolerant linear scan, which is
// why float balls carry an element cap.
struct Ball {
  std::vector<GroupMatrix> elts;
  std::vector<FreeWord> word_of;
  std::unordered_map<std::string, int> index;  // exact key -> position
  bool complete = false;
  int radius = 0;

  int find(const GroupMatrix& g, const CompareOptions& cmp) const;  // -1 if absent
};

Ball enumerate_ball(const std::vector<GroupMatrix>& gens, int radius, const CompareOptions& cmp,
                    size_t max_elements = 200000, double norm_cap = 1e100);

enum class Membership { yes, no, undecidable };

// Finitely generated factor group. If `free_group` is set the factor is
// treated as abstractly free on its generators: elements are identified with
// freely reduced words and no matrix ball is ever enumerated.
struct FactorGroup {
  std::vector<std::string> gen_names;
  std::vector<GroupMatrix> gens;
  bool free_group = false;
  int budget = 64;

  int dim() const;
  GroupMatrix eval(const FreeWord& w) const;
  const Ball& ball(const CompareOptions& cmp) const;
  // All nontrivial elements of word length <= maxlen as (canonical word, matrix).
  std::vector<std::pair<FreeWord, GroupMatrix>> elements_up_to(int maxlen,
                                                               const CompareOptions& cmp) const;

 private:
  mutable std::optional<Ball> ball_;
};

// Finitely generated subgroup with a bounded-enumeration membership oracle.
// An exhausted enumeration (the ball closed before the budget) makes "not
// found" a definitive no; otherwise it is undecidable.
struct Subgroup {
  std::vector<std::string> gen_names;
  std::vector<GroupMatrix> gens;
  // Optional embeddings: the i-th generator expressed as a word in a factor's
  // generators. Used to rewrite absorbed edge-subgroup elements and to decide
  // word-level membership inside free factors.
  std::vector<FreeWord> words_in_a, words_in_b, words_in_m;
  int budget = 64;

  bool trivial() const { return gens.empty(); }
  const Ball& ball(const CompareOptions& cmp) const;      // elements with subgroup words
  Membership contains(const GroupMatrix& g, const CompareOptions& cmp,
                      FreeWord* subgroup_word = nullptr) const;
  // Word-level membership of a factor word (requires the matching embedding
  // words). Definitive "no" needs either a closed ball or monotone growth of
  // the enumerated factor-word lengths past |w| (true for cyclic subgroups
  // with cyclically reduced generator word).
  Membership contains_factor_word(const FreeWord& w, const std::vector<FreeWord>& embed,
                                  FreeWord* subgroup_word = nullptr) const;

  FreeWord embed_word(const FreeWord& subgroup_word, const std::vector<FreeWord>& embed) const;

 private:
  mutable std::optional<Ball> ball_;
  struct WordBall {
    std::vector<FreeWord> factor_words;   // freely reduced
    std::vector<FreeWord> subgroup_words;
    bool complete = false;
    int min_last_level = 0;  // min factor length in the deepest level
    bool monotone = false;   // single cyclically-reduced generator
  };
  mutable std::map<std::string, WordBall> word_balls_;
  const WordBall& word_ball(const std::vector<FreeWord>& embed) const;
};

// Amalgamated free product of two matrix factor groups over a common edge
// subgroup H (generators must lie in both factors).
struct AmalgamPresentation {
  FactorGroup a, b;
  Subgroup h;
  CompareOptions cmp;

  int dim() const { return a.dim(); }
  Syllable syllable(Factor f, const FreeWord& w) const;
  Word word(const std::vector<std::pair<Factor, FreeWord>>& sylls) const;
  const FactorGroup& factor(Factor f) const;
  // Membership of a factor element in H, preferring word-level decisions for
  // free factors.
  Membership in_h(const Syllable& s, FreeWord* h_word = nullptr) const;
  void validate() const;  // throws SceneInvalid on inconsistent data
};

// HNN extension of a matrix base group M with stable letter f conjugating
// H_- onto H_+ (phi pairs generators by index: f h_minus[i] f^-1 = h_plus[i]).
struct HnnPresentation {
  FactorGroup m;
  GroupMatrix stable;
  Subgroup h_plus, h_minus;
  CompareOptions cmp;

  int dim() const { return m.dim(); }
  Syllable m_syllable(const FreeWord& w) const;
  Syllable stable_syllable(int exp) const;  // exp must be +1 or -1
  std::vector<Syllable> stable_power(int k) const;
  Word word(const std::vector<std::pair<int, FreeWord>>& parts) const;
  Membership in_h(const Syllable& s, bool plus, FreeWord* h_word = nullptr) const;
  // phi(h) = f h f^-1 restricted to H_-; phi_inv the other way.
  GroupMatrix phi(const GroupMatrix& g) const;
  GroupMatrix phi_inv(const GroupMatrix& g) const;
  void validate() const;
};

// Canonical generator word for a factor element: ball lookup for enumerable
// factors, freely reduced fallback otherwise.
FreeWord factor_word_for(const AmalgamPresentation& p, Factor f, const GroupMatrix& elt,
                         const FreeWord& fallback);
FreeWord m_word_for(const HnnPresentation& p, const GroupMatrix& elt, const FreeWord& fallback);
// Express an edge-subgroup element (matrix plus subgroup word) as a word in
// factor f's generators.
FreeWord edge_word_in_factor(const AmalgamPresentation& p, Factor f, const GroupMatrix& elt,
                             const FreeWord& h_word);

// Rewrites an arbitrary syllable word into normal form by leftmost-innermost
// merging: identity syllables vanish, adjacent same-factor syllables merge,
// and an edge-subgroup syllable is absorbed into its right neighbour (left
// neighbour at the end of the word). Throws FactorMismatch when a syllable
// fails its factor oracle and MembershipUndecidable when the H oracle cannot
// answer within budget.
NormalForm amalgam_normal_form(const Word& w, const AmalgamPresentation& p);

// Britton reduction: pinches f^-1 (H_+) f -> phi^-1 and f (H_-) f^-1 -> phi,
// leftmost first, merging the produced base-group elements into neighbours.
NormalForm hnn_britton_reduce(const Word& w, const HnnPresentation& p);

bool is_normal_form(const Word& w, const AmalgamPresentation& p);
bool is_britton_reduced(const Word& w, const HnnPresentation& p);

// Alternating words in the sense of the combination machinery: prefixes of a
// single infinite string. Amalgam: w_{2m-1} = a_1 b_1 ... a_m and
// w_{2m} = a_1 b_1 ... a_m b_m with a_i in A \ H, b_i in B \ H.
struct AlternatingLetters {
  std::vector<Syllable> a_letters;  // a_1, a_2, ...
  std::vector<Syllable> b_letters;  // b_1, b_2, ...
};

std::vector<Word> alternating_sequence(const AlternatingLetters& letters, int n,
                                       const AmalgamPresentation& p);

// HNN: w_n = mu_0 f^{e_1} mu_1 ... mu_{n-1} f^{e_n}, subject to the sign
// condition that forbids pinches in the infinite string.
struct HnnAlternatingLetters {
  std::vector<Syllable> mu;  // mu_0, mu_1, ...
  std::vector<int> eps;      // e_1, e_2, ... each +1 or -1
};

std::vector<Word> alternating_sequence(const HnnAlternatingLetters& letters, int n,
                                       const HnnPresentation& p);

// Seeded sampling of admissible letters from the factor balls.
AlternatingLetters sample_alternating_letters(const AmalgamPresentation& p, int n, int max_len,
                                              uint64_t seed);
HnnAlternatingLetters sample_alternating_letters(const HnnPresentation& p, int n, int max_len,
                                                 uint64_t seed);

}  // namespace amalgam::words
