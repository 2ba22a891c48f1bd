#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "amalgam/words.hpp"
#include "fixtures.hpp"

using namespace amalgam;
using namespace amalgam::words;

namespace {

bool mat_is(const GroupMatrix& g, const GroupMatrix& h) {
  return matrices_equal(g, h, CompareOptions{});
}

// Independent reducer for confluence checks: applies an applicable rewrite at
// a seeded-random position instead of the leftmost one.
NormalForm randomized_normal_form(const Word& w, const AmalgamPresentation& p, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Syllable> s = w.syllables;
  while (true) {
    struct Move {
      size_t pos;
      int kind;  // 0 drop identity, 1 merge same factor, 2 absorb edge elt
    };
    std::vector<Move> moves;
    for (size_t i = 0; i < s.size(); ++i) {
      if (is_identity(s[i].elt, p.cmp)) {
        moves.push_back({i, 0});
        continue;
      }
      if (i + 1 < s.size() && s[i].factor == s[i + 1].factor) moves.push_back({i, 1});
      if (s.size() >= 2 && p.in_h(s[i], nullptr) == Membership::yes) moves.push_back({i, 2});
    }
    if (moves.empty()) break;
    const Move mv = moves[rng() % moves.size()];
    const size_t i = mv.pos;
    if (mv.kind == 0) {
      s.erase(s.begin() + static_cast<long>(i));
    } else if (mv.kind == 1) {
      Syllable merged = s[i];
      merged.elt = s[i].elt * s[i + 1].elt;
      merged.gens = free_concat(s[i].gens, s[i + 1].gens);
      s[i] = merged;
      s.erase(s.begin() + static_cast<long>(i) + 1);
    } else {
      if (i + 1 < s.size()) {
        s[i + 1].elt = s[i].elt * s[i + 1].elt;
        s[i + 1].gens = {};
      } else {
        s[i - 1].elt = s[i - 1].elt * s[i].elt;
        s[i - 1].gens = {};
      }
      s.erase(s.begin() + static_cast<long>(i));
    }
  }
  NormalForm nf;
  nf.syllables = s;
  if (s.empty())
    nf.relative_length = 0;
  else if (s.size() == 1)
    nf.relative_length = p.in_h(s[0], nullptr) == Membership::yes ? 0 : 1;
  else
    nf.relative_length = static_cast<int>(s.size());
  return nf;
}

}  // namespace

TEST_CASE("free word utilities") {
  CHECK(free_reduce({1, -1}) == FreeWord{});
  CHECK(free_reduce({1, 2, -2, -1, 1}) == FreeWord{1});
  CHECK(free_concat({1, 2}, {-2, 1}) == FreeWord{1, 1});
  CHECK(free_inverse({1, -2, 1}) == FreeWord{-1, 2, -1});
  CHECK(word_less({1}, {1, 1}));
  CHECK(word_less({1, 2}, {-1, 2}));  // a generator precedes its inverse
  CHECK(word_less({-1, 2}, {2, 2}));
  CHECK(word_to_string({1, 1, -2}, {"a", "b"}) == "a^2.b^-1");
}

TEST_CASE("SL(2,Z) amalgam: frozen normal forms") {
  auto p = fixtures::sl2z_amalgam();

  SUBCASE("S U S stays a three-letter normal form") {
    Word w = p.word({{Factor::A, {1}}, {Factor::B, {1}}, {Factor::A, {1}}});
    NormalForm nf = amalgam_normal_form(w, p);
    CHECK(nf.relative_length == 3);
    REQUIRE(nf.syllables.size() == 3);
    CHECK(nf.syllables[0].factor == Factor::A);
    CHECK(nf.syllables[1].factor == Factor::B);
    CHECK(is_normal_form(nf.as_word(), p));
  }

  SUBCASE("S S^3 collapses to the identity") {
    Word w = p.word({{Factor::A, {1}}, {Factor::A, {1, 1, 1}}});
    NormalForm nf = amalgam_normal_form(w, p);
    CHECK(nf.relative_length == 0);
    CHECK(nf.syllables.empty());
  }

  SUBCASE("S^2 U^3 = (-I)(-I) collapses to the identity") {
    Word w = p.word({{Factor::A, {1, 1}}, {Factor::B, {1, 1, 1}}});
    NormalForm nf = amalgam_normal_form(w, p);
    CHECK(nf.relative_length == 0);
    CHECK(nf.syllables.empty());
  }

  SUBCASE("S^2 alone is an edge element: relative length 0, one syllable") {
    Word w = p.word({{Factor::A, {1, 1}}});
    NormalForm nf = amalgam_normal_form(w, p);
    CHECK(nf.relative_length == 0);
    CHECK(nf.syllables.size() == 1);
  }

  SUBCASE("U^3 absorbed between two A-syllables merges them") {
    // S U^3 S = S (-I) S = -S^2 = S^2 * ... exact: S*(-I)*S = -S^2 = I? S^2 = -I so -S^2 = I.
    Word w = p.word({{Factor::A, {1}}, {Factor::B, {1, 1, 1}}, {Factor::A, {1}}});
    NormalForm nf = amalgam_normal_form(w, p);
    CHECK(nf.relative_length == 0);
    CHECK(nf.syllables.empty());
    CHECK(mat_is(evaluate(w, 2), GroupMatrix::identity(2)));
  }

  SUBCASE("empty word") {
    NormalForm nf = amalgam_normal_form(Word{}, p);
    CHECK(nf.relative_length == 0);
  }
}

TEST_CASE("SL(2,Z) amalgam: exhaustive oracle agreement up to 4 syllables") {
  auto p = fixtures::sl2z_amalgam();

  // Syllable alphabet: S, S^2, S^3 and U..U^5.
  std::vector<std::pair<Factor, FreeWord>> alphabet;
  for (int k = 1; k <= 3; ++k) alphabet.push_back({Factor::A, FreeWord(k, 1)});
  for (int k = 1; k <= 5; ++k) alphabet.push_back({Factor::B, FreeWord(k, 1)});

  const auto id = GroupMatrix::identity(2);
  const auto minus_id = fixtures::exact2(-1, 0, 0, -1);
  const auto za = fixtures::z4_elements();

  std::vector<std::vector<int>> stack{{}};
  size_t checked = 0;
  for (int len = 1; len <= 4; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& pre : stack) {
      for (int c = 0; c < static_cast<int>(alphabet.size()); ++c) {
        auto idxs = pre;
        idxs.push_back(c);
        std::vector<std::pair<Factor, FreeWord>> sylls;
        for (int i : idxs) sylls.push_back(alphabet[static_cast<size_t>(i)]);
        Word w = p.word(sylls);
        NormalForm nf = amalgam_normal_form(w, p);
        const GroupMatrix direct = evaluate(w, 2);

        // Evaluation is preserved.
        CHECK(mat_is(evaluate(nf.as_word(), 2), direct));
        // rl = 0 exactly for edge elements (+-I).
        const bool in_edge = mat_is(direct, id) || mat_is(direct, minus_id);
        CHECK((nf.relative_length == 0) == in_edge);
        // Identity exactly when the normal form is empty.
        CHECK(mat_is(direct, id) == nf.syllables.empty());
        // Elements of the Z/4 factor have a short normal form.
        bool in_a = false;
        for (const auto& z : za) in_a |= mat_is(direct, z);
        if (in_a) CHECK(nf.relative_length <= 1);
        // The result is a genuine normal form.
        CHECK(is_normal_form(nf.as_word(), p));
        ++checked;
        next.push_back(std::move(idxs));
      }
    }
    stack = std::move(next);
  }
  CHECK(checked == 8 + 64 + 512 + 4096);
}

TEST_CASE("SL(2,Z) amalgam: confluence against randomized reduction order") {
  auto p = fixtures::sl2z_amalgam();
  std::mt19937_64 rng(20260825);
  std::vector<std::pair<Factor, FreeWord>> alphabet;
  for (int k = 1; k <= 3; ++k) alphabet.push_back({Factor::A, FreeWord(k, 1)});
  for (int k = 1; k <= 5; ++k) alphabet.push_back({Factor::B, FreeWord(k, 1)});

  for (int trial = 0; trial < 300; ++trial) {
    const int len = 1 + static_cast<int>(rng() % 6);
    std::vector<std::pair<Factor, FreeWord>> sylls;
    for (int i = 0; i < len; ++i) sylls.push_back(alphabet[rng() % alphabet.size()]);
    Word w = p.word(sylls);
    NormalForm a = amalgam_normal_form(w, p);
    NormalForm b = randomized_normal_form(w, p, rng());
    CHECK(a.relative_length == b.relative_length);
    CHECK(mat_is(evaluate(a.as_word(), 2), evaluate(b.as_word(), 2)));
  }
}

TEST_CASE("SL(2,Z) amalgam: inverse preserves relative length") {
  auto p = fixtures::sl2z_amalgam();
  std::mt19937_64 rng(7);
  std::vector<std::pair<Factor, FreeWord>> alphabet;
  for (int k = 1; k <= 3; ++k) alphabet.push_back({Factor::A, FreeWord(k, 1)});
  for (int k = 1; k <= 5; ++k) alphabet.push_back({Factor::B, FreeWord(k, 1)});
  for (int trial = 0; trial < 200; ++trial) {
    const int len = 1 + static_cast<int>(rng() % 6);
    std::vector<std::pair<Factor, FreeWord>> sylls;
    for (int i = 0; i < len; ++i) sylls.push_back(alphabet[rng() % alphabet.size()]);
    Word w = p.word(sylls);
    CHECK(amalgam_normal_form(w, p).relative_length ==
          amalgam_normal_form(inverse_word(w), p).relative_length);
  }
}

TEST_CASE("BS(1,2): frozen Britton reductions") {
  auto p = fixtures::bs12();

  SUBCASE("f^-1 a^2 f pinches to a") {
    Word w = p.word({{-1, {}}, {0, {1, 1}}, {1, {}}});
    NormalForm nf = hnn_britton_reduce(w, p);
    CHECK(nf.relative_length == 0);
    REQUIRE(nf.syllables.size() == 1);
    CHECK(mat_is(nf.syllables[0].elt, fixtures::exact2(1, 1, 0, 1)));
    CHECK(nf.syllables[0].gens == FreeWord{1});
  }

  SUBCASE("f a f^-1 pinches to a^2") {
    Word w = p.word({{1, {}}, {0, {1}}, {-1, {}}});
    NormalForm nf = hnn_britton_reduce(w, p);
    CHECK(nf.relative_length == 0);
    REQUIRE(nf.syllables.size() == 1);
    CHECK(mat_is(nf.syllables[0].elt, fixtures::exact2(1, 2, 0, 1)));
  }

  SUBCASE("f a f is already reduced with two stable letters") {
    Word w = p.word({{1, {}}, {0, {1}}, {1, {}}});
    NormalForm nf = hnn_britton_reduce(w, p);
    CHECK(nf.relative_length == 2);
    CHECK(is_britton_reduced(nf.as_word(), p));
  }

  SUBCASE("f^-1 a f is reduced (a odd power, not in H_+)") {
    Word w = p.word({{-1, {}}, {0, {1}}, {1, {}}});
    NormalForm nf = hnn_britton_reduce(w, p);
    CHECK(nf.relative_length == 2);
  }

  SUBCASE("f f^-1 collapses") {
    Word w = p.word({{1, {}}, {-1, {}}});
    NormalForm nf = hnn_britton_reduce(w, p);
    CHECK(nf.relative_length == 0);
    CHECK(nf.syllables.empty());
  }

  SUBCASE("nested pinches: f^-2 a^4 f^2 -> a") {
    Word w = p.word({{-2, {}}, {0, {1, 1, 1, 1}}, {2, {}}});
    NormalForm nf = hnn_britton_reduce(w, p);
    CHECK(nf.relative_length == 0);
    REQUIRE(nf.syllables.size() == 1);
    CHECK(mat_is(nf.syllables[0].elt, fixtures::exact2(1, 1, 0, 1)));
  }
}

TEST_CASE("BS(1,2): exhaustive identity oracle up to 4 stable letters") {
  auto p = fixtures::bs12();
  // Words alternate a^k (k in [-3,3]) and f^e. Compare Britton length-0 /
  // empty against the exact matrix product.
  std::mt19937_64 rng(99);
  const auto id = GroupMatrix::identity(2);
  for (int trial = 0; trial < 400; ++trial) {
    const int nstable = 1 + static_cast<int>(rng() % 4);
    std::vector<std::pair<int, FreeWord>> parts;
    for (int i = 0; i <= nstable; ++i) {
      const int k = static_cast<int>(rng() % 7) - 3;
      if (k != 0) parts.push_back({0, FreeWord(static_cast<size_t>(std::abs(k)), k > 0 ? 1 : -1)});
      if (i < nstable) parts.push_back({(rng() & 1) ? 1 : -1, {}});
    }
    Word w = p.word(parts);
    NormalForm nf = hnn_britton_reduce(w, p);
    const GroupMatrix direct = evaluate(w, 2);
    CHECK(mat_is(evaluate(nf.as_word(), 2), direct));
    CHECK(mat_is(direct, id) == nf.syllables.empty());
    CHECK(is_britton_reduced(nf.as_word(), p));
    // Britton's lemma: a reduced word with at least one stable letter is not
    // the identity, so rl > 0 forces a nontrivial matrix.
    if (nf.relative_length > 0) CHECK(!mat_is(direct, id));
    CHECK(hnn_britton_reduce(inverse_word(w), p).relative_length == nf.relative_length);
  }
}

TEST_CASE("alternating sequences (amalgam)") {
  auto p = fixtures::sl2z_amalgam();

  SUBCASE("explicit letters give prefixes with rl = k") {
    AlternatingLetters letters;
    letters.a_letters = {p.syllable(Factor::A, {1}), p.syllable(Factor::A, {1, 1, 1})};
    letters.b_letters = {p.syllable(Factor::B, {1}), p.syllable(Factor::B, {1, 1})};
    auto ws = alternating_sequence(letters, 4, p);
    REQUIRE(ws.size() == 4);
    for (int k = 0; k < 4; ++k) {
      CHECK(static_cast<int>(ws[static_cast<size_t>(k)].size()) == k + 1);
      CHECK(amalgam_normal_form(ws[static_cast<size_t>(k)], p).relative_length == k + 1);
    }
  }

  SUBCASE("letters inside H are rejected") {
    AlternatingLetters letters;
    letters.a_letters = {p.syllable(Factor::A, {1, 1})};  // S^2 = -I lies in H
    letters.b_letters = {p.syllable(Factor::B, {1})};
    CHECK_THROWS_AS(alternating_sequence(letters, 1, p), LetterRejected);
  }

  SUBCASE("seeded sampling is deterministic and valid") {
    auto l1 = sample_alternating_letters(p, 6, 2, 42);
    auto l2 = sample_alternating_letters(p, 6, 2, 42);
    auto w1 = alternating_sequence(l1, 6, p);
    auto w2 = alternating_sequence(l2, 6, p);
    REQUIRE(w1.size() == w2.size());
    for (size_t i = 0; i < w1.size(); ++i)
      CHECK(mat_is(evaluate(w1[i], 2), evaluate(w2[i], 2)));
    CHECK(amalgam_normal_form(w1.back(), p).relative_length == 6);
  }
}

TEST_CASE("alternating sequences (HNN)") {
  auto p = fixtures::bs12();

  SUBCASE("sign condition blocks hidden pinches") {
    HnnAlternatingLetters letters;
    letters.mu = {p.m_syllable({1}), p.m_syllable({1, 1})};  // mu_1 = a^2 in H_+
    letters.eps = {-1, 1};                                   // f^-1 a^2 f would pinch
    CHECK_THROWS_AS(alternating_sequence(letters, 2, p), LetterRejected);
  }

  SUBCASE("admissible string yields Britton-reduced prefixes ending in f") {
    HnnAlternatingLetters letters;
    letters.mu = {p.m_syllable({1}), p.m_syllable({1}), p.m_syllable({1}), p.m_syllable({1})};
    letters.eps = {-1, -1, 1, 1};  // f^-1 a f^-1 a f a f pattern: a odd, no pinch
    auto ws = alternating_sequence(letters, 4, p);
    for (int k = 0; k < 4; ++k) {
      CHECK(is_britton_reduced(ws[static_cast<size_t>(k)], p));
      CHECK(hnn_britton_reduce(ws[static_cast<size_t>(k)], p).relative_length == k + 1);
      CHECK(ws[static_cast<size_t>(k)].syllables.back().factor == Factor::Stable);
    }
  }

  SUBCASE("seeded sampling always satisfies the sign condition") {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
      auto letters = sample_alternating_letters(p, 6, 3, seed);
      auto ws = alternating_sequence(letters, 6, p);
      CHECK(hnn_britton_reduce(ws.back(), p).relative_length == 6);
    }
  }
}

TEST_CASE("membership oracle edge cases") {
  auto p = fixtures::sl2z_amalgam();

  SUBCASE("trivial subgroup membership is the identity test") {
    Subgroup trivial;
    CHECK(trivial.contains(GroupMatrix::identity(2), p.cmp) == Membership::yes);
    CHECK(trivial.contains(fixtures::exact2(0, -1, 1, 0), p.cmp) == Membership::no);
  }

  SUBCASE("undecidable when the ball cannot close") {
    Subgroup tight;
    tight.gens = {fixtures::exact2(1, 1, 0, 1)};  // infinite cyclic
    tight.budget = 3;
    CHECK(tight.contains(fixtures::exact2(1, 10, 0, 1), p.cmp) == Membership::undecidable);
    CHECK(tight.contains(fixtures::exact2(1, 2, 0, 1), p.cmp) == Membership::yes);
  }

  SUBCASE("factor mismatch for raw matrices outside the factor") {
    Syllable s;
    s.factor = Factor::A;
    s.elt = fixtures::exact2(1, 1, 0, 1);  // not in <S>
    Word w;
    w.syllables.push_back(s);
    CHECK_THROWS_AS(amalgam_normal_form(w, p), FactorMismatch);
  }
}
