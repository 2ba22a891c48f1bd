#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <map>
#include <queue>
#include <random>
#include <set>

#include "amalgam/tree.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace amalgam;
using words::AmalgamPresentation;
using words::Factor;
using words::FreeWord;
using words::HnnPresentation;
using words::NormalForm;
using words::Syllable;
using words::Word;

namespace {

Factor opp(Factor f) { return f == Factor::A ? Factor::B : Factor::A; }

// Independent ground truth: materialise the tree out to a radius by breadth
// first search over coset vertices and read distances off the graph. Inside a
// tree every geodesic between explored vertices stays in the explored ball, so
// graph BFS distances are exact for all explored pairs.
struct TreeOracle {
  std::vector<tree::TreeVertex> verts;
  std::map<std::string, int> index;
  std::vector<std::set<int>> adj;
  std::vector<int> depth;

  int add(const tree::TreeVertex& v, int d) {
    auto it = index.find(v.key);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(verts.size());
    verts.push_back(v);
    index.emplace(v.key, id);
    adj.emplace_back();
    depth.push_back(d);
    return id;
  }
  void link(int a, int b) {
    if (a == b) return;
    adj[static_cast<size_t>(a)].insert(b);
    adj[static_cast<size_t>(b)].insert(a);
  }
  std::vector<int> bfs(int src) const {
    std::vector<int> d(verts.size(), -1);
    std::queue<int> q;
    q.push(src);
    d[static_cast<size_t>(src)] = 0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[static_cast<size_t>(u)])
        if (d[static_cast<size_t>(v)] < 0) {
          d[static_cast<size_t>(v)] = d[static_cast<size_t>(u)] + 1;
          q.push(v);
        }
    }
    return d;
  }
};

TreeOracle materialize(const AmalgamPresentation& p, int radius) {
  TreeOracle t;
  std::queue<int> work;
  work.push(t.add(tree::base_vertex(Factor::A, p), 0));
  work.push(t.add(tree::base_vertex(Factor::B, p), 0));
  while (!work.empty()) {
    const int u = work.front();
    work.pop();
    if (t.depth[static_cast<size_t>(u)] >= radius) continue;
    const tree::TreeVertex v = t.verts[static_cast<size_t>(u)];
    const words::Ball& ball = p.factor(v.side).ball(p.cmp);
    for (size_t i = 0; i < ball.elts.size(); ++i) {
      Word w = v.rep.as_word();
      w.syllables.push_back(p.syllable(v.side, ball.word_of[i]));
      const NormalForm nf = words::amalgam_normal_form(w, p);
      const size_t before = t.verts.size();
      const int id = t.add(tree::vertex_of(nf, opp(v.side), p), t.depth[static_cast<size_t>(u)] + 1);
      if (t.verts.size() > before) work.push(id);
      t.link(u, id);
    }
  }
  return t;
}

TreeOracle materialize(const HnnPresentation& p, int radius, int m_radius) {
  TreeOracle t;
  std::queue<int> work;
  work.push(t.add(tree::base_vertex(p), 0));
  auto mu_words = [&] {
    std::vector<FreeWord> out{{}};
    for (const auto& [w, g] : p.m.elements_up_to(m_radius, p.cmp)) out.push_back(w);
    return out;
  }();
  while (!work.empty()) {
    const int u = work.front();
    work.pop();
    if (t.depth[static_cast<size_t>(u)] >= radius) continue;
    const tree::TreeVertex v = t.verts[static_cast<size_t>(u)];
    for (const FreeWord& mu : mu_words) {
      for (int e : {1, -1}) {
        Word w = v.rep.as_word();
        if (!mu.empty()) w.syllables.push_back(p.m_syllable(mu));
        w.syllables.push_back(p.stable_syllable(e));
        const NormalForm nf = words::hnn_britton_reduce(w, p);
        const size_t before = t.verts.size();
        const int id = t.add(tree::vertex_of(nf, p), t.depth[static_cast<size_t>(u)] + 1);
        if (t.verts.size() > before) work.push(id);
        t.link(u, id);
      }
    }
  }
  return t;
}

// All alternating words with letters outside the edge subgroup, as factor-word
// sequences: A-letters {S, S^-1}, B-letters {U, U^-1, U^2, U^-2}.
void alternating_words(int len, Factor first,
                       const std::function<void(const std::vector<std::pair<Factor, FreeWord>>&)>& fn) {
  static const std::vector<FreeWord> a_letters{{1}, {-1}};
  static const std::vector<FreeWord> b_letters{{1}, {-1}, {1, 1}, {-1, -1}};
  std::vector<std::pair<Factor, FreeWord>> acc;
  std::function<void(int, Factor)> rec = [&](int k, Factor f) {
    if (k == len) {
      fn(acc);
      return;
    }
    for (const FreeWord& w : f == Factor::A ? a_letters : b_letters) {
      acc.emplace_back(f, w);
      rec(k + 1, opp(f));
      acc.pop_back();
    }
  };
  rec(0, first);
}

tree::TreeVertex translate(const tree::TreeVertex& v, const Word& g, const AmalgamPresentation& p) {
  return tree::vertex_of(words::amalgam_normal_form(words::concat(g, v.rep.as_word()), p), v.side,
                         p);
}

tree::TreeVertex translate(const tree::TreeVertex& v, const Word& g, const HnnPresentation& p) {
  return tree::vertex_of(words::hnn_britton_reduce(words::concat(g, v.rep.as_word()), p), p);
}

}  // namespace

TEST_CASE("modular amalgam: distance formula matches the materialised tree") {
  const AmalgamPresentation p = fixtures::sl2z_amalgam();
  const TreeOracle t = materialize(p, 5);
  REQUIRE(t.verts.size() > 30);

  // Bipartite: edges only join the two coset families.
  for (size_t u = 0; u < t.verts.size(); ++u)
    for (int v : t.adj[u]) CHECK(t.verts[u].side != t.verts[static_cast<size_t>(v)].side);

  // Interior degrees are the factor-over-edge indices: [A:H] = 2, [B:H] = 3.
  for (size_t u = 0; u < t.verts.size(); ++u) {
    if (t.depth[u] >= 4) continue;
    CHECK(t.adj[u].size() == (t.verts[u].side == Factor::A ? 2u : 3u));
  }

  for (size_t u = 0; u < t.verts.size(); ++u) {
    const std::vector<int> d = t.bfs(static_cast<int>(u));
    for (size_t v = 0; v < t.verts.size(); ++v) {
      REQUIRE(d[v] >= 0);
      CHECK(tree::tree_distance(t.verts[u], t.verts[v], p) == d[v]);
    }
  }
}

TEST_CASE("modular amalgam: relative length bounds both base distances") {
  const AmalgamPresentation p = fixtures::sl2z_amalgam();
  const tree::TreeVertex base_a = tree::base_vertex(Factor::A, p);
  const tree::TreeVertex base_b = tree::base_vertex(Factor::B, p);
  int checked = 0;
  for (int len = 1; len <= 6; ++len) {
    for (Factor first : {Factor::A, Factor::B}) {
      if (len > 4 && first == Factor::B) continue;  // keep the sweep quick; mirrored by symmetry
      alternating_words(len, first, [&](const std::vector<std::pair<Factor, FreeWord>>& letters) {
        const NormalForm nf = words::amalgam_normal_form(p.word(letters), p);
        REQUIRE(nf.relative_length == len);
        const tree::TreeVertex same = tree::vertex_of(nf, first, p);
        const tree::TreeVertex other = tree::vertex_of(nf, opp(first), p);
        const tree::TreeVertex& near_base = first == Factor::A ? base_a : base_b;
        const tree::TreeVertex& far_base = first == Factor::A ? base_b : base_a;
        // Distance from g * (base of the first letter's factor) to that base
        // is rl or rl - 1; to the other base it is rl or rl + 1.
        const int d_same = tree::tree_distance(same, near_base, p);
        CHECK(d_same >= len - 1);
        CHECK(d_same <= len);
        const int d_other = tree::tree_distance(same, far_base, p);
        CHECK(d_other >= len);
        CHECK(d_other <= len + 1);
        // And the other translated base never strays more than one step from rl.
        const int d_cross = tree::tree_distance(other, near_base, p);
        CHECK(std::abs(d_cross - len) <= 1);
        ++checked;
      });
    }
  }
  CHECK(checked > 700);
}

TEST_CASE("ascending HNN of the integers: distance equals stable-letter count") {
  const HnnPresentation p = fixtures::bs12();
  const TreeOracle t = materialize(p, 4, 2);
  REQUIRE(t.verts.size() > 30);

  // The tree is (1 + [M:H_+])-regular: every vertex has one upward and two
  // downward edges.
  for (size_t u = 0; u < t.verts.size(); ++u) {
    if (t.depth[u] >= 3) continue;
    CHECK(t.adj[u].size() == 3u);
  }

  for (size_t u = 0; u < t.verts.size(); ++u) {
    const std::vector<int> d = t.bfs(static_cast<int>(u));
    for (size_t v = 0; v < t.verts.size(); ++v) {
      REQUIRE(d[v] >= 0);
      CHECK(tree::tree_distance(t.verts[u], t.verts[v], p) == d[v]);
    }
  }

  // Distance to the base vertex is the relative length, with no defect.
  std::mt19937_64 rng(20240817u);
  const tree::TreeVertex base = tree::base_vertex(p);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<int, FreeWord>> parts;
    const int n = static_cast<int>(rng() % 6) + 1;
    for (int i = 0; i < n; ++i) {
      const int exp = static_cast<int>(rng() % 5) - 2;
      if (exp != 0) parts.emplace_back(0, FreeWord(static_cast<size_t>(std::abs(exp)),
                                                   exp > 0 ? 1 : -1));
      parts.emplace_back(rng() % 2 ? 1 : -1, FreeWord{});
    }
    const NormalForm nf = words::hnn_britton_reduce(p.word(parts), p);
    CHECK(tree::tree_distance(base, tree::vertex_of(nf, p), p) == nf.relative_length);
  }
}

TEST_CASE("coset vertices identify exactly the right words") {
  const HnnPresentation p = fixtures::bs12();
  auto vert = [&](const std::vector<std::pair<int, FreeWord>>& parts) {
    return tree::vertex_of(words::hnn_britton_reduce(p.word(parts), p), p);
  };
  const tree::TreeVertex base = tree::base_vertex(p);
  const tree::TreeVertex af = vert({{0, {1}}, {1, {}}});
  const tree::TreeVertex f = vert({{1, {}}});

  // a*fM and fM are distinct neighbours of the base vertex: f^-1 a f is not
  // in the base group, so the cosets differ.
  CHECK(af != f);
  CHECK(tree::tree_distance(base, af, p) == 1);
  CHECK(tree::tree_distance(base, f, p) == 1);
  CHECK(tree::tree_distance(af, f, p) == 2);

  // The canonical representative of a*fM is (a, f): a^3 f and a f^{+} tails
  // collapse onto it.
  REQUIRE(af.rep.syllables.size() == 2);
  CHECK(af.rep.syllables[0].factor == Factor::M);
  CHECK(af.rep.syllables[0].gens == FreeWord{1});
  CHECK(af.rep.syllables[1].factor == Factor::Stable);
  CHECK(af.rep.syllables[1].stable_exp == 1);
  CHECK(vert({{0, {1, 1, 1}}, {1, {}}}) == af);       // a^3 f M = a f M
  CHECK(vert({{0, {1}}, {1, {}}, {0, {1, 1}}}) == af);  // a f a^2 M = a f M
  CHECK(vert({{0, {1, 1}}, {1, {}}}) == f);             // a^2 f M = f M

  const AmalgamPresentation q = fixtures::sl2z_amalgam();
  auto avert = [&](const std::vector<std::pair<Factor, FreeWord>>& parts, Factor side) {
    return tree::vertex_of(words::amalgam_normal_form(q.word(parts), q), side, q);
  };
  // S Gamma_B = S^-1 Gamma_B (they differ by the central -I) but is not Gamma_B.
  const tree::TreeVertex sb = avert({{Factor::A, {1}}}, Factor::B);
  CHECK(avert({{Factor::A, {-1}}}, Factor::B) == sb);
  CHECK(sb != tree::base_vertex(Factor::B, q));
  CHECK(avert({{Factor::A, {1, 1}}}, Factor::B) == tree::base_vertex(Factor::B, q));
}

TEST_CASE("canonical element forms coincide for equal elements") {
  const AmalgamPresentation q = fixtures::sl2z_amalgam();
  auto canon = [&](const std::vector<std::pair<Factor, FreeWord>>& parts) {
    return tree::canonical_element(words::amalgam_normal_form(q.word(parts), q), q);
  };
  // S U S = (-S)(-U)S = S^-1 U^-2 S: the two central flips cancel.
  const NormalForm c1 = canon({{Factor::A, {1}}, {Factor::B, {1}}, {Factor::A, {1}}});
  const NormalForm c2 = canon({{Factor::A, {-1}}, {Factor::B, {-1, -1}}, {Factor::A, {1}}});
  REQUIRE(c1.syllables.size() == c2.syllables.size());
  for (size_t i = 0; i < c1.syllables.size(); ++i) {
    CHECK(c1.syllables[i].factor == c2.syllables[i].factor);
    CHECK(c1.syllables[i].gens == c2.syllables[i].gens);
  }
  CHECK(matrices_equal(words::evaluate(c1.as_word(), q.dim()),
                       words::evaluate(c2.as_word(), q.dim()), q.cmp));

  const HnnPresentation p = fixtures::bs12();
  auto hcanon = [&](const std::vector<std::pair<int, FreeWord>>& parts) {
    return tree::canonical_element(words::hnn_britton_reduce(p.word(parts), p), p);
  };
  // a f = a^3 f a^-1 in BS(1,2).
  const NormalForm h1 = hcanon({{0, {1}}, {1, {}}});
  const NormalForm h2 = hcanon({{0, {1, 1, 1}}, {1, {}}, {0, {-1}}});
  REQUIRE(h1.syllables.size() == h2.syllables.size());
  for (size_t i = 0; i < h1.syllables.size(); ++i) {
    CHECK(h1.syllables[i].factor == h2.syllables[i].factor);
    CHECK(h1.syllables[i].gens == h2.syllables[i].gens);
    CHECK(h1.syllables[i].stable_exp == h2.syllables[i].stable_exp);
  }
  // Idempotent.
  const NormalForm h3 = tree::canonical_element(h1, p);
  REQUIRE(h3.syllables.size() == h1.syllables.size());
  for (size_t i = 0; i < h1.syllables.size(); ++i)
    CHECK(h3.syllables[i].gens == h1.syllables[i].gens);
}

TEST_CASE("normal-form paths are geodesics from the base") {
  const AmalgamPresentation q = fixtures::sl2z_amalgam();
  alternating_words(4, Factor::A, [&](const std::vector<std::pair<Factor, FreeWord>>& letters) {
    const NormalForm nf = words::amalgam_normal_form(q.word(letters), q);
    const std::vector<tree::TreeVertex> path = tree::normal_form_path(nf, q);
    REQUIRE(path.size() == static_cast<size_t>(nf.relative_length) + 2);
    std::set<std::string> keys;
    for (const tree::TreeVertex& v : path) keys.insert(v.key);
    CHECK(keys.size() == path.size());
    for (size_t i = 0; i + 1 < path.size(); ++i) {
      CHECK(path[i].side == opp(path[i + 1].side));
      CHECK(tree::tree_distance(path[i], path[i + 1], q) == 1);
    }
    CHECK(tree::tree_distance(path.front(), path.back(), q) ==
          static_cast<int>(path.size()) - 1);
  });

  const HnnPresentation p = fixtures::bs12();
  std::mt19937_64 rng(91u);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<int, FreeWord>> parts;
    const int n = static_cast<int>(rng() % 5) + 1;
    for (int i = 0; i < n; ++i) {
      const int exp = static_cast<int>(rng() % 3) - 1;
      if (exp != 0) parts.emplace_back(0, FreeWord{exp});
      parts.emplace_back(rng() % 2 ? 1 : -1, FreeWord{});
    }
    const NormalForm nf = words::hnn_britton_reduce(p.word(parts), p);
    const std::vector<tree::TreeVertex> path = tree::normal_form_path(nf, p);
    REQUIRE(path.size() == static_cast<size_t>(nf.relative_length) + 1);
    for (size_t i = 0; i + 1 < path.size(); ++i)
      CHECK(tree::tree_distance(path[i], path[i + 1], p) == 1);
    if (path.size() > 1)
      CHECK(tree::tree_distance(path.front(), path.back(), p) ==
            static_cast<int>(path.size()) - 1);
    CHECK(path.back() == tree::vertex_of(nf, p));
  }
}

TEST_CASE("tree distances are equivariant under left translation") {
  const AmalgamPresentation q = fixtures::sl2z_amalgam();
  std::mt19937_64 rng(7u);
  std::vector<tree::TreeVertex> verts;
  std::vector<Word> elements;
  alternating_words(3, Factor::B, [&](const std::vector<std::pair<Factor, FreeWord>>& letters) {
    const Word w = q.word(letters);
    if (elements.size() < 12 && rng() % 3 == 0) elements.push_back(w);
    if (verts.size() < 16)
      verts.push_back(
          tree::vertex_of(words::amalgam_normal_form(w, q), rng() % 2 ? Factor::A : Factor::B, q));
  });
  REQUIRE(verts.size() >= 8);
  REQUIRE(elements.size() >= 4);
  for (const Word& g : elements)
    for (size_t i = 0; i < verts.size(); i += 3)
      for (size_t j = 0; j < verts.size(); j += 2) {
        const int before = tree::tree_distance(verts[i], verts[j], q);
        const int after =
            tree::tree_distance(translate(verts[i], g, q), translate(verts[j], g, q), q);
        CHECK(before == after);
      }

  const HnnPresentation p = fixtures::bs12();
  const std::vector<std::vector<std::pair<int, FreeWord>>> gens_w = {
      {{0, {1}}}, {{1, {}}}, {{0, {1}}, {1, {}}}, {{-1, {}}, {0, {-1}}}};
  std::vector<tree::TreeVertex> hverts;
  std::mt19937_64 hr(11u);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::pair<int, FreeWord>> parts;
    const int n = static_cast<int>(hr() % 4);
    for (int i = 0; i < n; ++i) {
      const int exp = static_cast<int>(hr() % 3) - 1;
      if (exp != 0) parts.emplace_back(0, FreeWord{exp});
      parts.emplace_back(hr() % 2 ? 1 : -1, FreeWord{});
    }
    hverts.push_back(tree::vertex_of(words::hnn_britton_reduce(p.word(parts), p), p));
  }
  for (const auto& gw : gens_w) {
    const Word g = p.word(gw);
    for (size_t i = 0; i < hverts.size(); ++i)
      for (size_t j = i + 1; j < hverts.size(); ++j) {
        const int before = tree::tree_distance(hverts[i], hverts[j], p);
        const int after =
            tree::tree_distance(translate(hverts[i], g, p), translate(hverts[j], g, p), p);
        CHECK(before == after);
      }
  }
}
