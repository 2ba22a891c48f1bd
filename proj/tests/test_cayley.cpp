#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "amalgam/cayley.hpp"
#include "amalgam/errors.hpp"
#include "amalgam/exact.hpp"
#include "amalgam/words.hpp"
#include "fixtures.hpp"

#include <algorithm>
#include <random>

using namespace amalgam;
using cayley::CayleyBall;
using words::FreeWord;

namespace {

// Radius-6 ball of the Sanov free group F_2 = <[[1,2],[0,1]], [[1,0],[2,1]]>.
// Built once: the lookup sweep to radius 12 visits ~1M elements.
const CayleyBall& f2_ball() {
  static CayleyBall ball(fixtures::sanov_gens(), {"a", "b"}, 6, 12);
  return ball;
}

const CayleyBall& sl2z_ball() {
  static CayleyBall ball(
      {fixtures::sl2z_amalgam().a.gens[0], fixtures::sl2z_amalgam().b.gens[0]},
      {"S", "U"}, 8, 12);
  return ball;
}

FreeWord concat_inverse_then(const FreeWord& x, const FreeWord& y) {
  FreeWord w = words::free_inverse(x);
  w.insert(w.end(), y.begin(), y.end());
  return words::free_reduce(w);
}

FreeWord power(int letter, int n) {
  FreeWord w;
  for (int i = 0; i < std::abs(n); ++i) w.push_back(n > 0 ? letter : -letter);
  return w;
}

int common_prefix_length(const FreeWord& x, const FreeWord& y) {
  size_t n = 0;
  while (n < x.size() && n < y.size() && x[n] == y[n]) ++n;
  return (int)n;
}

}  // namespace

TEST_CASE("free group ball has exact sphere sizes and word metric") {
  const CayleyBall& ball = f2_ball();
  REQUIRE(ball.size() == 1457);  // 1 + 4*(3^6 - 1)/2
  REQUIRE(ball.radius() == 6);
  REQUIRE(ball.lookup_radius() == 12);

  std::vector<int> spheres(7, 0);
  for (size_t i = 0; i < ball.size(); ++i) {
    int len = (int)ball.word(i).size();
    REQUIRE(len <= 6);
    spheres[len]++;
    // BFS canonical words realise the norm.
    CHECK(ball.norm(ball.element(i)) == len);
  }
  CHECK(spheres[0] == 1);
  for (int n = 1; n <= 6; ++n) CHECK(spheres[n] == 4 * (int)std::pow(3, n - 1));

  // In a free group d(x, y) is the reduced length of x^-1 y.
  std::mt19937 rng(7u);
  std::uniform_int_distribution<size_t> pick(0, ball.size() - 1);
  for (int trial = 0; trial < 2000; ++trial) {
    size_t i = pick(rng), j = pick(rng);
    FreeWord diff = concat_inverse_then(ball.word(i), ball.word(j));
    CHECK(ball.distance(ball.element(i), ball.element(j)) == (int)diff.size());
  }

  // Exhaustive on the radius-3 sub-ball.
  for (size_t i = 0; i < ball.size(); ++i) {
    if (ball.word(i).size() > 3) continue;
    for (size_t j = 0; j < ball.size(); ++j) {
      if (ball.word(j).size() > 3) continue;
      FreeWord diff = concat_inverse_then(ball.word(i), ball.word(j));
      CHECK(ball.distance(ball.element(i), ball.element(j)) == (int)diff.size());
    }
  }

  // Beyond the lookup radius the norm is unavailable rather than wrong.
  GroupMatrix far = ball.eval(power(1, 13));
  CHECK(!ball.norm_within(far).has_value());
  CHECK_THROWS_AS(ball.norm(far), OutOfBall);
  CHECK(!ball.contains(far));
  CHECK(ball.contains(ball.eval(power(1, 6))));
  CHECK(!ball.contains(ball.eval(power(1, 7))));  // in lookup, not in primary ball
}

TEST_CASE("gromov products agree with common prefixes in the free group") {
  const CayleyBall& ball = f2_ball();
  const GroupMatrix one = ball.eval({});

  GroupMatrix ab = ball.eval({1, 2}), ab_inv = ball.eval({1, -2});
  CHECK(ball.gromov_product(ab, ab_inv, one) == doctest::Approx(1.0));

  for (int n = 1; n <= 5; ++n) {
    GroupMatrix an = ball.eval(power(1, n));
    FreeWord anb = power(1, n);
    anb.push_back(2);
    CHECK(ball.gromov_product(an, ball.eval(anb), one) == doctest::Approx((double)n));
  }

  std::mt19937 rng(11u);
  std::uniform_int_distribution<size_t> pick(0, ball.size() - 1);
  for (int trial = 0; trial < 500; ++trial) {
    GroupMatrix f = ball.element(pick(rng)), g = ball.element(pick(rng));
    // (f, f)_1 = |f| and (f, g)_f = 0.
    CHECK(ball.gromov_product(f, f, one) == doctest::Approx((double)ball.norm(f)));
    CHECK(ball.gromov_product(f, g, f) == doctest::Approx(0.0));
    // Symmetric, half-integral, and equal to the common prefix length at 1.
    double p = ball.gromov_product(f, g, one);
    CHECK(ball.gromov_product(g, f, one) == doctest::Approx(p));
    CHECK(std::abs(2.0 * p - std::round(2.0 * p)) < 1e-12);
    int fi = ball.index_of(f), gi = ball.index_of(g);
    REQUIRE(fi >= 0);
    REQUIRE(gi >= 0);
    CHECK(p == doctest::Approx((double)common_prefix_length(ball.word(fi), ball.word(gi))));
  }

  GroupMatrix far = ball.eval(power(1, 7));
  CHECK_THROWS_AS(ball.gromov_product(far, ab, one), OutOfBall);
}

TEST_CASE("nearest point projection onto a cyclic subgroup") {
  const CayleyBall& ball = f2_ball();
  GroupMatrix a = fixtures::sanov_gens()[0];
  auto trace = cayley::subgroup_trace(ball, {a}, "axis-a");

  REQUIRE(trace.size() == 13);  // a^k for |k| <= 6
  // Closed under inverse and contains the identity.
  bool has_identity = false;
  for (const GroupMatrix& g : trace.elements) {
    if (is_identity(g, {})) has_identity = true;
    bool has_inverse = false;
    for (const GroupMatrix& h : trace.elements)
      if (matrices_equal(g.inverse(), h, {})) has_inverse = true;
    CHECK(has_inverse);
  }
  CHECK(has_identity);

  auto project = [&](const FreeWord& w) { return cayley::nearest_point_projection(ball, ball.eval(w), trace); };
  CHECK(matrices_equal(project({1, 1, 1, 2}), ball.eval(power(1, 3)), {}));   // a^3 b -> a^3
  CHECK(matrices_equal(project(power(2, 5)), ball.eval({}), {}));             // b^5 -> 1
  CHECK(matrices_equal(project({1, 1, -2, 1}), ball.eval(power(1, 2)), {}));  // a^2 b^-1 a -> a^2
  for (const GroupMatrix& g : trace.elements)
    CHECK(matrices_equal(cayley::nearest_point_projection(ball, g, trace), g, {}));

  CHECK(cayley::projection_displacement(ball, ball.eval(power(2, 5)), trace) == 0);
  CHECK(cayley::projection_displacement(ball, ball.eval({1, 1, 1, 2}), trace) == 3);

  // After translating the projection to the identity, no trace point is
  // closer to the translated element than the identity is.
  for (size_t i = 0; i < ball.size(); ++i) {
    GroupMatrix g = ball.element(i);
    GroupMatrix pr = cayley::nearest_point_projection(ball, g, trace);
    GroupMatrix shifted = pr.inverse() * g;
    int rhs = ball.distance(pr, g);
    for (const GroupMatrix& eta : trace.elements) {
      auto lhs = ball.distance_within(eta, shifted);
      if (lhs.has_value()) CHECK(*lhs >= rhs);
      // else the distance exceeds the lookup radius >= rhs, so the bound holds.
    }
  }
}

TEST_CASE("projections stay close to geodesics from the subgroup") {
  // Free case: geodesics from the axis to g pass through the projection.
  {
    const CayleyBall& ball = f2_ball();
    auto trace = cayley::subgroup_trace(ball, {fixtures::sanov_gens()[0]}, "axis-a");
    double K = cayley::quasiconvexity_constant(ball, trace);
    double bound = K + 6.0 * ball.delta(3) + 1.0;
    CHECK(K == doctest::Approx(0.0));
    CHECK(bound == doctest::Approx(1.0));

    std::mt19937 rng(23u);
    std::uniform_int_distribution<size_t> pick(0, ball.size() - 1);
    std::vector<size_t> sample;
    for (size_t i = 0; i < ball.size(); ++i)
      if (ball.word(i).size() <= 4) sample.push_back(i);
    for (int t = 0; t < 200; ++t) sample.push_back(pick(rng));

    for (size_t i : sample) {
      GroupMatrix g = ball.element(i);
      GroupMatrix pr = cayley::nearest_point_projection(ball, g, trace);
      for (const GroupMatrix& eta : trace.elements) {
        int best = 1 << 20;
        for (const GroupMatrix& v : ball.geodesic(eta, g)) {
          auto d = ball.distance_within(v, pr);
          if (d && *d < best) best = *d;
        }
        CHECK((double)best <= bound);
      }
    }
  }

  // Amalgam case: the same bound, exercised over the whole radius-8 ball.
  {
    const CayleyBall& ball = sl2z_ball();
    GroupMatrix S = fixtures::sl2z_amalgam().a.gens[0];
    auto trace = cayley::subgroup_trace(ball, {S}, "GammaA");
    REQUIRE(trace.size() == 4);  // S has order 4
    double bound = cayley::quasiconvexity_constant(ball, trace) + 6.0 * ball.delta(3) + 1.0;
    int worst = 0;
    for (size_t i = 0; i < ball.size(); ++i) {
      GroupMatrix g = ball.element(i);
      GroupMatrix pr = cayley::nearest_point_projection(ball, g, trace);
      for (const GroupMatrix& eta : trace.elements) {
        int best = 1 << 20;
        for (const GroupMatrix& v : ball.geodesic(eta, g)) {
          auto d = ball.distance_within(v, pr);
          if (d && *d < best) best = *d;
        }
        CHECK((double)best <= bound);
        worst = std::max(worst, best);
      }
    }
    CHECK(worst == 2);  // measured slack: well inside the bound of 7
  }
}

TEST_CASE("hyperbolicity and quasiconvexity estimates") {
  const CayleyBall& f2 = f2_ball();
  CHECK(f2.delta(3) == doctest::Approx(0.0));  // free groups act on trees
  CHECK(f2.delta(3) == doctest::Approx(f2.delta(3)));  // cached and reproducible
  CHECK_THROWS_AS(f2.delta(7), OutOfBall);  // would need lookup radius 14

  auto trace_a = cayley::subgroup_trace(f2, {fixtures::sanov_gens()[0]}, "axis-a");
  CHECK(cayley::quasiconvexity_constant(f2, trace_a) == doctest::Approx(0.0));

  // <a^2> inside the radius-6 ball: only powers with embedded norm <= 6 survive.
  GroupMatrix a2 = f2.eval({1, 1});
  auto trace_a2 = cayley::subgroup_trace(f2, {a2}, "axis-a2");
  CHECK(trace_a2.size() == 7);  // a^{2k}, |2k| <= 6

  const CayleyBall& sl = sl2z_ball();
  CHECK(sl.delta(3) == doctest::Approx(1.0));
  auto p = fixtures::sl2z_amalgam();
  auto trA = cayley::subgroup_trace(sl, {p.a.gens[0]}, "GammaA");
  auto trB = cayley::subgroup_trace(sl, {p.b.gens[0]}, "GammaB");
  CHECK(trB.size() == 6);  // U has order 6
  CHECK(cayley::quasiconvexity_constant(sl, trA) == doctest::Approx(0.0));
  CHECK(cayley::quasiconvexity_constant(sl, trB) == doctest::Approx(1.0));
}

TEST_CASE("projection displacement is flat across length strata") {
  const CayleyBall& ball = sl2z_ball();
  auto p = fixtures::sl2z_amalgam();
  auto trace = cayley::subgroup_trace(ball, {p.a.gens[0]}, "GammaA");

  // Group elements by word norm; keep those whose alternating normal form has
  // at least three syllables, where the projection bound has content.
  std::vector<int> max_disp(9, 0), count(9, 0);
  for (size_t i = 0; i < ball.size(); ++i) {
    const FreeWord& w = ball.word(i);
    std::vector<std::pair<words::Factor, FreeWord>> sylls;
    for (int letter : w)
      sylls.push_back({std::abs(letter) == 1 ? words::Factor::A : words::Factor::B,
                       FreeWord{letter > 0 ? 1 : -1}});
    auto nf = words::amalgam_normal_form(p.word(sylls), p);
    if (nf.relative_length < 3) continue;
    int n = (int)w.size();
    int d = cayley::projection_displacement(ball, ball.element(i), trace);
    max_disp[n] = std::max(max_disp[n], d);
    count[n]++;
  }

  for (int n = 3; n <= 8; ++n) CHECK(count[n] > 0);
  // The maximum does not grow with the stratum: deeper elements project no
  // farther from the identity than shallow ones.
  CHECK(max_disp[7] <= max_disp[6]);
  CHECK(max_disp[8] <= max_disp[6]);
  int overall = *std::max_element(max_disp.begin(), max_disp.end());
  CHECK(overall == 1);  // the empirical bound for this ball
}

TEST_CASE("fellow travel margins of word sequences") {
  const CayleyBall& ball = f2_ball();

  auto prefixes = [&](const FreeWord& w) {
    std::vector<GroupMatrix> out;
    for (size_t n = 1; n <= w.size(); ++n)
      out.push_back(ball.eval(FreeWord(w.begin(), w.begin() + n)));
    return out;
  };

  // A sequence against itself: the margin is the smallest norm in it.
  FreeWord w = {1, 2, 1, -2, 1, 1};
  auto seq = prefixes(w);
  CHECK(cayley::fellow_travel_margin(ball, seq, seq) == doctest::Approx(1.0));

  // Sequences sharing a length-3 prefix then diverging: aligned prefixes of
  // length 1 and 2 still agree, so the full-sequence margin is 1, while the
  // margin from length 3 onwards is exactly 3.
  FreeWord w2 = {1, 2, 1, 2, -1, -1};
  auto from = [](std::vector<GroupMatrix> s, size_t k) {
    return std::vector<GroupMatrix>(s.begin() + k, s.end());
  };
  CHECK(cayley::fellow_travel_margin(ball, prefixes(w), prefixes(w2)) == doctest::Approx(1.0));
  CHECK(cayley::fellow_travel_margin(ball, from(prefixes(w), 2), from(prefixes(w2), 2)) ==
        doctest::Approx(3.0));

  // a^n vs a^n b: margin n, growing with n.
  double prev = 0.0;
  for (int n = 1; n <= 5; ++n) {
    FreeWord anb = power(1, n);
    anb.push_back(2);
    double m = cayley::fellow_travel_margin(ball, {ball.eval(power(1, n))}, {ball.eval(anb)});
    CHECK(m == doctest::Approx((double)n));
    CHECK(m > prev);
    prev = m;
  }

  CHECK_THROWS_AS(cayley::fellow_travel_margin(ball, {ball.eval({1})}, seq), ConfigInvalid);
  CHECK_THROWS_AS(cayley::fellow_travel_margin(ball, {}, {}), ConfigInvalid);
}

TEST_CASE("ball statistics export") {
  const CayleyBall& ball = sl2z_ball();
  ball.delta(3);  // populate the cache so the dump includes it
  auto stats = ball.stats_json();
  CHECK(stats["generators"].size() == 2);
  CHECK(stats["radius"] == 8);
  CHECK(stats["lookup_radius"] == 12);
  CHECK(stats["size"] == ball.size());
  size_t total = 0;
  for (const auto& s : stats["sphere_sizes"]) total += s.get<size_t>();
  CHECK(total == ball.size());
  CHECK(stats["complete"] == false);
  CHECK(stats["delta"] == doctest::Approx(1.0));
  CHECK(stats["delta_sub_radius"] == 3);
  CHECK(stats.dump() == ball.stats_json().dump());  // deterministic
}
