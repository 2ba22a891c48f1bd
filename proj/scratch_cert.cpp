#include <chrono>
#include <cstdio>

#include "amalgam/certify.hpp"
#include "amalgam/errors.hpp"

using namespace amalgam;

static double now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

int main(int argc, char** argv) {
  double excision_factor = argc > 1 ? std::atof(argv[1]) : 25.0;
  int net_cap = argc > 2 ? std::atoi(argv[2]) : 600;
  int unused_depth = argc > 3 ? std::atoi(argv[3]) : 5; (void)unused_depth;
  int depth = argc > 4 ? std::atoi(argv[4]) : 4;

  reps::MatrixRep shadow = reps::fuchsian_genus2();
  reps::MatrixRep rep = reps::lift_rep(shadow, 3);
  flags::FlagType type = flags::FlagType::full(3);

  certify::ArcSceneConfig cfg;
  cfg.rep = rep;
  cfg.shadow = shadow;
  cfg.type = type;
  
  cfg.net_cap = net_cap;
  cfg.excision_factor = excision_factor;
  cfg.depth = depth;

  double t0 = now();
  certify::PairScene scene;
  try {
    scene = certify::build_pair_scene(cfg, {"a1", "b1"}, {"a2", "b2"}, {1, 2, -1, -2},
                                      {1, 2, -1, -2}, {2, 1, -2, -1});
  } catch (const Error& e) {
    std::printf("build_pair_scene failed: %s\n", e.what());
    return 1;
  }
  double t1 = now();
  std::printf("pair scene: |A|=%zu r=%.3e  |B|=%zu r=%.3e  excision=%.3e  build %.2fs\n",
              scene.A.net.size(), scene.A.r, scene.B.net.size(), scene.B.r, scene.excision,
              t1 - t0);

  certify::CertReport rep_pair = certify::verify_interactive_pair(scene);
  double t2 = now();
  std::printf("pair verdict: %s  min_margin=%.6e  verify %.2fs\n", rep_pair.verdict.c_str(),
              rep_pair.min_margin(), t2 - t1);
  for (const auto& c : rep_pair.conditions)
    std::printf("  %-28s %-13s margin=% .6e checked=%ld %s %s\n", c.name.c_str(),
                c.status.c_str(), c.margin, c.checked, c.witness_word.c_str(),
                c.detail.c_str());

  // HNN scene along the non-separating curve a1 with stable letter b1.
  double t3 = now();
  certify::TripleScene triple;
  try {
    triple = certify::build_triple_scene(cfg, {"a1", "a2", "b2"}, "b1", {1}, {1},
                                         {2, 3, -2, -3, 1});
  } catch (const Error& e) {
    std::printf("build_triple_scene failed: %s\n", e.what());
    return 1;
  }
  double t4 = now();
  std::printf("\ntriple scene: |A|=%zu r=%.3e  |B+|=%zu r=%.3e  |B-|=%zu r=%.3e  excision=%.3e  build %.2fs\n",
              triple.A.net.size(), triple.A.r, triple.B_plus.net.size(), triple.B_plus.r,
              triple.B_minus.net.size(), triple.B_minus.r, triple.excision, t4 - t3);

  certify::CertReport rep_triple = certify::verify_interactive_triple(triple);
  double t5 = now();
  std::printf("triple verdict: %s  min_margin=%.6e  verify %.2fs\n", rep_triple.verdict.c_str(),
              rep_triple.min_margin(), t5 - t4);
  for (const auto& c : rep_triple.conditions)
    std::printf("  %-32s %-13s margin=% .6e checked=%ld %s %s\n", c.name.c_str(),
                c.status.c_str(), c.margin, c.checked, c.witness_word.c_str(), c.detail.c_str());
  return 0;
}
