#include <algorithm>
#include <cstdio>
#include <vector>

#include "amalgam/certify.hpp"
#include "amalgam/errors.hpp"

using namespace amalgam;

int main(int argc, char** argv) {
  int arc_depth = argc > 1 ? std::atoi(argv[1]) : 5;
  int net_cap = argc > 2 ? std::atoi(argv[2]) : 600;

  reps::MatrixRep shadow = reps::fuchsian_genus2();
  reps::MatrixRep rep = reps::lift_rep(shadow, 3);
  flags::FlagType type = flags::FlagType::full(3);

  reps::LimitSetSample sample = reps::limit_set_sample(rep, arc_depth, type);
  std::printf("sample net %zu skipped %d\n", sample.net.size(), sample.skipped);

  auto arcs = reps::arc_split(sample, shadow, {{1, 2, -1, -2}}, {"arc0", "arc1"});
  for (const auto& arc : arcs) {
    std::vector<flags::Flag> net = arc.net;
    if ((int)net.size() > net_cap) {
      std::vector<flags::Flag> thin;
      for (int i = 0; i < net_cap; ++i)
        thin.push_back(net[(long)i * (net.size() - 1) / (net_cap - 1)]);
      net = thin;
    }
    std::vector<double> sp;
    for (size_t i = 0; i + 1 < net.size(); ++i)
      sp.push_back(flags::flag_distance(net[i], net[i + 1]));
    std::sort(sp.begin(), sp.end());
    auto q = [&](double p) { return sp[(size_t)(p * (sp.size() - 1))]; };
    std::printf("%s: raw %zu thin %zu spacing min %.2e med %.2e q90 %.2e q99 %.2e max %.2e\n",
                arc.label.c_str(), arc.net.size(), net.size(), sp.front(), q(0.5), q(0.9),
                q(0.99), sp.back());
    // where are the biggest gaps?
    for (size_t i = 0; i + 1 < net.size(); ++i) {
      double d = flags::flag_distance(net[i], net[i + 1]);
      if (d > 0.5 * sp.back())
        std::printf("   gap %.3e at index %zu/%zu\n", d, i, net.size());
    }
  }

  GroupMatrix eta = reps::evaluate(rep, {1, 2, -1, -2});
  auto ax = reps::axis_flags(eta, type);
  std::printf("eta antipodality %.3e\n", ax.antipodality);
  for (const auto& arc : arcs) {
    double da = 2, dr = 2;
    for (const auto& f : arc.net) {
      da = std::min(da, flags::flag_distance(f, ax.attracting));
      dr = std::min(dr, flags::flag_distance(f, ax.repelling));
    }
    std::printf("%s: min dist to eta att %.3e rep %.3e\n", arc.label.c_str(), da, dr);
  }
  return 0;
}
