#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "msgr/partition.hpp"
#include "support.hpp"

using namespace msgr;
using msgr::testing::grid_graph;

namespace {

/// Vertices within Euclidean distance delta of some vertex of `core`, by
/// scanning every pair.
std::vector<Index> brute_force_ball(const WeightedGraph& g, const IndexSet& core, double delta) {
  std::vector<Index> out;
  for (Index v = 0; v < g.num_vertices(); ++v) {
    for (Index u : core) {
      if ((g.point(u) - g.point(v)).norm() <= delta) {
        out.push_back(v);
        break;
      }
    }
  }
  return out;
}

std::vector<Index> ids(const IndexSet& s) { return {s.begin(), s.end()}; }

void check_cover(const Partition& p) {
  std::vector<int> seen(static_cast<std::size_t>(p.num_vertices), 0);
  for (Index k = 0; k < p.num_subdomains(); ++k) {
    for (Index v : p.subdomains[static_cast<std::size_t>(k)]) {
      ++seen[static_cast<std::size_t>(v)];
      CHECK(p.assignment[static_cast<std::size_t>(v)] == k);
    }
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

}  // namespace

TEST_SUITE("partition") {

TEST_CASE("one subdomain is the whole vertex set") {
  const WeightedGraph g = grid_graph(6, 5);
  const Partition p = partition_balanced(g, 1, 0);
  REQUIRE(p.num_subdomains() == 1);
  CHECK(p.subdomains[0].size() == 30);
}

TEST_CASE("as many subdomains as vertices gives singletons") {
  const WeightedGraph g = grid_graph(4, 3);
  const Partition p = partition_balanced(g, 12, 0);
  check_cover(p);
  for (const IndexSet& s : p.subdomains) CHECK(s.size() == 1);
}

TEST_CASE("20x20 grid into four balanced subdomains") {
  const Partition p = partition_balanced(grid_graph(20, 20), 4, 0);
  check_cover(p);
  CHECK(p.min_size() >= 90);
  CHECK(p.max_size() <= 110);
  CHECK(static_cast<double>(p.max_size()) / static_cast<double>(p.min_size()) <= 1.1);
  CHECK(p.disconnected.empty());
}

TEST_CASE("property: balance and cover across sizes and seeds") {
  for (Index n_omega : {2, 3, 5, 9, 16, 25}) {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
      const Partition p = partition_balanced(grid_graph(24, 19), n_omega, seed);
      REQUIRE(p.num_subdomains() == n_omega);
      check_cover(p);
      CHECK(static_cast<double>(p.max_size()) <= 1.1 * static_cast<double>(p.min_size()) + 1e-12);
    }
  }
}

TEST_CASE("partitioning without coordinates uses graph distances") {
  const WeightedGraph g = grid_graph(12, 12);
  const WeightedGraph bare(g.num_vertices(), {}, g.edges());
  const Partition p = partition_balanced(bare, 6, 0);
  check_cover(p);
  CHECK(static_cast<double>(p.max_size()) <= 1.1 * static_cast<double>(p.min_size()));
}

TEST_CASE("partitioning is deterministic per seed") {
  const WeightedGraph g = grid_graph(17, 13);
  CHECK(partition_balanced(g, 7, 3).assignment == partition_balanced(g, 7, 3).assignment);
}

TEST_CASE("disconnected input names its components") {
  const WeightedGraph g(4, {}, {{0, 1, 1.0}, {2, 3, 1.0}});
  try {
    (void)partition_balanced(g, 2, 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::disconnected_graph);
    CHECK(std::string(e.what()).find("2 components") != std::string::npos);
  }
  CHECK_THROWS_AS(partition_balanced(grid_graph(3, 3), 10, 0), Error);
}

TEST_CASE("zero oversampling leaves the subdomains unchanged") {
  const WeightedGraph g = grid_graph(10, 10);
  const Partition p = oversample(g, partition_balanced(g, 4, 0), 0.0);
  for (std::size_t k = 0; k < p.subdomains.size(); ++k) CHECK(p.oversampled[k] == p.subdomains[k]);
  CHECK(p.max_overlap() == 1);
}

TEST_CASE("oversampling past the diameter covers everything") {
  const WeightedGraph g = grid_graph(10, 10);
  const Partition p = oversample(g, partition_balanced(g, 4, 0), 1.5);
  for (const IndexSet& s : p.oversampled) CHECK(s.size() == 100);
  CHECK(p.max_overlap() == 4);
}

TEST_CASE("oversampling on the 10x10 grid matches a brute-force scan") {
  // The spacing is 1/9 = 0.111, so 0.1 reaches no neighbour and 0.12 reaches
  // exactly the axis neighbours (the diagonal ones sit at 0.157).
  const WeightedGraph g = grid_graph(10, 10);
  const Partition base = partition_balanced(g, 4, 0);
  for (double delta : {0.1, 0.12, 0.2, 0.35}) {
    const Partition p = oversample(g, base, delta);
    for (std::size_t k = 0; k < base.subdomains.size(); ++k) {
      CHECK(ids(p.oversampled[k]) == brute_force_ball(g, base.subdomains[k], delta));
    }
  }
  const Partition none = oversample(g, base, 0.1);
  const Partition one = oversample(g, base, 0.12);
  const Partition hop = graph_distance_oversample(g, base, 1);
  for (std::size_t k = 0; k < base.subdomains.size(); ++k) {
    CHECK(none.oversampled[k] == base.subdomains[k]);
    CHECK(one.oversampled[k] == hop.oversampled[k]);
    CHECK(one.oversampled[k].size() > base.subdomains[k].size());
  }
}

TEST_CASE("property: oversampled regions grow monotonically with the radius") {
  const WeightedGraph g = grid_graph(15, 11);
  const Partition base = partition_balanced(g, 6, 1);
  Partition prev = oversample(g, base, 0.0);
  for (double delta : {0.05, 0.1, 0.15, 0.3, 0.6}) {
    const Partition next = oversample(g, base, delta);
    for (std::size_t k = 0; k < base.subdomains.size(); ++k) {
      for (Index v : prev.oversampled[k]) CHECK(next.oversampled[k].contains(v));
      for (Index v : base.subdomains[k]) CHECK(next.oversampled[k].contains(v));
    }
    prev = next;
  }
}

TEST_CASE("subdomain closure adds whole neighbouring subdomains") {
  const WeightedGraph g = grid_graph(12, 12);
  const Partition base = partition_balanced(g, 9, 0);
  const Partition vertex = oversample(g, base, 0.1);
  const Partition closure = oversample(g, base, 0.1, OversampleMode::subdomain_closure);
  for (std::size_t k = 0; k < base.subdomains.size(); ++k) {
    for (Index v : vertex.oversampled[k]) CHECK(closure.oversampled[k].contains(v));
    for (Index v : closure.oversampled[k]) {
      const auto& owner = base.subdomains[static_cast<std::size_t>(base.assignment[static_cast<std::size_t>(v)])];
      for (Index u : owner) CHECK(closure.oversampled[k].contains(u));
    }
  }
}

TEST_CASE("geometric oversampling needs coordinates") {
  const WeightedGraph bare(3, {}, {{0, 1, 1.0}, {1, 2, 1.0}});
  const Partition p = Partition::from_assignment({0, 0, 1}, 2);
  try {
    (void)oversample(bare, p, 0.5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_coordinates);
  }
}

TEST_CASE("hop oversampling on a path") {
  const WeightedGraph g = msgr::testing::path_graph(10);
  const Partition p = Partition::from_assignment({0, 0, 0, 0, 1, 1, 2, 2, 2, 2}, 3);
  const Partition two = graph_distance_oversample(g, p, 2);
  CHECK(ids(two.oversampled[1]) == std::vector<Index>{2, 3, 4, 5, 6, 7});
  const Partition zero = graph_distance_oversample(g, p, 0);
  CHECK(zero.oversampled[1] == p.subdomains[1]);
  const Partition all = graph_distance_oversample(g, p, 9);
  for (const IndexSet& s : all.oversampled) CHECK(s.size() == 10);
}

TEST_CASE("partition text round trip") {
  const WeightedGraph g = grid_graph(7, 6);
  const Partition p = partition_balanced(g, 5, 0);
  std::stringstream ss;
  write_partition(ss, p);
  const Partition q = read_partition(ss);
  CHECK(q.assignment == p.assignment);
  CHECK(q.num_subdomains() == 5);
}

}  // TEST_SUITE
