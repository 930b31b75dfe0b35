#include <doctest.h>

#include <algorithm>
#include <random>

#include "kct/error.hpp"
#include "kct/mission.hpp"
#include "oracles.hpp"

using namespace kct;

namespace {

MissionDefinition chain_with_diamond() {
  MissionDefinition d;
  d.mission_id = "m";
  d.tasks = {{"T1", "", 0.5, Layer::task}};
  d.assets = {{"I1", "", std::nullopt, Layer::information, {}},
              {"I2", "", std::nullopt, Layer::information, {}},
              {"S1", "", std::nullopt, Layer::service, {}}};
  d.asset_edges = {{"T1", "I1", 1.0}, {"T1", "I2", 1.0}, {"I1", "S1", 1.0}, {"I2", "S1", 1.0}};
  return d;
}

std::string expect_validation(MissionDefinition d) {
  try {
    MissionModel m(std::move(d));
  } catch (const ValidationError& e) {
    return e.what();
  }
  FAIL("expected ValidationError");
  return {};
}

}  // namespace

TEST_SUITE("mission") {

TEST_CASE("load_mission reads the case-study document") {
  const auto m = load_mission_file(KCT_FIXTURE_DIR "/case_study/mission.json");
  REQUIRE(m.task_count() == 6);
  REQUIRE(m.asset_count() == 6);
  const std::vector<double> want{0.7, 0.2, 0.4, 0.8, 0.6, 0.3};
  for (std::size_t i = 0; i < 6; ++i) CHECK(m.tasks()[i].severity == doctest::Approx(want[i]));
  CHECK(m.mission_id() == "case-study");
}

TEST_CASE("empty document is a valid empty mission") {
  const auto m = load_mission(R"({"format": "kct-mission/1", "mission_id": "e", "tasks": [], "assets": []})");
  CHECK(m.task_count() == 0);
  CHECK(m.asset_count() == 0);
}

TEST_CASE("malformed documents raise parse errors") {
  CHECK_THROWS_AS(load_mission("{not json"), ParseError);
  CHECK_THROWS_AS(load_mission(R"({"format": "kct-mission/9"})"), ParseError);
  CHECK_THROWS_AS(load_mission(R"({"tasks": [{"id": "T1"}]})"), ParseError);
  CHECK_THROWS_AS(load_mission(R"({"assets": [{"id": "A1", "layer": "cloud"}]})"), ParseError);
}

TEST_CASE("invariant violations name the invariant") {
  auto d = chain_with_diamond();
  d.asset_edges[0].degree = 1.5;
  CHECK(expect_validation(d).find("degree out of range") != std::string::npos);

  d = chain_with_diamond();
  d.asset_edges.push_back({"S1", "Z9", 0.5});
  CHECK(expect_validation(d).find("dangling reference") != std::string::npos);

  d = chain_with_diamond();
  d.asset_edges.push_back({"S1", "I1", 0.5});  // service above information
  CHECK(expect_validation(d).find("layer violation") != std::string::npos);

  d = chain_with_diamond();
  d.tasks[0].severity = -0.1;
  CHECK(expect_validation(d).find("severity out of range") != std::string::npos);

  d = chain_with_diamond();
  d.asset_edges.push_back({"T1", "I1", 0.3});
  CHECK(expect_validation(d).find("duplicate edge") != std::string::npos);

  d = chain_with_diamond();
  d.assets.push_back({"I1", "", std::nullopt, Layer::service, {}});
  CHECK(expect_validation(d).find("duplicate node id") != std::string::npos);
}

TEST_CASE("same-layer cycle is rejected") {
  auto d = chain_with_diamond();
  d.asset_edges.push_back({"I1", "I2", 0.5});
  d.asset_edges.push_back({"I2", "I1", 0.5});
  CHECK(expect_validation(d).find("cycle") != std::string::npos);

  d = chain_with_diamond();
  d.tasks.push_back({"T2", "", 0.1, Layer::task});
  d.task_edges = {{"T1", "T2", 0.5}, {"T2", "T1", 0.5}};
  CHECK(expect_validation(d).find("cycle") != std::string::npos);
}

TEST_CASE("zero-degree edges are dropped") {
  auto d = chain_with_diamond();
  d.asset_edges[0].degree = 0.0;
  const MissionModel m(d);
  CHECK(enumerate_paths(m, "T1", "S1").size() == 1);
}

TEST_CASE("enumerate_paths multiplies edge degrees") {
  MissionDefinition d;
  d.tasks = {{"T1", "", 0.5, Layer::task}};
  d.assets = {{"I1", "", std::nullopt, Layer::information, {}}, {"S1", "", std::nullopt, Layer::service, {}}};
  d.asset_edges = {{"T1", "I1", 0.6}, {"I1", "S1", 0.5}};
  const MissionModel m(d);
  const auto ps = enumerate_paths(m, "T1", "S1");
  REQUIRE(ps.size() == 1);
  CHECK(ps[0].nodes == std::vector<NodeId>{"T1", "I1", "S1"});
  CHECK(ps[0].path_degree == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(enumerate_paths(m, "S1", "T1").empty());
  CHECK_THROWS_AS(enumerate_paths(m, "T1", "nope"), NotFoundError);
}

TEST_CASE("diamond of unit edges has two unit paths") {
  const MissionModel m(chain_with_diamond());
  const auto ps = enumerate_paths(m, "T1", "S1");
  REQUIRE(ps.size() == 2);
  for (const auto& p : ps) CHECK(p.path_degree == 1.0);
}

TEST_CASE("aggregate_degree is noisy-or") {
  const std::vector<double> a{0.3, 0.5};
  CHECK(aggregate_degree(std::span<const double>(a)) == doctest::Approx(0.65).epsilon(1e-12));
  CHECK(aggregate_degree(std::span<const double>{}) == 0.0);
  const std::vector<double> b{1.0, 0.2};
  CHECK(aggregate_degree(std::span<const double>(b)) == 1.0);
}

TEST_CASE("tasks_depending_on follows dependent orientation") {
  MissionDefinition star;
  star.tasks = {{"T1", "", 0.1, Layer::task}, {"T2", "", 0.2, Layer::task}, {"T3", "", 0.3, Layer::task}};
  star.task_edges = {{"T2", "T1", 0.4}, {"T3", "T1", 0.9}};
  const MissionModel s(star);
  const auto rel = tasks_depending_on(s, "T1");
  REQUIRE(rel.size() == 2);
  CHECK(rel.at("T2") == doctest::Approx(0.4));
  CHECK(rel.at("T3") == doctest::Approx(0.9));
  CHECK(tasks_depending_on(s, "T2").empty());
  // The opposite orientation looks at what T2 relies on.
  CHECK(tasks_depending_on(s, "T2", TsasOrientation::dependencies).at("T1") == doctest::Approx(0.4));

  MissionDefinition chain;
  chain.tasks = {{"T1", "", 0.1, Layer::task}, {"T2", "", 0.2, Layer::task}, {"T3", "", 0.3, Layer::task}};
  chain.task_edges = {{"T3", "T2", 0.5}, {"T2", "T1", 0.5}};
  const auto c = tasks_depending_on(MissionModel(chain), "T1");
  CHECK(c.at("T2") == doctest::Approx(0.5));
  CHECK(c.at("T3") == doctest::Approx(0.25));
  CHECK_THROWS_AS(tasks_depending_on(MissionModel(chain), "T9"), NotFoundError);
}

TEST_CASE("mission JSON round-trips") {
  const auto m = load_mission_file(KCT_FIXTURE_DIR "/case_study/mission.json");
  const auto again = mission_definition_from_json(mission_to_json(m.definition()));
  CHECK(mission_to_json(again) == mission_to_json(m.definition()));
}

TEST_CASE("property: noisy-or is order independent, monotone and bounded") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> ds(1 + rng() % 12);
    for (auto& d : ds) d = u(rng);
    const double base = aggregate_degree(std::span<const double>(ds));
    CHECK((base >= 0.0 && base <= 1.0));
    auto shuffled = ds;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(std::abs(aggregate_degree(std::span<const double>(shuffled)) - base) <= 1e-12);
    ds.push_back(u(rng) + 1e-9);
    CHECK(aggregate_degree(std::span<const double>(ds)) >= base);
  }
}

TEST_CASE("property: path degree never exceeds its weakest edge") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto def = oracle::random_mission(rng);
    const MissionModel m(def);
    const auto g = oracle::dense(def, oracle::Edges::all);
    for (const auto& t : def.tasks)
      for (const auto& a : def.assets)
        for (const auto& p : enumerate_paths(m, t.id, a.id)) {
          double weakest = 1.0;
          for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i)
            weakest = std::min(weakest, g.w[g.index(p.nodes[i])][g.index(p.nodes[i + 1])]);
          CHECK(p.path_degree <= weakest + 1e-15);
        }
  }
}

TEST_CASE("property: path sets match brute-force enumeration") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto def = oracle::random_mission(rng, {3, 5, 0.5, 0.0});
    const MissionModel m(def);
    const auto g = oracle::dense(def, oracle::Edges::all);
    for (const auto& s : g.ids)
      for (const auto& t : g.ids) {
        std::set<std::vector<NodeId>> got, want;
        for (const auto& p : enumerate_paths(m, s, t)) got.insert(p.nodes);
        for (const auto& p : oracle::paths(g, g.index(s), g.index(t))) {
          std::vector<NodeId> ids;
          for (auto i : p) ids.push_back(g.ids[i]);
          want.insert(ids);
        }
        CHECK(got == want);
      }
  }
}

TEST_CASE("property: any back-edge on a random DAG is rejected") {
  std::mt19937_64 rng(14);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto def = oracle::random_mission(rng);
    // Close a cycle among tasks or among assets of one layer.
    const auto g = oracle::dense(def, oracle::Edges::all);
    bool added = false;
    for (const auto e : std::vector(def.task_edges))
      if (!added && e.degree > 0.0) {
        def.task_edges.push_back({e.to, e.from, 0.5});
        added = true;
      }
    for (std::size_t i = 0; !added && i < def.assets.size(); ++i)
      for (std::size_t j = i + 1; !added && j < def.assets.size(); ++j) {
        if (def.assets[i].layer != def.assets[j].layer) continue;
        const auto ps = oracle::paths(g, g.index(def.assets[i].id), g.index(def.assets[j].id));
        if (ps.empty()) continue;
        def.asset_edges.push_back({def.assets[j].id, def.assets[i].id, 0.5});
        added = true;
      }
    if (!added) continue;
    ++checked;
    CHECK_THROWS_AS(MissionModel{def}, ValidationError);
  }
  CHECK(checked > 50);
}

}  // TEST_SUITE
