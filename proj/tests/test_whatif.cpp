#include <doctest.h>

#include <filesystem>

#include "case_study.hpp"
#include "kct/error.hpp"
#include "kct/whatif.hpp"

using namespace kct;

namespace {

struct Seeded {
  fixture::CaseStudy cs;
  Store store{":memory:"};
  Seeded() {
    CycleConfig cfg;
    cfg.sinks = {{SinkDescriptor::Kind::file, (std::filesystem::temp_directory_path() / "kct_whatif.jsonl").string()}};
    Engine engine(store, cfg);
    engine.run_cycle(cs.cycle_inputs());
  }
};

Patch k_patch(double k) {
  Patch p;
  p.kind = Patch::Kind::k;
  p.value = k;
  return p;
}

}  // namespace

TEST_SUITE("whatif") {

TEST_CASE("no patches gives an empty diff") {
  Seeded s;
  const auto r = what_if(s.store, {});
  CHECK(r.base_version == 1);
  CHECK(r.diff.empty());
  CHECK(r.board == r.base);
  const auto j = to_json(r);
  CHECK(j["ephemeral"] == true);
  CHECK(j["scoreboard_version"] == 1);
}

TEST_CASE("raising k only removes KCTs and leaves the store alone") {
  Seeded s;
  const auto hash = s.store.content_hash();
  const Patch p[] = {k_patch(1.0)};
  const auto r = what_if(s.store, {0, {p[0]}});
  CHECK(r.diff.tacs.empty());  // k never changes TACS
  CHECK(r.diff.mission_kcts.gained.empty());
  for (const auto& [task, change] : r.diff.task_kcts) CHECK(change.gained.empty());
  for (const auto& a : r.board.mission_kcts) CHECK(r.base.mission_kcts.count(a) == 1);
  CHECK(s.store.content_hash() == hash);
  CHECK(s.store.latest_version() == 1);
}

TEST_CASE("severity patch equals an independent evaluation") {
  Seeded s;
  Patch p;
  p.kind = Patch::Kind::task_severity;
  p.target = "T6";
  p.value = 0.9;
  const auto r = what_if(s.store, {1, {p}});
  auto def = s.cs.mission;
  for (auto& t : def.tasks)
    if (t.id == "T6") t.severity = 0.9;
  def.precomputed_tsas.erase("T6");
  const auto independent = score_mission(MissionModel(def), s.cs.tbs, s.cs.vbs, {});
  CHECK(r.board.tacs == independent.tacs);
  CHECK(r.board.tsas == independent.tsas);
  CHECK(r.board.mission_kcts == independent.mission_kcts);
  CHECK(!r.diff.tacs.empty());
}

TEST_CASE("edge degree patch equals an independent evaluation") {
  Seeded s;
  const auto& e = s.cs.mission.asset_edges.front();
  Patch p;
  p.kind = Patch::Kind::edge_degree;
  p.from = e.from;
  p.to = e.to;
  p.value = e.degree / 2.0;
  const auto r = what_if(s.store, {1, {p}});
  auto def = s.cs.mission;
  def.asset_edges.front().degree = e.degree / 2.0;
  def.precomputed_atas.clear();
  const auto independent = score_mission(MissionModel(def), s.cs.tbs, s.cs.vbs, {});
  CHECK(r.board.atas == independent.atas);
  CHECK(r.board.tsas == r.base.tsas);  // asset edges never move TSAS
  CHECK(r.board.tacs == independent.tacs);
}

TEST_CASE("weights and asset removal") {
  Seeded s;
  Patch w;
  w.kind = Patch::Kind::weights;
  w.weights = ScoreWeights::make(1.0, 0.0, 0.0);
  Patch rm;
  rm.kind = Patch::Kind::asset_removal;
  rm.target = "A6";
  const auto r = what_if(s.store, {1, {w, rm}});
  CHECK(r.board.macs.count("A6") == 0);
  CHECK(r.board.mission_kcts.count("A6") == 0);
  CHECK(r.diff.mission_kcts.lost.count("A6") == 1);
}

TEST_CASE("invalid patches") {
  Seeded s;
  Patch sev;
  sev.kind = Patch::Kind::task_severity;
  sev.target = "T1";
  sev.value = 1.5;
  CHECK_THROWS_AS(what_if(s.store, {1, {sev}}), ValidationError);
  sev.target = "T9";
  sev.value = 0.5;
  CHECK_THROWS_AS(what_if(s.store, {1, {sev}}), NotFoundError);
  Patch edge;
  edge.kind = Patch::Kind::edge_degree;
  edge.from = "A1";
  edge.to = "T1";
  edge.value = 0.5;
  CHECK_THROWS_AS(what_if(s.store, {1, {edge}}), ValidationError);
  CHECK_THROWS_AS(what_if(s.store, {1, {k_patch(2.0)}}), ValidationError);
  CHECK_THROWS_AS(what_if(s.store, {7, {}}), NotFoundError);
  Store empty(":memory:");
  CHECK_THROWS_AS(what_if(empty, {}), NotFoundError);
}

TEST_CASE("request documents") {
  const auto req = whatif_request_from_json(
      {{"base_version", 3},
       {"overrides",
        {{{"type", "k"}, {"value", 0.9}},
         {{"type", "edge_degree"}, {"from", "T1"}, {"to", "A1"}, {"value", 0.4}},
         {{"type", "weights"}, {"mw", 0.5}, {"bw", 0.25}, {"tw", 0.25}}}}});
  CHECK(req.base_version == 3);
  REQUIRE(req.overrides.size() == 3);
  CHECK(req.overrides[0].kind == Patch::Kind::k);
  CHECK(req.overrides[1].to == "A1");
  CHECK(req.overrides[2].weights.bw == 0.25);
  CHECK(to_json(req.overrides[1])["type"] == "edge_degree");
  CHECK_THROWS_AS(whatif_request_from_json({{"overrides", {{{"type", "teleport"}}}}}), ValidationError);
}

}  // TEST_SUITE
