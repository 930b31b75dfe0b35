#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "kct/error.hpp"
#include "kct/score.hpp"
#include "oracles.hpp"

using namespace kct;

namespace {

std::map<NodeId, double> load_metric(const char* path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in).get<std::map<NodeId, double>>();
}

struct CaseStudy {
  MissionModel model = load_mission_file(KCT_FIXTURE_DIR "/case_study/mission.json");
  std::map<NodeId, double> tbs = load_metric(KCT_FIXTURE_DIR "/case_study/tbs.json");
  std::map<NodeId, double> vbs = load_metric(KCT_FIXTURE_DIR "/case_study/vbs.json");
};

MissionDefinition single(double severity, double degree) {
  MissionDefinition d;
  d.tasks = {{"T1", "", severity, Layer::task}};
  d.assets = {{"A1", "", std::nullopt, Layer::service, {}}};
  d.asset_edges = {{"T1", "A1", degree}};
  return d;
}

}  // namespace

TEST_SUITE("score") {

TEST_CASE("weights and sensitivity validation") {
  CHECK_NOTHROW(ScoreWeights::make(0.6, 0.2, 0.2));
  CHECK_THROWS_AS(ScoreWeights::make(0.5, 0.5, 0.5), ValidationError);
  CHECK_THROWS_AS(ScoreWeights::make(1.2, -0.1, -0.1), ValidationError);
  CHECK_THROWS_AS(Sensitivity::make(1.5), ValidationError);
  const ScoreWeights w;
  CHECK(w.mw + w.bw + w.tw == doctest::Approx(1.0));
}

TEST_CASE("atas over two paths") {
  MissionDefinition d;
  d.tasks = {{"T1", "", 0.5, Layer::task}};
  d.assets = {{"I1", "", std::nullopt, Layer::information, {}},
              {"I2", "", std::nullopt, Layer::information, {}},
              {"S1", "", std::nullopt, Layer::service, {}},
              {"S2", "", std::nullopt, Layer::service, {}}};
  d.asset_edges = {{"T1", "I1", 0.6}, {"I1", "S1", 0.5}, {"T1", "I2", 0.5}, {"I2", "S1", 1.0}};
  const MissionModel m(d);
  CHECK(atas(m, "T1", "S1") == doctest::Approx(1.0 - (1.0 - 0.3) * (1.0 - 0.5)).epsilon(1e-12));
  CHECK(atas(m, "T1", "S2") == 0.0);
  CHECK_THROWS_AS(atas(m, "T1", "nope"), NotFoundError);
}

TEST_CASE("cumulative severity and tsas") {
  CHECK(cumulative_severity(0.8, 0.5) == doctest::Approx(0.4));
  CHECK(cumulative_severity(0.7, 0.0) == 0.0);
  CHECK(cumulative_severity(1.0, 1.0) == 1.0);

  MissionDefinition d;
  d.tasks = {{"T1", "", 0.5, Layer::task}, {"T2", "", 0.8, Layer::task}, {"T3", "", 0.3, Layer::task}};
  d.task_edges = {{"T2", "T1", 0.5}};
  const MissionModel m(d);
  CHECK(tsas(m, "T1") == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(tsas(m, "T3") == doctest::Approx(0.3).epsilon(1e-12));

  d.tasks[0].severity = 1.0;
  CHECK(tsas(MissionModel(d), "T1") == 1.0);
}

TEST_CASE("tacs anchors") {
  CHECK(tacs(0.889, 1.0, 0.589, 0.65) == doctest::Approx(0.889 * (0.6 + 0.2 * 0.589 + 0.2 * 0.65)));
  CHECK(std::abs(tacs(0.889, 1.0, 0.589, 0.65) - 0.754) <= 0.001);
  CHECK(std::abs(tacs(0.889, 0.9, 0.494, 0.95) - 0.737) <= 0.001);
  CHECK(tacs(0.0, 1.0, 1.0, 1.0) == 0.0);
}

TEST_CASE("thresholds use the sample deviation") {
  const std::vector<double> t2{0.190, 0.195, 0.056};
  CHECK(std::abs(tth(t2, Sensitivity::medium()) - 0.186) <= 0.0005);
  const std::vector<double> t1{0.754, 0.737};
  CHECK(tth(t1, Sensitivity::medium()) == doctest::Approx(oracle::mean_k_sd(t1, 0.5)).epsilon(1e-12));
  const std::vector<double> printed{0.751, 0.186, 0.398, 0.510, 0.387, 0.204};
  CHECK(std::abs(mth(printed, Sensitivity::medium()) - 0.511) <= 0.0005);
  const std::vector<double> one{0.42};
  CHECK(mth(one, Sensitivity::medium()) == 0.42);
  CHECK_THROWS_AS(tth(std::span<const double>{}, Sensitivity::medium()), ValidationError);
  CHECK_THROWS_WITH(mth(std::span<const double>{}, Sensitivity::medium()), "empty mission");
  CHECK_THROWS_AS(macs(std::span<const double>{}), ValidationError);
  const std::vector<double> row{0.754, 0.190};
  CHECK(macs(row) == 0.754);
}

TEST_CASE("singleton mission") {
  const MissionModel m(single(1.0, 1.0));
  const auto b = score_mission(m, {{"A1", 0.0}}, {{"A1", 0.0}});
  CHECK(b.tacs.at("T1").at("A1") == doctest::Approx(0.6));
  CHECK(b.macs.at("A1") == doctest::Approx(0.6));
  CHECK(b.mission_kcts == std::set<NodeId>{"A1"});
  CHECK(b.task_kcts.at("T1") == std::set<NodeId>{"A1"});
}

TEST_CASE("empty mission surfaces as an error") {
  const MissionModel m(MissionDefinition{});
  CHECK_THROWS_WITH(score_mission(m, {}, {}), "empty mission");
}

TEST_CASE("missing metrics are named") {
  const MissionModel m(single(0.5, 0.5));
  CHECK_THROWS_WITH(score_mission(m, {}, {{"A1", 0.1}}), doctest::Contains("TBS) for asset A1"));
  CHECK_THROWS_AS(score_mission(m, {{"A1", 1.5}}, {{"A1", 0.1}}), ValidationError);
}

TEST_CASE("case study against hand-composed cells") {
  CaseStudy cs;
  const auto b = score_mission(cs.model, cs.tbs, cs.vbs);
  const auto& def = cs.model.definition();
  for (const auto& [task, row] : b.tacs)
    for (const auto& [asset, v] : row) {
      const double at = def.precomputed_atas.count(task) && def.precomputed_atas.at(task).count(asset)
                            ? def.precomputed_atas.at(task).at(asset)
                            : oracle::atas(def, task, asset);
      const double want = def.precomputed_tsas.at(task) * (0.6 * at + 0.2 * cs.tbs.at(asset) + 0.2 * cs.vbs.at(asset));
      CHECK_MESSAGE(v == doctest::Approx(want).epsilon(1e-12), task << "/" << asset);
    }
  CHECK(b.tacs.at("T4").at("A5") == doctest::Approx(0.842 * (0.2 * 0.256 + 0.2 * 0.26)));
  CHECK(b.mission_kcts == std::set<NodeId>{"A1", "A2", "A6"});
  CHECK(b.task_kcts.at("T1") == std::set<NodeId>{"A1"});
  CHECK(b.participants.at("T4") == std::set<NodeId>{"A4", "A5", "A6"});

  ScoringOptions strict;
  strict.participation = ParticipationRule::positive_atas;
  const auto s = score_mission(cs.model, cs.tbs, cs.vbs, strict);
  CHECK(s.participants.at("T4") == std::set<NodeId>{"A4", "A6"});
  CHECK(s.tacs.at("T4").count("A5") == 1);  // still reported
}

TEST_CASE("discrepancies against expected values") {
  CaseStudy cs;
  const auto b = score_mission(cs.model, cs.tbs, cs.vbs);
  ExpectedValues e;
  e.tacs["T1"]["A1"] = 0.754;
  e.tacs["T4"]["A6"] = 0.100;
  e.mth = 0.9;
  e.mission_kcts = std::set<NodeId>{"A1"};
  const auto notes = find_discrepancies(b, e);
  std::set<std::string> subjects;
  for (const auto& n : notes) subjects.insert(n.quantity + ":" + n.subject);
  CHECK(subjects == std::set<std::string>{"tacs:A6/T4", "mth:mission", "mission_kcts:mission"});
}

TEST_CASE("property: full pipeline equals the independent oracle") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto def = oracle::random_mission(rng, {6, 8, 0.4, 0.15});
    const auto tbs = oracle::random_metric(rng, def);
    const auto vbs = oracle::random_metric(rng, def);
    ScoringOptions opt;
    opt.sensitivity = Sensitivity::make(u(rng));
    const double mw = u(rng), bw = (1.0 - mw) * u(rng);
    opt.weights = ScoreWeights::make(mw, bw, 1.0 - mw - bw);
    opt.participation = trial % 2 ? ParticipationRule::assigned : ParticipationRule::positive_atas;
    opt.orientation = trial % 3 ? TsasOrientation::dependents : TsasOrientation::dependencies;
    opt.execution = trial % 5 ? Execution::parallel : Execution::serial;
    const auto want = oracle::score(def, tbs, vbs, opt);
    if (!want) {
      CHECK_THROWS(score_mission(MissionModel(def), tbs, vbs, opt));
      continue;
    }
    ++compared;
    const auto got = score_mission(MissionModel(def), tbs, vbs, opt);
    for (const auto& [t, row] : want->atas)
      for (const auto& [a, v] : row) CHECK(std::abs(got.atas.at(t).at(a) - v) <= 1e-12);
    for (const auto& [t, v] : want->tsas) CHECK(std::abs(got.tsas.at(t) - v) <= 1e-12);
    for (const auto& [t, row] : got.tacs) {
      const auto w = want->tacs.find(t);
      REQUIRE(row.size() == (w == want->tacs.end() ? 0 : w->second.size()));
      for (const auto& [a, v] : row) CHECK(std::abs(w->second.at(a) - v) <= 1e-12);
    }
    for (const auto& [t, row] : want->tacs) CHECK(got.tacs.count(t) == 1);
    for (const auto& [t, v] : want->tth) CHECK(std::abs(got.tth.at(t) - v) <= 1e-12);
    CHECK(std::abs(got.mth - want->mth) <= 1e-12);
    for (const auto& [a, v] : want->macs) CHECK(std::abs(got.macs.at(a) - v) <= 1e-12);
    CHECK(got.mission_kcts == want->mission_kcts);
    for (const auto& [t, s] : want->task_kcts) CHECK(got.task_kcts.at(t) == s);
  }
  CHECK(compared > 200);
}

TEST_CASE("property: scores stay in the unit interval and tacs <= tsas") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const auto def = oracle::random_mission(rng);
    const auto b = score_mission(MissionModel(def), oracle::random_metric(rng, def), oracle::random_metric(rng, def));
    for (const auto& [t, row] : b.atas)
      for (const auto& [a, v] : row) CHECK((v >= 0.0 && v <= 1.0));
    for (const auto& t : def.tasks) {
      const double ts = b.tsas.at(t.id);
      CHECK((ts >= 0.0 && ts <= 1.0));
      CHECK(ts >= t.severity - 1e-15);
    }
    for (const auto& [t, row] : b.tacs)
      for (const auto& [a, v] : row) {
        CHECK((v >= 0.0 && v <= 1.0));
        CHECK(v <= b.tsas.at(t) + 1e-15);
      }
    for (const auto& [a, v] : b.macs) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("property: tacs is monotone in each input") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20000; ++trial) {
    double in[4] = {u(rng), u(rng), u(rng), u(rng)};
    const double base = tacs(in[0], in[1], in[2], in[3]);
    const int which = static_cast<int>(rng() % 4);
    in[which] = in[which] + (1.0 - in[which]) * u(rng);
    CHECK(tacs(in[0], in[1], in[2], in[3]) >= base);
  }
}

TEST_CASE("property: tth fixed point and monotone in k") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double c = u(rng);
    const std::vector<double> flat(1 + rng() % 8, c);
    CHECK(tth(flat, Sensitivity{u(rng)}) == doctest::Approx(c).epsilon(1e-12));
    std::vector<double> xs(1 + rng() % 8);
    for (auto& x : xs) x = u(rng);
    const double k1 = u(rng), k2 = k1 + (1.0 - k1) * u(rng);
    CHECK(tth(xs, Sensitivity{k1}) <= tth(xs, Sensitivity{k2}) + 1e-15);
  }
}

TEST_CASE("property: mission KCTs shrink as k grows") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 200; ++trial) {
    const auto def = oracle::random_mission(rng);
    const MissionModel m(def);
    const auto tbs = oracle::random_metric(rng, def), vbs = oracle::random_metric(rng, def);
    std::set<NodeId> previous;
    bool first = true;
    for (double k = 0.0; k <= 1.0 + 1e-9; k += 0.1) {
      ScoringOptions opt;
      opt.sensitivity = {std::min(k, 1.0)};
      const auto kcts = score_mission(m, tbs, vbs, opt).mission_kcts;
      if (!first) CHECK(std::includes(previous.begin(), previous.end(), kcts.begin(), kcts.end()));
      previous = kcts;
      first = false;
    }
  }
}

TEST_CASE("property: scaling a row keeps the argmax") {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<double> row(1 + rng() % 6);
    for (auto& x : row) x = u(rng);
    const auto at = std::max_element(row.begin(), row.end()) - row.begin();
    const double f = 1e-3 + (1.0 - 1e-3) * u(rng);
    for (auto& x : row) x *= f;
    CHECK(std::max_element(row.begin(), row.end()) - row.begin() == at);
    CHECK(macs(row) == row[static_cast<std::size_t>(at)]);
  }
}

TEST_CASE("classification uses >= against clamped thresholds") {
  ScoreBoard b;
  b.tacs["T1"] = {{"A1", 0.4}, {"A2", 0.4}};
  b.participants["T1"] = {"A1", "A2"};
  b.tth["T1"] = 0.4;
  b.macs = {{"A1", 0.4}, {"A2", 0.4}};
  b.mth = 1.3;  // clamped to 1
  auto [tasks, mission] = classify_kcts(b);
  CHECK(tasks.at("T1") == std::set<NodeId>{"A1", "A2"});
  CHECK(mission.empty());
  b.macs["A1"] = 1.0;
  CHECK(classify_kcts(b).second == std::set<NodeId>{"A1"});
}

}  // TEST_SUITE
