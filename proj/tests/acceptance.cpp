// Acceptance suite: one PASS/FAIL line per criterion. Reference values are
// the printed case-study tables, asserted verbatim.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "case_study.hpp"
#include "kct/engine.hpp"
#include "kct/error.hpp"
#include "kct/kernels.hpp"
#include "kct/traffic.hpp"
#include "kct/vuln.hpp"
#include "oracles.hpp"
#include "pcap_builder.hpp"

using namespace kct;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

/// Collects failed checks; a criterion passes when none failed.
struct Verdict {
  std::vector<std::string> failures;
  std::string summary;

  void check(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(4);
    s << std::fixed << what << " = " << got << ", expected " << want << " +/- " << tol;
    check(std::abs(got - want) <= tol, s.str());
  }
};

std::string seconds(Clock::duration d) {
  std::ostringstream s;
  s.precision(3);
  s << std::fixed << std::chrono::duration<double>(d).count() << " s";
  return s.str();
}

// Printed reference tables: TACS per task and asset, thresholds, MACS.
const std::map<NodeId, std::map<NodeId, double>> kPrintedTacs{
    {"T1", {{"A1", 0.754}, {"A2", 0.737}}},
    {"T2", {{"A1", 0.190}, {"A2", 0.195}, {"A3", 0.056}}},
    {"T3", {{"A4", 0.231}, {"A5", 0.426}}},
    {"T4", {{"A4", 0.391}, {"A5", 0.087}, {"A6", 0.510}}},
    {"T5", {{"A4", 0.319}, {"A5", 0.392}, {"A6", 0.389}}},
    {"T6", {{"A2", 0.195}, {"A3", 0.206}}}};
const std::map<NodeId, double> kPrintedTth{{"T1", 0.751}, {"T2", 0.186}, {"T3", 0.398},
                                           {"T4", 0.510}, {"T5", 0.387}, {"T6", 0.204}};
const std::map<NodeId, double> kPrintedMacs{{"A1", 0.754}, {"A2", 0.737}, {"A3", 0.206},
                                            {"A4", 0.391}, {"A5", 0.426}, {"A6", 0.638}};

ScoreBoard case_board() {
  const fixture::CaseStudy cs;
  auto in = cs.evaluation_inputs();
  in.expected = expected_from_json({{"tacs", kPrintedTacs}, {"tth", kPrintedTth}, {"mth", 0.511}, {"macs", kPrintedMacs}});
  return evaluate(in);
}

bool has_note(const ScoreBoard& b, const std::string& quantity, const std::string& subject) {
  return std::any_of(b.notes.begin(), b.notes.end(),
                     [&](const auto& n) { return n.quantity == quantity && n.subject == subject; });
}

Verdict criterion1() {
  Verdict v;
  const auto start = Clock::now();
  const auto b = case_board();
  const auto elapsed = Clock::now() - start;
  std::size_t cells = 0;
  for (const auto& [task, row] : kPrintedTacs)
    for (const auto& [asset, want] : row) {
      ++cells;
      const auto t = b.tacs.find(task);
      const bool present = t != b.tacs.end() && t->second.count(asset);
      v.check(present, asset + "/" + task + " missing");
      if (present) v.near(t->second.at(asset), want, 0.002, asset + "/" + task);
    }
  std::size_t nonzero = 0;
  for (const auto& [task, row] : b.tacs)
    for (const auto& [asset, x] : row) nonzero += x > 0.0;
  v.check(nonzero == cells, "board has " + std::to_string(nonzero) + " nonzero cells, reference has " +
                                std::to_string(cells));
  v.check(elapsed < std::chrono::seconds(1), "runtime " + seconds(elapsed));
  v.summary = std::to_string(cells) + " reference cells, runtime " + seconds(elapsed);
  return v;
}

Verdict criterion2() {
  Verdict v;
  const auto b = case_board();
  for (const char* t : {"T1", "T2", "T3", "T5", "T6"}) v.near(b.tth.at(t), kPrintedTth.at(t), 0.002, std::string("TTH ") + t);
  v.near(b.tth.at("T4"), 0.493, 0.002, "TTH T4");
  v.check(has_note(b, "tth", "T4"), "no discrepancy note for TTH T4");
  v.summary = "k = 0.5, sample standard deviation";
  return v;
}

Verdict criterion3() {
  Verdict v;
  const auto b = case_board();
  v.near(b.mth, 0.507, 0.002, "MTH");
  std::vector<double> printed;
  for (const auto& [t, x] : kPrintedTth) printed.push_back(x);
  v.near(mth(printed, Sensitivity::medium()), 0.511, 0.002, "MTH over printed thresholds");
  v.check(b.mission_kcts == std::set<NodeId>{"A1", "A2", "A6"}, "mission KCT set differs from {A1, A2, A6}");
  for (const char* a : {"A1", "A2", "A3", "A4", "A5"}) v.near(b.macs.at(a), kPrintedMacs.at(a), 0.001, std::string("MACS ") + a);
  v.near(b.macs.at("A6"), 0.510, 0.002, "MACS A6");
  v.check(has_note(b, "macs", "A6"), "no discrepancy note for MACS A6");
  v.summary = "mission KCTs and MACS";
  return v;
}

Verdict criterion4() {
  Verdict v;
  const auto start = Clock::now();
  std::mt19937_64 rng(20240401);
  std::size_t compared = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto def = oracle::random_mission(rng);
    const MissionModel m(def);
    for (const auto& t : def.tasks)
      for (const auto& a : def.assets) {
        const double got = aggregate_degree(enumerate_paths(m, t.id, a.id, EdgeScope::assets));
        const double want = oracle::atas(def, t.id, a.id);
        ++compared;
        if (std::abs(got - want) > 1e-12)
          v.check(false, "trial " + std::to_string(trial) + " " + t.id + "/" + a.id + " differs");
        if (std::abs(atas(m, t.id, a.id) - want) > 1e-12)
          v.check(false, "trial " + std::to_string(trial) + " atas " + t.id + "/" + a.id + " differs");
      }
  }
  const auto elapsed = Clock::now() - start;
  v.check(elapsed < std::chrono::minutes(1), "runtime " + seconds(elapsed));
  v.summary = "500 DAGs, " + std::to_string(compared) + " cells, runtime " + seconds(elapsed);
  return v;
}

Verdict criterion5() {
  Verdict v;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ScoringOptions opt;

  // Bounds, tsas >= severity, KCT sets shrink as k grows.
  for (int trial = 0; trial < 300; ++trial) {
    const auto def = oracle::random_mission(rng);
    const MissionModel m(def);
    const auto tbs = oracle::random_metric(rng, def);
    const auto vbs = oracle::random_metric(rng, def);
    ScoreBoard prev;
    for (double k : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      ScoringOptions o;
      o.sensitivity = Sensitivity::make(k);
      ScoreBoard b;
      try {
        b = score_mission(m, tbs, vbs, o);
      } catch (const Error&) {
        break;  // no task uses an asset
      }
      for (const auto& [t, row] : b.atas)
        for (const auto& [a, x] : row) v.check(x >= 0.0 && x <= 1.0, "atas out of range");
      for (const auto& [t, row] : b.tacs)
        for (const auto& [a, x] : row) v.check(x >= 0.0 && x <= 1.0 && x <= b.tsas.at(t) + 1e-15, "tacs out of range");
      for (const auto& t : def.tasks) v.check(b.tsas.at(t.id) >= t.severity - 1e-15, "tsas below severity");
      for (const auto& [a, x] : b.macs) v.check(x >= 0.0 && x <= 1.0, "macs out of range");
      if (k > 0.0) {
        for (const auto& [t, kcts] : b.task_kcts)
          for (const auto& a : kcts) v.check(prev.task_kcts[t].count(a) == 1, "task KCT set grew with k");
        for (const auto& a : b.mission_kcts) v.check(prev.mission_kcts.count(a) == 1, "mission KCT set grew with k");
        for (const auto& [t, x] : b.tth) v.check(x >= prev.tth.at(t) - 1e-15, "tth decreased with k");
      }
      prev = std::move(b);
    }
  }

  // tacs is monotone in each input.
  for (int i = 0; i < 100000; ++i) {
    const double ts = u(rng), at = u(rng), tb = u(rng), vb = u(rng), d = u(rng) * 0.1;
    const double base = tacs(ts, at, tb, vb, opt.weights);
    v.check(tacs(std::min(1.0, ts + d), at, tb, vb, opt.weights) >= base, "tacs not monotone in tsas");
    v.check(tacs(ts, std::min(1.0, at + d), tb, vb, opt.weights) >= base, "tacs not monotone in atas");
    v.check(tacs(ts, at, std::min(1.0, tb + d), vb, opt.weights) >= base, "tacs not monotone in tbs");
    v.check(tacs(ts, at, tb, std::min(1.0, vb + d), opt.weights) >= base, "tacs not monotone in vbs");
  }

  // tth fixed point on constant lists; noisy-or order independence.
  for (int i = 0; i < 10000; ++i) {
    const double c = u(rng);
    const std::vector<double> same(1 + rng() % 10, c);
    v.check(std::abs(tth(same, Sensitivity::make(u(rng))) - c) <= 1e-12, "tth not a fixed point");
    std::vector<double> ds(1 + rng() % 8);
    for (auto& d : ds) d = u(rng);
    const double a = aggregate_degree(ds);
    std::shuffle(ds.begin(), ds.end(), rng);
    v.check(std::abs(aggregate_degree(ds) - a) <= 1e-12, "noisy-or depends on order");
  }

  // Ranking reward identity over one million samples.
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const double sig = u(rng);
    const std::size_t n = 1 + rng() % 10000;
    const std::size_t rank = 1 + rng() % n;
    const double want = 1.0 - (1.0 - sig) * static_cast<double>(rank) / static_cast<double>(n);
    worst = std::max(worst, std::abs(ranking_reward(sig, rank, n) - want));
  }
  v.check(worst <= 1e-12, "ranking reward identity off by " + std::to_string(worst));

  v.near(sigmoid(0.0), 1.0 / 101.0, 1e-15, "sigmoid(0)");
  v.near(sigmoid(10.0 * std::log(100.0)), 0.5, 1e-12, "sigmoid(10 ln 100)");
  v.near(sigmoid(100.0), 0.99548, 5e-6, "sigmoid(100)");
  v.summary = "bounds, monotonicity, fixed points, 10^6 ranking-reward samples, sigmoid anchors";
  return v;
}

Verdict criterion6() {
  Verdict v;
  fixture::Capture cap;
  cap.tls_session("10.0.9.1", 40000, "10.0.0.1", 443, 0x1301);   // AEAD suite
  cap.tls_session("10.0.9.1", 40001, "10.0.0.2", 8443, 0x0002);  // NULL cipher
  cap.plaintext_session("10.0.9.1", 40002, "10.0.0.3", 80);
  const auto ingest = ingest_capture(cap.pcap());
  v.check(ingest.records.size() == 3, std::to_string(ingest.records.size()) + " connections, expected 3");
  const AddressMap map{{"10.0.0.1", "secured"}, {"10.0.0.2", "weak"}, {"10.0.0.3", "plain"}};
  const auto m = compute_metrics(ingest.records, map, CipherSuitePolicy::defaults(), std::vector<NodeId>{"secured", "weak", "plain"});
  const std::pair<const char*, double> want[] = {{"secured", 1.0}, {"weak", 0.6}, {"plain", 0.0}};
  for (const auto& [id, x] : want) {
    const auto& a = m.assets.at(id);
    v.near(a.conf, x, 1e-12, std::string(id) + " conf");
    v.near(a.integ, x, 1e-12, std::string(id) + " int");
  }
  for (const auto& [id, a] : m.assets) v.check(a.tbs >= 0.0 && a.tbs <= 1.0, id + " tbs out of range");
  v.summary = "secured (1, 1), weak (0.6, 0.6), plaintext (0, 0)";
  return v;
}

class CountingSource : public VulnSource {
 public:
  explicit CountingSource(std::shared_ptr<VulnSource> inner) : inner_(std::move(inner)) {}
  VulnLookup lookup(const CpeName& c) override {
    ++calls;
    return inner_->lookup(c);
  }
  int calls = 0;

 private:
  std::shared_ptr<VulnSource> inner_;
};

Verdict criterion7() {
  Verdict v;
  const auto cache_dir = fs::temp_directory_path() / "kct_acceptance_cache";
  fs::remove_all(cache_dir);
  auto counting = std::make_shared<CountingSource>(std::make_shared<OfflineSource>(KCT_FIXTURE_DIR "/vulns"));
  CachedSource cached(counting, cache_dir);
  const auto cpe = parse_cpe("cpe:2.3:a:apache:http_server:2.4.49:*:*:*:*:*:*:*");
  const auto first = cached.lookup(cpe);
  v.near(vbs(first.records), 0.65, 1e-12, "VBS");
  const int before = counting->calls;
  const auto second = cached.lookup(cpe);
  v.check(second.from_cache, "second lookup not served from cache");
  v.check(counting->calls == before, "cache hit reached the source");
  v.check(second.records == first.records, "cached records differ");

  MissionDefinition m;
  m.tasks = {{"T1", "", 0.5, Layer::task}};
  m.assets = {{"A1", "", std::string("cpe:2.3:a:nobody:nothing:0.0"), Layer::service, {}}};
  m.asset_edges = {{"T1", "A1", 1.0}};
  CycleInputs in;
  in.mission = m;
  in.tbs_fixture = std::map<NodeId, double>{{"A1", 0.5}};
  in.vuln_source = std::make_shared<OfflineSource>(KCT_FIXTURE_DIR "/vulns");
  in.timestamp = 1;
  Store store(":memory:");
  CycleConfig cfg;
  cfg.sinks = {{SinkDescriptor::Kind::file, (fs::temp_directory_path() / "kct_acceptance.jsonl").string()}};
  Engine engine(store, cfg);
  const auto r = engine.run_cycle(in);
  v.near(r.board.vbs.at("A1"), 0.0, 0.0, "unknown CPE VBS");
  const auto ann = r.board.annotations.find("A1");
  const auto notes = ann == r.board.annotations.end() ? std::vector<std::string>{} : ann->second;
  v.check(std::find(notes.begin(), notes.end(), "unassessed") != notes.end(), "unknown CPE not annotated unassessed");
  fs::remove_all(cache_dir);
  v.summary = "VBS 0.65, cache hit with zero source requests, unknown CPE unassessed";
  return v;
}

Verdict criterion8() {
  Verdict v;
  const fixture::CaseStudy cs;
  CycleConfig cfg;
  cfg.sinks = {{SinkDescriptor::Kind::file, (fs::temp_directory_path() / "kct_acceptance.jsonl").string()}};
  std::string reference;
  for (auto exec : {Execution::parallel, Execution::serial, Execution::parallel}) {
    Store store(":memory:");
    auto c = cfg;
    c.scoring.execution = exec;
    Engine engine(store, c);
    const auto r = engine.run_cycle(cs.cycle_inputs());
    if (reference.empty()) reference = r.board_text;
    v.check(r.board_text == reference, "serialized boards differ between runs");
  }

  Store store(":memory:");
  Engine engine(store, cfg);
  engine.run_cycle(cs.cycle_inputs());
  const auto hash = store.content_hash();
  for (auto step : kCycleSteps) {
    engine.set_fault_hook([step](CycleStep s) {
      if (s == step) throw Error("injected fault");
    });
    bool threw = false;
    try {
      engine.run_cycle(cs.cycle_inputs());
    } catch (const Error&) {
      threw = true;
    }
    const std::string name(to_string(step));
    v.check(threw, "fault at " + name + " did not abort the cycle");
    v.check(store.latest_version() == 1, "fault at " + name + " moved the latest version");
    v.check(store.content_hash() == hash, "fault at " + name + " changed the store");
  }
  v.summary = "3 identical runs, faults injected at " + std::to_string(std::size(kCycleSteps)) + " steps";
  return v;
}

const std::function<Verdict()> kCriteria[] = {criterion1, criterion2, criterion3, criterion4,
                                              criterion5, criterion6, criterion7, criterion8};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: kct_acceptance [--only N]\n";
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(std::size(kCriteria))) {
    std::cerr << "criterion must be 1-" << std::size(kCriteria) << "\n";
    return 2;
  }

  int failed = 0;
  for (int n = 1; n <= static_cast<int>(std::size(kCriteria)); ++n) {
    if (only && n != only) continue;
    Verdict v;
    try {
      v = kCriteria[n - 1]();
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    if (v.failures.empty()) {
      std::cout << "PASS criterion " << n << ": " << v.summary << "\n";
    } else {
      ++failed;
      std::cout << "FAIL criterion " << n << ": " << v.failures.front();
      if (v.failures.size() > 1) std::cout << " (+" << v.failures.size() - 1 << " more)";
      std::cout << "\n";
      for (std::size_t i = 1; i < v.failures.size() && i < 10; ++i) std::cout << "    " << v.failures[i] << "\n";
    }
  }
  return failed ? 1 : 0;
}
