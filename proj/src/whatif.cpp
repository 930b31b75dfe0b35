#include "kct/whatif.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "kct/error.hpp"
#include "kct/report.hpp"

namespace kct {

namespace {

constexpr std::pair<Patch::Kind, std::string_view> kPatchKinds[] = {
    {Patch::Kind::task_severity, "task_severity"}, {Patch::Kind::edge_degree, "edge_degree"},
    {Patch::Kind::weights, "weights"},             {Patch::Kind::k, "k"},
    {Patch::Kind::asset_removal, "asset_removal"},
};

std::string_view kind_name(Patch::Kind k) {
  for (auto [kind, name] : kPatchKinds)
    if (kind == k) return name;
  return "unknown";
}

// Nodes reachable from `start` (inclusive) following edges forward or
// backward across every edge set.
std::set<std::size_t> reach(const MissionModel& m, std::size_t start, bool forward) {
  std::vector<std::vector<std::size_t>> pred;
  if (!forward) {
    pred.resize(m.node_count());
    for (std::size_t u = 0; u < m.node_count(); ++u)
      for (const auto& arc : m.successors(u, EdgeScope::all)) pred[arc.to].push_back(u);
  }
  std::set<std::size_t> seen{start};
  std::deque<std::size_t> todo{start};
  while (!todo.empty()) {
    const auto u = todo.front();
    todo.pop_front();
    auto visit = [&](std::size_t v) {
      if (seen.insert(v).second) todo.push_back(v);
    };
    if (forward)
      for (const auto& arc : m.successors(u, EdgeScope::all)) visit(arc.to);
    else
      for (auto v : pred[u]) visit(v);
  }
  return seen;
}

void drop_tsas(MissionDefinition& def, const NodeId& task) { def.precomputed_tsas.erase(task); }

void drop_atas(MissionDefinition& def, const NodeId& task, const NodeId& asset) {
  auto row = def.precomputed_atas.find(task);
  if (row == def.precomputed_atas.end()) return;
  row->second.erase(asset);
  if (row->second.empty()) def.precomputed_atas.erase(row);
}

void patch_severity(EvaluationInputs& in, const Patch& p) {
  auto& tasks = in.mission.tasks;
  auto it = std::find_if(tasks.begin(), tasks.end(), [&](const auto& t) { return t.id == p.target; });
  if (it == tasks.end()) throw NotFoundError("unknown task '" + p.target + "' in task_severity patch");
  if (!(p.value >= 0.0 && p.value <= 1.0))
    throw ValidationError("severity out of range for task " + p.target + ": must lie in [0,1]");
  const MissionModel model(in.mission);
  drop_tsas(in.mission, p.target);
  for (const auto& t : model.tasks()) {
    const auto related = tasks_depending_on(model, t.id, in.options.orientation);
    if (related.count(p.target)) drop_tsas(in.mission, t.id);
  }
  it->severity = p.value;
}

void patch_edge(EvaluationInputs& in, const Patch& p) {
  DependencyEdge* edge = nullptr;
  for (auto* list : {&in.mission.task_edges, &in.mission.asset_edges})
    for (auto& e : *list)
      if (e.from == p.from && e.to == p.to) edge = &e;
  if (!edge) throw ValidationError("edge " + p.from + " -> " + p.to + " does not exist");
  if (!(p.value >= 0.0 && p.value <= 1.0))
    throw ValidationError("degree out of range on edge " + p.from + " -> " + p.to + ": must lie in [0,1]");

  // Task edges feed TSAS only; asset edges feed ATAS only.
  const MissionModel model(in.mission);
  const bool task_edge = model.is_task(model.node_index(p.to));
  const auto up = reach(model, model.node_index(p.from), false);
  const auto down = reach(model, model.node_index(p.to), true);
  for (auto u : up) {
    if (!model.is_task(u)) continue;
    if (task_edge) drop_tsas(in.mission, model.node_id(u));
    else
      for (auto d : down)
        if (!model.is_task(d)) drop_atas(in.mission, model.node_id(u), model.node_id(d));
  }
  if (task_edge)
    for (auto d : down)
      if (model.is_task(d)) drop_tsas(in.mission, model.node_id(d));
  edge->degree = p.value;
}

void remove_asset(EvaluationInputs& in, const NodeId& id) {
  auto& def = in.mission;
  auto it = std::find_if(def.assets.begin(), def.assets.end(), [&](const auto& a) { return a.id == id; });
  if (it == def.assets.end()) throw NotFoundError("unknown asset '" + id + "' in asset_removal patch");
  def.assets.erase(it);
  std::erase_if(def.asset_edges, [&](const auto& e) { return e.from == id || e.to == id; });
  std::erase_if(def.assignments, [&](const auto& a) { return a.asset == id; });
  for (auto& [task, row] : def.precomputed_atas) row.erase(id);
  std::erase_if(def.precomputed_atas, [](const auto& kv) { return kv.second.empty(); });
  in.tbs.erase(id);
  in.vbs.erase(id);
  in.annotations.erase(id);
}

SetChange set_change(const std::set<NodeId>& before, const std::set<NodeId>& after) {
  SetChange c;
  std::set_difference(after.begin(), after.end(), before.begin(), before.end(), std::inserter(c.gained, c.gained.end()));
  std::set_difference(before.begin(), before.end(), after.begin(), after.end(), std::inserter(c.lost, c.lost.end()));
  return c;
}

nlohmann::json to_json(const SetChange& c) { return {{"gained", c.gained}, {"lost", c.lost}}; }

nlohmann::json optional_number(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

WhatIfRequest whatif_request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("what-if request must be a JSON object");
  WhatIfRequest r;
  try {
    r.base_version = j.value("base_version", std::uint64_t{0});
    for (const auto& o : j.value("overrides", nlohmann::json::array())) {
      Patch p;
      const auto type = o.at("type").get<std::string>();
      auto found = std::find_if(std::begin(kPatchKinds), std::end(kPatchKinds), [&](auto& k) { return k.second == type; });
      if (found == std::end(kPatchKinds)) throw ValidationError("unknown patch type '" + type + "'");
      p.kind = found->first;
      switch (p.kind) {
        case Patch::Kind::task_severity:
          p.target = o.at("task").get<std::string>();
          p.value = o.at("value").get<double>();
          break;
        case Patch::Kind::edge_degree:
          p.from = o.at("from").get<std::string>();
          p.to = o.at("to").get<std::string>();
          p.value = o.at("value").get<double>();
          break;
        case Patch::Kind::weights:
          p.weights = {o.at("mw").get<double>(), o.at("bw").get<double>(), o.at("tw").get<double>()};
          break;
        case Patch::Kind::k:
          p.value = o.at("value").get<double>();
          break;
        case Patch::Kind::asset_removal:
          p.target = o.at("asset").get<std::string>();
          break;
      }
      r.overrides.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("what-if request: ") + e.what());
  }
  return r;
}

nlohmann::json to_json(const Patch& p) {
  nlohmann::json j{{"type", kind_name(p.kind)}};
  switch (p.kind) {
    case Patch::Kind::task_severity: j["task"] = p.target; j["value"] = p.value; break;
    case Patch::Kind::edge_degree: j["from"] = p.from; j["to"] = p.to; j["value"] = p.value; break;
    case Patch::Kind::weights: j["mw"] = p.weights.mw; j["bw"] = p.weights.bw; j["tw"] = p.weights.tw; break;
    case Patch::Kind::k: j["value"] = p.value; break;
    case Patch::Kind::asset_removal: j["asset"] = p.target; break;
  }
  return j;
}

EvaluationInputs apply_patches(EvaluationInputs in, std::span<const Patch> patches) {
  for (const auto& p : patches) {
    switch (p.kind) {
      case Patch::Kind::task_severity: patch_severity(in, p); break;
      case Patch::Kind::edge_degree: patch_edge(in, p); break;
      case Patch::Kind::weights:
        p.weights.validate();
        in.options.weights = p.weights;
        break;
      case Patch::Kind::k: in.options.sensitivity = Sensitivity::make(p.value); break;
      case Patch::Kind::asset_removal: remove_asset(in, p.target); break;
    }
  }
  return in;
}

WhatIfDiff diff_boards(const ScoreBoard& base, const ScoreBoard& patched) {
  WhatIfDiff d;
  std::set<std::pair<NodeId, NodeId>> cells;
  for (const auto* b : {&base, &patched})
    for (const auto& [task, row] : b->tacs)
      for (const auto& [asset, v] : row) cells.emplace(task, asset);
  auto cell = [](const ScoreBoard& b, const NodeId& t, const NodeId& a) -> std::optional<double> {
    auto row = b.tacs.find(t);
    if (row == b.tacs.end()) return std::nullopt;
    auto it = row->second.find(a);
    if (it == row->second.end()) return std::nullopt;
    return it->second;
  };
  for (const auto& [t, a] : cells) {
    const auto x = cell(base, t, a);
    const auto y = cell(patched, t, a);
    if (x.has_value() != y.has_value() || (x && std::abs(*x - *y) > 1e-12)) d.tacs.push_back({t, a, x, y});
  }

  std::set<NodeId> tasks;
  for (const auto* b : {&base, &patched})
    for (const auto& [t, s] : b->task_kcts) tasks.insert(t);
  for (const auto& t : tasks) {
    auto get = [&](const ScoreBoard& b) {
      auto it = b.task_kcts.find(t);
      return it == b.task_kcts.end() ? std::set<NodeId>{} : it->second;
    };
    auto c = set_change(get(base), get(patched));
    if (!c.empty()) d.task_kcts.emplace(t, std::move(c));
  }
  d.mission_kcts = set_change(base.mission_kcts, patched.mission_kcts);
  return d;
}

WhatIfResult what_if(const Store& store, const WhatIfRequest& request) {
  const std::uint64_t version = request.base_version == 0 ? store.latest_version() : request.base_version;
  if (version == 0) throw NotFoundError("no persisted scoreboard to base a what-if on");
  const auto snap = store.get(version);

  WhatIfResult r;
  r.base_version = version;
  r.config_hash = snap.config_hash;
  r.base = board_from_json(nlohmann::json::parse(snap.board));
  const auto inputs = evaluation_inputs_from_json(snap.inputs);
  r.board = evaluate(apply_patches(inputs, request.overrides));
  r.diff = diff_boards(r.base, r.board);
  return r;
}

nlohmann::json to_json(const WhatIfDiff& d) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : d.tacs)
    cells.push_back({{"task", c.task}, {"asset", c.asset}, {"base", optional_number(c.base)},
                     {"patched", optional_number(c.patched)}});
  nlohmann::json tasks = nlohmann::json::object();
  for (const auto& [t, c] : d.task_kcts) tasks[t] = to_json(c);
  return {{"tacs", cells}, {"task_kcts", tasks}, {"mission_kcts", to_json(d.mission_kcts)}};
}

nlohmann::json to_json(const WhatIfResult& r) {
  return {{"ephemeral", true},
          {"base_version", r.base_version},
          {"scoreboard_version", r.base_version},
          {"config_hash", r.config_hash},
          {"board", board_to_json(r.board)},
          {"diff", to_json(r.diff)}};
}

}  // namespace kct
