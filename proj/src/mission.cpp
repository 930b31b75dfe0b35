#include "kct/mission.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "kct/error.hpp"

namespace kct {

namespace {

constexpr std::pair<MissionMode, std::string_view> kModes[] = {
    {MissionMode::offensive, "offensive"},
    {MissionMode::defensive_internal, "defensive-internal"},
    {MissionMode::defensive_external, "defensive-external"},
};

constexpr std::pair<Layer, std::string_view> kLayers[] = {
    {Layer::objective, "objective"},     {Layer::task, "task"},
    {Layer::information, "information"}, {Layer::service, "service"},
    {Layer::equipment, "equipment"},
};

int rank_of(Layer l) { return static_cast<int>(l); }

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

std::string edge_name(const DependencyEdge& e) { return e.from + " -> " + e.to; }

}  // namespace

std::string_view to_string(MissionMode mode) {
  for (auto [m, s] : kModes)
    if (m == mode) return s;
  return "unknown";
}

std::string_view to_string(Layer layer) {
  for (auto [l, s] : kLayers)
    if (l == layer) return s;
  return "unknown";
}

MissionMode mission_mode_from_string(std::string_view s) {
  for (auto [m, name] : kModes)
    if (name == s) return m;
  throw ParseError("unknown mission mode '" + std::string(s) + "'");
}

Layer layer_from_string(std::string_view s) {
  for (auto [l, name] : kLayers)
    if (name == s) return l;
  throw ParseError("unknown layer '" + std::string(s) + "'");
}

MissionModel::MissionModel(MissionDefinition def) : def_(std::move(def)) {
  const std::size_t n_tasks = def_.tasks.size();

  for (std::size_t i = 0; i < def_.tasks.size(); ++i) {
    const auto& t = def_.tasks[i];
    if (t.id.empty()) throw ValidationError("task with empty id");
    if (!in_unit_interval(t.severity))
      throw ValidationError("severity out of range for task " + t.id);
    if (t.layer != Layer::task && t.layer != Layer::objective)
      throw ValidationError("layer violation: task " + t.id + " must be in the objective or task layer");
    if (!index_.emplace(t.id, i).second) throw ValidationError("duplicate node id " + t.id);
  }
  for (std::size_t i = 0; i < def_.assets.size(); ++i) {
    const auto& a = def_.assets[i];
    if (a.id.empty()) throw ValidationError("asset with empty id");
    if (a.layer == Layer::task || a.layer == Layer::objective)
      throw ValidationError("layer violation: asset " + a.id + " must be information, service or equipment");
    if (!index_.emplace(a.id, n_tasks + i).second) throw ValidationError("duplicate node id " + a.id);
  }

  const std::size_t n = node_count();
  task_adj_.assign(n, {});
  asset_adj_.assign(n, {});
  all_adj_.assign(n, {});

  auto layer_of = [&](std::size_t node) {
    return node < n_tasks ? def_.tasks[node].layer : def_.assets[node - n_tasks].layer;
  };

  std::set<std::pair<std::size_t, std::size_t>> seen;
  auto add_edges = [&](std::vector<DependencyEdge>& edges, bool task_level) {
    std::vector<DependencyEdge> kept;
    kept.reserve(edges.size());
    for (const auto& e : edges) {
      if (!in_unit_interval(e.degree)) throw ValidationError("degree out of range on edge " + edge_name(e));
      auto from = index_.find(e.from);
      auto to = index_.find(e.to);
      if (from == index_.end()) throw ValidationError("dangling reference '" + e.from + "' on edge " + edge_name(e));
      if (to == index_.end()) throw ValidationError("dangling reference '" + e.to + "' on edge " + edge_name(e));
      const std::size_t u = from->second, v = to->second;
      if (task_level && (u >= n_tasks || v >= n_tasks))
        throw ValidationError("task edge " + edge_name(e) + " must connect two tasks");
      if (!task_level && v < n_tasks)
        throw ValidationError("layer violation: asset edge " + edge_name(e) + " points at a task");
      if (rank_of(layer_of(v)) < rank_of(layer_of(u)))
        throw ValidationError("layer violation on edge " + edge_name(e));
      if (u == v) throw ValidationError("cycle detected: self-loop on " + e.from);
      if (!seen.emplace(u, v).second) throw ValidationError("duplicate edge " + edge_name(e));
      if (e.degree == 0.0) continue;
      kept.push_back(e);
      (task_level ? task_adj_ : asset_adj_)[u].push_back({v, e.degree});
      all_adj_[u].push_back({v, e.degree});
    }
    edges = std::move(kept);
  };
  add_edges(def_.task_edges, true);
  add_edges(def_.asset_edges, false);

  // Iterative three-colour DFS over the union graph; the first back edge
  // found is reported.
  enum : char { white, grey, black };
  std::vector<char> colour(n, white);
  for (std::size_t root = 0; root < n; ++root) {
    if (colour[root] != white) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    colour[root] = grey;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      if (next < all_adj_[u].size()) {
        const std::size_t v = all_adj_[u][next++].to;
        if (colour[v] == grey)
          throw ValidationError("cycle detected: edge " + node_id(u) + " -> " + node_id(v) + " closes a cycle");
        if (colour[v] == white) {
          colour[v] = grey;
          stack.push_back({v, 0});
        }
      } else {
        colour[u] = black;
        stack.pop_back();
      }
    }
  }

  assigned_.assign(n_tasks, std::vector<bool>(asset_count(), false));
  for (const auto& as : def_.assignments) {
    auto t = index_.find(as.task);
    auto a = index_.find(as.asset);
    if (t == index_.end() || t->second >= n_tasks)
      throw ValidationError("dangling reference '" + as.task + "' in assignment");
    if (a == index_.end() || a->second < n_tasks)
      throw ValidationError("dangling reference '" + as.asset + "' in assignment");
    assigned_[t->second][a->second - n_tasks] = true;
  }

  for (const auto& [task, row] : def_.precomputed_atas) {
    auto t = index_.find(task);
    if (t == index_.end() || t->second >= n_tasks)
      throw ValidationError("dangling reference '" + task + "' in precomputed atas");
    for (const auto& [asset, v] : row) {
      auto a = index_.find(asset);
      if (a == index_.end() || a->second < n_tasks)
        throw ValidationError("dangling reference '" + asset + "' in precomputed atas");
      if (!in_unit_interval(v)) throw ValidationError("precomputed atas out of range for " + task + "/" + asset);
    }
  }
  for (const auto& [task, v] : def_.precomputed_tsas) {
    auto t = index_.find(task);
    if (t == index_.end() || t->second >= n_tasks)
      throw ValidationError("dangling reference '" + task + "' in precomputed tsas");
    if (!in_unit_interval(v)) throw ValidationError("precomputed tsas out of range for " + task);
  }
}

std::optional<std::size_t> MissionModel::find_node(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t MissionModel::node_index(std::string_view id) const {
  auto idx = find_node(id);
  if (!idx) throw NotFoundError("unknown node id '" + std::string(id) + "'");
  return *idx;
}

std::size_t MissionModel::task_index(std::string_view id) const {
  auto idx = find_node(id);
  if (!idx || *idx >= task_count()) throw NotFoundError("unknown task id '" + std::string(id) + "'");
  return *idx;
}

std::size_t MissionModel::asset_index(std::string_view id) const {
  auto idx = find_node(id);
  if (!idx || *idx < task_count()) throw NotFoundError("unknown asset id '" + std::string(id) + "'");
  return *idx - task_count();
}

const NodeId& MissionModel::node_id(std::size_t node) const {
  return node < task_count() ? def_.tasks[node].id : def_.assets[node - task_count()].id;
}

const std::vector<MissionModel::Arc>& MissionModel::successors(std::size_t node, EdgeScope scope) const {
  switch (scope) {
    case EdgeScope::tasks:
      return task_adj_[node];
    case EdgeScope::assets:
      return asset_adj_[node];
    case EdgeScope::all:
      break;
  }
  return all_adj_[node];
}

bool MissionModel::explicitly_assigned(std::size_t task, std::size_t asset) const {
  return assigned_[task][asset];
}

// --- document I/O -----------------------------------------------------------

namespace {

template <typename T>
T required(const nlohmann::json& obj, const char* key, const char* what) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(std::string(what) + " is missing required key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string(what) + " key '" + key + "' has the wrong type");
  }
}

const nlohmann::json& array_or_empty(const nlohmann::json& doc, const char* key) {
  static const nlohmann::json empty = nlohmann::json::array();
  if (!doc.contains(key)) return empty;
  const auto& v = doc.at(key);
  if (!v.is_array()) throw ParseError(std::string("mission key '") + key + "' must be an array");
  return v;
}

std::vector<DependencyEdge> edges_from(const nlohmann::json& doc, const char* key) {
  std::vector<DependencyEdge> out;
  for (const auto& e : array_or_empty(doc, key))
    out.push_back({required<std::string>(e, "from", "edge"), required<std::string>(e, "to", "edge"),
                   required<double>(e, "degree", "edge")});
  return out;
}

}  // namespace

MissionDefinition mission_definition_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("mission document must be a JSON object");
  if (doc.contains("format") && doc.at("format") != kMissionFormat)
    throw ParseError("unsupported mission format " + doc.at("format").dump());

  MissionDefinition def;
  def.mission_id = doc.value("mission_id", std::string{});
  if (doc.contains("mode")) def.mode = mission_mode_from_string(doc.at("mode").get<std::string>());

  for (const auto& t : array_or_empty(doc, "tasks")) {
    TaskNode node;
    node.id = required<std::string>(t, "id", "task");
    node.label = t.value("label", node.id);
    node.severity = required<double>(t, "severity", "task");
    if (t.contains("layer")) node.layer = layer_from_string(t.at("layer").get<std::string>());
    def.tasks.push_back(std::move(node));
  }
  for (const auto& a : array_or_empty(doc, "assets")) {
    AssetNode node;
    node.id = required<std::string>(a, "id", "asset");
    node.label = a.value("label", node.id);
    node.layer = layer_from_string(required<std::string>(a, "layer", "asset"));
    if (a.contains("cpe") && !a.at("cpe").is_null()) node.cpe = a.at("cpe").get<std::string>();
    if (a.contains("addresses")) node.addresses = a.at("addresses").get<std::vector<std::string>>();
    def.assets.push_back(std::move(node));
  }
  def.task_edges = edges_from(doc, "task_edges");
  def.asset_edges = edges_from(doc, "asset_edges");
  for (const auto& as : array_or_empty(doc, "assignments"))
    def.assignments.push_back({required<std::string>(as, "task", "assignment"),
                               required<std::string>(as, "asset", "assignment")});
  try {
    if (doc.contains("atas")) def.precomputed_atas = doc.at("atas").get<std::map<NodeId, std::map<NodeId, double>>>();
    if (doc.contains("tsas")) def.precomputed_tsas = doc.at("tsas").get<std::map<NodeId, double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("precomputed scores: ") + e.what());
  }
  return def;
}

nlohmann::json mission_to_json(const MissionDefinition& def) {
  nlohmann::json doc;
  doc["format"] = kMissionFormat;
  doc["mission_id"] = def.mission_id;
  doc["mode"] = to_string(def.mode);
  doc["tasks"] = nlohmann::json::array();
  for (const auto& t : def.tasks)
    doc["tasks"].push_back({{"id", t.id}, {"label", t.label}, {"severity", t.severity}, {"layer", to_string(t.layer)}});
  doc["assets"] = nlohmann::json::array();
  for (const auto& a : def.assets) {
    nlohmann::json j{{"id", a.id}, {"label", a.label}, {"layer", to_string(a.layer)}};
    if (a.cpe) j["cpe"] = *a.cpe;
    if (!a.addresses.empty()) j["addresses"] = a.addresses;
    doc["assets"].push_back(std::move(j));
  }
  auto edges = [](const std::vector<DependencyEdge>& es) {
    auto arr = nlohmann::json::array();
    for (const auto& e : es) arr.push_back({{"from", e.from}, {"to", e.to}, {"degree", e.degree}});
    return arr;
  };
  doc["task_edges"] = edges(def.task_edges);
  doc["asset_edges"] = edges(def.asset_edges);
  doc["assignments"] = nlohmann::json::array();
  for (const auto& as : def.assignments) doc["assignments"].push_back({{"task", as.task}, {"asset", as.asset}});
  if (!def.precomputed_atas.empty()) doc["atas"] = def.precomputed_atas;
  if (!def.precomputed_tsas.empty()) doc["tsas"] = def.precomputed_tsas;
  return doc;
}

MissionModel load_mission(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("mission document: ") + e.what());
  }
  return MissionModel(mission_definition_from_json(doc));
}

MissionModel load_mission_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mission file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_mission(buf.str());
}

// --- path algebra -------------------------------------------------------------

namespace {

// Depth-first walk with an explicit stack. `on_path` is called with the
// current node stack and the running degree product whenever the target is
// reached.
template <typename OnPath>
void walk_paths(const MissionModel& model, std::size_t source, std::size_t target, EdgeScope scope,
                OnPath&& on_path) {
  if (source == target) return;
  struct Frame {
    std::size_t node;
    std::size_t next;
    double degree;
  };
  std::vector<Frame> stack{{source, 0, 1.0}};
  std::vector<bool> on_stack(model.node_count(), false);
  on_stack[source] = true;
  std::vector<std::size_t> nodes{source};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& arcs = model.successors(f.node, scope);
    if (f.next == arcs.size()) {
      on_stack[f.node] = false;
      nodes.pop_back();
      stack.pop_back();
      continue;
    }
    const auto& arc = arcs[f.next++];
    if (on_stack[arc.to]) continue;
    const double d = f.degree * arc.degree;
    if (arc.to == target) {
      nodes.push_back(arc.to);
      on_path(nodes, d);
      nodes.pop_back();
      continue;
    }
    on_stack[arc.to] = true;
    nodes.push_back(arc.to);
    stack.push_back({arc.to, 0, d});
  }
}

}  // namespace

std::vector<DependencyPath> enumerate_paths(const MissionModel& model, std::string_view source,
                                            std::string_view target, EdgeScope scope) {
  const std::size_t s = model.node_index(source);
  const std::size_t t = model.node_index(target);
  std::vector<DependencyPath> out;
  walk_paths(model, s, t, scope, [&](const std::vector<std::size_t>& nodes, double degree) {
    DependencyPath p;
    p.nodes.reserve(nodes.size());
    for (auto n : nodes) p.nodes.push_back(model.node_id(n));
    p.path_degree = degree;
    out.push_back(std::move(p));
  });
  return out;
}

void for_each_path_degree(const MissionModel& model, std::size_t source, std::size_t target, EdgeScope scope,
                          const std::function<void(double)>& visit) {
  walk_paths(model, source, target, scope, [&](const std::vector<std::size_t>&, double d) { visit(d); });
}

double aggregate_degree(std::span<const double> path_degrees) {
  double keep = 1.0;
  for (double d : path_degrees) keep *= 1.0 - d;
  return 1.0 - keep;
}

double aggregate_degree(std::span<const DependencyPath> paths) {
  double keep = 1.0;
  for (const auto& p : paths) keep *= 1.0 - p.path_degree;
  return 1.0 - keep;
}

std::map<NodeId, double> tasks_depending_on(const MissionModel& model, std::string_view task,
                                            TsasOrientation orientation) {
  const std::size_t t = model.task_index(task);
  std::map<NodeId, double> out;
  for (std::size_t y = 0; y < model.task_count(); ++y) {
    if (y == t) continue;
    double keep = 1.0;
    bool any = false;
    auto visit = [&](double d) {
      keep *= 1.0 - d;
      any = true;
    };
    if (orientation == TsasOrientation::dependents)
      for_each_path_degree(model, y, t, EdgeScope::tasks, visit);
    else
      for_each_path_degree(model, t, y, EdgeScope::tasks, visit);
    if (any) out.emplace(model.node_id(y), 1.0 - keep);
  }
  return out;
}

}  // namespace kct
