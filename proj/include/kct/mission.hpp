#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kct {

using NodeId = std::string;

inline constexpr std::string_view kMissionFormat = "kct-mission/1";

/// Operational framing of the mission. Carried as metadata; scoring is the
/// same in every mode.
enum class MissionMode { offensive, defensive_internal, defensive_external };

/// Layers of the dependency hierarchy, top to bottom. Edges never point
/// upwards.
enum class Layer { objective, task, information, service, equipment };

std::string_view to_string(MissionMode mode);
std::string_view to_string(Layer layer);
MissionMode mission_mode_from_string(std::string_view s);
Layer layer_from_string(std::string_view s);

struct TaskNode {
  NodeId id;
  std::string label;
  double severity = 0.0;
  Layer layer = Layer::task;
};

struct AssetNode {
  NodeId id;
  std::string label;
  std::optional<std::string> cpe;
  Layer layer = Layer::service;
  // Network addresses used to bind the asset to traffic and scan results.
  std::vector<std::string> addresses;
};

/// `from` depends on `to` with the given degree (0 independent, 1 fully
/// dependent).
struct DependencyEdge {
  NodeId from;
  NodeId to;
  double degree = 0.0;
};

/// An asset the commander lists as used by a task even when no dependency
/// edge carries a positive degree.
struct Assignment {
  NodeId task;
  NodeId asset;
};

struct DependencyPath {
  std::vector<NodeId> nodes;
  double path_degree = 0.0;
};

/// Raw contents of a mission document.
struct MissionDefinition {
  std::string mission_id;
  MissionMode mode = MissionMode::defensive_internal;
  std::vector<TaskNode> tasks;
  std::vector<AssetNode> assets;
  std::vector<DependencyEdge> task_edges;
  std::vector<DependencyEdge> asset_edges;
  std::vector<Assignment> assignments;
  // Externally computed scores that replace the graph-derived values for the
  // listed cells. Used when only aggregate tables are available.
  std::map<NodeId, std::map<NodeId, double>> precomputed_atas;  // task -> asset -> value
  std::map<NodeId, double> precomputed_tsas;
};

/// Which edge set a path search may traverse.
enum class EdgeScope { all, tasks, assets };

/// Direction in which task severity propagates into TSAS.
///  - dependents: a task inherits severity from the tasks that depend on it.
///  - dependencies: a task inherits severity from the tasks it relies on.
enum class TsasOrientation { dependents, dependencies };

/// Validated, immutable mission topology. Nodes are indexed with tasks first
/// (0..task_count-1) followed by assets.
class MissionModel {
 public:
  struct Arc {
    std::size_t to;
    double degree;
  };

  MissionModel() = default;
  /// Validates `def`; throws ValidationError naming the first violated
  /// invariant. Edges with degree exactly 0 are dropped.
  explicit MissionModel(MissionDefinition def);

  const MissionDefinition& definition() const { return def_; }
  const std::string& mission_id() const { return def_.mission_id; }
  const std::vector<TaskNode>& tasks() const { return def_.tasks; }
  const std::vector<AssetNode>& assets() const { return def_.assets; }

  std::size_t task_count() const { return def_.tasks.size(); }
  std::size_t asset_count() const { return def_.assets.size(); }
  std::size_t node_count() const { return task_count() + asset_count(); }

  std::optional<std::size_t> find_node(std::string_view id) const;
  /// Throws NotFoundError for unknown ids.
  std::size_t node_index(std::string_view id) const;
  std::size_t task_index(std::string_view id) const;
  std::size_t asset_index(std::string_view id) const;
  bool is_task(std::size_t node) const { return node < task_count(); }
  const NodeId& node_id(std::size_t node) const;

  const std::vector<Arc>& successors(std::size_t node, EdgeScope scope) const;

  /// True when the task uses the asset through an explicit assignment.
  bool explicitly_assigned(std::size_t task, std::size_t asset) const;

 private:
  MissionDefinition def_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<std::vector<Arc>> task_adj_;
  std::vector<std::vector<Arc>> asset_adj_;
  std::vector<std::vector<Arc>> all_adj_;
  std::vector<std::vector<bool>> assigned_;
};

/// Parses a kct-mission/1 document. Throws ParseError on malformed JSON or
/// missing fields, ValidationError on invariant violations.
MissionModel load_mission(std::string_view document);
MissionModel load_mission_file(const std::filesystem::path& path);

MissionDefinition mission_definition_from_json(const nlohmann::json& doc);
nlohmann::json mission_to_json(const MissionDefinition& def);

/// Every simple directed path from `source` to `target`, each with the
/// product of its edge degrees.
std::vector<DependencyPath> enumerate_paths(const MissionModel& model, std::string_view source,
                                            std::string_view target, EdgeScope scope = EdgeScope::all);

/// Calls `visit(path_degree)` once per simple path from `source` to `target`
/// without materialising the node lists. Index-based form used by kernels.
void for_each_path_degree(const MissionModel& model, std::size_t source, std::size_t target,
                          EdgeScope scope, const std::function<void(double)>& visit);

/// Noisy-or: 1 - prod(1 - d_i). Empty input gives 0.
double aggregate_degree(std::span<const DependencyPath> paths);
double aggregate_degree(std::span<const double> path_degrees);

/// Aggregated task-level degree between `task` and each related task. With
/// the default orientation these are the tasks that depend on `task`.
std::map<NodeId, double> tasks_depending_on(const MissionModel& model, std::string_view task,
                                            TsasOrientation orientation = TsasOrientation::dependents);

}  // namespace kct
