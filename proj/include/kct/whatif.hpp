#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kct/engine.hpp"
#include "kct/score.hpp"
#include "kct/store.hpp"

namespace kct {

struct Patch {
  enum class Kind { task_severity, edge_degree, weights, k, asset_removal };
  Kind kind = Kind::k;
  NodeId target;  // task (task_severity) or asset (asset_removal)
  NodeId from;    // edge_degree
  NodeId to;      // edge_degree
  double value = 0.0;
  ScoreWeights weights;
};

struct WhatIfRequest {
  std::uint64_t base_version = 0;  // 0 selects the latest version
  std::vector<Patch> overrides;
};

/// {"base_version": n, "overrides": [{"type": "task_severity", "task", "value"},
/// {"type": "edge_degree", "from", "to", "value"}, {"type": "weights", "mw",
/// "bw", "tw"}, {"type": "k", "value"}, {"type": "asset_removal", "asset"}]}
WhatIfRequest whatif_request_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Patch& patch);

/// Applies the patches in order. Precomputed scores that a patch
/// invalidates are dropped so they are recomputed from the graph. Throws
/// ValidationError naming the violated invariant, NotFoundError for unknown
/// entities.
EvaluationInputs apply_patches(EvaluationInputs inputs, std::span<const Patch> patches);

struct CellChange {
  NodeId task;
  NodeId asset;
  std::optional<double> base;
  std::optional<double> patched;
};

struct SetChange {
  std::set<NodeId> gained;
  std::set<NodeId> lost;
  bool empty() const { return gained.empty() && lost.empty(); }
};

struct WhatIfDiff {
  std::vector<CellChange> tacs;
  std::map<NodeId, SetChange> task_kcts;  // only tasks whose set changed
  SetChange mission_kcts;
  bool empty() const { return tacs.empty() && task_kcts.empty() && mission_kcts.empty(); }
};

/// Cells whose TACS differs by more than 1e-12, and KCT set changes.
WhatIfDiff diff_boards(const ScoreBoard& base, const ScoreBoard& patched);

struct WhatIfResult {
  std::uint64_t base_version = 0;
  std::string config_hash;
  ScoreBoard base;
  ScoreBoard board;
  WhatIfDiff diff;
};

/// Re-evaluates a persisted version with the patches applied. Reads the
/// store only; never writes.
WhatIfResult what_if(const Store& store, const WhatIfRequest& request);

/// Response document; carries "ephemeral": true.
nlohmann::json to_json(const WhatIfResult& result);
nlohmann::json to_json(const WhatIfDiff& diff);

}  // namespace kct
