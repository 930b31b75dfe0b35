#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kct/mission.hpp"

namespace kct {

/// Weights of the task asset criticality combination. They must lie in
/// [0,1] and sum to one so that TACS stays inside [0,1].
struct ScoreWeights {
  double mw = 3.0 / 5.0;  // dependency (ATAS)
  double bw = 1.0 / 5.0;  // traffic (TBS)
  double tw = 1.0 / 5.0;  // vulnerability (VBS)

  /// Throws ValidationError when the weights are out of range or do not sum
  /// to one within 1e-9.
  static ScoreWeights make(double mw, double bw, double tw);
  void validate() const;
  bool operator==(const ScoreWeights&) const = default;
};

/// Threshold sensitivity k in [0,1]: 1 is optimistic (fewer KCTs), 0 is
/// pessimistic.
struct Sensitivity {
  double k = 0.5;

  static Sensitivity make(double k);
  static Sensitivity optimistic() { return {1.0}; }
  static Sensitivity medium() { return {0.5}; }
  static Sensitivity pessimistic() { return {0.0}; }
  bool operator==(const Sensitivity&) const = default;
};

/// Which (task, asset) cells enter the TTH statistics and the MACS maximum.
///  - assigned: every asset the task uses (positive ATAS or explicit
///    assignment).
///  - positive_atas: only assets with ATAS > 0.
enum class ParticipationRule { assigned, positive_atas };

enum class Execution { serial, parallel };

std::string_view to_string(ParticipationRule rule);
ParticipationRule participation_rule_from_string(std::string_view s);

struct ScoringOptions {
  ScoreWeights weights;
  Sensitivity sensitivity;
  ParticipationRule participation = ParticipationRule::assigned;
  TsasOrientation orientation = TsasOrientation::dependents;
  Execution execution = Execution::parallel;
};

/// Dense scoring input: tasks x assets matrices stored row-major by task.
struct ScoringProblem {
  std::vector<NodeId> task_ids;
  std::vector<NodeId> asset_ids;
  std::vector<double> tsas;            // per task
  std::vector<double> atas;            // task-major, tasks x assets
  std::vector<unsigned char> used;     // task uses asset (ATAS > 0 or assigned)
  std::vector<double> tbs;             // per asset
  std::vector<double> vbs;             // per asset

  std::size_t tasks() const { return task_ids.size(); }
  std::size_t assets() const { return asset_ids.size(); }
  std::size_t cell(std::size_t t, std::size_t a) const { return t * asset_ids.size() + a; }
};

using CellMap = std::map<NodeId, std::map<NodeId, double>>;  // task -> asset -> value

struct DiscrepancyNote {
  std::string quantity;  // "tacs", "tth", "mth", "macs", "task_kcts", "mission_kcts"
  std::string subject;   // e.g. "A6/T4", "T4", "A6"
  std::string expected;
  std::string computed;
  std::string message;
};

struct ScoreBoard {
  std::vector<NodeId> task_ids;
  std::vector<NodeId> asset_ids;
  CellMap atas;                        // every task/asset cell
  std::map<NodeId, double> tsas;
  std::map<NodeId, double> tbs;
  std::map<NodeId, double> vbs;
  CellMap tacs;                        // cells where the task uses the asset
  std::map<NodeId, std::set<NodeId>> participants;  // task -> assets counted in statistics
  std::map<NodeId, double> tth;        // raw threshold, before clamping
  double mth = 0.0;
  std::map<NodeId, double> macs;
  std::map<NodeId, std::set<NodeId>> task_kcts;
  std::set<NodeId> mission_kcts;
  std::map<NodeId, std::vector<std::string>> annotations;  // per asset, e.g. "unassessed"
  std::vector<DiscrepancyNote> notes;
  std::vector<std::string> warnings;

  bool operator==(const ScoreBoard&) const;
};

// --- individual equations ----------------------------------------------------

/// Noisy-or of every dependency path from task `t` to asset `x` over the
/// asset dependency edges.
double atas(const MissionModel& model, std::string_view t, std::string_view x);

/// CS = severity(y) * degree(t => y).
double cumulative_severity(double severity_y, double degree_ty);

/// TSAS_t = 1 - (1 - severity(t)) * prod(1 - CS_{t,i}).
double tsas(const MissionModel& model, std::string_view t,
            TsasOrientation orientation = TsasOrientation::dependents);

/// TACS = tsas * (mw*atas + bw*tbs + tw*vbs).
double tacs(double tsas_t, double atas_at, double tbs_a, double vbs_a, const ScoreWeights& w = {});

/// mean + k * sample standard deviation. Throws ValidationError on an empty
/// list.
double tth(std::span<const double> tacs_values, Sensitivity s);
/// Same statistic over the task thresholds. Throws Error("empty mission")
/// on an empty list.
double mth(std::span<const double> tth_values, Sensitivity s);
/// Maximum of the row. Throws ValidationError on an empty list.
double macs(std::span<const double> tacs_row);

/// Task KCTs (TACS >= TTH) and mission KCTs (MACS >= MTH). Thresholds are
/// clamped to [0,1] before comparison.
std::pair<std::map<NodeId, std::set<NodeId>>, std::set<NodeId>> classify_kcts(const ScoreBoard& board);

// --- pipeline --------------------------------------------------------------

/// Builds the dense problem from a mission. `tbs` and `vbs` must cover every
/// asset (ValidationError names the first missing one). Precomputed ATAS and
/// TSAS cells in the mission replace graph-derived values.
ScoringProblem build_problem(const MissionModel& model, const std::map<NodeId, double>& tbs,
                             const std::map<NodeId, double>& vbs, const ScoringOptions& options = {});

ScoreBoard score_problem(const ScoringProblem& problem, const ScoringOptions& options = {});

ScoreBoard score_mission(const MissionModel& model, const std::map<NodeId, double>& tbs,
                         const std::map<NodeId, double>& vbs, const ScoringOptions& options = {});

/// Reference values a user expects (for instance printed tables). Each
/// present entry is compared against the board.
struct ExpectedValues {
  CellMap tacs;
  std::map<NodeId, double> tth;
  std::optional<double> mth;
  std::map<NodeId, double> macs;
  std::map<NodeId, std::set<NodeId>> task_kcts;
  std::optional<std::set<NodeId>> mission_kcts;
  double tolerance = 0.002;
};

std::vector<DiscrepancyNote> find_discrepancies(const ScoreBoard& board, const ExpectedValues& expected);

}  // namespace kct
