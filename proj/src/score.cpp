#include "kct/score.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "kct/error.hpp"
#include "kct/kernels.hpp"

namespace kct {

namespace {

bool unit(double v) { return v >= 0.0 && v <= 1.0; }

// Mean and sample standard deviation around the first element, so a
// constant list yields exactly that constant and zero spread.
double mean_plus_k_sd(std::span<const double> v, double k) {
  const double n = static_cast<double>(v.size());
  const double pivot = v.front();
  double shift = 0.0;
  for (double x : v) shift += x - pivot;
  const double mean = pivot + shift / n;
  if (v.size() < 2) return mean;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return mean + k * std::sqrt(ss / (n - 1.0));
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string join(const std::set<NodeId>& ids) {
  std::string out = "{";
  for (const auto& id : ids) {
    if (out.size() > 1) out += ", ";
    out += id;
  }
  return out + "}";
}

}  // namespace

ScoreWeights ScoreWeights::make(double mw, double bw, double tw) {
  ScoreWeights w{mw, bw, tw};
  w.validate();
  return w;
}

void ScoreWeights::validate() const {
  if (!unit(mw) || !unit(bw) || !unit(tw)) throw ValidationError("score weights must lie in [0,1]");
  if (std::abs(mw + bw + tw - 1.0) > 1e-9) throw ValidationError("score weights must sum to 1");
}

Sensitivity Sensitivity::make(double k) {
  if (!unit(k)) throw ValidationError("sensitivity k must lie in [0,1]");
  return {k};
}

std::string_view to_string(ParticipationRule rule) {
  return rule == ParticipationRule::assigned ? "assigned" : "positive-atas";
}

ParticipationRule participation_rule_from_string(std::string_view s) {
  if (s == "assigned") return ParticipationRule::assigned;
  if (s == "positive-atas") return ParticipationRule::positive_atas;
  throw ValidationError("unknown participation rule '" + std::string(s) + "'");
}

bool ScoreBoard::operator==(const ScoreBoard& o) const {
  auto notes_eq = [](const std::vector<DiscrepancyNote>& a, const std::vector<DiscrepancyNote>& b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](const auto& x, const auto& y) {
      return x.quantity == y.quantity && x.subject == y.subject && x.expected == y.expected &&
             x.computed == y.computed && x.message == y.message;
    });
  };
  return task_ids == o.task_ids && asset_ids == o.asset_ids && atas == o.atas && tsas == o.tsas && tbs == o.tbs &&
         vbs == o.vbs && tacs == o.tacs && participants == o.participants && tth == o.tth && mth == o.mth &&
         macs == o.macs && task_kcts == o.task_kcts && mission_kcts == o.mission_kcts &&
         annotations == o.annotations && notes_eq(notes, o.notes) &&
         warnings == o.warnings;
}

double atas(const MissionModel& model, std::string_view t, std::string_view x) {
  model.task_index(t);
  model.asset_index(x);
  return aggregate_degree(enumerate_paths(model, t, x, EdgeScope::assets));
}

double cumulative_severity(double severity_y, double degree_ty) { return severity_y * degree_ty; }

double tsas(const MissionModel& model, std::string_view t, TsasOrientation orientation) {
  const auto& task = model.tasks()[model.task_index(t)];
  double keep = 1.0 - task.severity;
  for (const auto& [y, degree] : tasks_depending_on(model, t, orientation))
    keep *= 1.0 - cumulative_severity(model.tasks()[model.task_index(y)].severity, degree);
  return 1.0 - keep;
}

double tacs(double tsas_t, double atas_at, double tbs_a, double vbs_a, const ScoreWeights& w) {
  return tsas_t * (w.mw * atas_at + w.bw * tbs_a + w.tw * vbs_a);
}

double tth(std::span<const double> tacs_values, Sensitivity s) {
  if (tacs_values.empty()) throw ValidationError("task threshold over an empty list");
  return mean_plus_k_sd(tacs_values, s.k);
}

double mth(std::span<const double> tth_values, Sensitivity s) {
  if (tth_values.empty()) throw Error("empty mission");
  return mean_plus_k_sd(tth_values, s.k);
}

double macs(std::span<const double> tacs_row) {
  if (tacs_row.empty()) throw ValidationError("asset participates in no task");
  return *std::max_element(tacs_row.begin(), tacs_row.end());
}

std::pair<std::map<NodeId, std::set<NodeId>>, std::set<NodeId>> classify_kcts(const ScoreBoard& board) {
  std::map<NodeId, std::set<NodeId>> per_task;
  for (const auto& [task, threshold] : board.tth) {
    const double th = std::clamp(threshold, 0.0, 1.0);
    auto& kcts = per_task[task];
    const auto row = board.tacs.find(task);
    const auto members = board.participants.find(task);
    if (row == board.tacs.end() || members == board.participants.end()) continue;
    for (const auto& asset : members->second)
      if (row->second.at(asset) >= th) kcts.insert(asset);
  }
  std::set<NodeId> mission;
  const double th = std::clamp(board.mth, 0.0, 1.0);
  for (const auto& [asset, score] : board.macs)
    if (score >= th) mission.insert(asset);
  return {std::move(per_task), std::move(mission)};
}

ScoringProblem build_problem(const MissionModel& model, const std::map<NodeId, double>& tbs,
                             const std::map<NodeId, double>& vbs, const ScoringOptions& options) {
  ScoringProblem p;
  for (const auto& t : model.tasks()) p.task_ids.push_back(t.id);
  for (const auto& a : model.assets()) p.asset_ids.push_back(a.id);

  for (const auto& id : p.asset_ids) {
    auto b = tbs.find(id);
    auto v = vbs.find(id);
    if (b == tbs.end()) throw ValidationError("missing traffic metric (TBS) for asset " + id);
    if (v == vbs.end()) throw ValidationError("missing vulnerability metric (VBS) for asset " + id);
    if (!unit(b->second)) throw ValidationError("TBS out of range for asset " + id);
    if (!unit(v->second)) throw ValidationError("VBS out of range for asset " + id);
    p.tbs.push_back(b->second);
    p.vbs.push_back(v->second);
  }

  const bool par = options.execution == Execution::parallel;
  p.atas = par ? parallel::atas_matrix(model) : serial::atas_matrix(model);
  p.tsas = par ? parallel::tsas_vector(model, options.orientation) : serial::tsas_vector(model, options.orientation);

  const auto& def = model.definition();
  for (const auto& [task, row] : def.precomputed_atas) {
    const std::size_t t = model.task_index(task);
    for (const auto& [asset, v] : row) p.atas[p.cell(t, model.asset_index(asset))] = v;
  }
  for (const auto& [task, v] : def.precomputed_tsas) p.tsas[model.task_index(task)] = v;

  p.used.assign(p.atas.size(), 0);
  for (std::size_t t = 0; t < p.tasks(); ++t)
    for (std::size_t a = 0; a < p.assets(); ++a)
      p.used[p.cell(t, a)] = p.atas[p.cell(t, a)] > 0.0 || model.explicitly_assigned(t, a);
  return p;
}

ScoreBoard score_problem(const ScoringProblem& p, const ScoringOptions& options) {
  options.weights.validate();
  Sensitivity::make(options.sensitivity.k);
  if (p.tasks() == 0) throw Error("empty mission");

  const auto tacs_cells = options.execution == Execution::parallel ? parallel::tacs_matrix(p, options.weights)
                                                                   : serial::tacs_matrix(p, options.weights);
  ScoreBoard b;
  b.task_ids = p.task_ids;
  b.asset_ids = p.asset_ids;
  for (std::size_t a = 0; a < p.assets(); ++a) {
    b.tbs[p.asset_ids[a]] = p.tbs[a];
    b.vbs[p.asset_ids[a]] = p.vbs[a];
  }

  std::vector<double> thresholds;
  std::map<NodeId, std::vector<double>> asset_rows;
  for (std::size_t t = 0; t < p.tasks(); ++t) {
    const auto& task = p.task_ids[t];
    b.tsas[task] = p.tsas[t];
    auto& atas_row = b.atas[task];
    auto& tacs_row = b.tacs[task];
    auto& members = b.participants[task];
    std::vector<double> stats;
    for (std::size_t a = 0; a < p.assets(); ++a) {
      const std::size_t c = p.cell(t, a);
      const auto& asset = p.asset_ids[a];
      atas_row[asset] = p.atas[c];
      if (!p.used[c]) continue;
      tacs_row[asset] = tacs_cells[c];
      const bool counted = options.participation == ParticipationRule::assigned || p.atas[c] > 0.0;
      if (!counted) continue;
      members.insert(asset);
      stats.push_back(tacs_cells[c]);
      asset_rows[asset].push_back(tacs_cells[c]);
    }
    if (stats.empty()) {
      b.warnings.push_back("task " + task + " uses no asset; no threshold computed");
      continue;
    }
    b.tth[task] = tth(stats, options.sensitivity);
    thresholds.push_back(b.tth[task]);
  }

  b.mth = mth(thresholds, options.sensitivity);
  for (const auto& [asset, row] : asset_rows) b.macs[asset] = macs(row);
  for (const auto& asset : p.asset_ids)
    if (!asset_rows.count(asset)) b.warnings.push_back("asset " + asset + " is used by no task");

  auto [task_kcts, mission_kcts] = classify_kcts(b);
  b.task_kcts = std::move(task_kcts);
  b.mission_kcts = std::move(mission_kcts);
  return b;
}

ScoreBoard score_mission(const MissionModel& model, const std::map<NodeId, double>& tbs,
                         const std::map<NodeId, double>& vbs, const ScoringOptions& options) {
  return score_problem(build_problem(model, tbs, vbs, options), options);
}

std::vector<DiscrepancyNote> find_discrepancies(const ScoreBoard& board, const ExpectedValues& expected) {
  std::vector<DiscrepancyNote> notes;
  const double tol = expected.tolerance;
  auto check = [&](const char* quantity, const std::string& subject, double want, std::optional<double> got) {
    if (got && std::abs(*got - want) <= tol) return;
    notes.push_back({quantity, subject, fmt3(want), got ? fmt3(*got) : "absent",
                     std::string(quantity) + " " + subject + ": expected " + fmt3(want) + ", computed " +
                         (got ? fmt3(*got) : std::string("nothing"))});
  };
  auto lookup = [](const auto& m, const NodeId& k) -> std::optional<double> {
    auto it = m.find(k);
    if (it == m.end()) return std::nullopt;
    return it->second;
  };

  for (const auto& [task, row] : expected.tacs)
    for (const auto& [asset, want] : row) {
      std::optional<double> got;
      if (auto r = board.tacs.find(task); r != board.tacs.end()) got = lookup(r->second, asset);
      if (!got && want == 0.0) continue;
      check("tacs", asset + "/" + task, want, got.value_or(0.0));
    }
  for (const auto& [task, want] : expected.tth) check("tth", task, want, lookup(board.tth, task));
  if (expected.mth) check("mth", "mission", *expected.mth, board.mth);
  for (const auto& [asset, want] : expected.macs) check("macs", asset, want, lookup(board.macs, asset));
  for (const auto& [task, want] : expected.task_kcts) {
    auto it = board.task_kcts.find(task);
    const std::set<NodeId> got = it == board.task_kcts.end() ? std::set<NodeId>{} : it->second;
    if (got != want)
      notes.push_back({"task_kcts", task, join(want), join(got),
                       "task KCTs " + task + ": expected " + join(want) + ", computed " + join(got)});
  }
  if (expected.mission_kcts && *expected.mission_kcts != board.mission_kcts)
    notes.push_back({"mission_kcts", "mission", join(*expected.mission_kcts), join(board.mission_kcts),
                     "mission KCTs: expected " + join(*expected.mission_kcts) + ", computed " +
                         join(board.mission_kcts)});
  return notes;
}

}  // namespace kct
