#pragma once

// Per-cell bodies shared by the serial and OpenMP kernels so both walk the
// exact same arithmetic.

#include <cstddef>

#include "kct/mission.hpp"
#include "kct/score.hpp"

namespace kct::detail {

inline double atas_cell(const MissionModel& model, std::size_t task, std::size_t asset) {
  double keep = 1.0;
  for_each_path_degree(model, task, model.task_count() + asset, EdgeScope::assets,
                       [&](double d) { keep *= 1.0 - d; });
  return 1.0 - keep;
}

inline double tsas_cell(const MissionModel& model, std::size_t task, TsasOrientation orientation) {
  double keep = 1.0 - model.tasks()[task].severity;
  for (std::size_t y = 0; y < model.task_count(); ++y) {
    if (y == task) continue;
    double path_keep = 1.0;
    auto visit = [&](double d) { path_keep *= 1.0 - d; };
    if (orientation == TsasOrientation::dependents)
      for_each_path_degree(model, y, task, EdgeScope::tasks, visit);
    else
      for_each_path_degree(model, task, y, EdgeScope::tasks, visit);
    keep *= 1.0 - model.tasks()[y].severity * (1.0 - path_keep);
  }
  return 1.0 - keep;
}

inline double tacs_cell(const ScoringProblem& p, const ScoreWeights& w, std::size_t task, std::size_t asset) {
  const std::size_t c = p.cell(task, asset);
  if (!p.used[c]) return 0.0;
  return tacs(p.tsas[task], p.atas[c], p.tbs[asset], p.vbs[asset], w);
}

}  // namespace kct::detail
