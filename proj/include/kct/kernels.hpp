#pragma once

// Matrix kernels behind the scoring pipeline. `serial` is the reference
// implementation kept for testing; `parallel` distributes the same loops
// with OpenMP and must agree with it exactly.

#include <vector>

#include "kct/mission.hpp"
#include "kct/score.hpp"

namespace kct {

namespace serial {

/// ATAS for every (task, asset) cell, task-major.
std::vector<double> atas_matrix(const MissionModel& model);
/// TSAS for every task.
std::vector<double> tsas_vector(const MissionModel& model, TsasOrientation orientation);
/// TACS for every cell; cells the task does not use are 0.
std::vector<double> tacs_matrix(const ScoringProblem& problem, const ScoreWeights& w);

}  // namespace serial

namespace parallel {

std::vector<double> atas_matrix(const MissionModel& model);
std::vector<double> tsas_vector(const MissionModel& model, TsasOrientation orientation);
std::vector<double> tacs_matrix(const ScoringProblem& problem, const ScoreWeights& w);

}  // namespace parallel

}  // namespace kct
