#include "kct/kernels.hpp"
#include "kernel_cells.hpp"

namespace kct::serial {

std::vector<double> atas_matrix(const MissionModel& model) {
  const std::size_t n_t = model.task_count(), n_a = model.asset_count();
  std::vector<double> out(n_t * n_a, 0.0);
  for (std::size_t t = 0; t < n_t; ++t)
    for (std::size_t a = 0; a < n_a; ++a) out[t * n_a + a] = detail::atas_cell(model, t, a);
  return out;
}

std::vector<double> tsas_vector(const MissionModel& model, TsasOrientation orientation) {
  std::vector<double> out(model.task_count());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = detail::tsas_cell(model, t, orientation);
  return out;
}

std::vector<double> tacs_matrix(const ScoringProblem& problem, const ScoreWeights& w) {
  const std::size_t n_t = problem.tasks(), n_a = problem.assets();
  std::vector<double> out(n_t * n_a, 0.0);
  for (std::size_t t = 0; t < n_t; ++t)
    for (std::size_t a = 0; a < n_a; ++a) out[problem.cell(t, a)] = detail::tacs_cell(problem, w, t, a);
  return out;
}

}  // namespace kct::serial
