#include <omp.h>

#include "kct/kernels.hpp"
#include "kernel_cells.hpp"

namespace kct::parallel {

// Path enumeration cost varies a lot between cells, hence dynamic schedules
// on the graph kernels.

std::vector<double> atas_matrix(const MissionModel& model) {
  const long n_t = static_cast<long>(model.task_count());
  const long n_a = static_cast<long>(model.asset_count());
  std::vector<double> out(static_cast<std::size_t>(n_t * n_a), 0.0);
#pragma omp parallel for collapse(2) schedule(dynamic, 4)
  for (long t = 0; t < n_t; ++t)
    for (long a = 0; a < n_a; ++a)
      out[static_cast<std::size_t>(t * n_a + a)] =
          detail::atas_cell(model, static_cast<std::size_t>(t), static_cast<std::size_t>(a));
  return out;
}

std::vector<double> tsas_vector(const MissionModel& model, TsasOrientation orientation) {
  const long n_t = static_cast<long>(model.task_count());
  std::vector<double> out(static_cast<std::size_t>(n_t));
#pragma omp parallel for schedule(dynamic, 1)
  for (long t = 0; t < n_t; ++t)
    out[static_cast<std::size_t>(t)] = detail::tsas_cell(model, static_cast<std::size_t>(t), orientation);
  return out;
}

std::vector<double> tacs_matrix(const ScoringProblem& problem, const ScoreWeights& w) {
  const long n_t = static_cast<long>(problem.tasks());
  const long n_a = static_cast<long>(problem.assets());
  std::vector<double> out(static_cast<std::size_t>(n_t * n_a), 0.0);
#pragma omp parallel for collapse(2) schedule(static)
  for (long t = 0; t < n_t; ++t)
    for (long a = 0; a < n_a; ++a)
      out[static_cast<std::size_t>(t * n_a + a)] =
          detail::tacs_cell(problem, w, static_cast<std::size_t>(t), static_cast<std::size_t>(a));
  return out;
}

}  // namespace kct::parallel
