#include <exception>

#include "amc/engine.hpp"

namespace amc {

std::vector<EpisodeMetrics> run_episodes(std::span<const EpisodeJob> jobs, Execution execution) {
  std::vector<EpisodeMetrics> out(jobs.size());
  if (execution == Execution::serial) {
    for (std::size_t i = 0; i < jobs.size(); ++i)
      out[i] = run_episode(*jobs[i].config, jobs[i].kind, jobs[i].seed);
    return out;
  }

  std::vector<std::exception_ptr> errors(jobs.size());
  const auto n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& job = jobs[static_cast<std::size_t>(i)];
    try {
      out[static_cast<std::size_t>(i)] = run_episode(*job.config, job.kind, job.seed);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace amc
