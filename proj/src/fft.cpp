#include "phasenet/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace phasenet::fft {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (rows, cols, direction) and kept for
// the life of the process.
class PlanCache {
 public:
  fftw_plan get(int rows, int cols, Direction direction) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(rows, cols, direction == Direction::forward);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    ComplexGrid scratch(rows, cols);
    auto* buffer = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(rows, cols, buffer, buffer,
                                      direction == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void transform(ComplexGrid& grid, Direction direction) {
  if (grid.empty()) return;
  fftw_plan plan = cache().get(grid.rows(), grid.cols(), direction);
  auto* buffer = reinterpret_cast<fftw_complex*>(grid.data());
  fftw_execute_dft(plan, buffer, buffer);
}

ComplexGrid forward(const RealGrid& grid) {
  ComplexGrid out(grid.extent());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = grid[i];
  transform(out, Direction::forward);
  return out;
}

}  // namespace phasenet::fft
