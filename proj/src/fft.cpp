#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace vbsde::detail {
namespace {

// FFTW planning is not thread-safe, execution with the new-array interface
// is. Plans are in-place, unaligned, and built with FFTW_ESTIMATE so that
// the chosen algorithm (and therefore every output bit) does not depend on
// timing measurements.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n, FftDirection direction) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(n, direction == FftDirection::forward);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<std::complex<double>> scratch(static_cast<std::size_t>(n) * n);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(n, n, p, p,
                                      direction == FftDirection::forward ? FFTW_FORWARD
                                                                         : FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("fftw plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, bool>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void fft2d(std::span<std::complex<double>> data, int n, FftDirection direction) {
  if (data.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("fft2d: size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(cache().get(n, direction), p, p);
}

}  // namespace vbsde::detail
