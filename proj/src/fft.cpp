#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "rpfield/error.hpp"

namespace rpf::detail {

namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int dim, int sites, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(dim, sites, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    std::vector<int> n(static_cast<std::size_t>(dim), sites);
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(sites);
    auto* scratch = fftw_alloc_complex(total);
    // The planner is not re-entrant; execution on other arrays is.
    fftw_plan plan = fftw_plan_dft(dim, n.data(), scratch, scratch, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (plan == nullptr) throw Error(ErrorCode::internal, "FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void fft(std::complex<double>* data, int dim, int sites, int sign) {
  fftw_plan plan = cache().get(dim, sites, sign);
  auto* buffer = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, buffer, buffer);
}

}  // namespace rpf::detail
