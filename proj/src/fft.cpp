#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace ddns::detail {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans live for the process lifetime.
class PlanRegistry {
 public:
  static PlanRegistry& instance() {
    static PlanRegistry registry;
    return registry;
  }

  PlanPair get(const TorusGrid& grid) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(grid.dim(), grid.n());
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    int dims[3] = {grid.n(), grid.n(), grid.n()};
    auto* a = fftw_alloc_complex(grid.size());
    auto* b = fftw_alloc_complex(grid.size());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair pair{fftw_plan_dft(grid.dim(), dims, a, b, FFTW_FORWARD, flags),
                  fftw_plan_dft(grid.dim(), dims, a, b, FFTW_BACKWARD, flags)};
    fftw_free(a);
    fftw_free(b);
    plans_.emplace(key, pair);
    return pair;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, PlanPair> plans_;
};

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void forward_fft(const TorusGrid& grid, std::span<const double> in, std::span<cplx> out) {
  const auto plans = PlanRegistry::instance().get(grid);
  std::vector<cplx> buffer(in.begin(), in.end());
  fftw_execute_dft(plans.forward, as_fftw(buffer.data()), as_fftw(out.data()));
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (auto& z : out) z *= scale;
}

void inverse_fft(const TorusGrid& grid, std::span<const cplx> in, std::span<cplx> out) {
  const auto plans = PlanRegistry::instance().get(grid);
  std::vector<cplx> buffer(in.begin(), in.end());
  fftw_execute_dft(plans.inverse, as_fftw(buffer.data()), as_fftw(out.data()));
}

}  // namespace ddns::detail
