#include "htsc/fft.hpp"

#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

namespace htsc {

namespace {
std::mutex plan_mutex;
std::map<std::tuple<int, int, int, int, int>, fftw_plan> plan_cache;

fftw_plan get_plan(int n, int count, int stride, int dist, int sign) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  const auto key = std::make_tuple(n, count, stride, dist, sign);
  auto it = plan_cache.find(key);
  if (it != plan_cache.end()) return it->second;
  // Planning with a scratch buffer; execution uses the new-array interface.
  std::vector<cd> scratch(static_cast<std::size_t>(count - 1) * dist +
                          static_cast<std::size_t>(n - 1) * stride + 1);
  fftw_complex* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan plan = fftw_plan_many_dft(1, &n, count, ptr, nullptr, stride, dist,
                                      ptr, nullptr, stride, dist, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan) throw NumericsError("fftw: plan creation failed");
  plan_cache.emplace(key, plan);
  return plan;
}
}  // namespace

void Fft::many(cd* data, int n, int count, int stride, int dist, int sign) {
  fftw_plan plan = get_plan(n, count, stride, dist, sign);
  fftw_complex* ptr = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, ptr, ptr);
}

void Fft::axis(cd* data, const std::vector<int>& dims, int axis, int sign) {
  int before = 1, after = 1;
  for (int i = 0; i < axis; ++i) before *= dims[i];
  for (std::size_t i = axis + 1; i < dims.size(); ++i) after *= dims[i];
  const int n = dims[axis];
  // Transforms along `axis`: stride = after; blocks of `before` batches are
  // `n * after` apart, and within a block the `after` transforms are 1 apart.
  for (int b = 0; b < before; ++b) {
    Fft::many(data + static_cast<std::size_t>(b) * n * after, n, after, after, 1,
              sign);
  }
}

}  // namespace htsc
