#include "chirp_transform.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace levydecon::detail {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}

class FftBuffer
{
public:
  explicit FftBuffer(std::size_t n)
    : n_(n)
  {
    std::lock_guard lock(planner_mutex());
    data_ = fftw_alloc_complex(n);
    if (data_ == nullptr)
      throw std::bad_alloc();
    forward_ = fftw_plan_dft_1d(static_cast<int>(n), data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(static_cast<int>(n), data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;

  ~FftBuffer()
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(data_);
  }

  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(data_); }
  std::size_t size() const { return n_; }
  void forward() { fftw_execute(forward_); }
  // Unnormalized.
  void backward() { fftw_execute(backward_); }

private:
  std::size_t n_;
  fftw_complex* data_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

std::size_t next_pow2(std::size_t n)
{
  std::size_t p = 1;
  while (p < n)
    p <<= 1;
  return p;
}

} // namespace

std::vector<std::complex<double>>
chirp_transform(std::span<const std::complex<double>> a, double t0, double h, int sign)
{
  using cplx = std::complex<double>;
  const std::size_t n = a.size();
  std::vector<cplx> out(n);
  if (n == 0)
    return out;

  // s_j t_k = t0^2 + t0 h (j + k) + h^2 (j^2 + k^2 - (j - k)^2) / 2
  const double sg = static_cast<double>(sign);
  const double half_h2 = 0.5 * h * h;
  const double t0h = t0 * h;
  auto chirp = [&](double m) { return std::polar(1.0, sg * half_h2 * m * m); };
  auto linear = [&](double m) { return std::polar(1.0, sg * t0h * m); };

  const std::size_t len = next_pow2(2 * n - 1);
  thread_local std::vector<std::unique_ptr<FftBuffer>> cache;
  auto acquire = [&](std::size_t slot) -> FftBuffer& {
    if (cache.size() <= slot)
      cache.resize(slot + 1);
    if (!cache[slot] || cache[slot]->size() != len)
      cache[slot] = std::make_unique<FftBuffer>(len);
    return *cache[slot];
  };
  FftBuffer& signal = acquire(0);
  FftBuffer& kernel = acquire(1);

  cplx* x = signal.data();
  cplx* c = kernel.data();
  for (std::size_t k = 0; k < len; ++k) {
    x[k] = 0.0;
    c[k] = 0.0;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double kd = static_cast<double>(k);
    x[k] = a[k] * linear(kd) * chirp(kd);
  }
  // Convolution kernel exp(-sign i h^2 m^2 / 2) on m in (-n, n), wrapped.
  for (std::size_t m = 0; m < n; ++m) {
    const cplx v = std::conj(chirp(static_cast<double>(m)));
    c[m] = v;
    if (m > 0)
      c[len - m] = v;
  }
  signal.forward();
  kernel.forward();
  for (std::size_t k = 0; k < len; ++k)
    x[k] *= c[k];
  signal.backward();

  const double scale = 1.0 / static_cast<double>(len);
  const cplx global = std::polar(1.0, sg * t0 * t0);
  for (std::size_t j = 0; j < n; ++j) {
    const double jd = static_cast<double>(j);
    out[j] = global * linear(jd) * chirp(jd) * x[j] * scale;
  }
  return out;
}

} // namespace levydecon::detail
