#include "specpipe/fft.hpp"

#include <cmath>

#include "specpipe/error.hpp"

namespace specpipe {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft(std::vector<cdouble>& data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) {
    throw Error(ErrorCode::ConfigError, "fft size must be a power of two, got " + std::to_string(n));
  }
  if (n == 1) return;

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const cdouble wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      cdouble w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        cdouble u = data[i + k];
        cdouble v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= scale;
  }
}

std::vector<cdouble> fft_real(const std::vector<double>& frame) {
  std::vector<cdouble> data(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) data[i] = cdouble(frame[i], 0.0);
  fft(data);
  return data;
}

std::vector<cdouble> convolve_centered(const std::vector<double>& signal,
                                       const std::vector<cdouble>& kernel) {
  const std::size_t n = signal.size();
  const std::size_t m = kernel.size();
  const std::size_t size = next_power_of_two(n + m);

  std::vector<cdouble> a(size, cdouble(0.0, 0.0));
  std::vector<cdouble> b(size, cdouble(0.0, 0.0));
  for (std::size_t i = 0; i < n; ++i) a[i] = cdouble(signal[i], 0.0);
  for (std::size_t i = 0; i < m; ++i) b[i] = kernel[i];
  fft(a);
  fft(b);
  for (std::size_t i = 0; i < size; ++i) a[i] *= b[i];
  fft(a, /*inverse=*/true);

  const std::size_t center = m / 2;
  std::vector<cdouble> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = a[t + center];
  return out;
}

}  // namespace specpipe
