#pragma once

// Transform-based correlation on power-of-two sizes (Eigen's FFT module).

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace ibc::fft {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Circular correlation on a zero-extended power-of-two grid of size M >=
/// |x| + |y| - 1: out[k] = sum_n x[n] y[(n + k) mod M]. Non-negative lags sit
/// at out[k], negative lags wrap to out[M + k].
inline std::vector<double> correlate(std::span<const double> x, std::span<const double> y) {
  const std::size_t size = next_pow2(x.size() + y.size() - 1);
  std::vector<double> xp(size, 0.0);
  std::vector<double> yp(size, 0.0);
  std::copy(x.begin(), x.end(), xp.begin());
  std::copy(y.begin(), y.end(), yp.begin());

  Eigen::FFT<double> engine;
  std::vector<std::complex<double>> xs;
  std::vector<std::complex<double>> ys;
  engine.fwd(xs, xp);
  engine.fwd(ys, yp);
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] *= std::conj(xs[i]);
  std::vector<double> out;
  engine.inv(out, ys);
  out.resize(size);
  return out;
}

}  // namespace ibc::fft
