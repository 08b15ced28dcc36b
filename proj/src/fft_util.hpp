#ifndef UASEP_SRC_FFT_UTIL_HPP
#define UASEP_SRC_FFT_UTIL_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace uasep::detail {

// Real<->one-sided-complex DFT of a fixed length, plan reused across calls.
// forward: out[k] = sum_n in[n] e^{-2pi i k n / N}, k = 0..N/2.
// inverse: real synthesis from the one-sided half, scaled by 1/N so
// inverse(forward(x)) == x.
class RealDft {
 public:
  explicit RealDft(std::size_t n);
  ~RealDft();
  RealDft(const RealDft&) = delete;
  RealDft& operator=(const RealDft&) = delete;

  std::size_t length() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  void forward(const double* in, std::complex<double>* out);
  void inverse(const std::complex<double>* in, double* out);

 private:
  std::size_t n_;
  void* plan_fwd_;
  void* plan_inv_;
  double* real_buf_;
  void* cplx_buf_;  // fftw_complex[n/2+1]
};

}  // namespace uasep::detail

#endif  // UASEP_SRC_FFT_UTIL_HPP
