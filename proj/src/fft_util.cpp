#include "fft_util.hpp"

#include <fftw3.h>

#include <cstring>

#include "uasep/errors.hpp"

namespace uasep::detail {

RealDft::RealDft(std::size_t n) : n_(n) {
  if (n == 0) throw ParamError("dft length must be positive");
  real_buf_ = fftw_alloc_real(n);
  auto* cb = fftw_alloc_complex(n / 2 + 1);
  cplx_buf_ = cb;
  plan_fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_buf_, cb, FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), cb, real_buf_, FFTW_ESTIMATE);
}

RealDft::~RealDft() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_buf_);
  fftw_free(static_cast<fftw_complex*>(cplx_buf_));
}

void RealDft::forward(const double* in, std::complex<double>* out) {
  std::memcpy(real_buf_, in, n_ * sizeof(double));
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::memcpy(out, cplx_buf_, bins() * sizeof(std::complex<double>));
}

void RealDft::inverse(const std::complex<double>* in, double* out) {
  // c2r destroys its input, and fftw's convention is unscaled
  std::memcpy(cplx_buf_, in, bins() * sizeof(std::complex<double>));
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = real_buf_[i] * inv_n;
}

}  // namespace uasep::detail
