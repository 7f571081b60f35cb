#include "bgtse/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <stdexcept>

namespace bgtse {

RealFft::RealFft(int size) : size_(size) {
  if (size < 1) throw std::invalid_argument("RealFft: size must be >= 1");
  real_buf_ = fftw_alloc_real(size_);
  cplx_buf_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(bins()));
  plan_fwd_ = fftw_plan_dft_r2c_1d(size_, real_buf_,
                                   reinterpret_cast<fftw_complex*>(cplx_buf_), FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_1d(size_, reinterpret_cast<fftw_complex*>(cplx_buf_),
                                   real_buf_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_buf_);
  fftw_free(cplx_buf_);
}

void RealFft::forward(const double* time, std::complex<double>* spectrum) {
  std::memcpy(real_buf_, time, sizeof(double) * size_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  std::memcpy(spectrum, cplx_buf_, sizeof(std::complex<double>) * bins());
}

void RealFft::inverse(const std::complex<double>* spectrum, double* time) {
  std::memcpy(cplx_buf_, spectrum, sizeof(std::complex<double>) * bins());
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  const double scale = 1.0 / size_;
  for (int i = 0; i < size_; ++i) time[i] = real_buf_[i] * scale;
}

Eigen::VectorXd fft_convolve(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() == 0 || b.size() == 0) return Eigen::VectorXd();
  const Eigen::Index out_len = a.size() + b.size() - 1;
  int n = 1;
  while (n < out_len) n <<= 1;

  RealFft fft(n);
  std::vector<double> ta(n, 0.0), tb(n, 0.0);
  std::memcpy(ta.data(), a.data(), sizeof(double) * a.size());
  std::memcpy(tb.data(), b.data(), sizeof(double) * b.size());
  std::vector<std::complex<double>> sa(fft.bins()), sb(fft.bins());
  fft.forward(ta.data(), sa.data());
  fft.forward(tb.data(), sb.data());
  for (int i = 0; i < fft.bins(); ++i) sa[i] *= sb[i];
  fft.inverse(sa.data(), ta.data());

  return Eigen::Map<Eigen::VectorXd>(ta.data(), out_len);
}

}  // namespace bgtse
