#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace bgtse {

// Real-input FFT of a fixed size, backed by FFTW. One plan pair per instance;
// reuse the instance across frames. Not thread-safe (FFTW plan execution on
// shared buffers); create one per thread if parallelizing.
class RealFft {
 public:
  explicit RealFft(int size);
  ~RealFft();

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return size_; }
  int bins() const { return size_ / 2 + 1; }

  // time (size) -> one-sided spectrum (size/2 + 1)
  void forward(const double* time, std::complex<double>* spectrum);
  // one-sided spectrum -> time, scaled by 1/size (round trip is identity)
  void inverse(const std::complex<double>* spectrum, double* time);

 private:
  int size_;
  void* plan_fwd_;
  void* plan_inv_;
  double* real_buf_;
  std::complex<double>* cplx_buf_;
};

// Linear convolution via zero-padded FFT, length a+b-1.
Eigen::VectorXd fft_convolve(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace bgtse
