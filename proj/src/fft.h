// Copyright 2026 The vforensics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VF_SRC_FFT_H_
#define VF_SRC_FFT_H_

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

namespace vf::internal {

// FFTW planning is not thread-safe; execution on a plan's own buffers is.
inline std::mutex& FftwPlannerMutex() {
  static std::mutex mutex;
  return mutex;
}

// Real-to-complex / complex-to-real transform pair of fixed size, owning its
// buffers. One instance per thread.
class RealFft {
 public:
  explicit RealFft(size_t n) : n_(n) {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    real_ = fftw_alloc_real(n);
    spectrum_ = fftw_alloc_complex(n / 2 + 1);
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spectrum_,
                                    FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spectrum_, real_,
                                    FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spectrum_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  size_t size() const { return n_; }
  size_t bins() const { return n_ / 2 + 1; }

  // Input is zero-padded (or truncated) to the transform size.
  void Forward(std::span<const double> input) {
    const size_t m = std::min(input.size(), n_);
    for (size_t i = 0; i < m; ++i) real_[i] = input[i];
    for (size_t i = m; i < n_; ++i) real_[i] = 0.0;
    fftw_execute(forward_);
  }

  std::complex<double> Bin(size_t k) const {
    return {spectrum_[k][0], spectrum_[k][1]};
  }
  void SetBin(size_t k, std::complex<double> v) {
    spectrum_[k][0] = v.real();
    spectrum_[k][1] = v.imag();
  }
  double Power(size_t k) const {
    return spectrum_[k][0] * spectrum_[k][0] + spectrum_[k][1] * spectrum_[k][1];
  }

  // Unnormalized inverse of the current spectrum (scaled by size()).
  std::span<const double> Inverse() {
    fftw_execute(inverse_);
    return {real_, n_};
  }

 private:
  size_t n_;
  double* real_ = nullptr;
  fftw_complex* spectrum_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace vf::internal

#endif  // VF_SRC_FFT_H_
