// src/fft.h

// Copyright 2026  The ppgvc Authors

// See ../../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef PPGVC_SRC_FFT_H_
#define PPGVC_SRC_FFT_H_

#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace ppgvc::internal {

// Half-spectrum real FFT. Eigen::FFT caches plans and is not thread-safe,
// so each thread owns one.
class RealFft {
 public:
  RealFft() { fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum); }

  // `time` has fft_size samples; returns fft_size / 2 + 1 bins.
  void Forward(const std::vector<double> &time, std::vector<std::complex<double>> *freq) {
    fft_.fwd(*freq, time);
  }
  void Inverse(const std::vector<std::complex<double>> &freq, int fft_size,
               std::vector<double> *time) {
    fft_.inv(*time, freq, fft_size);
  }

  static RealFft &ThreadLocal() {
    thread_local RealFft instance;
    return instance;
  }

 private:
  Eigen::FFT<double> fft_;
};

inline int NextPowerOfTwo(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace ppgvc::internal

#endif  // PPGVC_SRC_FFT_H_
