#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace rtfdoa::detail {

// Thin RAII wrapper over an FFTW real<->complex plan pair of fixed size.
// Plan creation is serialized internally; execution is reentrant per object.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  // out.size() == bins(); unnormalized forward DFT.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // out.size() == size(); unnormalized inverse DFT (scale by 1/size for identity).
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t size_;
  double* real_ = nullptr;
  void* spec_ = nullptr;
  void* fwd_ = nullptr;
  void* inv_ = nullptr;
};

}  // namespace rtfdoa::detail
