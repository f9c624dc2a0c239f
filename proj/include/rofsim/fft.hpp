#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace rofsim::fft {

using cplx = std::complex<double>;

/// Unnormalized forward DFT, in place: X[k] = sum x[n] e^{-j2pi kn/N}.
void forward(std::span<cplx> data);

/// Inverse DFT including the 1/N factor, in place.
void inverse(std::span<cplx> data);

/// Signed frequency of DFT bin k (negative half for k > N/2).
inline double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
    const double df = sample_rate / static_cast<double>(n);
    return k <= n / 2 ? static_cast<double>(k) * df
                      : (static_cast<double>(k) - static_cast<double>(n)) * df;
}

/// Multiply the spectrum of `data` by H(f) and return to time domain.
template <typename Transfer>
void apply_transfer(std::vector<cplx>& data, double sample_rate, Transfer&& h) {
    forward(data);
    const std::size_t n = data.size();
    for (std::size_t k = 0; k < n; ++k) data[k] *= h(bin_frequency(k, n, sample_rate));
    inverse(data);
}

}  // namespace rofsim::fft
