#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace specpipe {

using cdouble = std::complex<double>;

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

// In-place iterative radix-2 transform; size must be a power of two.
void fft(std::vector<cdouble>& data, bool inverse = false);

// Forward DFT of a real frame; returns all n bins.
std::vector<cdouble> fft_real(const std::vector<double>& frame);

// Linear convolution of a real signal with a complex kernel via zero-padded FFT.
// Returns signal.size() outputs aligned so that output[t] pairs kernel center
// (kernel.size()/2) with signal[t].
std::vector<cdouble> convolve_centered(const std::vector<double>& signal,
                                       const std::vector<cdouble>& kernel);

}  // namespace specpipe
