#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "specpipe/spectrogram.hpp"

namespace specpipe {

// How the cycle count of the i-th set member grows (i is 1-based):
//   Multiplicative: c_i = i * c1
//   Additive:       c_i = c1 + (i - 1)
enum class CycleMode { Multiplicative, Additive };

const char* to_string(CycleMode mode);
CycleMode parse_cycle_mode(const std::string& text);

struct SuperletConfig {
  std::vector<double> freq_grid;  // Hz, strictly ascending, inside (0, fs/2)
  double base_cycles = 3.0;       // c1
  double order_min = 1.0;
  double order_max = 16.0;
  CycleMode cycle_mode = CycleMode::Multiplicative;
  double k_sd = 5.0;     // envelope half-extent in standard deviations
  std::size_t time_hop = 1;  // keep every time_hop-th output column
  double db_floor = -80.0;

  // Geometric grid from fmin to fmax inclusive.
  static std::vector<double> log_grid(double fmin, double fmax, std::size_t count);
  static SuperletConfig defaults(int sample_rate);
};

// Magnitude of the analytic Morlet response at every sample position.
// The wavelet has sigma_t = cycles / (k_sd * freq_hz), is truncated at
// k_sd standard deviations on each side, and is L2-normalised before use.
std::vector<double> morlet_response(const std::vector<double>& samples,
                                    double freq_hz, double cycles,
                                    int sample_rate, double k_sd = 5.0);

// Weighted geometric mean of |responses| with fractional order.
// order = k + alpha with k = floor(order); expects k series at alpha == 0,
// k + 1 otherwise, the last one entering with exponent alpha:
//   out = (R_1 * ... * R_k * R_{k+1}^alpha)^(1/order)
// Magnitudes are floored at 1e-12 before the log. A single series at
// order 1 is returned unchanged.
std::vector<double> fractional_geomean(
    const std::vector<std::vector<double>>& responses, double order);

// Full superlet scalogram: one band per grid frequency, order ramped
// linearly from order_min at the lowest frequency to order_max at the
// highest, columns decimated by time_hop, values compressed to dB.
SpectrogramTensor superlet_transform(const std::vector<double>& samples,
                                     int sample_rate,
                                     const SuperletConfig& config);

}  // namespace specpipe
