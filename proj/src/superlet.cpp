#include "specpipe/superlet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "specpipe/error.hpp"
#include "specpipe/fft.hpp"

namespace specpipe {

namespace {

constexpr double kPowerEps = 1e-10;
constexpr double kGeoEps = 1e-12;

// L2-normalised analytic Morlet, sampled at the signal rate and truncated
// at k_sd standard deviations. Odd length, peak at the centre tap.
std::vector<cdouble> make_morlet(double freq_hz, double cycles,
                                 int sample_rate, double k_sd) {
  const double sigma_t = cycles / (k_sd * freq_hz);
  const double dt = 1.0 / sample_rate;
  const long half = static_cast<long>(std::ceil(k_sd * sigma_t * sample_rate));
  std::vector<cdouble> w(2 * half + 1);
  double energy = 0.0;
  for (long i = -half; i <= half; ++i) {
    const double t = i * dt;
    const double env = std::exp(-t * t / (2.0 * sigma_t * sigma_t));
    const double phase = 2.0 * std::numbers::pi * freq_hz * t;
    const cdouble v(env * std::cos(phase), env * std::sin(phase));
    w[i + half] = v;
    energy += std::norm(v);
  }
  const double inv = 1.0 / std::sqrt(energy);
  for (auto& v : w) v *= inv;
  return w;
}

void check_wavelet_args(std::size_t n_samples, double freq_hz, double cycles,
                        int sample_rate, double k_sd) {
  if (sample_rate <= 0) throw Error(ErrorCode::ConfigError, "sample rate must be positive");
  if (k_sd <= 0.0) throw Error(ErrorCode::ConfigError, "k_sd must be positive");
  if (cycles < 1.0) throw Error(ErrorCode::ConfigError, "cycle count must be >= 1");
  if (!(freq_hz > 0.0) || freq_hz >= 0.5 * sample_rate) {
    throw Error(ErrorCode::FrequencyOutOfRange,
                "frequency " + std::to_string(freq_hz) + " Hz outside (0, " +
                    std::to_string(0.5 * sample_rate) + ")");
  }
  const double sigma_t = cycles / (k_sd * freq_hz);
  const std::size_t support =
      2 * static_cast<std::size_t>(std::ceil(k_sd * sigma_t * sample_rate)) + 1;
  if (n_samples < support) {
    throw Error(ErrorCode::InputTooShort,
                "signal of " + std::to_string(n_samples) +
                    " samples shorter than wavelet support " +
                    std::to_string(support));
  }
}

// |x * w| evaluated at positions 0, hop, 2*hop, ...; FFT convolution when
// every position is needed, direct accumulation otherwise.
std::vector<double> response_at_hops(const std::vector<double>& samples,
                                     const std::vector<cdouble>& wavelet,
                                     std::size_t hop) {
  const std::size_t n = samples.size();
  if (hop <= 1) {
    std::vector<cdouble> full = convolve_centered(samples, wavelet);
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(full[i]);
    return mag;
  }
  const long m = static_cast<long>(wavelet.size());
  const long center = m / 2;
  const std::size_t n_out = (n - 1) / hop + 1;
  std::vector<double> mag(n_out);
  for (std::size_t f = 0; f < n_out; ++f) {
    const long t = static_cast<long>(f * hop);
    // y[t] = sum_j x[j] * w[center + t - j]
    const long j_lo = std::max<long>(0, t + center - (m - 1));
    const long j_hi = std::min<long>(static_cast<long>(n) - 1, t + center);
    double re = 0.0, im = 0.0;
    for (long j = j_lo; j <= j_hi; ++j) {
      const cdouble& wv = wavelet[static_cast<std::size_t>(center + t - j)];
      re += samples[static_cast<std::size_t>(j)] * wv.real();
      im += samples[static_cast<std::size_t>(j)] * wv.imag();
    }
    mag[f] = std::hypot(re, im);
  }
  return mag;
}

double member_cycles(CycleMode mode, double c1, std::size_t i_one_based) {
  if (mode == CycleMode::Multiplicative) return static_cast<double>(i_one_based) * c1;
  return c1 + static_cast<double>(i_one_based - 1);
}

}  // namespace

const char* to_string(CycleMode mode) {
  return mode == CycleMode::Multiplicative ? "multiplicative" : "additive";
}

CycleMode parse_cycle_mode(const std::string& text) {
  if (text == "multiplicative") return CycleMode::Multiplicative;
  if (text == "additive") return CycleMode::Additive;
  throw Error(ErrorCode::ConfigError,
              "cycle mode '" + text + "' (expected multiplicative|additive)");
}

std::vector<double> SuperletConfig::log_grid(double fmin, double fmax,
                                             std::size_t count) {
  if (!(fmin > 0.0) || !(fmax > fmin) || count < 2) {
    throw Error(ErrorCode::ConfigError, "log grid needs 0 < fmin < fmax and count >= 2");
  }
  std::vector<double> grid(count);
  const double ratio = fmax / fmin;
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = fmin * std::pow(ratio, static_cast<double>(i) /
                                         static_cast<double>(count - 1));
  }
  grid.back() = fmax;
  return grid;
}

SuperletConfig SuperletConfig::defaults(int sample_rate) {
  SuperletConfig cfg;
  cfg.freq_grid = log_grid(50.0, 0.45 * sample_rate, 64);
  return cfg;
}

std::vector<double> morlet_response(const std::vector<double>& samples,
                                    double freq_hz, double cycles,
                                    int sample_rate, double k_sd) {
  check_wavelet_args(samples.size(), freq_hz, cycles, sample_rate, k_sd);
  return response_at_hops(samples, make_morlet(freq_hz, cycles, sample_rate, k_sd), 1);
}

std::vector<double> fractional_geomean(
    const std::vector<std::vector<double>>& responses, double order) {
  if (responses.empty()) {
    throw Error(ErrorCode::EmptyResponseList, "no responses to combine");
  }
  if (!(order >= 1.0)) {
    throw Error(ErrorCode::ConfigError, "order must be >= 1");
  }
  const std::size_t k = static_cast<std::size_t>(std::floor(order));
  const double alpha = order - static_cast<double>(k);
  const std::size_t expect = alpha > 0.0 ? k + 1 : k;
  if (responses.size() != expect) {
    throw Error(ErrorCode::ConfigError,
                "order " + std::to_string(order) + " needs " +
                    std::to_string(expect) + " responses, got " +
                    std::to_string(responses.size()));
  }
  const std::size_t n = responses.front().size();
  for (const auto& r : responses) {
    if (r.size() != n) throw Error(ErrorCode::ShapeMismatch, "response lengths differ");
  }
  if (expect == 1 && alpha == 0.0) return responses.front();

  std::vector<double> out(n);
  const double inv_order = 1.0 / order;
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      acc += std::log(std::max(responses[i][t], kGeoEps));
    }
    if (alpha > 0.0) acc += alpha * std::log(std::max(responses[k][t], kGeoEps));
    out[t] = std::exp(acc * inv_order);
  }
  return out;
}

SpectrogramTensor superlet_transform(const std::vector<double>& samples,
                                     int sample_rate,
                                     const SuperletConfig& config) {
  const auto& grid = config.freq_grid;
  if (grid.empty()) throw Error(ErrorCode::ConfigError, "empty frequency grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw Error(ErrorCode::ConfigError, "frequency grid must be strictly ascending");
    }
  }
  if (!(config.order_min >= 1.0) || !(config.order_max >= config.order_min)) {
    throw Error(ErrorCode::ConfigError, "need 1 <= order_min <= order_max");
  }
  if (config.time_hop == 0) throw Error(ErrorCode::ConfigError, "time_hop must be >= 1");
  if (samples.empty()) throw Error(ErrorCode::InputTooShort, "empty signal");

  const std::size_t hop = config.time_hop;
  const std::size_t n_frames = (samples.size() - 1) / hop + 1;
  const double f_lo = grid.front();
  const double f_hi = grid.back();

  SpectrogramTensor out;
  out.mode = SpectrogramMode::Superlet;
  out.channels = 1;
  out.bands = grid.size();
  out.frames = n_frames;
  out.db_floor = config.db_floor;
  out.data.assign(out.size(), 0.0);

  double ceil_db = config.db_floor;
  for (std::size_t b = 0; b < grid.size(); ++b) {
    const double f = grid[b];
    const double order =
        f_hi > f_lo
            ? config.order_min + (config.order_max - config.order_min) *
                                     (f - f_lo) / (f_hi - f_lo)
            : config.order_min;
    const std::size_t k = static_cast<std::size_t>(std::floor(order));
    const double alpha = order - static_cast<double>(k);
    const std::size_t n_members = alpha > 0.0 ? k + 1 : k;

    std::vector<std::vector<double>> members;
    members.reserve(n_members);
    for (std::size_t i = 1; i <= n_members; ++i) {
      const double c = member_cycles(config.cycle_mode, config.base_cycles, i);
      check_wavelet_args(samples.size(), f, c, sample_rate, config.k_sd);
      members.push_back(
          response_at_hops(samples, make_morlet(f, c, sample_rate, config.k_sd), hop));
    }
    const std::vector<double> combined = fractional_geomean(members, order);

    for (std::size_t t = 0; t < n_frames; ++t) {
      const double db =
          10.0 * std::log10(combined[t] * combined[t] + kPowerEps);
      const double v = std::max(db, config.db_floor);
      out.at(0, b, t) = v;
      ceil_db = std::max(ceil_db, v);
    }
  }
  out.db_ceil = ceil_db;
  return out;
}

}  // namespace specpipe
