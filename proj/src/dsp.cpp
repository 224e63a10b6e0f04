#include "meetbrain/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "meetbrain/error.hpp"

namespace meetbrain::dsp {
namespace {
// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace

struct RealFft::Impl {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (plan) fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
};

RealFft::RealFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n == 0) throw Error(ErrorKind::Input, "FFT length must be positive");
  std::lock_guard lock(planner_mutex());
  impl_->in = fftw_alloc_real(n);
  impl_->out = fftw_alloc_complex(n / 2 + 1);
  impl_->plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), impl_->in, impl_->out, FFTW_ESTIMATE);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::power(std::span<const double> frame, std::vector<double>& out) {
  const std::size_t m = std::min(frame.size(), n_);
  std::copy_n(frame.begin(), m, impl_->in);
  std::fill(impl_->in + m, impl_->in + n_, 0.0);
  fftw_execute(impl_->plan);
  out.resize(bins());
  for (std::size_t k = 0; k < bins(); ++k)
    out[k] = impl_->out[k][0] * impl_->out[k][0] + impl_->out[k][1] * impl_->out[k][1];
}

void RealFft::magnitude(std::span<const double> frame, std::vector<double>& out) {
  power(frame, out);
  for (auto& v : out) v = std::sqrt(v);
}

struct Autocorrelator::Impl {
  std::size_t m = 0;
  double* buf = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    fftw_free(buf);
    fftw_free(spec);
  }
};

Autocorrelator::Autocorrelator(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  impl_->m = m;
  std::lock_guard lock(planner_mutex());
  impl_->buf = fftw_alloc_real(m);
  impl_->spec = fftw_alloc_complex(m / 2 + 1);
  impl_->fwd = fftw_plan_dft_r2c_1d(static_cast<int>(m), impl_->buf, impl_->spec, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_c2r_1d(static_cast<int>(m), impl_->spec, impl_->buf, FFTW_ESTIMATE);
}

Autocorrelator::~Autocorrelator() = default;

void Autocorrelator::compute(std::span<const double> x, std::vector<double>& out) {
  const std::size_t len = std::min(x.size(), n_);
  const std::size_t m = impl_->m;
  std::copy_n(x.begin(), len, impl_->buf);
  std::fill(impl_->buf + len, impl_->buf + m, 0.0);
  fftw_execute(impl_->fwd);
  for (std::size_t k = 0; k < m / 2 + 1; ++k) {
    auto& c = impl_->spec[k];
    c[0] = c[0] * c[0] + c[1] * c[1];
    c[1] = 0.0;
  }
  fftw_execute(impl_->inv);
  out.resize(len);
  for (std::size_t i = 0; i < len; ++i) out[i] = impl_->buf[i] / static_cast<double>(m);
}

std::vector<double> hann(std::size_t n, bool periodic) {
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  const double denom = periodic ? static_cast<double>(n) : static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / denom);
  return w;
}

namespace {
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}
}  // namespace

std::vector<double> resample(std::span<const double> x, double from_rate, double to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw Error(ErrorKind::Input, "sample rates must be positive");
  if (from_rate == to_rate) return {x.begin(), x.end()};

  constexpr int kHalfTaps = 32;
  constexpr double kBeta = 8.6;
  constexpr int kTableRes = 512;  // kernel samples per input sample
  const double ratio = to_rate / from_rate;
  const double cutoff = std::min(1.0, ratio) * 0.97;  // relative to input Nyquist
  const double support = kHalfTaps / cutoff;

  // Kernel tabulated on |d| in [0, support], linearly interpolated.
  const auto table_len = static_cast<std::size_t>(std::ceil(support * kTableRes)) + 2;
  std::vector<double> table(table_len);
  const double i0_beta = bessel_i0(kBeta);
  for (std::size_t i = 0; i < table_len; ++i) {
    const double d = static_cast<double>(i) / kTableRes;
    const double u = d / support;
    const double win = u >= 1.0 ? 0.0 : bessel_i0(kBeta * std::sqrt(1.0 - u * u)) / i0_beta;
    const double arg = std::numbers::pi * cutoff * d;
    const double sinc = d == 0.0 ? 1.0 : std::sin(arg) / arg;
    table[i] = cutoff * sinc * win;
  }
  auto kernel = [&](double d) {
    const double pos = std::abs(d) * kTableRes;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= table_len) return 0.0;
    const double frac = pos - static_cast<double>(i);
    return table[i] + frac * (table[i + 1] - table[i]);
  };

  const auto n_out = static_cast<std::size_t>(std::floor(static_cast<double>(x.size()) * ratio));
  std::vector<double> y(n_out);
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());
  for (std::size_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) / ratio;
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(t - support));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(t + support));
    double acc = 0.0;
    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0); i <= std::min(hi, n_in - 1); ++i)
      acc += x[static_cast<std::size_t>(i)] * kernel(static_cast<double>(i) - t);
    y[j] = acc;
  }
  return y;
}

Spectrogram stft_magnitude(std::span<const double> x, double sample_rate, std::size_t n_fft,
                           std::size_t hop) {
  Spectrogram s;
  s.n_fft = n_fft;
  s.hop = hop;
  s.sample_rate = sample_rate;
  if (x.size() < n_fft) return s;
  const auto win = hann(n_fft);
  RealFft fft(n_fft);
  std::vector<double> frame(n_fft);
  for (std::size_t start = 0; start + n_fft <= x.size(); start += hop) {
    for (std::size_t i = 0; i < n_fft; ++i) frame[i] = x[start + i] * win[i];
    std::vector<double> mag;
    fft.magnitude(frame, mag);
    s.frames.push_back(std::move(mag));
  }
  return s;
}

Psd welch(std::span<const double> x, double fs, std::size_t segment, std::size_t overlap) {
  if (segment == 0 || overlap >= segment) throw Error(ErrorKind::Input, "invalid Welch segmentation");
  if (x.size() < segment) throw Error(ErrorKind::Input, "signal shorter than one Welch segment");
  const auto win = hann(segment);
  double win_pow = 0.0;
  for (double w : win) win_pow += w * w;
  const double scale = 1.0 / (fs * win_pow);

  RealFft fft(segment);
  Psd psd;
  psd.density.assign(fft.bins(), 0.0);
  std::vector<double> frame(segment), p;
  std::size_t count = 0;
  const std::size_t step = segment - overlap;
  for (std::size_t start = 0; start + segment <= x.size(); start += step) {
    const double m = mean(x.subspan(start, segment));
    for (std::size_t i = 0; i < segment; ++i) frame[i] = (x[start + i] - m) * win[i];
    fft.power(frame, p);
    for (std::size_t k = 0; k < p.size(); ++k) psd.density[k] += p[k];
    ++count;
  }
  const bool even = segment % 2 == 0;
  for (std::size_t k = 0; k < psd.density.size(); ++k) {
    double v = psd.density[k] * scale / static_cast<double>(count);
    const bool edge = k == 0 || (even && k == psd.density.size() - 1);
    psd.density[k] = edge ? v : 2.0 * v;
  }
  psd.freqs.resize(psd.density.size());
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) psd.freqs[k] = k * fs / static_cast<double>(segment);
  return psd;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double population_variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

}  // namespace meetbrain::dsp
