#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace meetbrain::dsp {

// Real-input FFT of fixed length backed by FFTW. Instances are not shared
// across threads; construction is thread-safe.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // |X_k|^2 for k in [0, n/2]. Input shorter than n is zero-padded.
  void power(std::span<const double> frame, std::vector<double>& out);
  void magnitude(std::span<const double> frame, std::vector<double>& out);

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

// Raw autocorrelation r[lag] = sum_i x[i] x[i + lag] for inputs of up to n
// samples, computed by FFT.
class Autocorrelator {
 public:
  explicit Autocorrelator(std::size_t n);
  ~Autocorrelator();
  Autocorrelator(const Autocorrelator&) = delete;
  Autocorrelator& operator=(const Autocorrelator&) = delete;
  void compute(std::span<const double> x, std::vector<double>& out);

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

std::vector<double> hann(std::size_t n, bool periodic = true);

// Band-limited resampling with a Kaiser-windowed sinc kernel.
std::vector<double> resample(std::span<const double> x, double from_rate, double to_rate);

// Short-time magnitude spectra, one row per frame (frames fully inside x).
struct Spectrogram {
  std::vector<std::vector<double>> frames;
  std::size_t n_fft = 0;
  std::size_t hop = 0;
  double sample_rate = 0.0;
  double bin_hz() const { return sample_rate / static_cast<double>(n_fft); }
};
Spectrogram stft_magnitude(std::span<const double> x, double sample_rate, std::size_t n_fft,
                           std::size_t hop);

// One-sided Welch PSD, mean-detrended Hann segments, density scaling.
struct Psd {
  std::vector<double> freqs;
  std::vector<double> density;
};
Psd welch(std::span<const double> x, double fs, std::size_t segment, std::size_t overlap);

double mean(std::span<const double> x);
double population_variance(std::span<const double> x);

}  // namespace meetbrain::dsp
