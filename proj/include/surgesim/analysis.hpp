#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include "surgesim/waveform.hpp"

namespace surgesim {

/// Single-sided magnitude spectrum on a uniform grid from 0 Hz upward.
struct Spectrum {
    std::vector<double> freq_hz;
    std::vector<double> magnitude; ///< |X_k|, DFT convention (DC bin = mean * N)
    std::string source;
    double sample_rate_hz = 0.0;

    [[nodiscard]] std::size_t size() const { return freq_hz.size(); }
    /// Index of the largest spectral peak (local maximum) above f_min.
    [[nodiscard]] std::size_t dominant_bin(double f_min_hz = 0.0) const;
};

/// In-place complex FFT, any length (radix-2 with Bluestein fallback).
void fft(std::vector<std::complex<double>>& data, bool inverse);

/// Magnitude spectrum of a uniformly sampled waveform (no window by default).
/// Parseval's identity holds to ~1e-12: sum x^2 = (1/N) sum |X|^2.
[[nodiscard]] Spectrum fft_magnitude(const Waveform& w, bool hann_window = false);

struct FilterCharacterization {
    std::vector<double> freq_hz;
    std::vector<double> ratio_db;     ///< 20*log10(|Y|/|X|), eps-floored
    std::vector<double> ratio_db_smooth;
    double bandwidth_3db_hz = 0.0;    ///< first crossing 3 dB below the DC ratio
    double power_ratio = 0.0;         ///< sum|X|^2 / sum|Y|^2
    double dc_gain_db = 0.0;
};

/// Compare an unfiltered spectrum X against a filtered one Y.
[[nodiscard]] FilterCharacterization filter_characterize(const Spectrum& x, const Spectrum& y,
                                                         int smooth_bins = 7);

/// One intrinsic mode function.
struct Imf {
    std::vector<double> samples;
    int index = 0;
    int sift_count = 0;
};

struct EmdResult {
    std::vector<Imf> imfs;
    std::vector<double> residue;
    bool converged = true; ///< false when the sift cap was hit on some IMF
};

struct EmdOptions {
    int max_imfs = 12;
    int max_sifts = 10;
    double sd_stop = 0.3; ///< Cauchy criterion ||h_prev - h||^2 / ||h_prev||^2
};

/// Empirical mode decomposition with cubic-spline envelopes and
/// mirror-symmetric boundary extension. sum(IMFs) + residue == input exactly.
[[nodiscard]] EmdResult emd(const Waveform& w, const EmdOptions& opts = {});

struct MarginalSpectrum {
    std::vector<double> freq_hz;   ///< bin centers
    std::vector<double> amplitude; ///< accumulated instantaneous amplitude per bin
    std::size_t dropped_samples = 0; ///< inst. frequency outside (0, Nyquist)

    [[nodiscard]] std::size_t peak_bin() const;
};

/// Hilbert marginal spectrum: per IMF, the analytic-signal envelope is
/// accumulated into the bin of the instantaneous frequency (central difference
/// of the unwrapped phase). Default grid: 1 kHz bins from 0 to 1 MHz.
[[nodiscard]] MarginalSpectrum hilbert_marginal(const EmdResult& decomposition, double dt,
                                                double bin_hz = 1e3, double f_max_hz = 1e6);

/// Analytic-signal envelope and instantaneous frequency of one real series.
void analytic_signal(const std::vector<double>& x, std::vector<double>& envelope,
                     std::vector<double>& inst_freq_hz, double dt);

void write_spectrum_csv(const std::string& path, const Spectrum& s,
                        const std::map<std::string, std::string>& metadata = {});
void write_marginal_csv(const std::string& path, const MarginalSpectrum& m,
                        const std::map<std::string, std::string>& metadata = {});

} // namespace surgesim
