#include "surgesim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "surgesim/version.hpp"

namespace surgesim {

namespace {

constexpr double kPi = 3.14159265358979323846;
using Cplx = std::complex<double>;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::vector<Cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const Cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            Cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const Cplx u = a[i + k];
                const Cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

// chirp-z (Bluestein) for arbitrary lengths
void fft_bluestein(std::vector<Cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    std::size_t m = 1;
    while (m < 2 * n + 1) m <<= 1;
    std::vector<Cplx> w(n);
    const double sgn = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        // angle = pi * k^2 / n, computed mod 2n to keep precision
        const auto k2 = static_cast<unsigned long long>(k) * k % (2 * n);
        const double ang = sgn * kPi * static_cast<double>(k2) / static_cast<double>(n);
        w[k] = Cplx(std::cos(ang), std::sin(ang));
    }
    std::vector<Cplx> fa(m, Cplx(0, 0)), fb(m, Cplx(0, 0));
    for (std::size_t k = 0; k < n; ++k) fa[k] = a[k] * w[k];
    for (std::size_t k = 0; k < n; ++k) {
        fb[k] = std::conj(w[k]);
        if (k) fb[m - k] = std::conj(w[k]);
    }
    fft_radix2(fa, false);
    fft_radix2(fb, false);
    for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
    fft_radix2(fa, true);
    for (std::size_t k = 0; k < n; ++k) a[k] = fa[k] * w[k];
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

} // namespace

void fft(std::vector<Cplx>& data, bool inverse) {
    if (data.size() < 2) return;
    if (is_pow2(data.size()))
        fft_radix2(data, inverse);
    else
        fft_bluestein(data, inverse);
}

std::size_t Spectrum::dominant_bin(double f_min_hz) const {
    // largest local maximum above f_min (the smooth low-frequency skirt of a
    // surge envelope is not a spectral peak); falls back to the plain argmax
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 2; k + 2 < freq_hz.size(); ++k) {
        if (freq_hz[k] <= std::max(f_min_hz, 0.0)) continue;
        if (magnitude[k] > magnitude[k - 1] && magnitude[k] >= magnitude[k + 1] &&
            magnitude[k] > magnitude[k - 2] && magnitude[k] >= magnitude[k + 2] &&
            magnitude[k] > best_mag) {
            best_mag = magnitude[k];
            best = k;
        }
    }
    if (best_mag < 0.0) {
        for (std::size_t k = 0; k < freq_hz.size(); ++k) {
            if (freq_hz[k] <= std::max(f_min_hz, 0.0)) continue;
            if (magnitude[k] > best_mag) {
                best_mag = magnitude[k];
                best = k;
            }
        }
    }
    return best;
}

Spectrum fft_magnitude(const Waveform& w, bool hann_window) {
    w.validate();
    if (w.samples.size() < 16) throw AnalysisError("fft_magnitude needs at least 16 samples");
    const std::size_t n = w.samples.size();
    std::vector<Cplx> buf(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = w.samples[i];
        if (hann_window)
            v *= 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                       static_cast<double>(n - 1)));
        buf[i] = Cplx(v, 0.0);
    }
    fft(buf, false);

    Spectrum s;
    s.source = w.label;
    s.sample_rate_hz = 1.0 / w.dt;
    const std::size_t half = n / 2;
    s.freq_hz.resize(half + 1);
    s.magnitude.resize(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        s.freq_hz[k] = static_cast<double>(k) / (static_cast<double>(n) * w.dt);
        s.magnitude[k] = std::abs(buf[k]);
    }
    return s;
}

FilterCharacterization filter_characterize(const Spectrum& x, const Spectrum& y,
                                           int smooth_bins) {
    if (x.size() != y.size() || x.size() < 4)
        throw AnalysisError("filter_characterize: spectra grids do not match");
    for (std::size_t k = 0; k < x.size(); k += std::max<std::size_t>(1, x.size() / 8))
        if (std::abs(x.freq_hz[k] - y.freq_hz[k]) > 1e-6 * (x.freq_hz.back() + 1.0))
            throw AnalysisError("filter_characterize: spectra grids do not match");

    FilterCharacterization fc;
    fc.freq_hz = x.freq_hz;
    const double mx = *std::max_element(x.magnitude.begin(), x.magnitude.end());
    const double eps = std::max(mx, 1.0) * 1e-12;
    fc.ratio_db.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        fc.ratio_db[k] = 20.0 * std::log10((y.magnitude[k] + eps) / (x.magnitude[k] + eps));

    // centered moving average
    fc.ratio_db_smooth.resize(x.size());
    const int hw = std::max(smooth_bins, 1) / 2;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double acc = 0.0;
        int cnt = 0;
        for (int j = -hw; j <= hw; ++j) {
            const auto idx = static_cast<long>(k) + j;
            if (idx < 0 || idx >= static_cast<long>(x.size())) continue;
            acc += fc.ratio_db[static_cast<std::size_t>(idx)];
            ++cnt;
        }
        fc.ratio_db_smooth[k] = acc / cnt;
    }

    fc.dc_gain_db = fc.ratio_db_smooth.front();
    fc.bandwidth_3db_hz = fc.freq_hz.back();
    for (std::size_t k = 0; k < x.size(); ++k)
        if (fc.ratio_db_smooth[k] <= fc.dc_gain_db - 3.0) {
            fc.bandwidth_3db_hz = fc.freq_hz[k];
            break;
        }

    double px = 0.0, py = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        px += x.magnitude[k] * x.magnitude[k];
        py += y.magnitude[k] * y.magnitude[k];
    }
    if (py <= 0.0) throw AnalysisError("filter_characterize: filtered spectrum is empty");
    fc.power_ratio = px / py;
    return fc;
}

// ---------------------------------------------------------------------------
// EMD
// ---------------------------------------------------------------------------

namespace {

struct Knots {
    std::vector<double> t, v;
};

void find_extrema(const std::vector<double>& x, std::vector<std::size_t>& maxima,
                  std::vector<std::size_t>& minima) {
    maxima.clear();
    minima.clear();
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] > x[i - 1] && x[i] >= x[i + 1]) maxima.push_back(i);
        if (x[i] < x[i - 1] && x[i] <= x[i + 1]) minima.push_back(i);
    }
}

std::size_t zero_crossings(const std::vector<double>& x) {
    std::size_t n = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if ((x[i - 1] < 0.0 && x[i] >= 0.0) || (x[i - 1] > 0.0 && x[i] <= 0.0)) ++n;
    return n;
}

/// natural cubic spline through (t, v), evaluated on 0..n-1
std::vector<double> spline_eval(const Knots& kn, std::size_t n) {
    const std::size_t m = kn.t.size();
    std::vector<double> out(n);
    if (m == 2) {
        const double slope = (kn.v[1] - kn.v[0]) / (kn.t[1] - kn.t[0]);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = kn.v[0] + slope * (static_cast<double>(i) - kn.t[0]);
        return out;
    }
    std::vector<double> h(m - 1), alpha(m, 0.0), l(m), mu(m), z(m), c(m), b(m - 1), d(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) h[i] = kn.t[i + 1] - kn.t[i];
    for (std::size_t i = 1; i + 1 < m; ++i)
        alpha[i] = 3.0 * ((kn.v[i + 1] - kn.v[i]) / h[i] - (kn.v[i] - kn.v[i - 1]) / h[i - 1]);
    l[0] = 1.0;
    mu[0] = z[0] = 0.0;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        l[i] = 2.0 * (kn.t[i + 1] - kn.t[i - 1]) - h[i - 1] * mu[i - 1];
        mu[i] = h[i] / l[i];
        z[i] = (alpha[i] - h[i - 1] * z[i - 1]) / l[i];
    }
    l[m - 1] = 1.0;
    z[m - 1] = c[m - 1] = 0.0;
    for (std::size_t j = m - 1; j-- > 0;) {
        c[j] = z[j] - mu[j] * c[j + 1];
        b[j] = (kn.v[j + 1] - kn.v[j]) / h[j] - h[j] * (c[j + 1] + 2.0 * c[j]) / 3.0;
        d[j] = (c[j + 1] - c[j]) / (3.0 * h[j]);
    }
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        while (seg + 2 < m && t > kn.t[seg + 1]) ++seg;
        const double dt = t - kn.t[seg];
        out[i] = kn.v[seg] + dt * (b[seg] + dt * (c[seg] + dt * d[seg]));
    }
    return out;
}

/// mirror two extrema beyond each boundary so the envelope covers the ends
Knots mirrored_knots(const std::vector<double>& x, const std::vector<std::size_t>& idx,
                     std::size_t n) {
    Knots kn;
    const auto last = static_cast<double>(n - 1);
    const std::size_t take = std::min<std::size_t>(idx.size(), 2);
    for (std::size_t k = take; k-- > 0;) {
        kn.t.push_back(-static_cast<double>(idx[k]));
        kn.v.push_back(x[idx[k]]);
    }
    for (std::size_t i : idx) {
        kn.t.push_back(static_cast<double>(i));
        kn.v.push_back(x[i]);
    }
    for (std::size_t k = 0; k < take; ++k) {
        const std::size_t i = idx[idx.size() - 1 - k];
        kn.t.push_back(2.0 * last - static_cast<double>(i));
        kn.v.push_back(x[i]);
    }
    return kn;
}

bool imf_criterion(const std::vector<double>& h) {
    std::vector<std::size_t> maxima, minima;
    find_extrema(h, maxima, minima);
    const auto ext = maxima.size() + minima.size();
    const auto zc = zero_crossings(h);
    return ext >= 2 && (ext > zc ? ext - zc : zc - ext) <= 1;
}

} // namespace

EmdResult emd(const Waveform& w, const EmdOptions& opts) {
    w.validate();
    const std::size_t n = w.samples.size();
    if (n < 64) throw AnalysisError("emd needs at least 64 samples");

    EmdResult res;
    res.residue = w.samples;

    for (int imf_idx = 0; imf_idx < opts.max_imfs; ++imf_idx) {
        std::vector<std::size_t> maxima, minima;
        find_extrema(res.residue, maxima, minima);
        if (maxima.size() + minima.size() <= 2) break; // residue is a trend

        std::vector<double> h = res.residue;
        int sift = 0;
        bool ok = false;
        for (sift = 1; sift <= opts.max_sifts; ++sift) {
            find_extrema(h, maxima, minima);
            if (maxima.size() < 2 || minima.size() < 2) break;
            const auto upper = spline_eval(mirrored_knots(h, maxima, n), n);
            const auto lower = spline_eval(mirrored_knots(h, minima, n), n);
            double num = 0.0, den = 0.0;
            std::vector<double> h_new(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double mean = 0.5 * (upper[i] + lower[i]);
                h_new[i] = h[i] - mean;
                num += mean * mean;
                den += h[i] * h[i];
            }
            h.swap(h_new);
            if (den <= 0.0) break;
            if (num / den < opts.sd_stop && imf_criterion(h)) {
                ok = true;
                break;
            }
        }
        if (!ok && !imf_criterion(h)) res.converged = false;

        Imf imf;
        imf.samples = h;
        imf.index = imf_idx;
        imf.sift_count = sift;
        for (std::size_t i = 0; i < n; ++i) res.residue[i] -= h[i];
        res.imfs.push_back(std::move(imf));

        std::vector<std::size_t> rmax, rmin;
        find_extrema(res.residue, rmax, rmin);
        if (rmax.size() + rmin.size() <= 2) break;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Hilbert spectral analysis
// ---------------------------------------------------------------------------

void analytic_signal(const std::vector<double>& x, std::vector<double>& envelope,
                     std::vector<double>& inst_freq_hz, double dt) {
    const std::size_t n = x.size();
    if (n < 4) throw AnalysisError("analytic_signal needs at least 4 samples");
    std::vector<Cplx> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = Cplx(x[i], 0.0);
    fft(buf, false);
    // zero the negative frequencies, double the positive ones
    for (std::size_t k = 1; k < (n + 1) / 2; ++k) buf[k] *= 2.0;
    for (std::size_t k = n / 2 + 1; k < n; ++k) buf[k] = Cplx(0.0, 0.0);
    fft(buf, true);

    envelope.resize(n);
    std::vector<double> phase(n);
    for (std::size_t i = 0; i < n; ++i) {
        envelope[i] = std::abs(buf[i]);
        phase[i] = std::arg(buf[i]);
    }
    // unwrap
    for (std::size_t i = 1; i < n; ++i) {
        double d = phase[i] - phase[i - 1];
        while (d > kPi) d -= 2.0 * kPi;
        while (d < -kPi) d += 2.0 * kPi;
        phase[i] = phase[i - 1] + d;
    }
    inst_freq_hz.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i)
        inst_freq_hz[i] = (phase[i + 1] - phase[i - 1]) / (2.0 * dt) / (2.0 * kPi);
    inst_freq_hz[0] = inst_freq_hz[1];
    inst_freq_hz[n - 1] = inst_freq_hz[n - 2];
}

std::size_t MarginalSpectrum::peak_bin() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < amplitude.size(); ++k)
        if (amplitude[k] > amplitude[best]) best = k;
    return best;
}

MarginalSpectrum hilbert_marginal(const EmdResult& decomposition, double dt, double bin_hz,
                                  double f_max_hz) {
    if (dt <= 0.0 || bin_hz <= 0.0 || f_max_hz <= bin_hz)
        throw AnalysisError("hilbert_marginal: bad binning");
    const double f_nyq = 0.5 / dt;
    const auto n_bins = static_cast<std::size_t>(std::ceil(f_max_hz / bin_hz));
    MarginalSpectrum m;
    m.freq_hz.resize(n_bins);
    m.amplitude.assign(n_bins, 0.0);
    for (std::size_t k = 0; k < n_bins; ++k)
        m.freq_hz[k] = (static_cast<double>(k) + 0.5) * bin_hz;

    std::vector<double> env, freq;
    for (const auto& imf : decomposition.imfs) {
        analytic_signal(imf.samples, env, freq, dt);
        // drop the first/last samples where the phase derivative is one-sided
        for (std::size_t i = 1; i + 1 < imf.samples.size(); ++i) {
            const double f = freq[i];
            if (!(f > 0.0) || f >= f_nyq) {
                ++m.dropped_samples;
                continue;
            }
            const auto bin = static_cast<std::size_t>(f / bin_hz);
            if (bin < n_bins) m.amplitude[bin] += env[i];
        }
    }
    return m;
}

// ---------------------------------------------------------------------------

void write_spectrum_csv(const std::string& path, const Spectrum& s,
                        const std::map<std::string, std::string>& metadata) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open for writing: " + path);
    f << "# surgesim spectrum v" << kVersion << "\n";
    f << "# source=" << s.source << "\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.9g", s.sample_rate_hz);
    f << "# sample_rate_hz=" << buf << "\n";
    for (const auto& [k, v] : metadata) f << "# " << k << "=" << v << "\n";
    f << "frequency_hz,magnitude\n";
    for (std::size_t k = 0; k < s.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.9e,%.9e", s.freq_hz[k], s.magnitude[k]);
        f << buf << "\n";
    }
}

void write_marginal_csv(const std::string& path, const MarginalSpectrum& m,
                        const std::map<std::string, std::string>& metadata) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open for writing: " + path);
    f << "# surgesim hilbert marginal spectrum v" << kVersion << "\n";
    f << "# dropped_samples=" << m.dropped_samples << "\n";
    for (const auto& [k, v] : metadata) f << "# " << k << "=" << v << "\n";
    f << "frequency_hz,amplitude\n";
    char buf[96];
    for (std::size_t k = 0; k < m.freq_hz.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.9e,%.9e", m.freq_hz[k], m.amplitude[k]);
        f << buf << "\n";
    }
}

} // namespace surgesim
