#pragma once

#include <map>
#include <string>
#include <vector>

#include "surgesim/errors.hpp"

namespace surgesim {

enum class Unit { Volt, Ampere, Other };

[[nodiscard]] std::string unit_name(Unit u);
[[nodiscard]] Unit unit_from_name(const std::string& name);

/// Uniformly sampled real-valued time series. The carrier for every probe
/// output and every analysis input.
struct Waveform {
    double dt = 1e-8;            ///< sample spacing, s
    double t0 = 0.0;             ///< time of the first sample, s
    std::vector<double> samples; ///< >= 2 finite values
    Unit unit = Unit::Other;
    std::string label;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    [[nodiscard]] double duration() const { return static_cast<double>(samples.size() - 1) * dt; }

    [[nodiscard]] double max_abs() const;
    [[nodiscard]] double peak() const;   ///< max over samples
    [[nodiscard]] double rms() const;

    /// Throws AnalysisError unless dt > 0, length >= 2 and all samples are finite.
    void validate() const;
};

/// Decimate to a coarser rate. new_dt must be an integer multiple of w.dt;
/// result keeps t0 and unit, length = floor((len-1)*w.dt/new_dt) + 1.
[[nodiscard]] Waveform resample(const Waveform& w, double new_dt);

/// Waveform CSV: '#'-prefixed metadata lines, then "time_s,value" rows.
void write_waveform_csv(const std::string& path, const Waveform& w,
                        const std::map<std::string, std::string>& metadata = {});
[[nodiscard]] Waveform read_waveform_csv(const std::string& path);

} // namespace surgesim
