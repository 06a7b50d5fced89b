#include "surgesim/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "surgesim/version.hpp"

namespace surgesim {

std::string unit_name(Unit u) {
    switch (u) {
    case Unit::Volt: return "V";
    case Unit::Ampere: return "A";
    default: return "other";
    }
}

Unit unit_from_name(const std::string& name) {
    if (name == "V") return Unit::Volt;
    if (name == "A") return Unit::Ampere;
    return Unit::Other;
}

double Waveform::max_abs() const {
    double m = 0.0;
    for (double v : samples) m = std::max(m, std::abs(v));
    return m;
}

double Waveform::peak() const {
    return *std::max_element(samples.begin(), samples.end());
}

double Waveform::rms() const {
    double s = 0.0;
    for (double v : samples) s += v * v;
    return std::sqrt(s / static_cast<double>(samples.size()));
}

void Waveform::validate() const {
    if (dt <= 0.0) throw AnalysisError("waveform dt must be positive");
    if (samples.size() < 2) throw AnalysisError("waveform needs at least 2 samples");
    for (double v : samples)
        if (!std::isfinite(v)) throw AnalysisError("waveform contains non-finite sample");
}

Waveform resample(const Waveform& w, double new_dt) {
    w.validate();
    if (new_dt < w.dt - 1e-15 * w.dt)
        throw AnalysisError("resample only decimates: new_dt must be >= dt");
    const double ratio = new_dt / w.dt;
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio)
        throw AnalysisError("resample ratio must be an integer (got " + std::to_string(ratio) + ")");

    Waveform out;
    out.dt = w.dt * static_cast<double>(stride);
    out.t0 = w.t0;
    out.unit = w.unit;
    out.label = w.label;
    const std::size_t n = (w.samples.size() - 1) / stride + 1;
    out.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.samples.push_back(w.samples[i * stride]);
    return out;
}

void write_waveform_csv(const std::string& path, const Waveform& w,
                        const std::map<std::string, std::string>& metadata) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open for writing: " + path);
    f << "# surgesim waveform v" << kVersion << "\n";
    f << "# label=" << w.label << "\n";
    f << "# unit=" << unit_name(w.unit) << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", w.dt);
    f << "# dt_s=" << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.12g", w.t0);
    f << "# t0_s=" << buf << "\n";
    for (const auto& [k, v] : metadata) f << "# " << k << "=" << v << "\n";
    f << "time_s,value\n";
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9e,%.9e", w.time_at(i), w.samples[i]);
        f << buf << "\n";
    }
}

Waveform read_waveform_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open: " + path);
    Waveform w;
    w.samples.clear();
    std::string line;
    bool have_dt = false;
    std::vector<double> times;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eat = [&](const std::string& key) -> std::string {
                auto pos = line.find(key + "=");
                if (pos == std::string::npos) return {};
                return line.substr(pos + key.size() + 1);
            };
            if (auto v = eat("unit"); !v.empty()) w.unit = unit_from_name(v);
            if (auto v = eat("label"); !v.empty()) w.label = v;
            if (auto v = eat("dt_s"); !v.empty()) {
                w.dt = std::stod(v);
                have_dt = true;
            }
            if (auto v = eat("t0_s"); !v.empty()) w.t0 = std::stod(v);
            continue;
        }
        if (line.rfind("time_s", 0) == 0) continue;
        std::istringstream ss(line);
        double t = 0.0, v = 0.0;
        char comma = 0;
        if (!(ss >> t >> comma >> v))
            throw Error("malformed waveform row in " + path + ": " + line);
        times.push_back(t);
        w.samples.push_back(v);
    }
    if (w.samples.size() < 2) throw Error("waveform file has fewer than 2 samples: " + path);
    if (!have_dt) w.dt = times[1] - times[0];
    if (times.empty() == false) w.t0 = times.front();
    w.validate();
    return w;
}

} // namespace surgesim
