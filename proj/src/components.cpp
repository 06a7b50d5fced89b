#include "surgesim/components.hpp"

#include <algorithm>
#include <cmath>

#include "surgesim/line_model.hpp"

namespace surgesim {

namespace {

struct CigreShape {
    double a, b, n, t_n, i1, i2, t1, t2, s_m;
};

// Raw CIGRE concave-front constants for internal (I, tf, th), all in kA/us.
CigreShape cigre_raw(double i, double tf, double th) {
    const double s_m = std::max(3.9 * std::pow(i, 0.55), 1.12 * i / tf);
    const double s_n = s_m * tf / i;
    const double n = 1.0 + 2.0 * (s_n - 1.0) * (2.0 + 1.0 / s_n);
    const double t_n = 0.6 * tf * (3.0 * s_n * s_n / (1.0 + s_n * s_n));
    const double a = (0.9 * n * i / t_n - s_m) / (n - 1.0);
    const double b = (s_m * t_n - 0.9 * i) / (std::pow(t_n, n) * (n - 1.0));
    const double t1 = (th - t_n) / std::log(2.0);
    const double t2 = 0.1 * i / s_m;
    const double c = t1 * t2 / (t1 - t2);
    const double i1 = c * (s_m + 0.9 * i / t2);
    const double i2 = c * (s_m + 0.9 * i / t1);
    return {a, b, n, t_n, i1, i2, t1, t2, s_m};
}

double shape_eval(const CigreShape& s, double t_us) {
    if (t_us <= 0.0) return 0.0;
    if (t_us < s.t_n) return s.a * t_us + s.b * std::pow(t_us, s.n);
    return s.i1 * std::exp(-(t_us - s.t_n) / s.t1) - s.i2 * std::exp(-(t_us - s.t_n) / s.t2);
}

struct CigreMeasure {
    double peak, t_half, front;
};

CigreMeasure shape_measure(const CigreShape& s, double th) {
    const double t_end = std::max(4.0 * th, 600.0);
    const double dt = std::min(0.002, s.t_n / 400.0);
    // peak lies just past t_n where the tail derivative vanishes
    double peak = 0.0, t_peak = 0.0;
    for (double t = 0.0; t <= std::min(t_end, s.t_n + 20.0 * s.t2); t += dt) {
        const double v = shape_eval(s, t);
        if (v > peak) {
            peak = v;
            t_peak = t;
        }
    }
    auto crossing_up = [&](double level) {
        double prev = 0.0;
        for (double t = 0.0; t <= t_peak; t += dt) {
            const double v = shape_eval(s, t);
            if (prev < level && v >= level)
                return t - dt + dt * (level - prev) / (v - prev);
            prev = v;
        }
        return t_peak;
    };
    const double t30 = crossing_up(0.3 * peak);
    const double t90 = crossing_up(0.9 * peak);
    // half value on the tail: closed form on the slow exponential is not exact
    // because of the i2 term, so walk the tail coarsely then refine
    double t_half = t_peak;
    double step = std::max(th / 2000.0, dt);
    double prev = peak;
    for (double t = t_peak; t <= t_end * 2.0; t += step) {
        const double v = shape_eval(s, t);
        if (prev >= 0.5 * peak && v < 0.5 * peak) {
            t_half = t - step + step * (prev - 0.5 * peak) / (prev - v);
            break;
        }
        prev = v;
    }
    return {peak, t_half, (t90 - t30) / 0.6};
}

} // namespace

double LightningSpec::current(double t_s) const {
    const double t_us = t_s * 1e6;
    const CigreShape s{a, b, n, t_n, i1, i2, t1, t2, s_max};
    return static_cast<double>(polarity) * shape_eval(s, t_us) * 1e3; // kA -> A
}

LightningSpec fit_cigre(double i_peak_ka, double front_us, double tail_us, int polarity) {
    if (i_peak_ka <= 0.0) throw Error("lightning peak current must be positive");
    if (!(front_us > 0.0) || !(tail_us > front_us))
        throw Error("lightning front time must be positive and below the tail time");

    // Fixed point on the internal (I, tf, th) so the realized peak, 30/90 front
    // and half-value tail track the requested values.
    double ii = i_peak_ka, tfi = front_us, thi = tail_us;
    CigreShape s{};
    CigreMeasure m{};
    double residual = 1.0;
    for (int it = 0; it < 25; ++it) {
        s = cigre_raw(ii, tfi, thi);
        if (!(s.n > 1.0) || !(s.t1 > 0.0) || !(s.t2 > 0.0) || s.t1 <= s.t2)
            throw Error("CIGRE shape fit failed: degenerate constants for tf/tr ratio");
        m = shape_measure(s, tail_us);
        if (!(m.peak > 0.0) || !std::isfinite(m.peak))
            throw Error("CIGRE shape fit failed: non-finite trial waveform");
        residual = std::abs(m.peak / i_peak_ka - 1.0) + std::abs(m.t_half / tail_us - 1.0) +
                   std::abs(m.front / front_us - 1.0);
        if (residual < 1e-5) break;
        ii *= i_peak_ka / m.peak;
        thi *= tail_us / m.t_half;
        tfi *= front_us / m.front;
        if (!(tfi > 0.0) || !(thi > tfi))
            throw Error("CIGRE shape fit diverged for the requested tf/tr ratio");
    }
    if (residual > 0.02)
        throw Error("CIGRE shape fit did not converge (residual " + std::to_string(residual) + ")");

    LightningSpec out;
    out.i_peak_ka = i_peak_ka;
    out.front_us = front_us;
    out.tail_us = tail_us;
    out.polarity = polarity >= 0 ? +1 : -1;
    out.a = s.a;
    out.b = s.b;
    out.n = s.n;
    out.t_n = s.t_n;
    out.i1 = s.i1;
    out.i2 = s.i2;
    out.t1 = s.t1;
    out.t2 = s.t2;
    out.s_max = s.s_m;
    out.fit_residual = residual;
    return out;
}

Waveform cigre_waveform(const LightningSpec& spec, double dt, double t_end) {
    if (dt <= 0.0 || t_end < dt) throw Error("cigre_waveform needs dt > 0 and t_end >= dt");
    Waveform w;
    w.dt = dt;
    w.t0 = 0.0;
    w.unit = Unit::Ampere;
    w.label = "i_stroke";
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt)) + 1;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        w.samples[i] = spec.current(static_cast<double>(i) * dt);
    return w;
}

GapParams default_gap() {
    // 110 kV string: CFO 494 kV with V0 = 0.77*CFO. D is small, so stress
    // well past V0 flashes within tens of ns while near-threshold stress
    // takes about a microsecond; sized against the arrester-current and
    // front-time-sensitivity targets.
    GapParams g;
    const double cfo = 494e3;
    g.v0 = 0.77 * cfo;
    g.k = 3.0;
    g.d = 2e6 * std::pow(1e3, g.k) * 1e-6; // 2e6 kV^3*us
    g.g_closed = 1e3;
    return g;
}

void gap_update(GapModel& gap, double v_gap, double dt, double t_now) {
    if (gap.flashed) return;
    const double stress = std::abs(v_gap) - gap.params.v0;
    if (stress > 0.0) {
        gap.integral += std::pow(stress, gap.params.k) * dt;
        if (gap.integral >= gap.params.d) {
            gap.flashed = true;
            gap.flash_time = t_now;
        }
    }
}

void ArresterModel::validate() const {
    if (i_knots.size() < 2 || i_knots.size() != u_knots.size())
        throw Error("arrester characteristic needs >= 2 (I,U) knots");
    for (std::size_t k = 0; k < i_knots.size(); ++k) {
        if (i_knots[k] <= 0.0 || u_knots[k] <= 0.0)
            throw Error("arrester knots must be positive");
        if (k > 0 && (i_knots[k] <= i_knots[k - 1] || u_knots[k] <= u_knots[k - 1]))
            throw Error("arrester characteristic must be strictly increasing");
    }
}

double ArresterModel::voltage(double i_amp) const {
    if (i_amp == 0.0) return 0.0;
    const double sign = i_amp < 0.0 ? -1.0 : 1.0;
    const double i = std::abs(i_amp);
    const std::size_t n = i_knots.size();
    std::size_t seg = 0;
    if (i >= i_knots[n - 1]) {
        seg = n - 2;
    } else {
        while (seg + 2 < n && i > i_knots[seg + 1]) ++seg;
    }
    const double m = std::log(u_knots[seg + 1] / u_knots[seg]) /
                     std::log(i_knots[seg + 1] / i_knots[seg]);
    return sign * u_knots[seg] * std::pow(i / i_knots[seg], m);
}

double ArresterModel::current(double u_volt) const {
    if (u_volt == 0.0) return 0.0;
    const double sign = u_volt < 0.0 ? -1.0 : 1.0;
    const double u = std::abs(u_volt);
    const std::size_t n = i_knots.size();
    std::size_t seg = 0;
    if (u >= u_knots[n - 1]) {
        seg = n - 2;
    } else {
        while (seg + 2 < n && u > u_knots[seg + 1]) ++seg;
    }
    const double m = std::log(u_knots[seg + 1] / u_knots[seg]) /
                     std::log(i_knots[seg + 1] / i_knots[seg]);
    return sign * i_knots[seg] * std::pow(u / u_knots[seg], 1.0 / m);
}

std::pair<double, double> ArresterModel::eval(double i_amp) const {
    const double u = voltage(i_amp);
    // dU/dI = m * U/I on a log-log segment; floor |I| to keep it finite at 0
    const double i = std::max(std::abs(i_amp), 1e-9);
    const std::size_t n = i_knots.size();
    std::size_t seg = 0;
    if (i >= i_knots[n - 1]) {
        seg = n - 2;
    } else {
        while (seg + 2 < n && i > i_knots[seg + 1]) ++seg;
    }
    const double m = std::log(u_knots[seg + 1] / u_knots[seg]) /
                     std::log(i_knots[seg + 1] / i_knots[seg]);
    const double u_at = std::max(std::abs(u), std::abs(voltage(i)));
    return {u, m * u_at / i};
}

ArresterModel default_arrester() {
    ArresterModel m;
    // typical per-unit residual-voltage curve for a class II ZnO block,
    // anchored at 280 kV residual for the 10 kA nominal discharge current
    const double u10 = 280e3;
    const std::vector<std::pair<double, double>> pu = {
        {100, 0.770},  {250, 0.800},  {500, 0.820},  {1000, 0.850}, {2000, 0.880},
        {3000, 0.900}, {5000, 0.940}, {10000, 1.000}, {20000, 1.080}, {40000, 1.200},
    };
    for (const auto& [i, u] : pu) {
        m.i_knots.push_back(i);
        m.u_knots.push_back(u * u10);
    }
    m.validate();
    return m;
}

TheveninSpec thevenin_from_sc(double u_max_kv, double s_tpsc_mva, double s_spsc_mva, double alpha,
                              double f_hz) {
    if (u_max_kv <= 0.0 || s_tpsc_mva <= 0.0 || s_spsc_mva <= 0.0 || alpha <= 0.0)
        throw Error("thevenin inputs must be positive");
    TheveninSpec t;
    t.u_max_kv = u_max_kv;
    t.s_tpsc_mva = s_tpsc_mva;
    t.s_spsc_mva = s_spsc_mva;
    t.alpha = alpha;
    t.f_hz = f_hz;
    const double u2 = u_max_kv * u_max_kv; // kV^2 / MVA = ohm
    t.z_d = u2 / s_tpsc_mva;
    t.z_0 = u2 * (3.0 / s_spsc_mva - 2.0 / s_tpsc_mva);
    if (t.z_0 <= 0.0) throw Error("inconsistent short-circuit data: Z_0 <= 0");
    const double den = std::sqrt(1.0 + alpha * alpha);
    t.r_d = t.z_d / den;
    t.x_d = alpha * t.r_d;
    t.r_0 = t.z_0 / den;
    t.x_0 = alpha * t.r_0;
    return t;
}

TheveninSpec thevenin_from_sc_currents(double u_max_kv, double i_tpsc_ka, double i_spsc_ka,
                                       double alpha, double f_hz) {
    if (i_tpsc_ka <= 0.0 || i_spsc_ka <= 0.0)
        throw Error("thevenin short-circuit currents must be positive");
    const double s3 = std::sqrt(3.0) * u_max_kv * i_tpsc_ka;
    const double s1 = std::sqrt(3.0) * u_max_kv * i_spsc_ka;
    return thevenin_from_sc(u_max_kv, s3, s1, alpha, f_hz);
}

TowerModel build_tower(double height_m, const std::vector<double>& arm_heights,
                       const std::vector<double>& arm_lengths_m, double base_radius_m,
                       double footing_r, double velocity_factor) {
    if (height_m <= 0.0) throw Error("tower height must be positive");
    if (arm_heights.empty() || arm_heights.size() != arm_lengths_m.size())
        throw Error("tower needs matching crossarm heights and lengths");
    for (double h : arm_heights)
        if (h > height_m) throw Error("crossarm above tower top");
    if (footing_r <= 0.0) throw Error("footing resistance must be positive");

    TowerModel t;
    t.height = height_m;
    t.arm_heights = arm_heights;
    t.footing_r = footing_r;
    t.wave_velocity = velocity_factor * kC0;
    t.z_surge = 60.0 * std::log(std::sqrt(2.0) * 2.0 * height_m / base_radius_m);

    double prev = height_m;
    for (double h : arm_heights) {
        const double len = prev - h;
        if (len < 0.0) throw Error("crossarm heights must be listed top to bottom");
        t.section_lengths.push_back(len);
        t.section_inductance.push_back(t.z_surge * len / t.wave_velocity);
        prev = h;
    }
    t.bottom_length = prev; // lowest crossarm down to ground
    for (double arm : arm_lengths_m) t.arm_inductance.push_back(1e-6 * arm);
    return t;
}

PlantSpec default_plant() {
    PlantSpec p;
    p.step_up.connection = "Yd5";
    p.step_up.rated_mva = 70.0;
    p.step_up.kv_hv = 110.0;
    p.step_up.kv_lv = 20.0;
    p.step_up.r_pu = 0.0;
    p.step_up.x_pu = 0.11;
    p.step_up.winding_split = 0.968;

    p.inverter.connection = "Yd5";
    p.inverter.rated_mva = 3.5;
    p.inverter.kv_hv = 20.0;
    p.inverter.kv_lv = 0.575;
    p.inverter.r_pu = 0.0;
    p.inverter.x_pu = 0.06;
    p.inverter.winding_split = 0.998;
    return p;
}

} // namespace surgesim
