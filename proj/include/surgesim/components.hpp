#pragma once

#include <functional>
#include <string>
#include <vector>

#include "surgesim/waveform.hpp"

namespace surgesim {

// ---------------------------------------------------------------------------
// CIGRE lightning current
// ---------------------------------------------------------------------------

/// Lightning stroke description plus the fitted CIGRE shape constants.
/// The concave front is A*t + B*t^n up to t_n (the 90% point); the tail is a
/// difference of two exponentials. Internal constants are refined numerically
/// so the emitted waveform honors (I_peak, t_f, t_r) to the stated tolerances.
struct LightningSpec {
    double i_peak_ka = 31.0;
    double front_us = 3.0;   ///< 30/90 virtual front time
    double tail_us = 75.0;   ///< time to half value
    int polarity = +1;       ///< +1 or -1

    // fitted shape constants (all in kA / us units)
    double a = 0.0, b = 0.0, n = 0.0;
    double t_n = 0.0;
    double i1 = 0.0, i2 = 0.0, t1 = 0.0, t2 = 0.0;
    double s_max = 0.0;      ///< max front steepness, kA/us
    double fit_residual = 0.0;

    /// Current in A at time t (s); 0 for t <= 0.
    [[nodiscard]] double current(double t_s) const;
};

/// Fit the CIGRE shape constants for (i_peak, front, tail).
/// Throws Error when the fit cannot honor the invariants (extreme ratios).
[[nodiscard]] LightningSpec fit_cigre(double i_peak_ka, double front_us, double tail_us,
                                      int polarity = +1);

/// Sample the fitted stroke on a uniform grid.
[[nodiscard]] Waveform cigre_waveform(const LightningSpec& spec, double dt, double t_end);

// ---------------------------------------------------------------------------
// Equal-area flashover gap
// ---------------------------------------------------------------------------

struct GapParams {
    double v0 = 495e3;     ///< threshold voltage, V
    double k = 1.0;        ///< exponent
    double d = 1.21;       ///< integral threshold, V^K * s  (1210 kV*us for defaults)
    double g_closed = 1e3; ///< conductance once flashed, S
};

/// Default gap: V0 = 0.9*CFO with CFO = 550 kV, K = 1, D sized so a constant
/// 2*CFO stress flashes in 2 us.
[[nodiscard]] GapParams default_gap();

struct GapModel {
    GapParams params;
    double integral = 0.0; ///< accumulated (|v|-V0)^K dt, V^K*s
    bool flashed = false;
    double flash_time = -1.0;
};

/// Accumulate the equal-area integral over one step and latch the flashover.
/// The integral never resets; once flashed the gap stays flashed.
void gap_update(GapModel& gap, double v_gap, double dt, double t_now);

// ---------------------------------------------------------------------------
// ZnO surge arrester
// ---------------------------------------------------------------------------

/// Metal-oxide arrester described by its U-I characteristic, interpolated
/// log-log between knots and extended by the end-segment power laws.
/// Evaluation is odd-symmetric: U(-i) = -U(i).
struct ArresterModel {
    std::vector<double> i_knots; ///< A, strictly increasing
    std::vector<double> u_knots; ///< V, strictly increasing
    double rated_kv = 108.0;     ///< kVrms
    double mcov_kv = 86.0;
    double nominal_ka = 10.0;
    std::string iec_class = "II";

    void validate() const;

    [[nodiscard]] double voltage(double i_amp) const;  ///< U(i), odd
    [[nodiscard]] double current(double u_volt) const; ///< inverse, odd
    /// (U, dU/dI) at the operating point; dU/dI > 0 everywhere.
    [[nodiscard]] std::pair<double, double> eval(double i_amp) const;
};

/// Default 108 kVrms / class II characteristic, 100 A..40 kA, 280 kV residual
/// at the 10 kA nominal discharge current.
[[nodiscard]] ArresterModel default_arrester();

// ---------------------------------------------------------------------------
// Thevenin network equivalent
// ---------------------------------------------------------------------------

struct TheveninSpec {
    double u_max_kv = 123.0;
    double s_tpsc_mva = 2000.0; ///< three-phase short-circuit power
    double s_spsc_mva = 1500.0; ///< single-phase short-circuit power
    double alpha = 10.0;        ///< X/R
    double f_hz = 50.0;

    // derived, ohms
    double z_d = 0.0, z_0 = 0.0;
    double r_d = 0.0, x_d = 0.0;
    double r_0 = 0.0, x_0 = 0.0;
};

/// Fill the derived sequence impedances:
///   Z_d = U^2/S_tpsc,  Z_0 = U^2 (3/S_spsc - 2/S_tpsc),
///   R = Z/sqrt(1+alpha^2),  X = alpha*R  for both sequences.
/// Throws Error when the short-circuit data gives Z_0 <= 0.
[[nodiscard]] TheveninSpec thevenin_from_sc(double u_max_kv, double s_tpsc_mva, double s_spsc_mva,
                                            double alpha, double f_hz = 50.0);

/// Same, from short-circuit currents (kA): S = sqrt(3) U I.
[[nodiscard]] TheveninSpec thevenin_from_sc_currents(double u_max_kv, double i_tpsc_ka,
                                                     double i_spsc_ka, double alpha,
                                                     double f_hz = 50.0);

// ---------------------------------------------------------------------------
// Tower
// ---------------------------------------------------------------------------

/// Four-section tower: inductive branches from the top down to the bottom
/// crossarm, then a single-conductor propagation element to the footing.
struct TowerModel {
    double height = 26.5;          ///< m, tower top
    double z_surge = 0.0;          ///< ohm
    double wave_velocity = 0.0;    ///< m/s
    std::vector<double> arm_heights;      ///< crossarm attachment heights, top to bottom, m
    std::vector<double> section_lengths;  ///< top..bottom-1 sections, m
    std::vector<double> section_inductance; ///< H, for the upper sections
    double bottom_length = 0.0;    ///< m, propagation element
    std::vector<double> arm_inductance; ///< H per crossarm (1 uH/m of arm length)
    double footing_r = 20.0;       ///< ohm
};

/// Conical-tower surge impedance 60*ln(sqrt(2)*2h/r) and section inductances
/// L = Z * length / v. Crossarm inductance is 1 uH/m of arm length.
[[nodiscard]] TowerModel build_tower(double height_m, const std::vector<double>& arm_heights,
                                     const std::vector<double>& arm_lengths_m,
                                     double base_radius_m = 3.0, double footing_r = 20.0,
                                     double velocity_factor = 0.85);

// ---------------------------------------------------------------------------
// Plant (transformers + collector network)
// ---------------------------------------------------------------------------

struct TransformerSpec {
    std::string connection = "Yd5";
    double rated_mva = 70.0;
    double f_hz = 50.0;
    double kv_hv = 110.0;  ///< line-line, wye side
    double kv_lv = 20.0;   ///< line-line, delta side
    double r_pu = 0.0;
    double x_pu = 0.11;
    double winding_split = 0.968; ///< impedance ratio of windings 1 and 2 (no effect at R=0)
    double x_mag_pu = 500.0;      ///< magnetizing reactance

    /// Leakage reactance referred to the HV side, ohm.
    [[nodiscard]] double leakage_ohm_hv() const {
        return x_pu * kv_hv * kv_hv / rated_mva;
    }
};

struct CollectorPiSpec {
    double r_ohm = 0.15;
    double l_h = 0.525e-3;
    double c_f = 0.375e-6; ///< total; split half per end
};

struct PlantSpec {
    TransformerSpec step_up;   ///< 70 MVA 20/110 kV
    TransformerSpec inverter;  ///< 3.5 MVA 0.575/20 kV
    CollectorPiSpec collector;
    double station_cap_f = 1e-9;    ///< stray capacitance at the entrance busbar, F
    double entrance_l_h = 80e-6;    ///< station entrance series inductance per phase, H
    double entrance_r_ohm = 2.0;    ///< entrance series resistance, ohm
    double hv_surge_cap_f = 36e-9;  ///< HV bus capacitance per phase (cable + windings), F
    double hv_surge_cap_r = 0.0;    ///< optional series damping for the bus capacitance, ohm
    double lv_source_r = 2e-3;      ///< ohm, inverter-side termination
    double lv_source_l = 5e-6;      ///< H
};

[[nodiscard]] PlantSpec default_plant();

} // namespace surgesim
