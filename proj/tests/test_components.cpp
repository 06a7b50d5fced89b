#include "doctest.h"

#include <cmath>

#include "surgesim/components.hpp"
#include "surgesim/netlist.hpp"
#include "surgesim/solver.hpp"

using namespace surgesim;

// ---------------------------------------------------------------------------
// CIGRE lightning current
// ---------------------------------------------------------------------------

namespace {

struct ShapeStats {
    double peak, t_peak, t_half, front_30_90;
};

ShapeStats measure(const LightningSpec& s, double dt_us = 0.001) {
    ShapeStats st{0, 0, 0, 0};
    const double t_end = 6.0 * s.tail_us;
    double t30 = -1.0, t90 = -1.0;
    double prev = 0.0;
    for (double t = 0.0; t < t_end; t += dt_us) {
        const double v = std::abs(s.current(t * 1e-6)) / 1e3;
        if (v > st.peak) {
            st.peak = v;
            st.t_peak = t;
        }
        prev = v;
    }
    (void)prev;
    for (double t = 0.0; t < st.t_peak; t += dt_us) {
        const double v = std::abs(s.current(t * 1e-6)) / 1e3;
        if (t30 < 0.0 && v >= 0.3 * st.peak) t30 = t;
        if (t90 < 0.0 && v >= 0.9 * st.peak) t90 = t;
    }
    for (double t = st.t_peak; t < t_end; t += dt_us)
        if (std::abs(s.current(t * 1e-6)) / 1e3 < 0.5 * st.peak) {
            st.t_half = t;
            break;
        }
    st.front_30_90 = (t90 - t30) / 0.6;
    return st;
}

} // namespace

TEST_CASE("CIGRE 50.4 kA / 3 us / 75 us honors peak and half-value") {
    const auto s = fit_cigre(50.4, 3.0, 75.0);
    const auto st = measure(s);
    CHECK(st.peak == doctest::Approx(50.4).epsilon(0.005));   // +-0.5%
    CHECK(st.t_half == doctest::Approx(75.0).epsilon(0.02));  // +-2%
    CHECK(st.front_30_90 == doctest::Approx(3.0).epsilon(0.02));
}

TEST_CASE("CIGRE current starts at exactly zero") {
    const auto s = fit_cigre(31.0, 3.0, 75.0);
    CHECK(s.current(0.0) == 0.0);
    CHECK(s.current(-1e-6) == 0.0);
}

TEST_CASE("CIGRE front/tail junction is C1 within one sample") {
    const auto s = fit_cigre(31.0, 3.0, 75.0);
    const double dt = 1e-9;
    const double tn_s = s.t_n * 1e-6;
    const double d_before = (s.current(tn_s) - s.current(tn_s - dt)) / dt;
    const double d_after = (s.current(tn_s + dt) - s.current(tn_s)) / dt;
    const double s_max_si = s.s_max * 1e9; // kA/us -> A/s
    CHECK(std::abs(d_after - d_before) < 0.02 * s_max_si);
}

TEST_CASE("CIGRE waveform invariants across the study parameter range") {
    for (const auto& [i, tf, tr] : {std::tuple{31.0, 3.0, 75.0},
                                    std::tuple{10.0, 3.0, 75.0},
                                    std::tuple{50.4, 2.0, 75.0},
                                    std::tuple{50.4, 8.0, 75.0},
                                    std::tuple{50.4, 3.0, 500.0}}) {
        const auto s = fit_cigre(i, tf, tr);
        const auto st = measure(s);
        CHECK(st.peak == doctest::Approx(i).epsilon(0.005));
        CHECK(st.t_half == doctest::Approx(tr).epsilon(0.02));
        CHECK(st.front_30_90 == doctest::Approx(tf).epsilon(0.02));
        // non-negative, single maximum
        const auto w = cigre_waveform(s, 1e-8, 400e-6);
        int direction_changes = 0;
        double prev = 0.0;
        bool rising = true;
        for (double v : w.samples) {
            CHECK(v >= 0.0);
            if (rising && v < prev - 1e-9) {
                rising = false;
                ++direction_changes;
            } else if (!rising && v > prev + 1e-9) {
                rising = true;
                ++direction_changes;
            }
            prev = v;
        }
        CHECK(direction_changes <= 1);
    }
}

TEST_CASE("CIGRE fit rejects an impossible tail") {
    CHECK_THROWS_AS((void)fit_cigre(31.0, 10.0, 10.5), Error);
}

TEST_CASE("negative polarity mirrors the waveform") {
    const auto s = fit_cigre(31.0, 3.0, 75.0, -1);
    CHECK(s.current(10e-6) < 0.0);
}

// ---------------------------------------------------------------------------
// equal-area gap
// ---------------------------------------------------------------------------

TEST_CASE("gap at threshold voltage never flashes") {
    GapModel g;
    g.params = {500e3, 1.0, 100e3 * 1e-6, 1e3};
    for (int k = 0; k < 100000; ++k) gap_update(g, 500e3, 1e-8, k * 1e-8);
    CHECK(!g.flashed);
    CHECK(g.integral == 0.0);
}

TEST_CASE("gap flashover time matches the closed-form integral") {
    // K=1, V0=500 kV, D=100 kV*us, v=1000 kV -> t = D/(v-V0) = 0.2 us
    GapModel g;
    g.params = {500e3, 1.0, 100e3 * 1e-6, 1e3};
    const double dt = 1e-9;
    double t_flash = -1.0;
    for (int k = 1; k <= 1000; ++k) {
        gap_update(g, 1000e3, dt, k * dt);
        if (g.flashed) {
            t_flash = g.flash_time;
            break;
        }
    }
    CHECK(t_flash == doctest::Approx(0.2e-6).epsilon(dt / 0.2e-6 * 1.5));
}

TEST_CASE("gap integral is retained when the stress dips below V0") {
    GapModel g;
    g.params = {500e3, 1.0, 100e3 * 1e-6, 1e3};
    for (int k = 0; k < 100; ++k) gap_update(g, 900e3, 1e-9, k * 1e-9);
    const double kept = g.integral;
    CHECK(kept > 0.0);
    for (int k = 0; k < 100; ++k) gap_update(g, 100e3, 1e-9, k * 1e-9);
    CHECK(g.integral == kept);
    for (int k = 0; k < 200; ++k) gap_update(g, 900e3, 1e-9, k * 1e-9);
    CHECK(g.integral > kept);
}

TEST_CASE("higher stress flashes no later") {
    const GapParams p = default_gap();
    double prev_time = 1e9;
    for (double v_mv = 1.2; v_mv <= 3.0; v_mv += 0.3) {
        GapModel g;
        g.params = p;
        double t_flash = 1e9;
        for (int k = 1; k <= 2000000 && !g.flashed; ++k) {
            gap_update(g, v_mv * 1e6, 1e-9, k * 1e-9);
            if (g.flashed) t_flash = g.flash_time;
        }
        CHECK(t_flash <= prev_time);
        prev_time = t_flash;
    }
}

TEST_CASE("default gap timing follows its closed form under constant stress") {
    // t = D / (v - V0)^K with the defaults (V0 = 450 kV, D = 5 kV*us)
    const GapParams p = default_gap();
    for (double v : {600e3, 1000e3, 2000e3}) {
        GapModel g;
        g.params = p;
        double t_flash = -1.0;
        for (int k = 1; k <= 400000 && !g.flashed; ++k) {
            gap_update(g, v, 1e-9, k * 1e-9);
            if (g.flashed) t_flash = g.flash_time;
        }
        const double expected = p.d / std::pow(v - p.v0, p.k);
        CHECK(t_flash == doctest::Approx(expected).epsilon(2e-9 / expected));
    }
}

// ---------------------------------------------------------------------------
// arrester
// ---------------------------------------------------------------------------

TEST_CASE("arrester interpolation passes through the knots") {
    const auto m = default_arrester();
    for (std::size_t k = 0; k < m.i_knots.size(); ++k) {
        CHECK(m.voltage(m.i_knots[k]) == doctest::Approx(m.u_knots[k]).epsilon(1e-12));
        CHECK(m.current(m.u_knots[k]) == doctest::Approx(m.i_knots[k]).epsilon(1e-9));
    }
}

TEST_CASE("arrester evaluation is odd and monotone") {
    const auto m = default_arrester();
    CHECK(m.voltage(0.0) == 0.0);
    CHECK(m.current(0.0) == 0.0);
    double prev = 0.0;
    for (double i = 1.0; i < 60e3; i *= 1.7) {
        const double u = m.voltage(i);
        CHECK(u > prev);
        CHECK(m.voltage(-i) == doctest::Approx(-u).epsilon(1e-12));
        prev = u;
    }
}

TEST_CASE("arrester linearization matches finite differences within 0.1%") {
    const auto m = default_arrester();
    for (double i : {150.0, 800.0, 2500.0, 9000.0, 15000.0, 35000.0}) {
        const auto [u, dudi] = m.eval(i);
        CHECK(u == doctest::Approx(m.voltage(i)).epsilon(1e-12));
        const double h = i * 1e-6;
        const double fd = (m.voltage(i + h) - m.voltage(i - h)) / (2.0 * h);
        CHECK(dudi == doctest::Approx(fd).epsilon(1e-3));
    }
}

TEST_CASE("arrester leakage below switching level is negligible") {
    const auto m = default_arrester();
    // power-frequency peak at MCOV*sqrt(2): the extrapolated current is tiny
    const double u_mcov_peak = 86e3 * std::sqrt(2.0);
    CHECK(m.current(u_mcov_peak) < 1.0);
}

TEST_CASE("solver operating point matches a brute-force bisection oracle") {
    // Thevenin drive 600 kV behind 10 ohm against the default characteristic
    const auto m = default_arrester();
    const double v_src = 600e3, r = 10.0;

    // oracle: bisection on U(i) + r*i = v_src
    double lo = 0.0, hi = v_src / r;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (m.voltage(mid) + r * mid < v_src)
            lo = mid;
        else
            hi = mid;
    }
    const double i_oracle = 0.5 * (lo + hi);

    Circuit c;
    const auto n1 = c.add_node("n1");
    BranchBankDef src;
    src.nodes = {{n1, kGround}};
    src.r = Eigen::MatrixXd::Constant(1, 1, r);
    src.l = Eigen::MatrixXd::Zero(1, 1);
    src.emf = {std::complex<double>(v_src, 0.0)};
    src.emf_f_hz = 0.0;
    c.add_branch_bank("src", std::move(src));
    c.add_arrester("arr", n1, kGround, m);

    SimulationConfig cfg;
    cfg.dt = 1e-8;
    cfg.t_end = 1e-6;
    cfg.probes = {{Probe::Kind::BranchCurrent, "arr"}};
    Solver s(c, cfg);
    const auto rr = s.run();
    const double i_solver = rr.waveform("arr").samples.back();
    CHECK(i_solver == doctest::Approx(i_oracle).epsilon(1e-4)); // within 0.01%
}

// ---------------------------------------------------------------------------
// Thevenin equivalent
// ---------------------------------------------------------------------------

TEST_CASE("thevenin worked examples from the short-circuit data") {
    const auto t = thevenin_from_sc(123.0, 2000.0, 1500.0, 10.0);
    CHECK(t.z_d == doctest::Approx(7.5645).epsilon(1e-12));
    CHECK(t.z_0 == doctest::Approx(15.129).epsilon(1e-12));
    CHECK(t.r_d == doctest::Approx(7.5645 / std::sqrt(101.0)).epsilon(1e-12));
    CHECK(t.x_d == doctest::Approx(10.0 * 7.5645 / std::sqrt(101.0)).epsilon(1e-12));
}

TEST_CASE("thevenin (R,X) pairs satisfy the defining identities to 1e-12") {
    for (double alpha : {0.5, 2.0, 10.0, 40.0}) {
        const auto t = thevenin_from_sc(123.0, 1800.0, 1200.0, alpha);
        CHECK(std::hypot(t.r_d, t.x_d) == doctest::Approx(t.z_d).epsilon(1e-12));
        CHECK(std::hypot(t.r_0, t.x_0) == doctest::Approx(t.z_0).epsilon(1e-12));
        CHECK(t.x_d / t.r_d == doctest::Approx(alpha).epsilon(1e-12));
        CHECK(t.x_0 / t.r_0 == doctest::Approx(alpha).epsilon(1e-12));
    }
}

TEST_CASE("inconsistent short-circuit data is rejected") {
    CHECK_THROWS_AS((void)thevenin_from_sc(123.0, 2000.0, 4000.0, 10.0), Error);
}

TEST_CASE("thevenin from currents matches thevenin from powers") {
    const double u = 123.0;
    const double i3 = 2000.0 / (std::sqrt(3.0) * u);
    const double i1 = 1500.0 / (std::sqrt(3.0) * u);
    const auto a = thevenin_from_sc(u, 2000.0, 1500.0, 10.0);
    const auto b = thevenin_from_sc_currents(u, i3, i1, 10.0);
    CHECK(a.z_d == doctest::Approx(b.z_d).epsilon(1e-12));
    CHECK(a.z_0 == doctest::Approx(b.z_0).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// tower
// ---------------------------------------------------------------------------

TEST_CASE("conical tower surge impedance follows the closed form") {
    const auto t = build_tower(26.5, {22.7, 20.5, 18.3}, {2.5, 3.0, 3.5}, 3.0);
    CHECK(t.z_surge ==
          doctest::Approx(60.0 * std::log(std::sqrt(2.0) * 2.0 * 26.5 / 3.0)).epsilon(1e-12));
    CHECK(t.bottom_length == doctest::Approx(18.3).epsilon(1e-12));
    // section inductance L = Z * len / v (compared in uH to keep the scale honest)
    const double v = 0.85 * kC0;
    CHECK(t.section_inductance[0] * 1e6 ==
          doctest::Approx(t.z_surge * (26.5 - 22.7) / v * 1e6).epsilon(1e-12));
}

TEST_CASE("zero-length tower section has zero inductance") {
    const auto t = build_tower(26.5, {26.5, 20.5}, {2.0, 2.0}, 3.0);
    CHECK(t.section_inductance[0] == 0.0);
    CHECK(t.section_inductance[1] > 0.0);
}

TEST_CASE("crossarm inductance is 1 uH per meter") {
    const auto t = build_tower(26.5, {22.7}, {2.0}, 3.0);
    CHECK(t.arm_inductance[0] * 1e6 == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("crossarm above the tower top is rejected") {
    CHECK_THROWS_AS((void)build_tower(26.5, {27.0}, {2.0}, 3.0), Error);
}

// ---------------------------------------------------------------------------
// plant
// ---------------------------------------------------------------------------

TEST_CASE("step-up transformer leakage referred to the HV side") {
    const auto p = default_plant();
    CHECK(p.step_up.leakage_ohm_hv() == doctest::Approx(0.11 * 110.0 * 110.0 / 70.0).epsilon(1e-12));
    CHECK(p.step_up.r_pu == 0.0); // purely reactive per the transformer data
    CHECK(p.inverter.leakage_ohm_hv() == doctest::Approx(0.06 * 20.0 * 20.0 / 3.5).epsilon(1e-12));
}
