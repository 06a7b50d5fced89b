#include "doctest.h"

#include <cmath>

#include "surgesim/line_model.hpp"
#include "surgesim/netlist.hpp"
#include "surgesim/solver.hpp"
#include "surgesim/study.hpp"

using namespace surgesim;

namespace {

ConductorGeometry single_conductor(double h, double r, double rdc = 0.0, double rho = 1e-6) {
    ConductorGeometry g;
    ConductorSpec c;
    c.x = 0.0;
    c.y_tower = h;
    c.y_midspan = h;
    c.radius = r;
    c.r_dc_ohm_per_km = rdc;
    g.conductors = {c};
    g.ground_resistivity = rho;
    return g;
}

ConductorGeometry table3_phases() {
    auto p = default_study().geometry;
    p.conductors.pop_back(); // phases only
    return p;
}

} // namespace

TEST_CASE("single lossless conductor matches the image-formula surge impedance") {
    // h = 10 m, r = 1 cm: Z = 60 ln(2h/r) = 455.9 ohm
    const auto g = single_conductor(10.0, 0.01);
    const auto m = make_cp_line(g, 300.0, 400e3);
    const double z_expected = 59.9585 * std::log(2.0 * 10.0 / 0.01);
    CHECK(m.z_mode(0) == doctest::Approx(z_expected).epsilon(1e-3));
    CHECK(m.z_mode(0) == doctest::Approx(455.9).epsilon(2e-3));
    CHECK(m.velocity(0) == doctest::Approx(kC0).epsilon(1e-3));
}

TEST_CASE("mirrored conductors give swap-symmetric matrices") {
    ConductorGeometry g;
    for (double x : {-2.0, 2.0}) {
        ConductorSpec c;
        c.x = x;
        c.y_tower = 15.0;
        c.y_midspan = 15.0;
        c.radius = 0.01;
        c.r_dc_ohm_per_km = 0.1;
        g.conductors.push_back(c);
    }
    g.ground_resistivity = 100.0;
    const auto lp = line_parameters(g, 400e3);
    CHECK(lp.Z(0, 0).real() == doctest::Approx(lp.Z(1, 1).real()).epsilon(1e-12));
    CHECK(lp.Z(0, 0).imag() == doctest::Approx(lp.Z(1, 1).imag()).epsilon(1e-12));
    CHECK(lp.C(0, 0) == doctest::Approx(lp.C(1, 1)).epsilon(1e-12));
    CHECK(lp.Z(0, 1) == lp.Z(1, 0));
    CHECK(lp.C(0, 1) == doctest::Approx(lp.C(1, 0)).epsilon(1e-12));
}

TEST_CASE("Table III geometry at 400 kHz shows the ground-return resistance") {
    const auto g = table3_phases();
    const auto lp = line_parameters(g, 400e3);
    REQUIRE(lp.Z.rows() == 3);
    const double rdc_per_m = 0.1444e-3;
    for (int i = 0; i < 3; ++i) CHECK(lp.Z(i, i).real() > rdc_per_m);
    // regression goldens for the complex-depth evaluation
    CHECK(lp.Z(0, 0).real() * 1e3 == doctest::Approx(94.50580e-3 * 1e3).epsilon(1e-4)); // ohm/km
    CHECK(lp.Z(0, 0).imag() == doctest::Approx(4.280504).epsilon(1e-4));                // ohm/m
    CHECK(lp.C(0, 0) * 1e12 == doctest::Approx(7.309926).epsilon(1e-4));                // pF/m
    CHECK(lp.Z(0, 1).imag() == doctest::Approx(0.970290).epsilon(1e-4));
}

TEST_CASE("balanced three-phase matrices produce Clarke-like modes") {
    // all off-diagonals equal: eigenvalues are (Ls+2Lm)(Cs+2Cm) once and
    // (Ls-Lm)(Cs-Cm) twice
    const double ls = 1.6e-6, lm = 0.6e-6, cs = 9e-12, cm = -2e-12;
    Eigen::MatrixXd L(3, 3), C(3, 3);
    L << ls, lm, lm, lm, ls, lm, lm, lm, ls;
    C << cs, cm, cm, cm, cs, cm, cm, cm, cs;
    const double omega = 2.0 * M_PI * 400e3;
    Eigen::MatrixXcd Z = std::complex<double>(0.0, omega) * L;
    const auto md = modal_decompose(Z, C, omega);

    const double v_ground = 1.0 / std::sqrt((ls + 2 * lm) * (cs + 2 * cm));
    const double v_aerial = 1.0 / std::sqrt((ls - lm) * (cs - cm));
    std::vector<double> v = {md.velocity(0), md.velocity(1), md.velocity(2)};
    std::sort(v.begin(), v.end());
    CHECK(v[0] == doctest::Approx(v_ground).epsilon(1e-9));
    CHECK(v[1] == doctest::Approx(v_aerial).epsilon(1e-9));
    CHECK(v[2] == doctest::Approx(v_aerial).epsilon(1e-9));
    CHECK(v_ground < v_aerial); // ground mode is the slow one
}

TEST_CASE("single-conductor mode velocity is 1/sqrt(L'C')") {
    const auto g = single_conductor(12.0, 0.012, 0.1, 100.0);
    const auto lp = line_parameters(g, 400e3);
    const double omega = 2.0 * M_PI * 400e3;
    const auto md = modal_decompose(lp.Z, lp.C, omega);
    const double expected = 1.0 / std::sqrt(lp.Z(0, 0).imag() / omega * lp.C(0, 0));
    CHECK(md.velocity(0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Table III modal velocities are physical and the transform reconstructs") {
    const auto g = table3_phases();
    const auto lp = line_parameters(g, 400e3);
    const double omega = 2.0 * M_PI * 400e3;
    const auto md = modal_decompose(lp.Z, lp.C, omega);
    for (int k = 0; k < 3; ++k) {
        CHECK(md.velocity(k) > 1e8);
        CHECK(md.velocity(k) < 3e8);
        CHECK(md.z_mode(k) > 0.0);
    }
    const Eigen::MatrixXd LC = (lp.Z.imag() / omega) * lp.C;
    CHECK(md.reconstruction_error(LC) < 1e-8);
    CHECK(md.cond_Ti < 1e3);
}

// ---------------------------------------------------------------------------
// Bergeron behavior through the solver
// ---------------------------------------------------------------------------

namespace {

/// single-mode line driven at end1 by a matched step source, loaded at end2
struct LineRig {
    Circuit c;
    SimulationConfig cfg;
    double z;

    LineRig(double z_surge, double tau, double r_load, double r_src, double i_amp = 1.0) {
        z = z_surge;
        const auto n1 = c.add_node("in");
        const auto n2 = c.add_node("out");
        CpLineDef def;
        def.model = make_scalar_line(z_surge, tau);
        def.end1 = {n1};
        def.end2 = {n2};
        c.add_cp_line("line", std::move(def));
        if (r_src > 0.0) c.add_resistor("rsrc", n1, kGround, r_src);
        if (r_load > 0.0) c.add_resistor("rload", n2, kGround, r_load);
        c.add_current_source("isrc", n1, kGround,
                             [i_amp](double t) { return t >= 0.0 ? i_amp : 0.0; });
        cfg.dt = 1e-8;
        cfg.t_end = 20e-6;
        cfg.probes = {{Probe::Kind::NodeVoltage, "in"}, {Probe::Kind::NodeVoltage, "out"}};
    }
};

} // namespace

TEST_CASE("matched line shows no reflection") {
    // source: 1 A into (rsrc = z) in parallel with the line; load matched
    LineRig rig(400.0, 1e-6, 400.0, 400.0);
    Solver s(rig.c, rig.cfg);
    const auto rr = s.run();
    const auto& vin = rr.waveform("in").samples;
    const auto& vout = rr.waveform("out").samples;
    // incident level: i*z/2 = 200 V; after tau the far end sees the same level
    const double v_inc = 200.0;
    for (std::size_t k = 300; k < vin.size(); ++k) {
        CHECK(std::abs(vin[k] - v_inc) < 1e-9 * v_inc);
        CHECK(std::abs(vout[k] - v_inc) < 1e-9 * v_inc);
    }
}

TEST_CASE("open far end doubles the incident step") {
    LineRig rig(400.0, 1e-6, 0.0, 400.0);
    Solver s(rig.c, rig.cfg);
    const auto rr = s.run();
    const auto& vout = rr.waveform("out").samples;
    // at t slightly above tau the far end jumps to 2*Vinc = 400 V
    const std::size_t k_tau = 100;
    CHECK(std::abs(vout[k_tau - 2]) < 1e-9);
    CHECK(vout[k_tau + 2] == doctest::Approx(400.0).epsilon(1e-9));
}

TEST_CASE("travel delay lands within one sample") {
    // 300 m at 2.95e8 m/s -> tau = 1.0169 us -> sample 102 +- 1 at 10 ns
    const double tau = 300.0 / 2.95e8;
    LineRig rig(450.0, tau, 450.0, 450.0);
    Solver s(rig.c, rig.cfg);
    const auto rr = s.run();
    const auto& vout = rr.waveform("out").samples;
    std::size_t arrival = 0;
    for (std::size_t k = 0; k < vout.size(); ++k)
        if (std::abs(vout[k]) > 1e-6) {
            arrival = k;
            break;
        }
    const auto expected = static_cast<std::size_t>(std::lround(tau / 1e-8));
    CHECK(arrival >= expected - 1);
    CHECK(arrival <= expected + 1);
}

TEST_CASE("swapping sending and receiving ends mirrors the waveforms") {
    auto run_dir = [](bool forward) {
        Circuit c;
        const auto n1 = c.add_node("in");
        const auto n2 = c.add_node("out");
        CpLineDef def;
        def.model = make_scalar_line(400.0, 1.05e-6);
        def.end1 = forward ? std::vector<NodeId>{n1} : std::vector<NodeId>{n2};
        def.end2 = forward ? std::vector<NodeId>{n2} : std::vector<NodeId>{n1};
        c.add_cp_line("line", std::move(def));
        c.add_resistor("rsrc", n1, kGround, 400.0);
        c.add_resistor("rload", n2, kGround, 120.0);
        c.add_current_source("isrc", n1, kGround,
                             [](double t) { return t >= 0.0 && t < 2e-6 ? 1.0 : 0.0; });
        SimulationConfig cfg;
        cfg.dt = 1e-8;
        cfg.t_end = 15e-6;
        cfg.probes = {{Probe::Kind::NodeVoltage, "out"}};
        Solver s(c, cfg);
        return s.run().waveform("out").samples;
    };
    const auto a = run_dir(true);
    const auto b = run_dir(false);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); k += 7) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
}

TEST_CASE("lossless line conserves energy") {
    // matched source + matched load, finite pulse: input energy equals the
    // energy delivered to both resistors after the line rings down
    LineRig rig(400.0, 1e-6, 400.0, 400.0);
    rig.c = Circuit(); // rebuilt with a finite pulse
    const auto n1 = rig.c.add_node("in");
    const auto n2 = rig.c.add_node("out");
    CpLineDef def;
    def.model = make_scalar_line(400.0, 1e-6);
    def.end1 = {n1};
    def.end2 = {n2};
    rig.c.add_cp_line("line", std::move(def));
    rig.c.add_resistor("rsrc", n1, kGround, 400.0);
    rig.c.add_resistor("rload", n2, kGround, 400.0);
    rig.c.add_current_source("isrc", n1, kGround,
                             [](double t) { return t >= 0.0 && t < 3e-6 ? 1.0 : 0.0; });
    rig.cfg.probes = {{Probe::Kind::NodeVoltage, "in"},
                      {Probe::Kind::NodeVoltage, "out"},
                      {Probe::Kind::BranchCurrent, "isrc"}};
    Solver s(rig.c, rig.cfg);
    const auto rr = s.run();
    const auto& vin = rr.waveform("in").samples;
    const auto& vout = rr.waveform("out").samples;
    const auto& isrc = rr.waveform("isrc").samples;
    double e_in = 0.0, e_diss = 0.0;
    for (std::size_t k = 0; k < vin.size(); ++k) {
        e_in += vin[k] * isrc[k] * 1e-8;
        e_diss += (vin[k] * vin[k] / 400.0 + vout[k] * vout[k] / 400.0) * 1e-8;
    }
    CHECK(e_diss == doctest::Approx(e_in).epsilon(1e-3));
}

TEST_CASE("splitting a section in two changes waveforms by under 0.5% RMS") {
    auto run_split = [](bool split) {
        const auto g = table3_phases();
        Circuit c;
        std::vector<NodeId> in, mid, out;
        for (const char* n : {"in_a", "in_b", "in_c"}) in.push_back(c.add_node(n));
        for (const char* n : {"out_a", "out_b", "out_c"}) out.push_back(c.add_node(n));
        if (split) {
            for (const char* n : {"m_a", "m_b", "m_c"}) mid.push_back(c.add_node(n));
            CpLineDef d1, d2;
            d1.model = make_cp_line(g, 150.0, 400e3);
            d1.end1 = in;
            d1.end2 = mid;
            d2.model = d1.model;
            d2.end1 = mid;
            d2.end2 = out;
            c.add_cp_line("s1", std::move(d1));
            c.add_cp_line("s2", std::move(d2));
        } else {
            CpLineDef d;
            d.model = make_cp_line(g, 300.0, 400e3);
            d.end1 = in;
            d.end2 = out;
            c.add_cp_line("s", std::move(d));
        }
        for (int k = 0; k < 3; ++k) {
            c.add_resistor("ri" + std::to_string(k), in[static_cast<std::size_t>(k)], kGround,
                           450.0);
            c.add_resistor("ro" + std::to_string(k), out[static_cast<std::size_t>(k)], kGround,
                           450.0);
        }
        const auto stroke = fit_cigre(10.0, 3.0, 75.0);
        c.add_current_source("src", c.node("in_a"), kGround,
                             [stroke](double t) { return stroke.current(t); });
        SimulationConfig cfg;
        cfg.dt = 1e-8;
        cfg.t_end = 30e-6;
        cfg.probes = {{Probe::Kind::NodeVoltage, "out_a"},
                      {Probe::Kind::NodeVoltage, "out_b"}};
        Solver s(c, cfg);
        return s.run();
    };
    const auto whole = run_split(false);
    const auto halves = run_split(true);
    for (const char* probe : {"out_a", "out_b"}) {
        const auto& a = whole.waveform(probe).samples;
        const auto& b = halves.waveform(probe).samples;
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            num += (a[k] - b[k]) * (a[k] - b[k]);
            den += a[k] * a[k];
        }
        CHECK(std::sqrt(num / den) < 0.005);
    }
}

TEST_CASE("a line shorter than one step is rejected") {
    Circuit c;
    const auto n1 = c.add_node("n1");
    const auto n2 = c.add_node("n2");
    CpLineDef def;
    def.model = make_scalar_line(400.0, 5e-9); // below the 10 ns default step
    def.end1 = {n1};
    def.end2 = {n2};
    c.add_cp_line("short_line", std::move(def));
    c.add_resistor("r1", n1, kGround, 400.0);
    c.add_resistor("r2", n2, kGround, 400.0);
    c.add_current_source("i", n1, kGround, [](double) { return 1.0; });
    SimulationConfig cfg;
    cfg.dt = 1e-8;
    cfg.t_end = 1e-6;
    CHECK_THROWS_AS(Solver(c, cfg), NetlistError);
}
