#include "doctest.h"

#include <cmath>
#include <random>

#include "surgesim/netlist.hpp"
#include "surgesim/solver.hpp"

using namespace surgesim;

namespace {

BranchBankDef dc_source(NodeId n, double volts, double r_ohm) {
    BranchBankDef d;
    d.nodes = {{n, kGround}};
    d.r = Eigen::MatrixXd::Constant(1, 1, r_ohm);
    d.l = Eigen::MatrixXd::Zero(1, 1);
    d.emf = {std::complex<double>(volts, 0.0)};
    d.emf_f_hz = 0.0;
    return d;
}

} // namespace

TEST_CASE("assemble: single 10 ohm resistor gives a 1x1 [0.1 S] matrix") {
    Circuit c;
    const auto n1 = c.add_node("n1");
    c.add_resistor("r", n1, kGround, 10.0);
    SimulationConfig cfg;
    Solver s(c, cfg);
    const auto& g = s.conductance_matrix();
    REQUIRE(g.rows() == 1);
    CHECK(g(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("assemble: 1 mH inductor at dt = 10 ns stamps G = 5e-6 S") {
    Circuit c;
    const auto n1 = c.add_node("n1");
    c.add_inductor("l", n1, kGround, 1e-3);
    SimulationConfig cfg;
    cfg.dt = 10e-9;
    Solver s(c, cfg);
    CHECK(s.conductance_matrix()(0, 0) == doctest::Approx(5e-6).epsilon(1e-12));
}

TEST_CASE("assemble: capacitor stamps G = 2C/dt") {
    Circuit c;
    const auto n1 = c.add_node("n1");
    c.add_capacitor("c", n1, kGround, 1e-6);
    SimulationConfig cfg;
    cfg.dt = 10e-9;
    Solver s(c, cfg);
    CHECK(s.conductance_matrix()(0, 0) == doctest::Approx(2e-6 / 10e-9).epsilon(1e-12));
}

TEST_CASE("floating subnetwork raises a singularity error") {
    Circuit c;
    const auto n1 = c.add_node("n1");
    const auto n2 = c.add_node("n2");
    c.add_resistor("r", n1, n2, 10.0); // no path to ground
    c.add_current_source("i", n1, n2, [](double) { return 1.0; });
    SimulationConfig cfg;
    Solver s(c, cfg);
    CHECK_THROWS_AS(s.initialize(), SolverError);
}

TEST_CASE("RC discharge matches the analytic exponential to 0.1% RMS") {
    // R = 100 ohm, C = 1 uF, V(0) = 100 V, tau = 100 us, dt = tau/1000
    Circuit c;
    const auto n1 = c.add_node("n1");
    c.add_resistor("r", n1, kGround, 100.0);
    c.add_capacitor("c", n1, kGround, 1e-6, 100.0);
    SimulationConfig cfg;
    const double tau = 100.0 * 1e-6;
    cfg.dt = tau / 1000.0;
    cfg.t_end = 5.0 * tau;
    cfg.probes = {{Probe::Kind::NodeVoltage, "n1"}};
    Solver s(c, cfg);
    const auto rr = s.run();
    const auto& v = rr.waveform("n1").samples;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double expect = 100.0 * std::exp(-static_cast<double>(k) * cfg.dt / tau);
        num += (v[k] - expect) * (v[k] - expect);
        den += expect * expect;
    }
    CHECK(std::sqrt(num / den) < 1e-3);
}

TEST_CASE("series LC rings at 1/(2 pi sqrt(LC))") {
    // EMF step behind L = 1 mH into C = 1 uF: f = 5.033 kHz
    Circuit c;
    const auto n1 = c.add_node("n1");
    BranchBankDef src;
    src.nodes = {{n1, kGround}};
    src.r = Eigen::MatrixXd::Constant(1, 1, 1e-3);
    src.l = Eigen::MatrixXd::Constant(1, 1, 1e-3);
    src.emf = {std::complex<double>(100.0, 0.0)};
    src.emf_f_hz = 0.0;
    c.add_branch_bank("src", std::move(src));
    c.add_capacitor("c", n1, kGround, 1e-6);

    SimulationConfig cfg;
    const double f_expected = 1.0 / (2.0 * M_PI * std::sqrt(1e-3 * 1e-6));
    cfg.dt = 2e-8;
    cfg.t_end = 10.0 / f_expected;
    cfg.probes = {{Probe::Kind::NodeVoltage, "n1"}};
    Solver s(c, cfg);
    const auto rr = s.run();
    const auto& v = rr.waveform("n1").samples;

    // measure the ringing frequency by counting crossings of the settling level
    const double level = 100.0;
    std::vector<double> crossings;
    for (std::size_t k = 1; k < v.size(); ++k)
        if ((v[k - 1] < level) != (v[k] < level)) {
            const double frac = (level - v[k - 1]) / (v[k] - v[k - 1]);
            crossings.push_back((static_cast<double>(k - 1) + frac) * cfg.dt);
        }
    REQUIRE(crossings.size() >= 10);
    const double period =
        2.0 * (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
    CHECK(1.0 / period == doctest::Approx(f_expected).epsilon(0.005));
}

TEST_CASE("resistive divider driven by 100 V DC reads 50 V every sample") {
    Circuit c;
    const auto top = c.add_node("top");
    const auto mid = c.add_node("mid");
    c.add_branch_bank("src", dc_source(top, 100.0, 1e-6));
    c.add_resistor("r1", top, mid, 1000.0);
    c.add_resistor("r2", mid, kGround, 1000.0);
    SimulationConfig cfg;
    cfg.dt = 1e-8;
    cfg.t_end = 1e-6;
    cfg.steady_state_f_hz = 50.0; // constant EMF: the phasor init lands on the DC point
    cfg.probes = {{Probe::Kind::NodeVoltage, "mid"}};
    Solver s(c, cfg);
    const auto rr = s.run();
    CHECK(rr.waveform("mid").samples.size() == cfg.step_count() + 1);
    for (double v : rr.waveform("mid").samples) CHECK(v == doctest::Approx(50.0).epsilon(1e-6));
}

TEST_CASE("identical runs are bit-identical") {
    auto run_once = []() {
        Circuit c;
        const auto n1 = c.add_node("n1");
        const auto n2 = c.add_node("n2");
        c.add_branch_bank("src", dc_source(n1, 75.0, 2.0));
        c.add_inductor("l", n1, n2, 3e-4);
        c.add_capacitor("c", n2, kGround, 2e-7);
        c.add_resistor("r", n2, kGround, 55.0);
        SimulationConfig cfg;
        cfg.dt = 1e-8;
        cfg.t_end = 50e-6;
        cfg.probes = {{Probe::Kind::NodeVoltage, "n2"}};
        Solver s(c, cfg);
        return s.run().waveform("n2").samples;
    };
    const auto a = run_once();
    const auto b = run_once();
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        REQUIRE(a[k] == b[k]); // bit-exact
    }
}

TEST_CASE("linear-only circuits take exactly one solve per step") {
    Circuit c;
    const auto n1 = c.add_node("n1");
    c.add_branch_bank("src", dc_source(n1, 10.0, 5.0));
    c.add_capacitor("c", n1, kGround, 1e-9);
    SimulationConfig cfg;
    Solver s(c, cfg);
    s.initialize();
    s.advance();
    CHECK(s.last_newton_iterations() == 1);
}

TEST_CASE("passive network energy is non-increasing (trapezoidal passivity)") {
    // random source-free RLC ladders with initial charge
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> ur(0.5, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        Circuit c;
        const int n_sections = 4;
        std::vector<NodeId> nodes;
        for (int k = 0; k < n_sections; ++k)
            nodes.push_back(c.add_node("n" + std::to_string(k)));
        std::vector<double> caps, inds;
        for (int k = 0; k < n_sections; ++k) {
            const double cap = 1e-7 * ur(rng);
            caps.push_back(cap);
            c.add_capacitor("c" + std::to_string(k), nodes[static_cast<std::size_t>(k)],
                            kGround, cap, k == 0 ? 100.0 : 0.0);
            if (k > 0) {
                const double ind = 1e-4 * ur(rng);
                inds.push_back(ind);
                c.add_inductor("l" + std::to_string(k), nodes[static_cast<std::size_t>(k - 1)],
                               nodes[static_cast<std::size_t>(k)], ind);
            }
        }
        c.add_resistor("r", nodes.back(), kGround, 50.0 * ur(rng));

        SimulationConfig cfg;
        cfg.dt = 5e-8;
        cfg.t_end = 200e-6;
        for (int k = 0; k < n_sections; ++k)
            cfg.probes.push_back({Probe::Kind::NodeVoltage, "n" + std::to_string(k)});
        for (int k = 1; k < n_sections; ++k)
            cfg.probes.push_back({Probe::Kind::BranchCurrent, "l" + std::to_string(k)});

        Solver s(c, cfg);
        const auto rr = s.run();
        const std::size_t n = rr.waveforms.front().samples.size();
        double prev_e = -1.0;
        for (std::size_t t = 0; t < n; ++t) {
            double e = 0.0;
            for (int k = 0; k < n_sections; ++k) {
                const double v = rr.waveforms[static_cast<std::size_t>(k)].samples[t];
                e += 0.5 * caps[static_cast<std::size_t>(k)] * v * v;
            }
            for (int k = 1; k < n_sections; ++k) {
                const double i =
                    rr.waveforms[static_cast<std::size_t>(n_sections + k - 1)].samples[t];
                e += 0.5 * inds[static_cast<std::size_t>(k - 1)] * i * i;
            }
            if (prev_e >= 0.0) CHECK(e <= prev_e * (1.0 + 1e-9));
            prev_e = e;
        }
    }
}

TEST_CASE("newton converges for any thevenin drive up to 5 MV / 1 ohm") {
    const auto model = default_arrester();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uv(0.0, 5e6);
    for (int trial = 0; trial < 25; ++trial) {
        const double v_src = uv(rng);
        Circuit c;
        const auto n1 = c.add_node("n1");
        c.add_branch_bank("src", dc_source(n1, v_src, 1.0));
        c.add_arrester("arr", n1, kGround, model);
        SimulationConfig cfg;
        cfg.dt = 1e-8;
        cfg.t_end = 1e-7;
        cfg.newton_tol = 1e-6;
        cfg.newton_max_iter = 50;
        cfg.probes = {{Probe::Kind::BranchCurrent, "arr"}, {Probe::Kind::NodeVoltage, "n1"}};
        Solver s(c, cfg);
        const auto rr = s.run();
        CHECK(rr.max_newton_iterations <= 50);
        // operating point satisfies U(i) + R i = V
        const double i = rr.waveform("arr").samples.back();
        const double u = rr.waveform("n1").samples.back();
        CHECK(u + 1.0 * i == doctest::Approx(v_src).epsilon(1e-5));
        if (v_src > 1e3) CHECK(u == doctest::Approx(model.voltage(i)).epsilon(1e-5));
    }
}

TEST_CASE("probe waveform length is round(t_end/dt)+1") {
    Circuit c;
    const auto n1 = c.add_node("n1");
    c.add_resistor("r", n1, kGround, 1.0);
    c.add_current_source("i", n1, kGround, [](double) { return 1.0; });
    SimulationConfig cfg;
    cfg.dt = 1e-8;
    cfg.t_end = 2.5e-7;
    cfg.probes = {{Probe::Kind::NodeVoltage, "n1"}};
    Solver s(c, cfg);
    CHECK(s.run().waveform("n1").samples.size() == 26);
}
