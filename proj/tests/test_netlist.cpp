#include "doctest.h"

#include "surgesim/netlist.hpp"
#include "surgesim/scenario.hpp"

using namespace surgesim;

TEST_CASE("minimal netlist: 2 nodes, 1 resistor") {
    Circuit c;
    const auto n1 = c.add_node("n1");
    const auto n2 = c.add_node("n2");
    c.add_resistor("r1", n1, n2, 10.0);
    CHECK(c.node_count() == 2);
    CHECK(c.branch_count() == 1);
}

TEST_CASE("dangling node reference is rejected") {
    Circuit c;
    c.add_node("n1");
    CHECK_THROWS_AS((void)c.node("n9"), NetlistError);
    CHECK_THROWS_WITH_AS((void)c.node("n9"), "dangling node reference: n9", NetlistError);
}

TEST_CASE("non-positive element values are rejected") {
    Circuit c;
    const auto n1 = c.add_node("n1");
    CHECK_THROWS_AS(c.add_resistor("r", n1, kGround, 0.0), NetlistError);
    CHECK_THROWS_AS(c.add_resistor("r", n1, kGround, -5.0), NetlistError);
    CHECK_THROWS_AS(c.add_capacitor("c", n1, kGround, 0.0), NetlistError);
    CHECK_THROWS_AS(c.add_inductor("l", n1, kGround, -1e-3), NetlistError);
}

TEST_CASE("duplicate labels are rejected across branch kinds") {
    Circuit c;
    const auto n1 = c.add_node("n1");
    c.add_resistor("x", n1, kGround, 1.0);
    CHECK_THROWS_AS(c.add_capacitor("x", n1, kGround, 1e-9), NetlistError);
}

TEST_CASE("ground aliases resolve to the reference node") {
    Circuit c;
    CHECK(c.add_node("0") == kGround);
    CHECK(c.add_node("gnd") == kGround);
    CHECK(c.add_node("ground") == kGround);
    CHECK(c.node("gnd") == kGround);
}

TEST_CASE("the full study netlist assembles with > 30 branches") {
    auto specs = parse_config_text(preset_config("set3"));
    REQUIRE(!specs.empty());
    SimulationConfig cfg = specs.front().sim;
    const Circuit c = build_study_circuit(specs.front(), cfg);
    CHECK(c.node_count() > 30);
    CHECK(c.branch_count() > 30);
    CHECK(c.has_branch("stroke"));
    CHECK(c.has_node("poc_a"));
}

TEST_CASE("simulation config validation") {
    SimulationConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), NetlistError);
    cfg.dt = 1e-8;
    cfg.t_end = 0.0;
    CHECK_THROWS_AS(cfg.validate(), NetlistError);
    cfg.t_end = 200e-6;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.step_count() == 20000);
}
