#include "surgesim/study.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace surgesim {

namespace {
constexpr double kPi = 3.14159265358979323846;
} // namespace

std::string strike_target_name(StrikeTarget t) {
    switch (t) {
    case StrikeTarget::PhaseA: return "phaseA";
    case StrikeTarget::PhaseB: return "phaseB";
    case StrikeTarget::PhaseC: return "phaseC";
    case StrikeTarget::Shield: return "shield";
    case StrikeTarget::TowerTop: return "tower_top";
    }
    return "?";
}

StrikeTarget strike_target_from_name(const std::string& s) {
    if (s == "phaseA" || s == "phase_a" || s == "A") return StrikeTarget::PhaseA;
    if (s == "phaseB" || s == "phase_b" || s == "B") return StrikeTarget::PhaseB;
    if (s == "phaseC" || s == "phase_c" || s == "C") return StrikeTarget::PhaseC;
    if (s == "shield" || s == "shield_wire") return StrikeTarget::Shield;
    if (s == "tower_top" || s == "tower") return StrikeTarget::TowerTop;
    throw ConfigError("unknown strike target: " + s);
}

StudyParams default_study() {
    StudyParams p;
    auto phase = [](double x, double yt, double ym, ConductorRole role) {
        ConductorSpec c;
        c.x = x;
        c.y_tower = yt;
        c.y_midspan = ym;
        c.radius = 0.01708 / 2.0;
        c.r_dc_ohm_per_km = 0.1444;
        c.role = role;
        return c;
    };
    p.geometry.conductors = {
        phase(2.5, 22.7, 14.1, ConductorRole::PhaseA),
        phase(-3.0, 20.5, 11.9, ConductorRole::PhaseB),
        phase(3.5, 18.3, 9.7, ConductorRole::PhaseC),
    };
    ConductorSpec sh;
    sh.x = 0.0;
    sh.y_tower = 26.5;
    sh.y_midspan = 19.0;
    sh.radius = 0.005;
    sh.r_dc_ohm_per_km = 0.3;
    sh.role = ConductorRole::Shield;
    p.geometry.conductors.push_back(sh);
    p.geometry.ground_resistivity = 100.0;
    p.geometry.span_m = p.span_m;

    p.thevenin = thevenin_from_sc(123.0, 2000.0, 1500.0, 10.0, 50.0);
    return p;
}

void add_transformer(Circuit& c, const TransformerSpec& spec, const std::string& prefix,
                     const std::vector<NodeId>& wye_nodes, NodeId wye_neutral,
                     const std::vector<NodeId>& delta_nodes, int clock) {
    if (wye_nodes.size() != 3 || delta_nodes.size() != 3)
        throw NetlistError("transformer needs 3 wye and 3 delta nodes");
    if (spec.x_pu <= 0.0) throw NetlistError("transformer reactance must be positive");
    // delta hookup for the supported IEC clock numbers: winding k's + terminal
    // lands on delta node (k + 2*shift) % 3, its - terminal on the next node
    int shift;
    switch (clock) {
    case 1: shift = 0; break;
    case 5: shift = 1; break;
    default: throw NetlistError("unsupported transformer clock (use 1 or 5)");
    }

    const double w = 2.0 * kPi * spec.f_hz;
    const double z1 = spec.kv_hv * spec.kv_hv / spec.rated_mva;        // wye winding base
    const double z2 = 3.0 * spec.kv_lv * spec.kv_lv / spec.rated_mva;  // delta winding base
    const double xm = spec.x_mag_pu;
    const double l1 = (xm + spec.x_pu) * z1 / w;
    const double l2 = xm * z2 / w;
    const double m = xm * std::sqrt(z1 * z2) / w;

    for (int k = 0; k < 3; ++k) {
        BranchBankDef d;
        // winding pair: primary phase k, secondary into the delta ring
        const int plus = (k + 2 * shift) % 3; // node carrying the + terminal
        const int minus = (plus + 1) % 3;
        d.nodes = {{wye_nodes[static_cast<std::size_t>(k)], wye_neutral},
                   {delta_nodes[static_cast<std::size_t>(plus)],
                    delta_nodes[static_cast<std::size_t>(minus)]}};
        d.r = Eigen::MatrixXd::Zero(2, 2);
        if (spec.r_pu > 0.0) {
            d.r(0, 0) = spec.r_pu * spec.winding_split * z1;
            d.r(1, 1) = spec.r_pu * (1.0 - spec.winding_split) * z2;
        }
        d.l.resize(2, 2);
        d.l << l1, m, m, l2;
        c.add_branch_bank(prefix + "_w" + std::to_string(k), std::move(d));
    }
}

void add_thevenin_source(Circuit& c, const TheveninSpec& spec, const std::string& prefix,
                         const std::vector<NodeId>& nodes, double t_peak_s) {
    if (nodes.size() != 3) throw NetlistError("thevenin source needs 3 nodes");
    const double w = 2.0 * kPi * spec.f_hz;
    const double rs = (spec.r_0 + 2.0 * spec.r_d) / 3.0;
    const double rm = (spec.r_0 - spec.r_d) / 3.0;
    const double ls = (spec.x_0 + 2.0 * spec.x_d) / 3.0 / w;
    const double lm = (spec.x_0 - spec.x_d) / 3.0 / w;

    BranchBankDef d;
    d.nodes = {{nodes[0], kGround}, {nodes[1], kGround}, {nodes[2], kGround}};
    d.r.resize(3, 3);
    d.r << rs, rm, rm, rm, rs, rm, rm, rm, rs;
    d.l.resize(3, 3);
    d.l << ls, lm, lm, lm, ls, lm, lm, lm, ls;
    const double e_peak = spec.u_max_kv * 1e3 * std::sqrt(2.0 / 3.0);
    d.emf_f_hz = spec.f_hz;
    for (int k = 0; k < 3; ++k) {
        const double ang = -w * t_peak_s - 2.0 * kPi * k / 3.0;
        // e_k(t) = E cos(w (t - t_peak) - 120deg k)
        d.emf.push_back(std::polar(e_peak, ang));
    }
    c.add_branch_bank(prefix, std::move(d));
}

namespace {

struct Boundary {
    double pos;
    std::vector<NodeId> cond; // a, b, c, shield
    std::string tag;
};

} // namespace

Circuit build_study_circuit(const ScenarioSpec& sc, SimulationConfig& cfg) {
    const StudyParams& p = sc.study;
    if (!(sc.distance_m > 0.0) || sc.distance_m >= p.line_length())
        throw NetlistError("strike distance must lie inside the modeled line");

    Circuit c;
    const int NC = p.geometry.count(); // 4 with shield
    if (NC != 4) throw NetlistError("study geometry expects 3 phases + 1 shield wire");

    auto cond_nodes = [&](const std::string& tag) {
        std::vector<NodeId> v;
        v.push_back(c.add_node(tag + "_a"));
        v.push_back(c.add_node(tag + "_b"));
        v.push_back(c.add_node(tag + "_c"));
        v.push_back(c.add_node(tag + "_sh"));
        return v;
    };

    // line boundaries: plant gantry, towers, optional mid-span strike point
    std::vector<Boundary> bnd;
    bnd.push_back({0.0, cond_nodes("poc"), "poc"});
    const double eps = 1e-9;
    bool strike_at_tower = false;
    int strike_tower = 0;
    for (int k = 1; k <= p.n_towers; ++k) {
        const double pos = p.tower_position(k);
        if (std::abs(pos - sc.distance_m) < eps) {
            strike_at_tower = true;
            strike_tower = k;
        }
        bnd.push_back({pos, cond_nodes("t" + std::to_string(k)), "t" + std::to_string(k)});
    }
    // the terminated stub span past the last tower
    bnd.push_back({p.line_length(), cond_nodes("xend"), "xend"});
    if (!strike_at_tower) {
        Boundary b{sc.distance_m, cond_nodes("strike"), "strike"};
        auto it = std::upper_bound(bnd.begin(), bnd.end(), sc.distance_m,
                                   [](double d, const Boundary& x) { return d < x.pos; });
        bnd.insert(it, std::move(b));
    }

    // CP sections between boundaries
    for (std::size_t i = 0; i + 1 < bnd.size(); ++i) {
        const double len = bnd[i + 1].pos - bnd[i].pos;
        CpLineDef def;
        def.model = make_cp_line(p.geometry, len, p.line_param_f_hz);
        def.end1 = bnd[i].cond;
        def.end2 = bnd[i + 1].cond;
        c.add_cp_line("line_" + bnd[i].tag + "_" + bnd[i + 1].tag, std::move(def));
    }

    // towers with insulator gaps at every tower boundary
    const std::vector<double> arm_heights = {p.geometry.conductors[0].y_tower,
                                             p.geometry.conductors[1].y_tower,
                                             p.geometry.conductors[2].y_tower};
    const std::vector<double> arm_lengths = {std::abs(p.geometry.conductors[0].x),
                                             std::abs(p.geometry.conductors[1].x),
                                             std::abs(p.geometry.conductors[2].x)};
    const TowerModel tower = build_tower(p.tower_height, arm_heights, arm_lengths,
                                         p.tower_base_radius, p.footing_r,
                                         p.tower_velocity_factor);
    for (const auto& b : bnd) {
        if (b.tag.size() < 2 || b.tag[0] != 't' || !std::isdigit(b.tag[1])) continue;
        const std::string& t = b.tag;
        const NodeId top = b.cond[3]; // shield bonded to tower top
        std::vector<NodeId> arms;
        for (const char* ph : {"A", "B", "C"})
            arms.push_back(c.add_node(t + "_arm" + ph));
        NodeId upper = top;
        for (int k = 0; k < 3; ++k) {
            c.add_inductor(t + "_sec" + std::to_string(k), upper, arms[static_cast<std::size_t>(k)],
                           std::max(tower.section_inductance[static_cast<std::size_t>(k)], 1e-9));
            upper = arms[static_cast<std::size_t>(k)];
        }
        const NodeId base = c.add_node(t + "_base");
        CpLineDef bottom;
        bottom.model = make_scalar_line(tower.z_surge, tower.bottom_length / tower.wave_velocity);
        bottom.end1 = {arms[2]};
        bottom.end2 = {base};
        c.add_cp_line(t + "_body", std::move(bottom));
        c.add_resistor(t + "_foot", base, kGround, tower.footing_r);

        const char* phs[3] = {"a", "b", "c"};
        for (int k = 0; k < 3; ++k) {
            const NodeId gapn = c.add_node(t + "_gap" + phs[k]);
            c.add_inductor(t + "_arml" + phs[k], arms[static_cast<std::size_t>(k)], gapn,
                           std::max(tower.arm_inductance[static_cast<std::size_t>(k)], 1e-9));
            c.add_gap(t + "_ins" + phs[k], b.cond[static_cast<std::size_t>(k)], gapn, p.gap);
        }
    }

    // station gantry: shield bonded to station earth through the grounding rope
    c.add_inductor("rope", c.node("poc_sh"), kGround,
                   std::max(1e-6 * p.ground_rope_length_m, 1e-9));

    // far-end termination: line surge-impedance matrix in series with the
    // Thevenin equivalent (shield row lands on ground)
    {
        const auto& last = bnd.back();
        const CpLineModel lm = make_cp_line(p.geometry, p.span_m, p.line_param_f_hz);
        const Eigen::MatrixXd zc = lm.surge_impedance_matrix();
        std::vector<NodeId> mids = {c.add_node("term_a"), c.add_node("term_b"),
                                    c.add_node("term_c"), kGround};
        BranchBankDef term;
        for (int k = 0; k < 4; ++k)
            term.nodes.emplace_back(last.cond[static_cast<std::size_t>(k)],
                                    mids[static_cast<std::size_t>(k)]);
        term.r = zc;
        term.l = Eigen::MatrixXd::Zero(4, 4);
        c.add_branch_bank("term_zc", std::move(term));
        add_thevenin_source(c, p.thevenin, "grid", {mids[0], mids[1], mids[2]},
                            p.strike_time_s);
    }

    // plant: arrester at the line entrance, entrance series R-L, HV bus
    // capacitance, step-up transformer, collector PI, inverter transformer,
    // LV-side termination
    const std::vector<NodeId> poc = {c.node("poc_a"), c.node("poc_b"), c.node("poc_c")};
    const char* phs[3] = {"a", "b", "c"};
    if (sc.arrester_on)
        for (int k = 0; k < 3; ++k)
            c.add_arrester(std::string("arr_") + phs[k], poc[static_cast<std::size_t>(k)],
                           kGround, p.arrester);

    if (p.plant.station_cap_f > 0.0)
        for (int k = 0; k < 3; ++k)
            c.add_capacitor(std::string("cpoc_") + phs[k], poc[static_cast<std::size_t>(k)],
                            kGround, p.plant.station_cap_f);
    std::vector<NodeId> bus;
    for (int k = 0; k < 3; ++k) bus.push_back(c.add_node(std::string("bus_") + phs[k]));
    {
        BranchBankDef ent;
        for (int k = 0; k < 3; ++k)
            ent.nodes.emplace_back(poc[static_cast<std::size_t>(k)],
                                   bus[static_cast<std::size_t>(k)]);
        ent.r = p.plant.entrance_r_ohm * Eigen::MatrixXd::Identity(3, 3);
        ent.l = p.plant.entrance_l_h * Eigen::MatrixXd::Identity(3, 3);
        c.add_branch_bank("entrance", std::move(ent));
    }
    if (sc.arrester_on)
        for (int k = 0; k < 3; ++k)
            c.add_arrester(std::string("arrt_") + phs[k], bus[static_cast<std::size_t>(k)],
                           kGround, p.arrester);
    if (p.plant.hv_surge_cap_f > 0.0)
        for (int k = 0; k < 3; ++k) {
            NodeId low = kGround;
            if (p.plant.hv_surge_cap_r > 0.0) {
                low = c.add_node(std::string("cbus_m") + phs[k]);
                c.add_resistor(std::string("rbus_") + phs[k], low, kGround,
                               p.plant.hv_surge_cap_r);
            }
            c.add_capacitor(std::string("cbus_") + phs[k], bus[static_cast<std::size_t>(k)],
                            low, p.plant.hv_surge_cap_f);
        }

    std::vector<NodeId> mv1, mv2, lv;
    for (int k = 0; k < 3; ++k) mv1.push_back(c.add_node(std::string("mv1_") + phs[k]));
    for (int k = 0; k < 3; ++k) mv2.push_back(c.add_node(std::string("mv2_") + phs[k]));
    for (int k = 0; k < 3; ++k) lv.push_back(c.add_node(std::string("lv_") + phs[k]));

    add_transformer(c, p.plant.step_up, "tx1", bus, kGround, mv1, 5);

    // collector network PI between the transformer MV buses
    {
        BranchBankDef ser;
        for (int k = 0; k < 3; ++k)
            ser.nodes.emplace_back(mv1[static_cast<std::size_t>(k)],
                                   mv2[static_cast<std::size_t>(k)]);
        ser.r = p.plant.collector.r_ohm * Eigen::MatrixXd::Identity(3, 3);
        ser.l = p.plant.collector.l_h * Eigen::MatrixXd::Identity(3, 3);
        c.add_branch_bank("coll_rl", std::move(ser));
        for (int k = 0; k < 3; ++k) {
            c.add_capacitor(std::string("coll_c1") + phs[k], mv1[static_cast<std::size_t>(k)],
                            kGround, p.plant.collector.c_f / 2.0);
            c.add_capacitor(std::string("coll_c2") + phs[k], mv2[static_cast<std::size_t>(k)],
                            kGround, p.plant.collector.c_f / 2.0);
        }
    }

    const NodeId mv_n = c.add_node("mv_n");
    add_transformer(c, p.plant.inverter, "tx2", mv2, mv_n, lv, 5);

    // inverter-side termination: constant voltage behind a small R-L
    {
        BranchBankDef src;
        for (int k = 0; k < 3; ++k)
            src.nodes.emplace_back(lv[static_cast<std::size_t>(k)], kGround);
        src.r = p.plant.lv_source_r * Eigen::MatrixXd::Identity(3, 3);
        src.l = p.plant.lv_source_l * Eigen::MatrixXd::Identity(3, 3);
        src.emf_f_hz = p.power_f_hz;
        const double scale = p.thevenin.u_max_kv / p.plant.step_up.kv_hv;
        const double e_lv =
            scale * p.plant.inverter.kv_lv * 1e3 * std::sqrt(2.0 / 3.0);
        const double w = 2.0 * kPi * p.power_f_hz;
        for (int k = 0; k < 3; ++k) {
            // two Yd5 stages: LV lags the grid by 300 deg
            const double ang =
                -w * p.strike_time_s - 2.0 * kPi * k / 3.0 - 2.0 * (5.0 * kPi / 6.0);
            src.emf.push_back(std::polar(e_lv, ang));
        }
        c.add_branch_bank("lv_src", std::move(src));
    }

    // stroke injection
    {
        std::string node;
        switch (sc.target) {
        case StrikeTarget::PhaseA:
        case StrikeTarget::PhaseB:
        case StrikeTarget::PhaseC: {
            const char* suffix = sc.target == StrikeTarget::PhaseA   ? "_a"
                                 : sc.target == StrikeTarget::PhaseB ? "_b"
                                                                     : "_c";
            node = (strike_at_tower ? "t" + std::to_string(strike_tower) : std::string("strike")) +
                   suffix;
            break;
        }
        case StrikeTarget::Shield:
        case StrikeTarget::TowerTop: {
            if (strike_at_tower || sc.target == StrikeTarget::TowerTop) {
                int k = strike_at_tower
                            ? strike_tower
                            : std::max(1, std::min(p.n_towers,
                                                   1 + static_cast<int>(std::lround(
                                                           (sc.distance_m - p.first_span_m) /
                                                           p.span_m))));
                node = "t" + std::to_string(k) + "_sh";
            } else {
                node = "strike_sh";
            }
            break;
        }
        }
        const LightningSpec li = sc.lightning;
        const double t0 = p.strike_time_s;
        c.add_current_source("stroke", c.node(node), kGround,
                             [li, t0](double t) { return li.current(t - t0); });
        if (p.channel_r_ohm > 0.0)
            c.add_resistor("channel", c.node(node), kGround, p.channel_r_ohm);
    }

    // default probes
    cfg.steady_state_f_hz = p.power_f_hz;
    auto add_probe = [&](Probe::Kind kind, const std::string& target) {
        for (const auto& pr : cfg.probes)
            if (pr.kind == kind && pr.target == target) return;
        cfg.probes.push_back({kind, target});
    };
    for (int k = 0; k < 3; ++k) add_probe(Probe::Kind::NodeVoltage, std::string("bus_") + phs[k]);
    for (int k = 0; k < 3; ++k) add_probe(Probe::Kind::NodeVoltage, std::string("poc_") + phs[k]);
    if (sc.arrester_on)
        for (int k = 0; k < 3; ++k)
            add_probe(Probe::Kind::BranchCurrent, std::string("arr_") + phs[k]);

    return c;
}

} // namespace surgesim
