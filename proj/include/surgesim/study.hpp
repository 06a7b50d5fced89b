#pragma once

#include <string>
#include <vector>

#include "surgesim/components.hpp"
#include "surgesim/netlist.hpp"

namespace surgesim {

enum class StrikeTarget { PhaseA, PhaseB, PhaseC, Shield, TowerTop };

[[nodiscard]] std::string strike_target_name(StrikeTarget t);
[[nodiscard]] StrikeTarget strike_target_from_name(const std::string& s);

/// Everything needed to assemble the 110 kV study network.
struct StudyParams {
    ConductorGeometry geometry;   ///< 3 phases + shield (Table III style)
    double line_param_f_hz = 400e3;
    double first_span_m = 100.0;  ///< plant gantry to the first tower
    double span_m = 200.0;        ///< tower spacing beyond the first tower
    int n_towers = 12;            ///< towers at 100, 300, ..., 2300 m

    double tower_height = 26.5;
    double tower_base_radius = 3.0;
    double footing_r = 20.0;
    double tower_velocity_factor = 0.85;

    GapParams gap = default_gap();
    ArresterModel arrester = default_arrester();
    TheveninSpec thevenin;
    PlantSpec plant = default_plant();

    double ground_rope_length_m = 26.5;
    double power_f_hz = 50.0;
    double strike_time_s = 20e-6;
    double channel_r_ohm = 0.0;   ///< 0 = ideal current injection

    /// modeled length: towers plus one terminated span beyond the last tower
    [[nodiscard]] double line_length() const {
        return first_span_m + span_m * n_towers;
    }
    [[nodiscard]] double tower_position(int k) const { // k = 1..n_towers
        return first_span_m + span_m * (k - 1);
    }
};

[[nodiscard]] StudyParams default_study();

/// One lightning scenario against the study network.
struct ScenarioSpec {
    std::string name;
    LightningSpec lightning;
    StrikeTarget target = StrikeTarget::PhaseA;
    double distance_m = 100.0;
    bool arrester_on = false;
    StudyParams study = default_study();
    SimulationConfig sim;
};

/// Assemble the full study circuit for one scenario: CP-line sections split at
/// the strike point, four-section towers with insulator gaps and footing
/// resistances, the plant (transformers + collector PI), the surge-impedance
/// line termination in series with the Thevenin source, and the stroke
/// injection. Default probes (plant bus voltages, arrester currents) are
/// appended to cfg_out.
[[nodiscard]] Circuit build_study_circuit(const ScenarioSpec& scenario,
                                          SimulationConfig& cfg_out);

/// Add one Yd two-winding transformer (three single-phase units) between
/// wye-side nodes and delta-side nodes. clock must be 1 or 5.
void add_transformer(Circuit& c, const TransformerSpec& spec, const std::string& prefix,
                     const std::vector<NodeId>& wye_nodes, NodeId wye_neutral,
                     const std::vector<NodeId>& delta_nodes, int clock = 5);

/// Add the three-phase Thevenin source (coupled R-L from the sequence data with
/// EMFs phased so phase A peaks at t_peak).
void add_thevenin_source(Circuit& c, const TheveninSpec& spec, const std::string& prefix,
                         const std::vector<NodeId>& nodes, double t_peak_s);

} // namespace surgesim
