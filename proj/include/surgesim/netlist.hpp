#pragma once

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "surgesim/components.hpp"
#include "surgesim/line_model.hpp"
#include "surgesim/waveform.hpp"

namespace surgesim {

/// Node index into the circuit's node table. Ground is the distinguished
/// reference kGround and always carries 0 V.
using NodeId = int;
inline constexpr NodeId kGround = -1;

struct Probe {
    enum class Kind { NodeVoltage, BranchCurrent };
    Kind kind = Kind::NodeVoltage;
    std::string target; ///< node label or branch label
};

struct SimulationConfig {
    double dt = 10e-9;       ///< 100 MHz default, matches the analysis rate
    double t_end = 200e-6;
    double newton_tol = 1e-6;
    int newton_max_iter = 50;
    double steady_state_f_hz = 0.0; ///< > 0 enables phasor initialization
    std::vector<Probe> probes;

    void validate() const;
    [[nodiscard]] std::size_t step_count() const; ///< round(t_end/dt)
};

// -- branch definitions ------------------------------------------------------

struct ResistorDef {
    NodeId n1 = kGround, n2 = kGround;
    double r = 0.0;
};

struct CapacitorDef {
    NodeId n1 = kGround, n2 = kGround;
    double c = 0.0;
    double v0 = 0.0; ///< initial voltage (n1 relative to n2)
};

struct InductorDef {
    NodeId n1 = kGround, n2 = kGround;
    double l = 0.0;
    double i0 = 0.0;
};

struct SwitchDef {
    NodeId n1 = kGround, n2 = kGround;
    bool closed = false;
    double g_on = 1e3;
};

/// i(t) injected into n1 and drawn from n2.
struct CurrentSourceDef {
    NodeId n1 = kGround, n2 = kGround;
    std::function<double(double)> i_of_t;
};

struct ArresterDef {
    NodeId n1 = kGround, n2 = kGround;
    ArresterModel model;
};

struct GapDef {
    NodeId n1 = kGround, n2 = kGround;
    GapParams params;
};

/// Coupled R-L branch set with optional sinusoidal EMFs in series.
/// Covers mutually coupled windings, the Thevenin source and resistive
/// coupling matrices (L = 0). Branch k runs from nodes[k].first to
/// nodes[k].second; the EMF phasor is at emf_f_hz.
struct BranchBankDef {
    std::vector<std::pair<NodeId, NodeId>> nodes;
    Eigen::MatrixXd r; ///< ohm, symmetric
    Eigen::MatrixXd l; ///< H, symmetric PSD (all-zero for resistive banks)
    std::vector<std::complex<double>> emf; ///< V phasor per branch (empty = none)
    double emf_f_hz = 50.0;
    Eigen::VectorXd i0; ///< optional initial branch currents
};

/// One multiconductor CP line section; end1/end2 list the conductor nodes.
struct CpLineDef {
    CpLineModel model;
    std::vector<NodeId> end1, end2;
};

// -- circuit -----------------------------------------------------------------

/// Validated netlist: node table plus typed branch lists. Construction-time
/// checks reject dangling references, non-positive element values and
/// duplicate labels, so no partially valid circuit escapes.
class Circuit {
public:
    /// Create (or fetch) a named node. "0", "gnd" and "ground" map to ground.
    NodeId add_node(const std::string& label);
    /// Look up an existing node; throws NetlistError for unknown labels.
    [[nodiscard]] NodeId node(const std::string& label) const;
    [[nodiscard]] bool has_node(const std::string& label) const;
    [[nodiscard]] const std::string& node_label(NodeId id) const;
    [[nodiscard]] int node_count() const { return static_cast<int>(node_labels_.size()); }

    void add_resistor(const std::string& label, NodeId n1, NodeId n2, double r);
    void add_capacitor(const std::string& label, NodeId n1, NodeId n2, double c, double v0 = 0.0);
    void add_inductor(const std::string& label, NodeId n1, NodeId n2, double l, double i0 = 0.0);
    void add_switch(const std::string& label, NodeId n1, NodeId n2, bool closed,
                    double g_on = 1e3);
    void add_current_source(const std::string& label, NodeId n1, NodeId n2,
                            std::function<double(double)> i_of_t);
    void add_arrester(const std::string& label, NodeId n1, NodeId n2, ArresterModel model);
    void add_gap(const std::string& label, NodeId n1, NodeId n2, GapParams params);
    void add_branch_bank(const std::string& label, BranchBankDef def);
    void add_cp_line(const std::string& label, CpLineDef def);

    /// Total branch count (bank members and line conductors counted singly).
    [[nodiscard]] int branch_count() const;

    [[nodiscard]] bool has_branch(const std::string& label) const {
        return labels_.count(label) != 0;
    }

    // typed access for the solver and tests
    [[nodiscard]] const std::map<std::string, ResistorDef>& resistors() const { return resistors_; }
    [[nodiscard]] const std::map<std::string, CapacitorDef>& capacitors() const { return capacitors_; }
    [[nodiscard]] const std::map<std::string, InductorDef>& inductors() const { return inductors_; }
    [[nodiscard]] const std::map<std::string, SwitchDef>& switches() const { return switches_; }
    [[nodiscard]] const std::map<std::string, CurrentSourceDef>& current_sources() const {
        return current_sources_;
    }
    [[nodiscard]] const std::map<std::string, ArresterDef>& arresters() const { return arresters_; }
    [[nodiscard]] const std::map<std::string, GapDef>& gaps() const { return gaps_; }
    [[nodiscard]] const std::map<std::string, BranchBankDef>& banks() const { return banks_; }
    [[nodiscard]] const std::map<std::string, CpLineDef>& lines() const { return lines_; }

private:
    void claim_label(const std::string& label);
    void check_node(NodeId n, const std::string& label) const;

    std::vector<std::string> node_labels_;
    std::map<std::string, NodeId> node_map_;
    std::map<std::string, int> labels_; // all branch labels, for duplicate detection

    std::map<std::string, ResistorDef> resistors_;
    std::map<std::string, CapacitorDef> capacitors_;
    std::map<std::string, InductorDef> inductors_;
    std::map<std::string, SwitchDef> switches_;
    std::map<std::string, CurrentSourceDef> current_sources_;
    std::map<std::string, ArresterDef> arresters_;
    std::map<std::string, GapDef> gaps_;
    std::map<std::string, BranchBankDef> banks_;
    std::map<std::string, CpLineDef> lines_;
};

} // namespace surgesim
