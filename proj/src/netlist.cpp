#include "surgesim/netlist.hpp"

#include <cmath>

namespace surgesim {

void SimulationConfig::validate() const {
    if (dt <= 0.0) throw NetlistError("dt must be positive");
    if (t_end < dt) throw NetlistError("t_end must be at least one step");
    if (newton_tol <= 0.0) throw NetlistError("newton_tol must be positive");
    if (newton_max_iter < 1) throw NetlistError("newton_max_iter must be >= 1");
}

std::size_t SimulationConfig::step_count() const {
    return static_cast<std::size_t>(std::llround(t_end / dt));
}

NodeId Circuit::add_node(const std::string& label) {
    if (label == "0" || label == "gnd" || label == "ground") return kGround;
    auto it = node_map_.find(label);
    if (it != node_map_.end()) return it->second;
    const NodeId id = static_cast<NodeId>(node_labels_.size());
    node_map_[label] = id;
    node_labels_.push_back(label);
    return id;
}

NodeId Circuit::node(const std::string& label) const {
    if (label == "0" || label == "gnd" || label == "ground") return kGround;
    auto it = node_map_.find(label);
    if (it == node_map_.end()) throw NetlistError("dangling node reference: " + label);
    return it->second;
}

bool Circuit::has_node(const std::string& label) const {
    return label == "0" || label == "gnd" || label == "ground" ||
           node_map_.count(label) != 0;
}

const std::string& Circuit::node_label(NodeId id) const {
    static const std::string ground = "gnd";
    if (id == kGround) return ground;
    if (id < 0 || id >= node_count()) throw NetlistError("node index out of range");
    return node_labels_[static_cast<std::size_t>(id)];
}

void Circuit::claim_label(const std::string& label) {
    if (label.empty()) throw NetlistError("branch label must not be empty");
    if (!labels_.emplace(label, 1).second)
        throw NetlistError("duplicate branch label: " + label);
}

void Circuit::check_node(NodeId n, const std::string& label) const {
    if (n == kGround) return;
    if (n < 0 || n >= node_count())
        throw NetlistError("branch '" + label + "' references unknown node index " +
                           std::to_string(n));
}

void Circuit::add_resistor(const std::string& label, NodeId n1, NodeId n2, double r) {
    check_node(n1, label);
    check_node(n2, label);
    if (!(r > 0.0)) throw NetlistError("resistor '" + label + "': non-positive element value");
    claim_label(label);
    resistors_[label] = {n1, n2, r};
}

void Circuit::add_capacitor(const std::string& label, NodeId n1, NodeId n2, double c, double v0) {
    check_node(n1, label);
    check_node(n2, label);
    if (!(c > 0.0)) throw NetlistError("capacitor '" + label + "': non-positive element value");
    claim_label(label);
    capacitors_[label] = {n1, n2, c, v0};
}

void Circuit::add_inductor(const std::string& label, NodeId n1, NodeId n2, double l, double i0) {
    check_node(n1, label);
    check_node(n2, label);
    if (!(l > 0.0)) throw NetlistError("inductor '" + label + "': non-positive element value");
    claim_label(label);
    inductors_[label] = {n1, n2, l, i0};
}

void Circuit::add_switch(const std::string& label, NodeId n1, NodeId n2, bool closed,
                         double g_on) {
    check_node(n1, label);
    check_node(n2, label);
    if (!(g_on > 0.0)) throw NetlistError("switch '" + label + "': non-positive on-conductance");
    claim_label(label);
    switches_[label] = {n1, n2, closed, g_on};
}

void Circuit::add_current_source(const std::string& label, NodeId n1, NodeId n2,
                                 std::function<double(double)> i_of_t) {
    check_node(n1, label);
    check_node(n2, label);
    if (!i_of_t) throw NetlistError("current source '" + label + "' needs a source function");
    claim_label(label);
    current_sources_[label] = {n1, n2, std::move(i_of_t)};
}

void Circuit::add_arrester(const std::string& label, NodeId n1, NodeId n2, ArresterModel model) {
    check_node(n1, label);
    check_node(n2, label);
    model.validate();
    claim_label(label);
    arresters_[label] = {n1, n2, std::move(model)};
}

void Circuit::add_gap(const std::string& label, NodeId n1, NodeId n2, GapParams params) {
    check_node(n1, label);
    check_node(n2, label);
    if (!(params.v0 > 0.0) || !(params.d > 0.0) || !(params.k > 0.0))
        throw NetlistError("gap '" + label + "': non-positive element value");
    claim_label(label);
    gaps_[label] = {n1, n2, params};
}

void Circuit::add_branch_bank(const std::string& label, BranchBankDef def) {
    const auto m = static_cast<int>(def.nodes.size());
    if (m == 0) throw NetlistError("bank '" + label + "' has no branches");
    for (const auto& [a, b] : def.nodes) {
        check_node(a, label);
        check_node(b, label);
    }
    if (def.r.rows() != m || def.r.cols() != m || def.l.rows() != m || def.l.cols() != m)
        throw NetlistError("bank '" + label + "': R/L matrix size mismatch");
    if (!def.emf.empty() && static_cast<int>(def.emf.size()) != m)
        throw NetlistError("bank '" + label + "': EMF count mismatch");
    if ((def.r + def.l).isZero(0.0))
        throw NetlistError("bank '" + label + "': non-positive element value");
    if (def.i0.size() == 0) def.i0 = Eigen::VectorXd::Zero(m);
    claim_label(label);
    banks_[label] = std::move(def);
}

void Circuit::add_cp_line(const std::string& label, CpLineDef def) {
    const auto n = static_cast<int>(def.end1.size());
    if (n == 0 || n != static_cast<int>(def.end2.size()) || n != def.model.n_modes)
        throw NetlistError("line '" + label + "': conductor/node count mismatch");
    for (NodeId nd : def.end1) check_node(nd, label);
    for (NodeId nd : def.end2) check_node(nd, label);
    if (def.model.min_tau() <= 0.0)
        throw NetlistError("line '" + label + "': non-positive travel time");
    claim_label(label);
    lines_[label] = std::move(def);
}

int Circuit::branch_count() const {
    int n = static_cast<int>(resistors_.size() + capacitors_.size() + inductors_.size() +
                             switches_.size() + current_sources_.size() + arresters_.size() +
                             gaps_.size());
    for (const auto& [_, b] : banks_) n += static_cast<int>(b.nodes.size());
    for (const auto& [_, l] : lines_) n += l.model.n_modes;
    return n;
}

} // namespace surgesim
