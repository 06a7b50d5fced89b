#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "surgesim/netlist.hpp"

namespace surgesim {

struct FlashEvent {
    std::string gap;
    double time = 0.0;
};

struct RunResult {
    std::vector<Waveform> waveforms; ///< one per probe, in probe order
    std::vector<FlashEvent> flashovers;
    std::map<std::string, double> arrester_energy_j;
    std::map<std::string, double> arrester_peak_a;
    int max_newton_iterations = 0;

    [[nodiscard]] const Waveform& waveform(const std::string& label) const;
};

/// Fixed-step trapezoidal EMT solver over one validated circuit.
/// Single-threaded; independent instances can run concurrently.
class Solver {
public:
    Solver(const Circuit& circuit, SimulationConfig cfg);
    ~Solver();
    Solver(const Solver&) = delete;
    Solver& operator=(const Solver&) = delete;

    /// Apply initial conditions. With cfg.steady_state_f_hz > 0 the network is
    /// initialized from the sinusoidal steady-state phasor solution so the run
    /// starts transient-free; otherwise histories start from the branch ICs.
    void initialize();

    /// One step of length dt. Requires initialize().
    void advance();

    /// Full run: initialize, step to t_end, collect probes.
    RunResult run();

    [[nodiscard]] double time() const;
    [[nodiscard]] double node_voltage(NodeId n) const;
    [[nodiscard]] double node_voltage(const std::string& label) const;
    [[nodiscard]] double branch_current(const std::string& label) const;
    [[nodiscard]] int last_newton_iterations() const;
    [[nodiscard]] const std::vector<FlashEvent>& flashovers() const;

    /// Linear-part nodal conductance matrix over non-ground nodes (tests).
    [[nodiscard]] const Eigen::MatrixXd& conductance_matrix() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace surgesim
