#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "surgesim/egm.hpp"
#include "surgesim/solver.hpp"
#include "surgesim/study.hpp"

namespace surgesim {

/// Parse a scenario configuration file (sections, key = value, comma arrays).
/// Unknown sections/keys are rejected; errors carry line numbers.
/// One ScenarioSpec is produced per strike distance (times two when the
/// arrester setting is "both").
[[nodiscard]] std::vector<ScenarioSpec> parse_config(const std::string& path);
[[nodiscard]] std::vector<ScenarioSpec> parse_config_text(const std::string& text);

/// EGM settings can ride in the same file ([egm] section).
[[nodiscard]] EgmConfig parse_egm_config_text(const std::string& text);

/// Built-in configurations: set1 (31 kA), set2 (10 kA), set3 (50.4 kA) over
/// 100..1500 m, plus "front"/"tail" single-distance sensitivity bases.
[[nodiscard]] std::string preset_config(const std::string& name);

struct ScenarioResult {
    std::string name;
    int set_index = 0; ///< order within the sweep
    double distance_m = 0.0;
    double stroke_ka = 0.0;
    bool arrester_on = false;
    double peak_kv_a = 0.0, peak_kv_b = 0.0, peak_kv_c = 0.0;
    double peak_kv = 0.0; ///< max over phases of |v|
    double i_ar_peak_ka = 0.0;
    double arrester_energy_kj = 0.0;
    int flashover_count = 0;
    std::vector<FlashEvent> flashovers;
    std::map<std::string, std::string> waveform_files;
    bool failed = false;
    std::string error;
};

struct SweepResult {
    std::vector<ScenarioResult> rows;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version;

    [[nodiscard]] bool all_ok() const;
};

[[nodiscard]] std::string sweep_to_json(const SweepResult& r);
[[nodiscard]] SweepResult sweep_from_json(const std::string& text);

/// Run every scenario (optionally in parallel); waveforms are written under
/// out_dir/<scenario>/ when out_dir is non-empty. Per-scenario failures are
/// recorded and the sweep continues. Results are ordered by scenario index.
[[nodiscard]] SweepResult run_sweep(const std::vector<ScenarioSpec>& specs, int jobs = 0,
                                    const std::string& out_dir = {},
                                    std::uint64_t seed = 1,
                                    const std::string& config_hash = {});

/// Run one scenario and keep the probe waveforms in memory.
[[nodiscard]] std::pair<ScenarioResult, RunResult> run_scenario(const ScenarioSpec& spec);

struct SensitivityTables {
    std::vector<std::pair<double, double>> front; ///< (t_f us, overvoltage kV)
    std::vector<std::pair<double, double>> tail;  ///< (t_r us, overvoltage kV)
};

/// Table VII/VIII style sweeps around a base scenario: overvoltage versus
/// front time {2,3,5,8} us at 75 us tail, and versus tail {75,150,300,500} us
/// at 3 us front.
[[nodiscard]] SensitivityTables sensitivity_tables(const ScenarioSpec& base, int jobs = 0);

[[nodiscard]] std::string sensitivity_to_csv(const SensitivityTables& t);

/// Flashover oracle backed by bracketing transient runs on the study network:
/// the critical flashover current is located once per stroke class by
/// bisection over full simulations, then reused as a threshold.
class TransientFlashoverOracle final : public FlashoverOracle {
public:
    explicit TransientFlashoverOracle(StudyParams params, double sim_window_s = 60e-6);
    bool phase_flashover(double i_ka) override;
    bool back_flashover(double i_ka) override;
    [[nodiscard]] double critical_phase_current_ka();
    [[nodiscard]] double critical_back_current_ka();

private:
    bool stroke_flashes(StrikeTarget target, double i_ka);
    double bisect_critical(StrikeTarget target);

    StudyParams params_;
    double window_;
    std::optional<double> i_crit_ff_, i_crit_bf_;
};

} // namespace surgesim
