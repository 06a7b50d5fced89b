#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "surgesim/line_model.hpp"

namespace surgesim {

enum class EgmHeightMode { Midspan, Average, Tower };

/// Electro-geometric model configuration. Striking distance to wires is
/// r_c = a * I^b (I in kA, r in m); to ground r_g = k_g * r_c.
struct EgmConfig {
    double a = 10.0;
    double b = 0.65;
    double k_g = 0.58;
    EgmHeightMode heights = EgmHeightMode::Midspan;
    double i_median_ka = 31.0; ///< log-normal first-stroke median
    double sigma_ln = 0.48;
    double ng_per_km2_yr = 2.524; ///< ground flash density
    std::size_t samples = 20000;
    std::uint64_t seed = 1;
    double band_halfwidth_m = 500.0;

    void validate() const;
    [[nodiscard]] double r_c(double i_ka) const;
    [[nodiscard]] double r_g(double i_ka) const { return k_g * r_c(i_ka); }
};

/// 2D cross-section used by the EGM: wires at (x, y).
struct EgmWire {
    double x = 0.0;
    double y = 0.0;
    bool is_phase = false;
    int phase = -1; ///< 0/1/2 for phases
};

struct EgmGeometry {
    std::vector<EgmWire> wires;
};

/// Project a line geometry onto the EGM cross-section at the chosen heights.
[[nodiscard]] EgmGeometry egm_geometry(const ConductorGeometry& geom, EgmHeightMode mode);

enum class Termination { Ground, Shield, Phase };

/// Termination of a vertical stroke of current i at lateral position x.
struct StrokeHit {
    Termination kind = Termination::Ground;
    int wire = -1;
};
[[nodiscard]] StrokeHit assign_stroke(const EgmGeometry& g, const EgmConfig& c, double x,
                                      double i_ka);

/// Exact per-object exposure widths at one current (upper-envelope segmentation).
struct ExposureWidths {
    std::vector<double> per_wire;
    double shield = 0.0;
    double phase = 0.0; ///< shielding-failure exposure (all phases)
    double total = 0.0; ///< collected by any wire
};
[[nodiscard]] ExposureWidths exposure_widths(const EgmGeometry& g, const EgmConfig& c,
                                             double i_ka);

/// Smallest current that closes the shielding-failure exposure of the phases.
/// Returns 0 when already shielded at every current, +inf when never shielded.
[[nodiscard]] double max_shielding_failure_current(const EgmGeometry& g, const EgmConfig& c);

/// Flashover decision oracle for the Monte Carlo rates. Implementations may
/// run transient simulations or use precomputed critical currents.
class FlashoverOracle {
public:
    virtual ~FlashoverOracle() = default;
    /// stroke to a phase conductor: does any insulator flash?
    virtual bool phase_flashover(double i_ka) = 0;
    /// stroke to shield/tower: back-flashover?
    virtual bool back_flashover(double i_ka) = 0;
};

/// Fixed-threshold oracle (flashover when I exceeds the critical current).
class ThresholdOracle final : public FlashoverOracle {
public:
    ThresholdOracle(double i_crit_ff_ka, double i_crit_bf_ka)
        : i_ff_(i_crit_ff_ka), i_bf_(i_crit_bf_ka) {}
    bool phase_flashover(double i_ka) override { return i_ka > i_ff_; }
    bool back_flashover(double i_ka) override { return i_ka > i_bf_; }

private:
    double i_ff_, i_bf_;
};

struct EgmReport {
    double w_e_m = 0.0;     ///< attractive width
    double n_l = 0.0;       ///< strokes / 100 km / yr
    double i_m_ka = 0.0;    ///< median collected current
    double i_max_ka = 0.0;  ///< maximum shielding failure current
    double sfr = 0.0, sffr = 0.0, bfr = 0.0; ///< per 100 km / yr
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::size_t n_ground = 0, n_shield = 0, n_phase = 0;
    EgmConfig config;

    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] std::string to_table() const; ///< text table in the Tables IV-V layout
};

/// Monte Carlo lightning incidence: strokes uniform over the lateral band with
/// log-normal currents, assigned by the EGM; rates scaled to 100 km of line.
/// N_L = N_g * W_E * 100 km holds by construction.
[[nodiscard]] EgmReport monte_carlo_incidence(const EgmGeometry& g, const EgmConfig& c,
                                              FlashoverOracle& oracle);

} // namespace surgesim
