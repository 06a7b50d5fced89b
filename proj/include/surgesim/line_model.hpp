#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "surgesim/errors.hpp"

namespace surgesim {

inline constexpr double kC0 = 2.998e8;           // m/s
inline constexpr double kMu0 = 4.0e-7 * 3.14159265358979323846;
inline constexpr double kEps0 = 8.8541878128e-12;

enum class ConductorRole { PhaseA, PhaseB, PhaseC, Shield };

struct ConductorSpec {
    double x = 0.0;              ///< horizontal position, m
    double y_tower = 0.0;        ///< height at tower, m
    double y_midspan = 0.0;      ///< height at midspan (with sag), m
    double radius = 0.0;         ///< conductor radius, m
    double r_dc_ohm_per_km = 0.0;
    ConductorRole role = ConductorRole::PhaseA;

    /// Average height over the span: y_mid + (y_tower - y_mid)/3.
    [[nodiscard]] double avg_height() const { return y_midspan + (y_tower - y_midspan) / 3.0; }
};

struct ConductorGeometry {
    std::vector<ConductorSpec> conductors;
    double ground_resistivity = 100.0; ///< ohm*m
    double span_m = 300.0;

    void validate() const;
    [[nodiscard]] int count() const { return static_cast<int>(conductors.size()); }
};

/// Per-unit-length line matrices at one frequency.
struct LineParameters {
    Eigen::MatrixXcd Z; ///< series impedance, ohm/m (complex-depth ground return)
    Eigen::MatrixXd C;  ///< shunt capacitance, F/m (inverse potential coefficients)
};

/// Series impedance and shunt capacitance matrices from tower geometry.
/// Ground return enters through the complex image depth p = sqrt(rho/(j*w*mu0)).
[[nodiscard]] LineParameters line_parameters(const ConductorGeometry& geom, double f_hz);

/// Modal transformation data from the L'C' propagation eigenproblem.
struct ModalDecomposition {
    Eigen::MatrixXd Ti;       ///< current transformation (columns unit-norm)
    Eigen::MatrixXd Tv;       ///< voltage transformation, Tv = Ti^{-T}
    Eigen::VectorXd lambda;   ///< eigenvalues of L'C', s^2/m^2
    Eigen::VectorXd velocity; ///< 1/sqrt(lambda), m/s
    Eigen::VectorXd z_mode;   ///< modal surge impedance sqrt(Lm/Cm), ohm
    Eigen::VectorXd r_mode;   ///< modal series resistance, ohm/m (diagonal part)
    double cond_Ti = 0.0;
    double cond_Tv = 0.0;

    /// || Ti_modal reconstruction - L'C' || / || L'C' ||
    [[nodiscard]] double reconstruction_error(const Eigen::MatrixXd& LC) const;
};

/// Eigen-decompose the propagation matrix L'C' with L' = Im(Z)/w.
/// Throws SolverError when the eigenproblem is defective (matrix appended to message).
[[nodiscard]] ModalDecomposition modal_decompose(const Eigen::MatrixXcd& Z, const Eigen::MatrixXd& C,
                                                 double omega);

/// Constant-parameter (Bergeron) line model: lossless modal traveling waves with
/// the total series resistance lumped R/4 at the ends and R/2 mid-line.
struct CpLineModel {
    int n_modes = 0;
    double length = 0.0;
    Eigen::MatrixXd Ti, Tv;
    Eigen::VectorXd z_mode;    ///< lossless modal surge impedance, ohm
    Eigen::VectorXd z_eff;     ///< z_mode + R_total/4 (port impedance), ohm
    Eigen::VectorXd loss_h;    ///< (z - R/4) / (z + R/4) per mode
    Eigen::VectorXd tau;       ///< travel time per mode, s
    Eigen::VectorXd velocity;  ///< m/s
    Eigen::MatrixXd Yc;        ///< phase-domain port admittance Ti*diag(1/z_eff)*Ti^T
    double cond_Ti = 0.0;
    double cond_Tv = 0.0;

    [[nodiscard]] Eigen::MatrixXd surge_impedance_matrix() const { return Yc.inverse(); }
    [[nodiscard]] double max_tau() const { return tau.maxCoeff(); }
    [[nodiscard]] double min_tau() const { return tau.minCoeff(); }
};

/// Build a CP-line model for a section of the given length.
[[nodiscard]] CpLineModel make_cp_line(const ConductorGeometry& geom, double length_m, double f_hz);

/// Single-conductor convenience used for tower propagation sections.
[[nodiscard]] CpLineModel make_scalar_line(double z_surge, double travel_time_s,
                                           double r_total_ohm = 0.0);

} // namespace surgesim
