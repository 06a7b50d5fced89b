#include "surgesim/line_model.hpp"

#include <cmath>
#include <sstream>

namespace surgesim {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::string dump_matrix(const Eigen::MatrixXd& m) {
    std::ostringstream ss;
    ss << m;
    return ss.str();
}
} // namespace

void ConductorGeometry::validate() const {
    if (conductors.empty()) throw NetlistError("line geometry has no conductors");
    if (ground_resistivity <= 0.0) throw NetlistError("ground resistivity must be positive");
    for (const auto& c : conductors) {
        if (c.radius <= 0.0) throw NetlistError("conductor radius must be positive");
        if (c.y_midspan <= 0.0 || c.y_tower <= 0.0)
            throw NetlistError("conductor below ground");
        if (c.y_midspan > c.y_tower)
            throw NetlistError("midspan height exceeds tower height");
    }
    for (std::size_t i = 0; i < conductors.size(); ++i)
        for (std::size_t j = i + 1; j < conductors.size(); ++j) {
            const double dx = conductors[i].x - conductors[j].x;
            const double dy = conductors[i].avg_height() - conductors[j].avg_height();
            if (std::hypot(dx, dy) < conductors[i].radius + conductors[j].radius)
                throw NetlistError("coincident conductors in line geometry");
        }
}

LineParameters line_parameters(const ConductorGeometry& geom, double f_hz) {
    geom.validate();
    if (f_hz <= 0.0) throw NetlistError("line parameter frequency must be positive");

    const int n = geom.count();
    const double omega = 2.0 * kPi * f_hz;
    const std::complex<double> jw(0.0, omega);
    const std::complex<double> p = std::sqrt(geom.ground_resistivity / (jw * kMu0));

    Eigen::MatrixXcd Z(n, n);
    Eigen::MatrixXd P(n, n); // Maxwell potential coefficients
    for (int i = 0; i < n; ++i) {
        const auto& ci = geom.conductors[static_cast<std::size_t>(i)];
        const double hi = ci.avg_height();
        for (int j = 0; j <= i; ++j) {
            const auto& cj = geom.conductors[static_cast<std::size_t>(j)];
            const double hj = cj.avg_height();
            const double dx = ci.x - cj.x;
            std::complex<double> zlog;
            double plog = 0.0;
            if (i == j) {
                zlog = std::log(2.0 * (hi + p) / ci.radius);
                plog = std::log(2.0 * hi / ci.radius);
            } else {
                const std::complex<double> himg = hi + hj + 2.0 * p;
                const double d_direct = std::hypot(dx, hi - hj);
                zlog = 0.5 * std::log((himg * himg + dx * dx) / (d_direct * d_direct));
                plog = std::log(std::hypot(dx, hi + hj) / d_direct);
            }
            std::complex<double> zij = jw * kMu0 / (2.0 * kPi) * zlog;
            if (i == j) zij += ci.r_dc_ohm_per_km * 1e-3; // internal resistance, ohm/m
            Z(i, j) = zij;
            Z(j, i) = zij;
            P(i, j) = plog / (2.0 * kPi * kEps0);
            P(j, i) = P(i, j);
        }
    }

    LineParameters out;
    out.Z = Z;
    out.C = P.inverse();
    // symmetrize against inversion round-off
    out.C = 0.5 * (out.C + out.C.transpose().eval());
    return out;
}

double ModalDecomposition::reconstruction_error(const Eigen::MatrixXd& LC) const {
    // L'C' = Tv * diag(lambda) * Tv^{-1}, and Tv^{-1} = Ti^T
    const Eigen::MatrixXd rebuilt = Tv * lambda.asDiagonal() * Ti.transpose();
    return (rebuilt - LC).norm() / LC.norm();
}

ModalDecomposition modal_decompose(const Eigen::MatrixXcd& Z, const Eigen::MatrixXd& C,
                                   double omega) {
    const int n = static_cast<int>(Z.rows());
    const Eigen::MatrixXd L = Z.imag() / omega;
    const Eigen::MatrixXd R = Z.real();

    // C is SPD: factor C = S S^T, then S^T L S is symmetric and shares the
    // L*C eigenvalues. Gives real orthonormal modal vectors by construction.
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success)
        throw SolverError("capacitance matrix not positive definite:\n" + dump_matrix(C));
    const Eigen::MatrixXd S = llt.matrixL();
    const Eigen::MatrixXd M = S.transpose() * L * S;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (M + M.transpose()));
    if (eig.info() != Eigen::Success)
        throw SolverError("defective propagation eigenproblem:\n" + dump_matrix(M));

    ModalDecomposition md;
    md.lambda = eig.eigenvalues();
    for (int k = 0; k < n; ++k)
        if (!(md.lambda(k) > 0.0) || !std::isfinite(md.lambda(k)))
            throw SolverError("non-positive propagation eigenvalue:\n" + dump_matrix(M));

    // Ti = S*Q scaled to unit-norm columns; Tv = Ti^{-T}. This diagonalizes both
    // L and C; the scalar case reduces to Ti = 1 and the physical sqrt(L/C).
    Eigen::MatrixXd Ti = S * eig.eigenvectors();
    for (int k = 0; k < n; ++k) {
        Ti.col(k) /= Ti.col(k).norm();
        // deterministic sign: largest-|.| entry positive
        int imax = 0;
        Ti.col(k).cwiseAbs().maxCoeff(&imax);
        if (Ti(imax, k) < 0.0) Ti.col(k) = -Ti.col(k);
    }
    md.Ti = Ti;
    md.Tv = Ti.inverse().transpose();

    // modal matrices: Lm = Tv^{-1} L Ti = Ti^T L Ti, Cm = Ti^{-1} C Tv = Tv^T C Tv
    const Eigen::MatrixXd Lm = md.Ti.transpose() * L * md.Ti;
    const Eigen::MatrixXd Cm = md.Tv.transpose() * C * md.Tv;
    md.velocity.resize(n);
    md.z_mode.resize(n);
    md.r_mode.resize(n);
    const Eigen::MatrixXd Rm = md.Ti.transpose() * R * md.Ti;
    for (int k = 0; k < n; ++k) {
        md.velocity(k) = 1.0 / std::sqrt(md.lambda(k));
        md.z_mode(k) = std::sqrt(Lm(k, k) / Cm(k, k));
        md.r_mode(k) = std::max(Rm(k, k), 0.0);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd_i(md.Ti);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_v(md.Tv);
    md.cond_Ti = svd_i.singularValues()(0) / svd_i.singularValues()(n - 1);
    md.cond_Tv = svd_v.singularValues()(0) / svd_v.singularValues()(n - 1);
    return md;
}

CpLineModel make_cp_line(const ConductorGeometry& geom, double length_m, double f_hz) {
    if (length_m <= 0.0) throw NetlistError("line length must be positive");
    const auto lp = line_parameters(geom, f_hz);
    const double omega = 2.0 * kPi * f_hz;
    auto md = modal_decompose(lp.Z, lp.C, omega);

    CpLineModel m;
    m.n_modes = geom.count();
    m.length = length_m;
    m.Ti = md.Ti;
    m.Tv = md.Tv;
    m.z_mode = md.z_mode;
    m.velocity = md.velocity;
    m.cond_Ti = md.cond_Ti;
    m.cond_Tv = md.cond_Tv;

    m.tau.resize(m.n_modes);
    m.z_eff.resize(m.n_modes);
    m.loss_h.resize(m.n_modes);
    for (int k = 0; k < m.n_modes; ++k) {
        const double v = std::min(md.velocity(k), kC0);
        m.tau(k) = length_m / v;
        const double r4 = md.r_mode(k) * length_m / 4.0;
        m.z_eff(k) = md.z_mode(k) + r4;
        m.loss_h(k) = (md.z_mode(k) - r4) / (md.z_mode(k) + r4);
    }
    Eigen::VectorXd yk = m.z_eff.cwiseInverse();
    m.Yc = m.Ti * yk.asDiagonal() * m.Ti.transpose();
    return m;
}

CpLineModel make_scalar_line(double z_surge, double travel_time_s, double r_total_ohm) {
    if (z_surge <= 0.0 || travel_time_s <= 0.0)
        throw NetlistError("scalar line needs positive surge impedance and travel time");
    CpLineModel m;
    m.n_modes = 1;
    m.length = 0.0;
    m.Ti = Eigen::MatrixXd::Identity(1, 1);
    m.Tv = m.Ti;
    m.z_mode = Eigen::VectorXd::Constant(1, z_surge);
    m.velocity = Eigen::VectorXd::Constant(1, kC0);
    m.tau = Eigen::VectorXd::Constant(1, travel_time_s);
    const double r4 = r_total_ohm / 4.0;
    m.z_eff = Eigen::VectorXd::Constant(1, z_surge + r4);
    m.loss_h = Eigen::VectorXd::Constant(1, (z_surge - r4) / (z_surge + r4));
    m.Yc = Eigen::MatrixXd::Constant(1, 1, 1.0 / m.z_eff(0));
    m.cond_Ti = 1.0;
    m.cond_Tv = 1.0;
    return m;
}

} // namespace surgesim
