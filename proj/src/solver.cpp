#include "surgesim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace surgesim {

namespace {

using Cplx = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;

double real_part(const Cplx& z, double omega, double t) {
    return std::real(z * std::exp(Cplx(0.0, omega * t)));
}

} // namespace

const Waveform& RunResult::waveform(const std::string& label) const {
    for (const auto& w : waveforms)
        if (w.label == label) return w;
    throw Error("no probe waveform labeled '" + label + "'");
}

// ---------------------------------------------------------------------------

struct Solver::Impl {
    // -- device state ---------------------------------------------------------

    struct RDev {
        int a, b;
        double g;
        std::string label;
    };
    struct SwDev {
        int a, b;
        bool closed;
        double g_on;
        std::string label;
    };
    struct CDev {
        int a, b;
        double g;       // 2C/dt
        double v_prev = 0.0, i_prev = 0.0;
        double i_now = 0.0, h_now = 0.0;
        std::string label;
    };
    struct SrcDev {
        int a, b;
        std::function<double(double)> f;
        double i_now = 0.0;
        std::string label;
    };
    struct ArrDev {
        int a, b;
        const ArresterModel* model;
        double v_op = 0.0, i_op = 0.0, g_op = 0.0;
        double g_stamped = -1.0, ieq_stamped = 0.0;
        double energy = 0.0, peak = 0.0;
        std::string label;
    };
    struct GapDevS {
        int a, b;
        GapModel state;
        std::string label;
    };
    struct BankDev {
        std::vector<std::pair<int, int>> ab;
        Eigen::MatrixXd G;    // (R + 2L/dt)^-1, or R^-1 when memoryless
        Eigen::MatrixXd Hfac; // R - 2L/dt
        bool memoryless = false;
        bool has_emf = false;
        std::vector<Cplx> emf;
        double omega0 = 0.0;
        Eigen::VectorXd i_prev, vb_prev, e_prev;
        Eigen::VectorXd e_now, h_now, i_now;
        Eigen::MatrixXd Rmat, Lmat;
        std::string label;
    };
    struct LineDev {
        const CpLineModel* model;
        std::vector<int> end1, end2;
        int nm = 0;
        int ring_len = 0;
        long step_index = 0; // time index of the most recent pushed sample
        // ring buffers: (mode, slot)
        Eigen::MatrixXd v1h, i1h, v2h, i2h;
        std::vector<int> mi;
        std::vector<double> theta;
        Eigen::VectorXd h1_now, h2_now; // modal history for the pending solve
        std::string label;
    };

    // -- members ---------------------------------------------------------------

    const Circuit& ckt;
    SimulationConfig cfg;
    int n_nodes = 0;
    double dt;
    double t_now = 0.0;
    long step_no = 0;
    bool initialized = false;
    bool topology_dirty = true;
    int last_iters = 0;
    int max_iters_seen = 0;

    std::vector<RDev> rdevs;
    std::vector<SwDev> swdevs;
    std::vector<CDev> cdevs;
    std::vector<SrcDev> srcdevs;
    std::vector<ArrDev> arrdevs;
    std::vector<GapDevS> gapdevs;
    std::vector<BankDev> bankdevs;
    std::vector<LineDev> linedevs;

    Eigen::MatrixXd G_lin;   // linear base matrix
    Eigen::MatrixXd G_work;  // base + arrester stamps
    Eigen::LDLT<Eigen::MatrixXd> ldlt_lin;
    Eigen::LDLT<Eigen::MatrixXd> ldlt_work;
    bool work_factor_valid = false;
    Eigen::VectorXd v_nodes;  // accepted node voltages at t_now
    Eigen::VectorXd rhs_base; // per-step: sources + histories (no arrester terms)
    Eigen::VectorXd rhs;
    std::vector<FlashEvent> flash_events;

    explicit Impl(const Circuit& c, SimulationConfig config) : ckt(c), cfg(std::move(config)) {
        cfg.validate();
        dt = cfg.dt;
        n_nodes = ckt.node_count();
        build_devices();
    }

    // -- setup -----------------------------------------------------------------

    void build_devices() {
        for (const auto& [label, d] : ckt.resistors())
            rdevs.push_back({d.n1, d.n2, 1.0 / d.r, label});
        for (const auto& [label, d] : ckt.switches())
            swdevs.push_back({d.n1, d.n2, d.closed, d.g_on, label});
        for (const auto& [label, d] : ckt.capacitors()) {
            CDev c{d.n1, d.n2, 2.0 * d.c / dt, d.v0, 0.0, 0.0, 0.0, label};
            cdevs.push_back(std::move(c));
        }
        for (const auto& [label, d] : ckt.current_sources())
            srcdevs.push_back({d.n1, d.n2, d.i_of_t, 0.0, label});
        for (const auto& [label, d] : ckt.arresters()) {
            ArrDev a{d.n1, d.n2, &d.model, 0, 0, 0, -1, 0, 0, 0, label};
            arrdevs.push_back(std::move(a));
        }
        for (const auto& [label, d] : ckt.gaps()) {
            GapDevS g{d.n1, d.n2, GapModel{d.params, 0.0, false, -1.0}, label};
            gapdevs.push_back(std::move(g));
        }
        for (const auto& [label, d] : ckt.inductors()) {
            BranchBankDef bd;
            bd.nodes = {{d.n1, d.n2}};
            bd.r = Eigen::MatrixXd::Zero(1, 1);
            bd.l = Eigen::MatrixXd::Constant(1, 1, d.l);
            bd.i0 = Eigen::VectorXd::Constant(1, d.i0);
            add_bank(label, bd);
        }
        for (const auto& [label, d] : ckt.banks()) add_bank(label, d);
        for (const auto& [label, d] : ckt.lines()) add_line(label, d);
    }

    void add_bank(const std::string& label, const BranchBankDef& d) {
        BankDev b;
        const auto m = static_cast<int>(d.nodes.size());
        for (auto [x, y] : d.nodes) b.ab.emplace_back(x, y);
        b.Rmat = d.r;
        b.Lmat = d.l;
        b.memoryless = d.l.isZero(0.0);
        const Eigen::MatrixXd denom = d.r + (2.0 / dt) * d.l;
        b.G = denom.inverse();
        b.Hfac = d.r - (2.0 / dt) * d.l;
        b.has_emf = !d.emf.empty();
        if (b.has_emf) b.emf = d.emf;
        b.omega0 = 2.0 * kPi * d.emf_f_hz;
        b.i_prev = d.i0.size() ? d.i0 : Eigen::VectorXd::Zero(m);
        b.vb_prev = Eigen::VectorXd::Zero(m);
        b.e_prev = Eigen::VectorXd::Zero(m);
        b.e_now = Eigen::VectorXd::Zero(m);
        b.h_now = Eigen::VectorXd::Zero(m);
        b.i_now = b.i_prev;
        b.label = label;
        bankdevs.push_back(std::move(b));
    }

    void add_line(const std::string& label, const CpLineDef& d) {
        LineDev l;
        l.model = &d.model;
        l.nm = d.model.n_modes;
        for (NodeId n : d.end1) l.end1.push_back(n);
        for (NodeId n : d.end2) l.end2.push_back(n);
        int max_mi = 0;
        for (int k = 0; k < l.nm; ++k) {
            const double ratio = d.model.tau(k) / dt;
            if (ratio < 1.0)
                throw NetlistError("line '" + label +
                                   "': travel time shorter than one step; refine dt or length");
            int mi = static_cast<int>(std::floor(ratio));
            double th = ratio - mi;
            if (mi >= 1 && th == 0.0) {
                // exact integer delay
            }
            l.mi.push_back(mi);
            l.theta.push_back(th);
            max_mi = std::max(max_mi, mi);
        }
        l.ring_len = max_mi + 3;
        l.v1h = Eigen::MatrixXd::Zero(l.nm, l.ring_len);
        l.i1h = Eigen::MatrixXd::Zero(l.nm, l.ring_len);
        l.v2h = Eigen::MatrixXd::Zero(l.nm, l.ring_len);
        l.i2h = Eigen::MatrixXd::Zero(l.nm, l.ring_len);
        l.h1_now = Eigen::VectorXd::Zero(l.nm);
        l.h2_now = Eigen::VectorXd::Zero(l.nm);
        l.label = label;
        linedevs.push_back(std::move(l));
    }

    // -- matrix assembly ---------------------------------------------------------

    void stamp_g(Eigen::MatrixXd& m, int a, int b, double g) const {
        if (a >= 0) {
            m(a, a) += g;
            if (b >= 0) m(a, b) -= g;
        }
        if (b >= 0) {
            m(b, b) += g;
            if (a >= 0) m(b, a) -= g;
        }
    }

    void rebuild_linear() {
        G_lin.setZero(n_nodes, n_nodes);
        for (const auto& d : rdevs) stamp_g(G_lin, d.a, d.b, d.g);
        for (const auto& d : swdevs)
            if (d.closed) stamp_g(G_lin, d.a, d.b, d.g_on);
        for (const auto& d : cdevs) stamp_g(G_lin, d.a, d.b, d.g);
        for (const auto& d : gapdevs)
            if (d.state.flashed) stamp_g(G_lin, d.a, d.b, d.state.params.g_closed);
        for (const auto& b : bankdevs) {
            const auto m = static_cast<int>(b.ab.size());
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k) {
                    const double g = b.G(j, k);
                    if (g == 0.0) continue;
                    const auto [aj, bj] = b.ab[static_cast<std::size_t>(j)];
                    const auto [ak, bk] = b.ab[static_cast<std::size_t>(k)];
                    // i_j = ... G(j,k) * v_k with v_k = v(ak) - v(bk)
                    if (aj >= 0 && ak >= 0) G_lin(aj, ak) += g;
                    if (aj >= 0 && bk >= 0) G_lin(aj, bk) -= g;
                    if (bj >= 0 && ak >= 0) G_lin(bj, ak) -= g;
                    if (bj >= 0 && bk >= 0) G_lin(bj, bk) += g;
                }
        }
        for (const auto& l : linedevs) {
            for (int j = 0; j < l.nm; ++j)
                for (int k = 0; k < l.nm; ++k) {
                    const double y = l.model->Yc(j, k);
                    auto put = [&](const std::vector<int>& nodes) {
                        const int a = nodes[static_cast<std::size_t>(j)];
                        const int c = nodes[static_cast<std::size_t>(k)];
                        if (a >= 0 && c >= 0) G_lin(a, c) += y;
                    };
                    put(l.end1);
                    put(l.end2);
                }
        }

        ldlt_lin.compute(G_lin);
        check_factor(ldlt_lin, G_lin);
        topology_dirty = false;
        work_factor_valid = false;
    }

    void check_factor(const Eigen::LDLT<Eigen::MatrixXd>& f, const Eigen::MatrixXd& m) const {
        if (n_nodes == 0) throw SolverError("circuit has no non-ground nodes");
        const auto d = f.vectorD();
        const double dmax = d.cwiseAbs().maxCoeff();
        const double dmin = d.cwiseAbs().minCoeff();
        if (f.info() != Eigen::Success || !(dmin > 0.0) || dmin < 1e-15 * std::max(dmax, 1.0)) {
            // locate a suspicious node for the message
            int worst = 0;
            double best = std::numeric_limits<double>::max();
            for (int i = 0; i < n_nodes; ++i)
                if (m(i, i) < best) {
                    best = m(i, i);
                    worst = i;
                }
            throw SolverError("singular conductance matrix (floating subnetwork near node '" +
                                  ckt.node_label(worst) + "')",
                              t_now);
        }
    }

    // -- per-step right-hand side -------------------------------------------------

    void inject(Eigen::VectorXd& r, int a, int b, double i) const {
        if (a >= 0) r(a) += i;
        if (b >= 0) r(b) -= i;
    }

    void build_rhs_base(double t_next) {
        rhs_base.setZero(n_nodes);
        for (auto& d : srcdevs) {
            d.i_now = d.f(t_next);
            inject(rhs_base, d.a, d.b, d.i_now);
        }
        for (auto& d : cdevs) {
            d.h_now = -d.g * d.v_prev - d.i_prev;
            inject(rhs_base, d.a, d.b, -d.h_now);
        }
        for (auto& b : bankdevs) {
            const auto m = static_cast<int>(b.ab.size());
            if (b.has_emf)
                for (int k = 0; k < m; ++k)
                    b.e_now(k) = real_part(b.emf[static_cast<std::size_t>(k)], b.omega0, t_next);
            else
                b.e_now.setZero();
            if (b.memoryless)
                b.h_now.setZero();
            else
                b.h_now = b.G * (b.vb_prev - b.e_prev - b.Hfac * b.i_prev);
            const Eigen::VectorXd inj = b.G * b.e_now - b.h_now;
            for (int k = 0; k < m; ++k)
                inject(rhs_base, b.ab[static_cast<std::size_t>(k)].first,
                       b.ab[static_cast<std::size_t>(k)].second, inj(k));
        }
        for (auto& l : linedevs) {
            line_history(l);
            const Eigen::VectorXd inj1 = l.model->Ti * l.h1_now;
            const Eigen::VectorXd inj2 = l.model->Ti * l.h2_now;
            for (int k = 0; k < l.nm; ++k) {
                inject(rhs_base, l.end1[static_cast<std::size_t>(k)], kGround, -inj1(k));
                inject(rhs_base, l.end2[static_cast<std::size_t>(k)], kGround, -inj2(k));
            }
        }
    }

    // ring access: value of series `h` at integer time index j
    static double ring_at(const Eigen::MatrixXd& h, int mode, long j, int ring_len) {
        long slot = j % ring_len;
        if (slot < 0) slot += ring_len;
        return h(mode, slot);
    }

    void line_history(LineDev& l) const {
        // history terms for the solve at time index step_no+1
        const long j_new = step_no + 1;
        for (int k = 0; k < l.nm; ++k) {
            const long j1 = j_new - l.mi[static_cast<std::size_t>(k)];
            const long j0 = j1 - 1;
            const double th = l.theta[static_cast<std::size_t>(k)];
            auto delayed = [&](const Eigen::MatrixXd& h) {
                return (1.0 - th) * ring_at(h, k, j1, l.ring_len) +
                       th * ring_at(h, k, j0, l.ring_len);
            };
            const double z = l.model->z_eff(k);
            const double hh = l.model->loss_h(k);
            const double v1 = delayed(l.v1h), i1 = delayed(l.i1h);
            const double v2 = delayed(l.v2h), i2 = delayed(l.i2h);
            l.h1_now(k) = -0.5 * (1.0 + hh) * (v2 / z + hh * i2) -
                          0.5 * (1.0 - hh) * (v1 / z + hh * i1);
            l.h2_now(k) = -0.5 * (1.0 + hh) * (v1 / z + hh * i1) -
                          0.5 * (1.0 - hh) * (v2 / z + hh * i2);
        }
    }

    // -- newton loop ----------------------------------------------------------------

    [[nodiscard]] double branch_voltage(int a, int b, const Eigen::VectorXd& v) const {
        const double va = a >= 0 ? v(a) : 0.0;
        const double vb = b >= 0 ? v(b) : 0.0;
        return va - vb;
    }

    void linearize_arrester(ArrDev& d, const Eigen::VectorXd& v) const {
        const double vb = branch_voltage(d.a, d.b, v);
        const double i = d.model->current(vb);
        auto [u, dudi] = d.model->eval(i);
        (void)u;
        d.v_op = vb;
        d.i_op = i;
        d.g_op = 1.0 / std::max(dudi, 1e-12);
        // conductance floor keeps the matrix regular when the branch is idle
        d.g_op = std::max(d.g_op, 1e-12);
    }

    void solve_step(double t_next) {
        build_rhs_base(t_next);

        if (arrdevs.empty()) {
            if (topology_dirty) rebuild_linear();
            Eigen::VectorXd v = ldlt_lin.solve(rhs_base);
            v_nodes = v;
            last_iters = 1;
            max_iters_seen = std::max(max_iters_seen, 1);
            return;
        }

        if (topology_dirty) rebuild_linear();

        Eigen::VectorXd v_trial = v_nodes;
        bool converged = false;
        int iters_done = 0;
        const int max_iter = cfg.newton_max_iter;
        for (int iter = 1; iter <= max_iter; ++iter) {
            iters_done = iter;
            bool restamp = !work_factor_valid;
            for (auto& d : arrdevs) {
                linearize_arrester(d, v_trial);
                const double ieq = d.i_op - d.g_op * d.v_op;
                if (std::abs(d.g_op - d.g_stamped) >
                        1e-9 * (std::abs(d.g_op) + std::abs(d.g_stamped)) ||
                    d.g_stamped < 0.0)
                    restamp = true;
                d.ieq_stamped = ieq;
            }
            if (restamp) {
                G_work = G_lin;
                for (auto& d : arrdevs) {
                    stamp_g(G_work, d.a, d.b, d.g_op);
                    d.g_stamped = d.g_op;
                }
                ldlt_work.compute(G_work);
                check_factor(ldlt_work, G_work);
                work_factor_valid = true;
            }
            rhs = rhs_base;
            for (auto& d : arrdevs) inject(rhs, d.a, d.b, -d.ieq_stamped);
            Eigen::VectorXd v_new = ldlt_work.solve(rhs);

            const double scale = std::max(v_new.cwiseAbs().maxCoeff(), 1.0);
            const double dv = (v_new - v_trial).cwiseAbs().maxCoeff() / scale;
            if (iter > 12) {
                // damp late iterations against limit cycling on the steep knee
                v_trial = 0.5 * (v_trial + v_new);
            } else {
                v_trial = v_new;
            }
            if (dv < cfg.newton_tol) {
                converged = true;
                break;
            }
        }

        if (!converged) {
            // bisection fallback, one arrester at a time against its Thevenin port
            bisection_fallback(t_next, v_trial);
        }

        // final consistent operating points
        for (auto& d : arrdevs) linearize_arrester(d, v_trial);
        v_nodes = v_trial;
        last_iters = iters_done;
        max_iters_seen = std::max(max_iters_seen, iters_done);
    }

    void bisection_fallback(double t_next, Eigen::VectorXd& v_trial) {
        // Gauss-Seidel over arresters: solve each branch equation
        // v_oc - R_th * i = U(i) by bisection with the others frozen.
        double worst = 0.0;
        for (int sweep = 0; sweep < 12; ++sweep) {
            worst = 0.0;
            for (auto& target : arrdevs) {
                // build matrix with every arrester except target stamped
                G_work = G_lin;
                for (auto& d : arrdevs) {
                    if (&d == &target) continue;
                    stamp_g(G_work, d.a, d.b, d.g_op);
                }
                Eigen::LDLT<Eigen::MatrixXd> f(G_work);
                check_factor(f, G_work);
                rhs = rhs_base;
                for (auto& d : arrdevs) {
                    if (&d == &target) continue;
                    inject(rhs, d.a, d.b, -(d.i_op - d.g_op * d.v_op));
                }
                const Eigen::VectorXd v_open = f.solve(rhs);
                Eigen::VectorXd unit = Eigen::VectorXd::Zero(n_nodes);
                if (target.a >= 0) unit(target.a) -= 1.0;
                if (target.b >= 0) unit(target.b) += 1.0;
                const Eigen::VectorXd v_unit = f.solve(unit);
                const double v_oc = branch_voltage(target.a, target.b, v_open);
                const double r_th = -branch_voltage(target.a, target.b, v_unit);

                // solve v_oc - r_th*i = U(i), U odd and monotone
                const double sign = v_oc >= 0.0 ? 1.0 : -1.0;
                double lo = 0.0, hi = std::abs(v_oc) / std::max(r_th, 1e-9) + 1.0;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double res =
                        std::abs(v_oc) - r_th * mid - target.model->voltage(mid);
                    if (res > 0.0)
                        lo = mid;
                    else
                        hi = mid;
                    if (hi - lo < 1e-12 * (1.0 + hi)) break;
                }
                const double i_sol = sign * 0.5 * (lo + hi);
                const double v_sol = v_oc - r_th * std::abs(i_sol) * sign;
                worst = std::max(worst, std::abs(v_sol - target.v_op) /
                                            std::max(std::abs(v_sol), 1.0));
                target.i_op = i_sol;
                target.v_op = v_sol;
                auto [u, dudi] = target.model->eval(i_sol);
                (void)u;
                target.g_op = std::max(1.0 / std::max(dudi, 1e-12), 1e-12);
                v_trial = v_open + i_sol * v_unit;
            }
            if (worst < cfg.newton_tol) break;
        }
        work_factor_valid = false;
        if (worst > 100.0 * cfg.newton_tol) {
            std::string who = arrdevs.empty() ? "?" : arrdevs.front().label;
            throw SolverError("Newton/bisection non-convergence on arrester branch '" + who +
                                  "' (residual " + std::to_string(worst) + ")",
                              t_next);
        }
    }

    // -- state update -----------------------------------------------------------

    void accept_step(double t_next) {
        if (!v_nodes.allFinite())
            throw SolverError("non-finite node voltage", t_next);

        for (auto& d : cdevs) {
            const double vb = branch_voltage(d.a, d.b, v_nodes);
            d.i_now = d.g * vb + d.h_now;
            d.v_prev = vb;
            d.i_prev = d.i_now;
        }
        for (auto& b : bankdevs) {
            const auto m = static_cast<int>(b.ab.size());
            Eigen::VectorXd vb(m);
            for (int k = 0; k < m; ++k)
                vb(k) = branch_voltage(b.ab[static_cast<std::size_t>(k)].first,
                                       b.ab[static_cast<std::size_t>(k)].second, v_nodes);
            b.i_now = b.G * (vb - b.e_now) + b.h_now;
            b.i_prev = b.i_now;
            b.vb_prev = vb;
            b.e_prev = b.e_now;
        }
        for (auto& l : linedevs) {
            const long j_new = step_no + 1;
            for (int k = 0; k < l.nm; ++k) {
                double v1m = 0.0, v2m = 0.0;
                for (int c = 0; c < l.nm; ++c) {
                    const double tv = l.model->Ti(c, k); // Ti^T row k = column k
                    const int na = l.end1[static_cast<std::size_t>(c)];
                    const int nb = l.end2[static_cast<std::size_t>(c)];
                    v1m += tv * (na >= 0 ? v_nodes(na) : 0.0);
                    v2m += tv * (nb >= 0 ? v_nodes(nb) : 0.0);
                }
                const double z = l.model->z_eff(k);
                const double i1m = v1m / z + l.h1_now(k);
                const double i2m = v2m / z + l.h2_now(k);
                const long slot = j_new % l.ring_len;
                l.v1h(k, slot) = v1m;
                l.i1h(k, slot) = i1m;
                l.v2h(k, slot) = v2m;
                l.i2h(k, slot) = i2m;
            }
            l.step_index = j_new;
        }
        for (auto& d : arrdevs) {
            const double u = branch_voltage(d.a, d.b, v_nodes);
            d.energy += u * d.i_op * dt;
            d.peak = std::max(d.peak, std::abs(d.i_op));
        }
        for (auto& d : gapdevs) {
            const bool was = d.state.flashed;
            gap_update(d.state, branch_voltage(d.a, d.b, v_nodes), dt, t_next);
            if (!was && d.state.flashed) {
                flash_events.push_back({d.label, d.state.flash_time});
                topology_dirty = true;
            }
        }

        t_now = t_next;
        ++step_no;
    }

    // -- initialization ------------------------------------------------------------

    void init_cold() {
        v_nodes.setZero(n_nodes);
        // seed node voltages from grounded capacitor ICs (best effort)
        for (auto& d : cdevs) {
            d.v_prev = ckt.capacitors().at(d.label).v0;
            d.i_prev = 0.0;
            if (d.b == kGround && d.a >= 0 && d.v_prev != 0.0) v_nodes(d.a) = d.v_prev;
            else if (d.a == kGround && d.b >= 0 && d.v_prev != 0.0) v_nodes(d.b) = -d.v_prev;
        }
    }

    void init_steady_state(double f_hz) {
        const double omega = 2.0 * kPi * f_hz;
        Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n_nodes, n_nodes);
        Eigen::VectorXcd I = Eigen::VectorXcd::Zero(n_nodes);

        auto stamp_cy = [&](int a, int b, Cplx y) {
            if (a >= 0) {
                Y(a, a) += y;
                if (b >= 0) Y(a, b) -= y;
            }
            if (b >= 0) {
                Y(b, b) += y;
                if (a >= 0) Y(b, a) -= y;
            }
        };
        auto inject_c = [&](int a, int b, Cplx i) {
            if (a >= 0) I(a) += i;
            if (b >= 0) I(b) -= i;
        };

        for (const auto& d : rdevs) stamp_cy(d.a, d.b, Cplx(d.g, 0.0));
        for (const auto& d : swdevs)
            if (d.closed) stamp_cy(d.a, d.b, Cplx(d.g_on, 0.0));
        for (const auto& d : cdevs) {
            const double c = ckt.capacitors().at(d.label).c;
            stamp_cy(d.a, d.b, Cplx(0.0, omega * c));
        }
        for (const auto& d : arrdevs) stamp_cy(d.a, d.b, Cplx(1e-9, 0.0));
        // current sources are treated as zero before the stroke

        std::vector<Eigen::MatrixXcd> bank_y;
        for (const auto& b : bankdevs) {
            const auto m = static_cast<int>(b.ab.size());
            Eigen::MatrixXcd zb = b.Rmat.cast<Cplx>() + Cplx(0.0, omega) * b.Lmat.cast<Cplx>();
            Eigen::MatrixXcd yb = zb.inverse();
            bank_y.push_back(yb);
            Eigen::VectorXcd e = Eigen::VectorXcd::Zero(m);
            if (b.has_emf)
                for (int k = 0; k < m; ++k) e(k) = b.emf[static_cast<std::size_t>(k)];
            const Eigen::VectorXcd einj = yb * e;
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < m; ++k) {
                    const auto [aj, bj] = b.ab[static_cast<std::size_t>(j)];
                    const auto [ak, bk] = b.ab[static_cast<std::size_t>(k)];
                    const Cplx y = yb(j, k);
                    if (aj >= 0 && ak >= 0) Y(aj, ak) += y;
                    if (aj >= 0 && bk >= 0) Y(aj, bk) -= y;
                    if (bj >= 0 && ak >= 0) Y(bj, ak) -= y;
                    if (bj >= 0 && bk >= 0) Y(bj, bk) += y;
                }
            for (int j = 0; j < m; ++j)
                inject_c(b.ab[static_cast<std::size_t>(j)].first,
                         b.ab[static_cast<std::size_t>(j)].second, einj(j));
        }

        // CP lines: per-mode discrete two-port admittance with the interpolated
        // delay transfer, so the time stepping starts exactly on the phasor orbit
        std::vector<std::vector<Eigen::Matrix2cd>> line_y;
        for (const auto& l : linedevs) {
            std::vector<Eigen::Matrix2cd> ymodes;
            for (int k = 0; k < l.nm; ++k) {
                const double z = l.model->z_eff(k);
                const double hh = l.model->loss_h(k);
                const double th = l.theta[static_cast<std::size_t>(k)];
                const int mi = l.mi[static_cast<std::size_t>(k)];
                const Cplx Dm = (1.0 - th) * std::exp(Cplx(0.0, -omega * mi * dt)) +
                                th * std::exp(Cplx(0.0, -omega * (mi + 1) * dt));
                Eigen::Matrix2cd M, Nv;
                M << 1.0 + Dm * hh * (1.0 - hh) * 0.5, Dm * hh * (1.0 + hh) * 0.5,
                    Dm * hh * (1.0 + hh) * 0.5, 1.0 + Dm * hh * (1.0 - hh) * 0.5;
                Nv << (1.0 - Dm * (1.0 - hh) * 0.5) / z, -Dm * (1.0 + hh) * 0.5 / z,
                    -Dm * (1.0 + hh) * 0.5 / z, (1.0 - Dm * (1.0 - hh) * 0.5) / z;
                Eigen::Matrix2cd y2 = M.inverse() * Nv;
                ymodes.push_back(y2);
            }
            line_y.push_back(ymodes);
            // phase-domain stamps: v_m = Ti^T v_ph, i_ph = Ti i_m
            const Eigen::MatrixXd& Ti = l.model->Ti;
            for (int k = 0; k < l.nm; ++k) {
                const Eigen::Matrix2cd& y2 = ymodes[static_cast<std::size_t>(k)];
                for (int c = 0; c < l.nm; ++c)
                    for (int cc = 0; cc < l.nm; ++cc) {
                        const double w = Ti(c, k) * Ti(cc, k);
                        auto addY = [&](const std::vector<int>& na, const std::vector<int>& nb,
                                        Cplx y) {
                            const int p = na[static_cast<std::size_t>(c)];
                            const int q = nb[static_cast<std::size_t>(cc)];
                            if (p >= 0 && q >= 0) Y(p, q) += w * y;
                        };
                        addY(l.end1, l.end1, y2(0, 0));
                        addY(l.end1, l.end2, y2(0, 1));
                        addY(l.end2, l.end1, y2(1, 0));
                        addY(l.end2, l.end2, y2(1, 1));
                    }
            }
        }

        Eigen::VectorXcd V = Y.fullPivLu().solve(I);
        if (!V.allFinite())
            throw SolverError("steady-state phasor solve failed (singular network)");

        // seed the time-domain state at t = 0
        v_nodes.resize(n_nodes);
        for (int i = 0; i < n_nodes; ++i) v_nodes(i) = std::real(V(i));

        auto vphasor = [&](int a, int b) {
            Cplx va = a >= 0 ? V(a) : Cplx(0, 0);
            Cplx vb = b >= 0 ? V(b) : Cplx(0, 0);
            return va - vb;
        };

        for (auto& d : cdevs) {
            const double c = ckt.capacitors().at(d.label).c;
            const Cplx vb = vphasor(d.a, d.b);
            const Cplx ib = Cplx(0.0, omega * c) * vb;
            d.v_prev = std::real(vb);
            d.i_prev = std::real(ib);
        }
        std::size_t bi = 0;
        for (auto& b : bankdevs) {
            const auto m = static_cast<int>(b.ab.size());
            Eigen::VectorXcd vb(m), e(m);
            e.setZero();
            if (b.has_emf)
                for (int k = 0; k < m; ++k) e(k) = b.emf[static_cast<std::size_t>(k)];
            for (int k = 0; k < m; ++k)
                vb(k) = vphasor(b.ab[static_cast<std::size_t>(k)].first,
                                b.ab[static_cast<std::size_t>(k)].second);
            const Eigen::VectorXcd ib = bank_y[bi++] * (vb - e);
            for (int k = 0; k < m; ++k) {
                b.vb_prev(k) = std::real(vb(k));
                b.e_prev(k) = std::real(e(k));
                b.i_prev(k) = std::real(ib(k));
            }
            b.i_now = b.i_prev;
        }
        std::size_t li = 0;
        for (auto& l : linedevs) {
            const Eigen::MatrixXd& Ti = l.model->Ti;
            for (int k = 0; k < l.nm; ++k) {
                Cplx v1m(0, 0), v2m(0, 0);
                for (int c = 0; c < l.nm; ++c) {
                    v1m += Ti(c, k) * (l.end1[static_cast<std::size_t>(c)] >= 0
                                           ? V(l.end1[static_cast<std::size_t>(c)])
                                           : Cplx(0, 0));
                    v2m += Ti(c, k) * (l.end2[static_cast<std::size_t>(c)] >= 0
                                           ? V(l.end2[static_cast<std::size_t>(c)])
                                           : Cplx(0, 0));
                }
                const Eigen::Matrix2cd& y2 = line_y[li][static_cast<std::size_t>(k)];
                const Cplx i1m = y2(0, 0) * v1m + y2(0, 1) * v2m;
                const Cplx i2m = y2(1, 0) * v1m + y2(1, 1) * v2m;
                for (int s = 0; s < l.ring_len; ++s) {
                    const long j = -s; // past indices 0, -1, -2, ...
                    const long slot = ((j % l.ring_len) + l.ring_len) % l.ring_len;
                    const double tj = static_cast<double>(j) * dt;
                    l.v1h(k, slot) = real_part(v1m, omega, tj);
                    l.i1h(k, slot) = real_part(i1m, omega, tj);
                    l.v2h(k, slot) = real_part(v2m, omega, tj);
                    l.i2h(k, slot) = real_part(i2m, omega, tj);
                }
            }
            ++li;
        }
    }
};

// ---------------------------------------------------------------------------

Solver::Solver(const Circuit& circuit, SimulationConfig cfg)
    : impl_(std::make_unique<Impl>(circuit, std::move(cfg))) {}

Solver::~Solver() = default;

void Solver::initialize() {
    auto& im = *impl_;
    im.t_now = 0.0;
    im.step_no = 0;
    im.flash_events.clear();
    if (im.cfg.steady_state_f_hz > 0.0)
        im.init_steady_state(im.cfg.steady_state_f_hz);
    else
        im.init_cold();
    im.rebuild_linear();
    im.initialized = true;
}

void Solver::advance() {
    auto& im = *impl_;
    if (!im.initialized) throw SolverError("advance() before initialize()");
    const double t_next = static_cast<double>(im.step_no + 1) * im.dt;
    im.solve_step(t_next);
    im.accept_step(t_next);
}

RunResult Solver::run() {
    auto& im = *impl_;
    initialize();

    const std::size_t n_steps = im.cfg.step_count();
    RunResult out;
    out.waveforms.reserve(im.cfg.probes.size());
    for (const auto& p : im.cfg.probes) {
        Waveform w;
        w.dt = im.dt;
        w.t0 = 0.0;
        w.label = p.target;
        w.unit = p.kind == Probe::Kind::NodeVoltage ? Unit::Volt : Unit::Ampere;
        w.samples.reserve(n_steps + 1);
        out.waveforms.push_back(std::move(w));
    }
    auto record = [&]() {
        for (std::size_t i = 0; i < im.cfg.probes.size(); ++i) {
            const auto& p = im.cfg.probes[i];
            const double v = p.kind == Probe::Kind::NodeVoltage ? node_voltage(p.target)
                                                                : branch_current(p.target);
            out.waveforms[i].samples.push_back(v);
        }
    };
    record();
    for (std::size_t s = 0; s < n_steps; ++s) {
        advance();
        record();
    }
    out.flashovers = im.flash_events;
    for (const auto& d : im.arrdevs) {
        out.arrester_energy_j[d.label] = d.energy;
        out.arrester_peak_a[d.label] = d.peak;
    }
    out.max_newton_iterations = im.max_iters_seen;
    return out;
}

double Solver::time() const { return impl_->t_now; }

double Solver::node_voltage(NodeId n) const {
    if (n == kGround) return 0.0;
    if (n < 0 || n >= impl_->n_nodes) throw SolverError("node index out of range");
    return impl_->v_nodes(n);
}

double Solver::node_voltage(const std::string& label) const {
    return node_voltage(impl_->ckt.node(label));
}

double Solver::branch_current(const std::string& label) const {
    auto& im = *impl_;
    // bank member syntax: "label#k"
    std::string base = label;
    int member = 0;
    if (auto pos = label.find('#'); pos != std::string::npos) {
        base = label.substr(0, pos);
        member = std::stoi(label.substr(pos + 1));
    }
    for (const auto& d : im.rdevs)
        if (d.label == base) return d.g * im.branch_voltage(d.a, d.b, im.v_nodes);
    for (const auto& d : im.swdevs)
        if (d.label == base)
            return d.closed ? d.g_on * im.branch_voltage(d.a, d.b, im.v_nodes) : 0.0;
    for (const auto& d : im.cdevs)
        if (d.label == base) return d.i_now;
    for (const auto& d : im.srcdevs)
        if (d.label == base) return d.i_now;
    for (const auto& d : im.arrdevs)
        if (d.label == base) return d.i_op;
    for (const auto& d : im.gapdevs)
        if (d.label == base)
            return d.state.flashed
                       ? d.state.params.g_closed * im.branch_voltage(d.a, d.b, im.v_nodes)
                       : 0.0;
    for (const auto& d : im.bankdevs)
        if (d.label == base) {
            if (member < 0 || member >= d.i_now.size())
                throw SolverError("bank member out of range in probe '" + label + "'");
            return d.i_now(member);
        }
    throw SolverError("no branch labeled '" + base + "'");
}

int Solver::last_newton_iterations() const { return impl_->last_iters; }

const std::vector<FlashEvent>& Solver::flashovers() const { return impl_->flash_events; }

const Eigen::MatrixXd& Solver::conductance_matrix() const {
    if (!impl_->initialized)
        const_cast<Impl&>(*impl_).rebuild_linear();
    return impl_->G_lin;
}

} // namespace surgesim
