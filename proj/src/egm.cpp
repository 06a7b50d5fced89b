#include "surgesim/egm.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace surgesim {

void EgmConfig::validate() const {
    if (!(a > 0.0)) throw Error("egm: striking-distance coefficient a must be positive");
    if (!(b > 0.0 && b < 1.0)) throw Error("egm: exponent b must lie in (0,1)");
    if (!(k_g > 0.5 && k_g <= 1.5)) throw Error("egm: ground factor k_g must lie in (0.5, 1.5]");
    if (!(sigma_ln > 0.0) || !(i_median_ka > 0.0)) throw Error("egm: bad current distribution");
    if (!(ng_per_km2_yr > 0.0)) throw Error("egm: ground flash density must be positive");
    if (samples < 100) throw Error("egm: need at least 100 samples");
    if (!(band_halfwidth_m > 10.0)) throw Error("egm: band too narrow");
}

double EgmConfig::r_c(double i_ka) const { return a * std::pow(i_ka, b); }

EgmGeometry egm_geometry(const ConductorGeometry& geom, EgmHeightMode mode) {
    geom.validate();
    EgmGeometry g;
    int phase = 0;
    for (const auto& c : geom.conductors) {
        EgmWire w;
        w.x = c.x;
        switch (mode) {
        case EgmHeightMode::Midspan: w.y = c.y_midspan; break;
        case EgmHeightMode::Average: w.y = c.avg_height(); break;
        case EgmHeightMode::Tower: w.y = c.y_tower; break;
        }
        w.is_phase = c.role != ConductorRole::Shield;
        w.phase = w.is_phase ? phase++ : -1;
        g.wires.push_back(w);
    }
    return g;
}

namespace {

/// height of wire w's striking-distance arc at abscissa x (NaN when outside)
double arc_height(const EgmWire& w, double rc, double x) {
    const double dx = x - w.x;
    const double s = rc * rc - dx * dx;
    if (s < 0.0) return std::nan("");
    return w.y + std::sqrt(s);
}

} // namespace

StrokeHit assign_stroke(const EgmGeometry& g, const EgmConfig& c, double x, double i_ka) {
    const double rc = c.r_c(i_ka);
    const double rg = c.r_g(i_ka);
    StrokeHit hit;
    double best = rg;
    for (std::size_t k = 0; k < g.wires.size(); ++k) {
        const double y = arc_height(g.wires[k], rc, x);
        if (std::isnan(y) || y <= best) continue;
        best = y;
        hit.kind = g.wires[k].is_phase ? Termination::Phase : Termination::Shield;
        hit.wire = static_cast<int>(k);
    }
    return hit;
}

ExposureWidths exposure_widths(const EgmGeometry& g, const EgmConfig& c, double i_ka) {
    const double rc = c.r_c(i_ka);
    const double rg = c.r_g(i_ka);
    const std::size_t n = g.wires.size();

    // candidate breakpoints of the upper envelope
    std::set<double> xs;
    for (const auto& w : g.wires) {
        xs.insert(w.x - rc);
        xs.insert(w.x + rc);
        const double dy = rg - w.y;
        if (rc * rc >= dy * dy) {
            const double d = std::sqrt(rc * rc - dy * dy);
            xs.insert(w.x - d);
            xs.insert(w.x + d);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& wi = g.wires[i];
            const auto& wj = g.wires[j];
            const double lo = std::max(wi.x - rc, wj.x - rc);
            const double hi = std::min(wi.x + rc, wj.x + rc);
            if (lo >= hi) continue;
            auto f = [&](double x) {
                const double yi = arc_height(wi, rc, x);
                const double yj = arc_height(wj, rc, x);
                return (std::isnan(yi) ? -1e30 : yi) - (std::isnan(yj) ? -1e30 : yj);
            };
            const int grid = 256;
            double prev_x = lo, prev_f = f(lo);
            for (int k = 1; k <= grid; ++k) {
                const double xk = lo + (hi - lo) * k / grid;
                const double fk = f(xk);
                if (prev_f == 0.0 || prev_f * fk < 0.0) {
                    double a1 = prev_x, b1 = xk, fa = prev_f;
                    for (int it = 0; it < 70; ++it) {
                        const double m = 0.5 * (a1 + b1);
                        const double fm = f(m);
                        if (fa * fm <= 0.0)
                            b1 = m;
                        else {
                            a1 = m;
                            fa = fm;
                        }
                    }
                    xs.insert(0.5 * (a1 + b1));
                }
                prev_x = xk;
                prev_f = fk;
            }
        }

    ExposureWidths out;
    out.per_wire.assign(n, 0.0);
    std::vector<double> pts(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double xm = 0.5 * (pts[k] + pts[k + 1]);
        const double width = pts[k + 1] - pts[k];
        if (width <= 0.0) continue;
        const StrokeHit hit = assign_stroke(g, c, xm, i_ka);
        if (hit.wire < 0) continue;
        out.per_wire[static_cast<std::size_t>(hit.wire)] += width;
        if (hit.kind == Termination::Phase)
            out.phase += width;
        else
            out.shield += width;
    }
    out.total = out.phase + out.shield;
    return out;
}

double max_shielding_failure_current(const EgmGeometry& g, const EgmConfig& c) {
    c.validate();
    const double tiny = 1e-9;
    auto exposed = [&](double i) { return exposure_widths(g, c, i).phase > tiny; };

    // locate the bracket on a log grid (exposure can grow before it shrinks)
    const double i_lo = 0.5, i_hi = 1000.0;
    double last_exposed = -1.0;
    const int grid = 80;
    for (int k = 0; k <= grid; ++k) {
        const double i = i_lo * std::pow(i_hi / i_lo, static_cast<double>(k) / grid);
        if (exposed(i)) last_exposed = i;
    }
    if (last_exposed < 0.0) return 0.0; // fully shielded at all currents
    if (exposed(i_hi)) return std::numeric_limits<double>::infinity(); // never shielded

    double lo = last_exposed;
    double hi = std::min(i_hi, lo * std::pow(i_hi / i_lo, 1.0 / grid) * 1.01);
    while (exposed(hi)) hi *= 1.05; // guard against grid aliasing
    for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (lo + hi);
        if (exposed(m))
            lo = m;
        else
            hi = m;
        if (hi - lo < 1e-9) break;
    }
    return hi; // exposure at the returned current is zero by construction
}

namespace {

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    double uniform() { // (0,1)
        const std::uint64_t x = eng();
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
};

} // namespace

EgmReport monte_carlo_incidence(const EgmGeometry& g, const EgmConfig& c,
                                FlashoverOracle& oracle) {
    c.validate();
    EgmReport rep;
    rep.config = c;
    rep.samples = c.samples;
    rep.seed = c.seed;

    Rng rng(c.seed);
    std::vector<double> collected;
    collected.reserve(c.samples / 2);
    std::size_t n_ff = 0, n_bf = 0;

    for (std::size_t s = 0; s < c.samples; ++s) {
        const double i_ka = c.i_median_ka * std::exp(c.sigma_ln * rng.normal());
        const double x = (2.0 * rng.uniform() - 1.0) * c.band_halfwidth_m;
        const StrokeHit hit = assign_stroke(g, c, x, i_ka);
        switch (hit.kind) {
        case Termination::Ground: ++rep.n_ground; break;
        case Termination::Shield:
            ++rep.n_shield;
            collected.push_back(i_ka);
            if (oracle.back_flashover(i_ka)) ++n_bf;
            break;
        case Termination::Phase:
            ++rep.n_phase;
            collected.push_back(i_ka);
            if (oracle.phase_flashover(i_ka)) ++n_ff;
            break;
        }
    }

    if (collected.empty()) throw Error("egm: no strokes collected; widen the sampling band");

    const double band_w_m = 2.0 * c.band_halfwidth_m;
    const auto nn = static_cast<double>(c.samples);
    rep.w_e_m = (static_cast<double>(collected.size()) / nn) * band_w_m;
    rep.n_l = c.ng_per_km2_yr * (rep.w_e_m / 1000.0) * 100.0;
    const double per_stroke_rate = c.ng_per_km2_yr * (band_w_m / 1000.0) * 100.0 / nn;
    rep.sfr = static_cast<double>(rep.n_phase) * per_stroke_rate;
    rep.sffr = static_cast<double>(n_ff) * per_stroke_rate;
    rep.bfr = static_cast<double>(n_bf) * per_stroke_rate;

    std::nth_element(collected.begin(), collected.begin() + collected.size() / 2,
                     collected.end());
    rep.i_m_ka = collected[collected.size() / 2];
    rep.i_max_ka = max_shielding_failure_current(g, c);
    return rep;
}

std::string EgmReport::to_json() const {
    nlohmann::json j;
    j["W_E_m"] = w_e_m;
    j["N_L_per_100km_yr"] = n_l;
    j["I_M_kA"] = i_m_ka;
    j["I_MAX_kA"] = std::isinf(i_max_ka) ? -1.0 : i_max_ka;
    j["SFR_per_100km_yr"] = sfr;
    j["SFFR_per_100km_yr"] = sffr;
    j["BFR_per_100km_yr"] = bfr;
    j["samples"] = samples;
    j["seed"] = seed;
    j["terminations"] = {{"ground", n_ground}, {"shield", n_shield}, {"phase", n_phase}};
    j["config"] = {{"a", config.a},
                   {"b", config.b},
                   {"k_g", config.k_g},
                   {"heights",
                    config.heights == EgmHeightMode::Midspan
                        ? "midspan"
                        : (config.heights == EgmHeightMode::Average ? "average" : "tower")},
                   {"I_median_kA", config.i_median_ka},
                   {"sigma_ln", config.sigma_ln},
                   {"N_g_per_km2_yr", config.ng_per_km2_yr},
                   {"band_halfwidth_m", config.band_halfwidth_m}};
    return j.dump(2);
}

std::string EgmReport::to_table() const {
    std::ostringstream ss;
    ss << "Electro-geometric analysis (" << samples << " strokes, seed " << seed << ")\n";
    ss << "  striking distance r_c = " << config.a << " * I^" << config.b
       << ", r_g = " << config.k_g << " * r_c (assumed shield geometry)\n\n";
    ss << "  Parameter                              Value      Unit\n";
    ss << "  Line attractive width        W_E  = " << w_e_m << "  m\n";
    ss << "  Strokes collected by line    N_L  = " << n_l << "  strokes/100km/yr\n";
    ss << "  Median collected current     I_M  = " << i_m_ka << "  kA\n";
    ss << "  Max shielding failure curr.  I_MAX = " << i_max_ka << "  kA\n\n";
    ss << "  SFR   SFFR   BFR   [strokes/100km/yr]\n";
    ss << "  " << sfr << "   " << sffr << "   " << bfr << "\n";
    return ss.str();
}

} // namespace surgesim
