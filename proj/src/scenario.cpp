#include "surgesim/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "surgesim/version.hpp"

namespace surgesim {

namespace {

// ---------------------------------------------------------------------------
// configuration text parsing
// ---------------------------------------------------------------------------

struct RawConfig {
    // section -> key -> (value, line)
    std::map<std::string, std::map<std::string, std::pair<std::string, int>>> kv;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

RawConfig tokenize(const std::string& text) {
    RawConfig rc;
    std::istringstream ss(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (auto pos = line.find('#'); pos != std::string::npos) line = line.substr(0, pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header '" + line + "'", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", line_no);
            rc.kv.try_emplace(section);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
        if (section.empty()) throw ConfigError("key outside any [section]", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("empty key or value in '" + line + "'", line_no);
        if (!rc.kv[section].emplace(key, std::make_pair(value, line_no)).second)
            throw ConfigError("duplicate key '" + section + "." + key + "'", line_no);
    }
    return rc;
}

class ConfigReader {
public:
    explicit ConfigReader(RawConfig rc) : rc_(std::move(rc)) {}

    [[nodiscard]] bool has(const std::string& sec, const std::string& key) const {
        auto s = rc_.kv.find(sec);
        return s != rc_.kv.end() && s->second.count(key) != 0;
    }

    double number(const std::string& sec, const std::string& key, double fallback,
                  double lo = -1e300, double hi = 1e300) {
        if (!has(sec, key)) return fallback;
        const auto& [val, line] = rc_.kv[sec][key];
        used_[sec].insert(key);
        double x = 0.0;
        try {
            std::size_t idx = 0;
            x = std::stod(val, &idx);
            if (idx != val.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw ConfigError("'" + sec + "." + key + "': not a number ('" + val + "')", line);
        }
        if (x < lo || x > hi)
            throw ConfigError("'" + sec + "." + key + "' = " + val + " out of range [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "]",
                              line);
        return x;
    }

    std::string text(const std::string& sec, const std::string& key, std::string fallback) {
        if (!has(sec, key)) return fallback;
        used_[sec].insert(key);
        return rc_.kv[sec][key].first;
    }

    std::vector<double> numbers(const std::string& sec, const std::string& key,
                                std::vector<double> fallback) {
        if (!has(sec, key)) return fallback;
        const auto& [val, line] = rc_.kv[sec][key];
        used_[sec].insert(key);
        std::vector<double> out;
        std::istringstream ss(val);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            try {
                out.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("'" + sec + "." + key + "': bad array element '" + item + "'",
                                  line);
            }
        }
        if (out.empty()) throw ConfigError("'" + sec + "." + key + "': empty array", line);
        return out;
    }

    std::vector<std::string> strings(const std::string& sec, const std::string& key) {
        std::vector<std::string> out;
        if (!has(sec, key)) return out;
        const auto& [val, line] = rc_.kv[sec][key];
        (void)line;
        used_[sec].insert(key);
        std::istringstream ss(val);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    /// every key must have been consumed; unknown keys are config errors
    void reject_unknown(const std::set<std::string>& known_sections) const {
        for (const auto& [sec, keys] : rc_.kv) {
            if (!known_sections.count(sec))
                throw ConfigError("unknown section [" + sec + "]");
            auto u = used_.find(sec);
            for (const auto& [key, vl] : keys) {
                if (u == used_.end() || !u->second.count(key))
                    throw ConfigError("unknown key '" + sec + "." + key + "'", vl.second);
            }
        }
    }

private:
    RawConfig rc_;
    std::map<std::string, std::set<std::string>> used_;
};

const std::set<std::string> kKnownSections = {
    "simulation", "lightning", "strike", "arrester", "gap", "tower",
    "line",       "thevenin",  "plant",  "study",    "egm"};

StudyParams study_from_reader(ConfigReader& r) {
    StudyParams p = default_study();

    p.geometry.ground_resistivity = r.number("line", "rho_ohm_m", 100.0, 1e-3, 1e6);
    p.line_param_f_hz = r.number("line", "param_freq_hz", 400e3, 1.0, 1e8);
    p.first_span_m = r.number("line", "first_span_m", 100.0, 10.0, 5000.0);
    p.span_m = r.number("line", "span_m", 200.0, 10.0, 5000.0);
    p.n_towers = static_cast<int>(r.number("line", "n_towers", 12, 1, 64));
    auto& sh = p.geometry.conductors.back();
    sh.x = r.number("line", "shield_x_m", sh.x, -50.0, 50.0);
    sh.y_tower = r.number("line", "shield_y_tower_m", sh.y_tower, 1.0, 100.0);
    sh.y_midspan = r.number("line", "shield_y_mid_m", sh.y_midspan, 1.0, 100.0);
    sh.radius = r.number("line", "shield_radius_m", sh.radius, 1e-4, 0.2);
    sh.r_dc_ohm_per_km = r.number("line", "shield_rdc_ohm_km", sh.r_dc_ohm_per_km, 0.0, 10.0);
    p.geometry.span_m = p.span_m;

    p.tower_height = r.number("tower", "height_m", p.tower_height, 5.0, 100.0);
    p.tower_base_radius = r.number("tower", "base_radius_m", p.tower_base_radius, 0.1, 20.0);
    p.footing_r = r.number("tower", "footing_ohm", p.footing_r, 0.1, 1e4);
    p.tower_velocity_factor = r.number("tower", "velocity_factor", p.tower_velocity_factor,
                                       0.1, 1.0);

    const double cfo = r.number("gap", "cfo_kv", 494.0, 10.0, 1e4);
    p.gap.v0 = r.number("gap", "v0_kv", 0.77 * cfo, 1.0, 1e4) * 1e3;
    p.gap.k = r.number("gap", "k", 3.0, 0.1, 8.0);
    // threshold integral in kV^K * us
    p.gap.d = r.number("gap", "d_kv_us", 2e6, 1e-6, 1e18) * std::pow(1e3, p.gap.k) * 1e-6;

    if (r.has("arrester", "i_ka") || r.has("arrester", "u_kv")) {
        const auto ika = r.numbers("arrester", "i_ka", {});
        const auto ukv = r.numbers("arrester", "u_kv", {});
        if (ika.size() != ukv.size() || ika.size() < 2)
            throw ConfigError("arrester table needs matching i_ka / u_kv arrays (>= 2 knots)");
        ArresterModel m;
        for (std::size_t k = 0; k < ika.size(); ++k) {
            m.i_knots.push_back(ika[k] * 1e3);
            m.u_knots.push_back(ukv[k] * 1e3);
        }
        m.validate();
        p.arrester = std::move(m);
    }

    const double u_max = r.number("thevenin", "u_max_kv", 123.0, 1.0, 2000.0);
    const double alpha = r.number("thevenin", "alpha", 10.0, 0.1, 100.0);
    if (r.has("thevenin", "i_tpsc_ka") || r.has("thevenin", "i_spsc_ka")) {
        const double i3 = r.number("thevenin", "i_tpsc_ka", 0.0, 1e-3, 1e3);
        const double i1 = r.number("thevenin", "i_spsc_ka", 0.0, 1e-3, 1e3);
        p.thevenin = thevenin_from_sc_currents(u_max, i3, i1, alpha);
    } else {
        const double s3 = r.number("thevenin", "s_tpsc_mva", 2000.0, 1.0, 1e6);
        const double s1 = r.number("thevenin", "s_spsc_mva", 1500.0, 1.0, 1e6);
        p.thevenin = thevenin_from_sc(u_max, s3, s1, alpha);
    }

    p.plant.station_cap_f = r.number("plant", "station_cap_nf", 1.0, 0.0, 1e3) * 1e-9;
    p.plant.entrance_l_h = r.number("plant", "entrance_l_uh", 80.0, 0.0, 1e4) * 1e-6;
    p.plant.entrance_r_ohm = r.number("plant", "entrance_r_ohm", 2.0, 0.0, 1e4);
    p.plant.hv_surge_cap_f = r.number("plant", "hv_surge_cap_nf", 36.0, 0.0, 1e3) * 1e-9;
    p.plant.hv_surge_cap_r = r.number("plant", "hv_surge_cap_r_ohm", 0.0, 0.0, 1e5);
    p.plant.collector.r_ohm = r.number("plant", "collector_r_ohm", 0.15, 0.0, 1e3);
    p.plant.collector.l_h = r.number("plant", "collector_l_mh", 0.525, 1e-6, 1e3) * 1e-3;
    p.plant.collector.c_f = r.number("plant", "collector_c_uf", 0.375, 1e-6, 1e3) * 1e-6;
    p.plant.step_up.x_pu = r.number("plant", "step_up_x_pu", 0.11, 1e-4, 1.0);
    p.plant.inverter.x_pu = r.number("plant", "inverter_x_pu", 0.06, 1e-4, 1.0);

    p.strike_time_s = r.number("study", "strike_time_us", 20.0, 0.0, 1e4) * 1e-6;
    p.ground_rope_length_m = r.number("study", "ground_rope_m", 26.5, 0.0, 1e3);
    p.channel_r_ohm = r.number("study", "channel_r_ohm", 0.0, 0.0, 1e6);
    return p;
}

EgmConfig egm_from_reader(ConfigReader& r) {
    EgmConfig e;
    e.a = r.number("egm", "a", e.a, 1e-3, 1e3);
    e.b = r.number("egm", "b", e.b, 0.01, 0.99);
    e.k_g = r.number("egm", "k_g", e.k_g, 0.500001, 1.5);
    const std::string h = r.text("egm", "heights", "midspan");
    if (h == "midspan")
        e.heights = EgmHeightMode::Midspan;
    else if (h == "average")
        e.heights = EgmHeightMode::Average;
    else if (h == "tower")
        e.heights = EgmHeightMode::Tower;
    else
        throw ConfigError("egm.heights must be midspan|average|tower");
    e.i_median_ka = r.number("egm", "i_median_ka", e.i_median_ka, 0.1, 1e3);
    e.sigma_ln = r.number("egm", "sigma_ln", e.sigma_ln, 0.01, 3.0);
    e.ng_per_km2_yr = r.number("egm", "ng_per_km2_yr", e.ng_per_km2_yr, 1e-3, 100.0);
    e.samples = static_cast<std::size_t>(r.number("egm", "samples", 20000, 100, 1e8));
    e.seed = static_cast<std::uint64_t>(r.number("egm", "seed", 1, 0, 1e18));
    e.band_halfwidth_m = r.number("egm", "band_halfwidth_m", e.band_halfwidth_m, 50.0, 1e4);
    e.validate();
    return e;
}

std::vector<ScenarioSpec> scenarios_from_reader(ConfigReader& r) {
    SimulationConfig sim;
    sim.dt = r.number("simulation", "dt", 10e-9, 1e-12, 1.0);
    sim.t_end = r.number("simulation", "t_end", 200e-6, sim.dt, 10.0);
    sim.newton_tol = r.number("simulation", "newton_tol", 1e-6, 1e-14, 1e-1);
    sim.newton_max_iter = static_cast<int>(r.number("simulation", "newton_max_iter", 50, 1, 1000));
    for (const auto& label : r.strings("simulation", "probes"))
        sim.probes.push_back({Probe::Kind::NodeVoltage, label});

    const double peak = r.number("lightning", "peak_ka", -1.0, 1e-3, 1e3);
    if (peak <= 0.0) throw ConfigError("no scenarios: [lightning] peak_ka is required");
    const double front = r.number("lightning", "front_us", 3.0, 0.05, 100.0);
    const double tail = r.number("lightning", "tail_us", 75.0, 0.5, 1e4);
    const std::string pol = r.text("lightning", "polarity", "positive");
    if (pol != "positive" && pol != "negative")
        throw ConfigError("lightning.polarity must be positive|negative");
    const LightningSpec lightning = fit_cigre(peak, front, tail, pol == "positive" ? +1 : -1);

    const StrikeTarget target = strike_target_from_name(r.text("strike", "target", "phaseA"));
    const auto distances = r.numbers("strike", "distances_m", {100.0});

    const std::string arr = r.text("arrester", "enabled", "off");
    std::vector<bool> arrester_states;
    if (arr == "on")
        arrester_states = {true};
    else if (arr == "off")
        arrester_states = {false};
    else if (arr == "both")
        arrester_states = {false, true};
    else
        throw ConfigError("arrester.enabled must be on|off|both");

    const StudyParams study = study_from_reader(r);
    if (r.has("egm", "a") || r.has("egm", "samples")) {
        (void)egm_from_reader(r); // consume + validate EGM keys when present
    }

    std::vector<ScenarioSpec> specs;
    for (bool arrester_on : arrester_states)
        for (double d : distances) {
            if (!(d > 0.0) || d >= study.line_length())
                throw ConfigError("strike.distances_m value " + std::to_string(d) +
                                  " outside (0, line length)");
            ScenarioSpec s;
            s.lightning = lightning;
            s.target = target;
            s.distance_m = d;
            s.arrester_on = arrester_on;
            s.study = study;
            s.sim = sim;
            std::ostringstream name;
            name << "i" << lightning.i_peak_ka << "_d" << static_cast<int>(d) << "_arr_"
                 << (arrester_on ? "on" : "off");
            s.name = name.str();
            specs.push_back(std::move(s));
        }
    if (specs.empty()) throw ConfigError("no scenarios");
    r.reject_unknown(kKnownSections);
    return specs;
}

} // namespace

std::vector<ScenarioSpec> parse_config_text(const std::string& text) {
    ConfigReader r(tokenize(text));
    return scenarios_from_reader(r);
}

std::vector<ScenarioSpec> parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

EgmConfig parse_egm_config_text(const std::string& text) {
    ConfigReader r(tokenize(text));
    return egm_from_reader(r);
}

std::string preset_config(const std::string& name) {
    double peak = 0.0;
    std::string distances = "100, 300, 500, 700, 900, 1100, 1300, 1500";
    std::string extra;
    if (name == "set1") {
        peak = 31.0;
    } else if (name == "set2") {
        peak = 10.0;
    } else if (name == "set3") {
        peak = 50.4;
    } else if (name == "front" || name == "tail") {
        peak = 50.4;
        distances = "100";
        extra = "# sweep bases for the front/tail sensitivity tables\n";
    } else {
        throw ConfigError("unknown preset '" + name + "' (set1|set2|set3|front|tail)");
    }
    std::ostringstream ss;
    ss << "# surgesim preset " << name << "\n";
    ss << extra;
    ss << "[lightning]\n";
    ss << "peak_ka = " << peak << "\n";
    ss << "front_us = 3\n";
    ss << "tail_us = 75\n\n";
    ss << "[strike]\n";
    ss << "target = phaseA\n";
    ss << "distances_m = " << distances << "\n\n";
    ss << "[arrester]\n";
    ss << "enabled = " << ((name == "front" || name == "tail") ? "off" : "on") << "\n";
    return ss.str();
}

// ---------------------------------------------------------------------------
// sweep execution
// ---------------------------------------------------------------------------

std::pair<ScenarioResult, RunResult> run_scenario(const ScenarioSpec& spec) {
    ScenarioResult row;
    row.name = spec.name;
    row.distance_m = spec.distance_m;
    row.stroke_ka = spec.lightning.i_peak_ka;
    row.arrester_on = spec.arrester_on;

    SimulationConfig cfg = spec.sim;
    Circuit c = build_study_circuit(spec, cfg);
    Solver solver(c, cfg);
    RunResult rr = solver.run();

    auto peak_of = [&](const std::string& label) {
        return rr.waveform(label).max_abs() / 1e3;
    };
    row.peak_kv_a = peak_of("bus_a");
    row.peak_kv_b = peak_of("bus_b");
    row.peak_kv_c = peak_of("bus_c");
    row.peak_kv = std::max({row.peak_kv_a, row.peak_kv_b, row.peak_kv_c});
    if (spec.arrester_on) {
        double ipk = 0.0, e = 0.0;
        for (const auto& [label, v] : rr.arrester_peak_a) ipk = std::max(ipk, v);
        for (const auto& [label, v] : rr.arrester_energy_j) e = std::max(e, v);
        row.i_ar_peak_ka = ipk / 1e3;
        row.arrester_energy_kj = e / 1e3;
    }
    row.flashovers = rr.flashovers;
    row.flashover_count = static_cast<int>(rr.flashovers.size());
    return {std::move(row), std::move(rr)};
}

SweepResult run_sweep(const std::vector<ScenarioSpec>& specs, int jobs,
                      const std::string& out_dir, std::uint64_t seed,
                      const std::string& config_hash) {
    SweepResult out;
    out.rows.resize(specs.size());
    out.seed = seed;
    out.version = std::string(kVersion);
    out.config_hash = config_hash;

    std::vector<RunResult> runs(specs.size());
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) return;
            try {
                auto [row, rr] = run_scenario(specs[i]);
                row.set_index = static_cast<int>(i);
                out.rows[i] = std::move(row);
                runs[i] = std::move(rr);
            } catch (const std::exception& e) {
                out.rows[i].name = specs[i].name;
                out.rows[i].set_index = static_cast<int>(i);
                out.rows[i].distance_m = specs[i].distance_m;
                out.rows[i].stroke_ka = specs[i].lightning.i_peak_ka;
                out.rows[i].arrester_on = specs[i].arrester_on;
                out.rows[i].failed = true;
                out.rows[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            if (out.rows[i].failed) continue;
            const fs::path dir = fs::path(out_dir) / specs[i].name;
            fs::create_directories(dir);
            std::map<std::string, std::string> meta = {
                {"config_hash", config_hash},
                {"seed", std::to_string(seed)},
                {"version", std::string(kVersion)},
                {"scenario", specs[i].name},
            };
            for (const auto& w : runs[i].waveforms) {
                const std::string file = (dir / (w.label + ".csv")).string();
                write_waveform_csv(file, w, meta);
                out.rows[i].waveform_files[w.label] = file;
            }
        }
    }
    return out;
}

bool SweepResult::all_ok() const {
    return std::none_of(rows.begin(), rows.end(),
                        [](const ScenarioResult& r) { return r.failed; });
}

std::string sweep_to_json(const SweepResult& r) {
    nlohmann::json j;
    j["version"] = r.version;
    j["config_hash"] = r.config_hash;
    j["seed"] = r.seed;
    j["scenarios"] = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json s;
        s["name"] = row.name;
        s["index"] = row.set_index;
        s["distance_m"] = row.distance_m;
        s["stroke_ka"] = row.stroke_ka;
        s["arrester"] = row.arrester_on;
        s["peak_kv"] = {{"a", row.peak_kv_a}, {"b", row.peak_kv_b}, {"c", row.peak_kv_c},
                        {"max", row.peak_kv}};
        s["i_ar_peak_ka"] = row.i_ar_peak_ka;
        s["arrester_energy_kj"] = row.arrester_energy_kj;
        s["flashover_count"] = row.flashover_count;
        auto fl = nlohmann::json::array();
        for (const auto& f : row.flashovers) fl.push_back({{"gap", f.gap}, {"t_s", f.time}});
        s["flashovers"] = fl;
        s["waveform_files"] = row.waveform_files;
        s["failed"] = row.failed;
        s["error"] = row.error;
        j["scenarios"].push_back(std::move(s));
    }
    return j.dump(2);
}

SweepResult sweep_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    SweepResult r;
    r.version = j.at("version").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("scenarios")) {
        ScenarioResult row;
        row.name = s.at("name").get<std::string>();
        row.set_index = s.at("index").get<int>();
        row.distance_m = s.at("distance_m").get<double>();
        row.stroke_ka = s.at("stroke_ka").get<double>();
        row.arrester_on = s.at("arrester").get<bool>();
        row.peak_kv_a = s.at("peak_kv").at("a").get<double>();
        row.peak_kv_b = s.at("peak_kv").at("b").get<double>();
        row.peak_kv_c = s.at("peak_kv").at("c").get<double>();
        row.peak_kv = s.at("peak_kv").at("max").get<double>();
        row.i_ar_peak_ka = s.at("i_ar_peak_ka").get<double>();
        row.arrester_energy_kj = s.at("arrester_energy_kj").get<double>();
        row.flashover_count = s.at("flashover_count").get<int>();
        for (const auto& f : s.at("flashovers"))
            row.flashovers.push_back({f.at("gap").get<std::string>(), f.at("t_s").get<double>()});
        row.waveform_files =
            s.at("waveform_files").get<std::map<std::string, std::string>>();
        row.failed = s.at("failed").get<bool>();
        row.error = s.at("error").get<std::string>();
        r.rows.push_back(std::move(row));
    }
    return r;
}

// ---------------------------------------------------------------------------
// sensitivity tables
// ---------------------------------------------------------------------------

SensitivityTables sensitivity_tables(const ScenarioSpec& base, int jobs) {
    const std::vector<double> fronts = {2.0, 3.0, 5.0, 8.0};
    const std::vector<double> tails = {75.0, 150.0, 300.0, 500.0};

    std::vector<ScenarioSpec> specs;
    for (double tf : fronts) {
        ScenarioSpec s = base;
        s.lightning = fit_cigre(base.lightning.i_peak_ka, tf, 75.0, base.lightning.polarity);
        s.name = "front_" + std::to_string(tf);
        specs.push_back(std::move(s));
    }
    for (double tr : tails) {
        ScenarioSpec s = base;
        s.lightning = fit_cigre(base.lightning.i_peak_ka, 3.0, tr, base.lightning.polarity);
        s.name = "tail_" + std::to_string(tr);
        specs.push_back(std::move(s));
    }
    const SweepResult sw = run_sweep(specs, jobs);
    for (const auto& row : sw.rows)
        if (row.failed) throw Error("sensitivity scenario failed: " + row.error);

    SensitivityTables t;
    for (std::size_t k = 0; k < fronts.size(); ++k)
        t.front.emplace_back(fronts[k], sw.rows[k].peak_kv);
    for (std::size_t k = 0; k < tails.size(); ++k)
        t.tail.emplace_back(tails[k], sw.rows[fronts.size() + k].peak_kv);
    return t;
}

std::string sensitivity_to_csv(const SensitivityTables& t) {
    std::ostringstream ss;
    ss << "# overvoltage vs front time (tail fixed at 75 us)\n";
    ss << "front_time_us,overvoltage_kv\n";
    for (auto [tf, ov] : t.front) ss << tf << "," << ov << "\n";
    ss << "# overvoltage vs tail time (front fixed at 3 us)\n";
    ss << "tail_time_us,overvoltage_kv\n";
    for (auto [tr, ov] : t.tail) ss << tr << "," << ov << "\n";
    return ss.str();
}

// ---------------------------------------------------------------------------
// transient flashover oracle
// ---------------------------------------------------------------------------

TransientFlashoverOracle::TransientFlashoverOracle(StudyParams params, double sim_window_s)
    : params_(std::move(params)), window_(sim_window_s) {}

bool TransientFlashoverOracle::stroke_flashes(StrikeTarget target, double i_ka) {
    ScenarioSpec s;
    s.lightning = fit_cigre(i_ka, 3.0, 75.0);
    s.target = target;
    // representative strike far enough from both ends: mid-span (phase) or the
    // second tower (back-flashover)
    s.distance_m = target == StrikeTarget::TowerTop
                       ? params_.tower_position(2)
                       : params_.tower_position(2) + 0.5 * params_.span_m;
    s.arrester_on = false;
    s.study = params_;
    s.study.strike_time_s = 5e-6;
    s.sim.t_end = s.study.strike_time_s + window_;
    auto [row, rr] = run_scenario(s);
    (void)rr;
    return row.flashover_count > 0;
}

double TransientFlashoverOracle::bisect_critical(StrikeTarget target) {
    double lo = 2.0, hi = 400.0;
    if (stroke_flashes(target, lo)) return lo;
    if (!stroke_flashes(target, hi)) return std::numeric_limits<double>::infinity();
    for (int it = 0; it < 10; ++it) {
        const double mid = std::sqrt(lo * hi); // log bisection
        if (stroke_flashes(target, mid))
            hi = mid;
        else
            lo = mid;
        if (hi / lo < 1.02) break;
    }
    return 0.5 * (lo + hi);
}

double TransientFlashoverOracle::critical_phase_current_ka() {
    if (!i_crit_ff_) i_crit_ff_ = bisect_critical(StrikeTarget::PhaseA);
    return *i_crit_ff_;
}

double TransientFlashoverOracle::critical_back_current_ka() {
    if (!i_crit_bf_) i_crit_bf_ = bisect_critical(StrikeTarget::TowerTop);
    return *i_crit_bf_;
}

bool TransientFlashoverOracle::phase_flashover(double i_ka) {
    return i_ka > critical_phase_current_ka();
}

bool TransientFlashoverOracle::back_flashover(double i_ka) {
    return i_ka > critical_back_current_ka();
}

} // namespace surgesim
