// surgesim command line: scenario sweeps, EGM analysis, spectral analysis and
// built-in study presets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "surgesim/analysis.hpp"
#include "surgesim/scenario.hpp"
#include "surgesim/version.hpp"

namespace fs = std::filesystem;
using namespace surgesim;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open for writing: " + path);
    f << text;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int jobs,
            std::uint64_t seed) {
    const std::string text = slurp(config_path);
    const std::string hash = fnv1a64_hex(text);
    const auto specs = parse_config_text(text);
    std::cout << "parsed " << specs.size() << " scenario(s), config hash " << hash << "\n";

    if (!out_dir.empty()) fs::create_directories(out_dir);
    const SweepResult sweep = run_sweep(specs, jobs, out_dir, seed, hash);

    std::cout << "name                         peak_kV    I_ar_kA   E_kJ   flashovers\n";
    for (const auto& row : sweep.rows) {
        if (row.failed) {
            std::cout << row.name << "  FAILED: " << row.error << "\n";
            continue;
        }
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-28s %9.2f  %8.4f  %6.2f   %d", row.name.c_str(),
                      row.peak_kv, row.i_ar_peak_ka, row.arrester_energy_kj,
                      row.flashover_count);
        std::cout << buf << "\n";
    }

    if (!out_dir.empty()) {
        write_text((fs::path(out_dir) / "summary.json").string(), sweep_to_json(sweep));
        std::cout << "summary written to " << (fs::path(out_dir) / "summary.json").string()
                  << "\n";
    }
    if (!sweep.all_ok()) {
        nlohmann::json manifest = nlohmann::json::array();
        for (const auto& row : sweep.rows)
            if (row.failed) manifest.push_back({{"scenario", row.name}, {"error", row.error}});
        const std::string path =
            (fs::path(out_dir.empty() ? "." : out_dir) / "errors.json").string();
        write_text(path, manifest.dump(2));
        std::cerr << "some scenarios failed; manifest at " << path << "\n";
        return 1;
    }
    return 0;
}

int cmd_egm(const std::string& config_path, const std::string& out_dir, long samples,
            long seed, const std::string& oracle_kind, double i_crit_ff, double i_crit_bf,
            bool json_out) {
    StudyParams study = default_study();
    EgmConfig egm_cfg;
    std::string hash = "default";
    if (!config_path.empty()) {
        const std::string text = slurp(config_path);
        hash = fnv1a64_hex(text);
        try {
            egm_cfg = parse_egm_config_text(text);
        } catch (const ConfigError&) {
            // config without an [egm] section: keep defaults
        }
    }
    if (samples > 0) egm_cfg.samples = static_cast<std::size_t>(samples);
    if (seed >= 0) egm_cfg.seed = static_cast<std::uint64_t>(seed);

    const EgmGeometry geom = egm_geometry(study.geometry, egm_cfg.heights);

    std::unique_ptr<FlashoverOracle> oracle;
    if (oracle_kind == "transient") {
        auto t = std::make_unique<TransientFlashoverOracle>(study);
        std::cout << "bracketing critical currents with transient runs...\n";
        std::cout << "  critical phase-stroke flashover current: "
                  << t->critical_phase_current_ka() << " kA\n";
        std::cout << "  critical back-flashover current:          "
                  << t->critical_back_current_ka() << " kA\n";
        oracle = std::move(t);
    } else if (oracle_kind == "threshold") {
        oracle = std::make_unique<ThresholdOracle>(i_crit_ff, i_crit_bf);
    } else {
        throw Error("oracle must be 'transient' or 'threshold'");
    }

    const EgmReport rep = monte_carlo_incidence(geom, egm_cfg, *oracle);
    if (json_out)
        std::cout << rep.to_json() << "\n";
    else
        std::cout << rep.to_table();
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text((fs::path(out_dir) / "egm_report.json").string(), rep.to_json());
        write_text((fs::path(out_dir) / "egm_report.txt").string(), rep.to_table());
        std::cout << "report written to " << out_dir << "\n";
    }
    return 0;
}

int cmd_analyze(const std::string& wave_path, const std::string& pair_path,
                const std::string& out_dir, bool do_emd, bool hann) {
    fs::create_directories(out_dir.empty() ? "." : out_dir);
    const fs::path out = out_dir.empty() ? "." : out_dir;

    const Waveform x = read_waveform_csv(wave_path);
    const Spectrum sx = fft_magnitude(x, hann);
    const std::string stem = fs::path(wave_path).stem().string();
    write_spectrum_csv((out / (stem + "_spectrum.csv")).string(), sx);
    const std::size_t kd = sx.dominant_bin(1.0);
    std::cout << "dominant non-DC component of " << stem << ": " << sx.freq_hz[kd] / 1e3
              << " kHz\n";

    if (!pair_path.empty()) {
        const Waveform y = read_waveform_csv(pair_path);
        const Spectrum sy = fft_magnitude(y, hann);
        const std::string stem2 = fs::path(pair_path).stem().string();
        write_spectrum_csv((out / (stem2 + "_spectrum.csv")).string(), sy);
        const FilterCharacterization fc = filter_characterize(sx, sy);
        std::cout << "average power ratio X/Y: " << fc.power_ratio << "\n";
        std::cout << "3 dB bandwidth: " << fc.bandwidth_3db_hz / 1e3 << " kHz\n";
        std::ostringstream ss;
        ss << "# filter characterization (X = " << stem << ", Y = " << stem2 << ")\n";
        ss << "# power_ratio=" << fc.power_ratio << "\n";
        ss << "# bandwidth_3db_hz=" << fc.bandwidth_3db_hz << "\n";
        ss << "frequency_hz,ratio_db,ratio_db_smooth\n";
        for (std::size_t k = 0; k < fc.freq_hz.size(); ++k)
            ss << fc.freq_hz[k] << "," << fc.ratio_db[k] << "," << fc.ratio_db_smooth[k]
               << "\n";
        write_text((out / "filter_ratio.csv").string(), ss.str());
    }

    if (do_emd) {
        for (const auto& [path, stem_] : {std::pair{wave_path, stem},
                                          std::pair{pair_path, pair_path.empty()
                                                                   ? std::string{}
                                                                   : fs::path(pair_path)
                                                                         .stem()
                                                                         .string()}}) {
            if (path.empty()) continue;
            const Waveform w = read_waveform_csv(path);
            const EmdResult de = emd(w);
            const MarginalSpectrum ms = hilbert_marginal(de, w.dt);
            write_marginal_csv((out / (stem_ + "_marginal.csv")).string(), ms);
            std::cout << stem_ << ": " << de.imfs.size() << " IMFs, marginal peak at "
                      << ms.freq_hz[ms.peak_bin()] / 1e3 << " kHz\n";
        }
    }
    return 0;
}

int cmd_sensitivity(const std::string& out_dir, int jobs) {
    auto specs = parse_config_text(preset_config("front"));
    ScenarioSpec base = specs.front();
    const SensitivityTables t = sensitivity_tables(base, jobs);
    const std::string csv = sensitivity_to_csv(t);
    std::cout << csv;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text((fs::path(out_dir) / "sensitivity.csv").string(), csv);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"surgesim: lightning-surge study toolkit for a solar plant on a 110 kV line"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    // run
    auto* run = app.add_subcommand("run", "run the scenarios of a config file");
    std::string run_config, run_out;
    int run_jobs = 0;
    std::uint64_t run_seed = 1;
    run->add_option("config", run_config, "scenario config file")->required();
    run->add_option("--out", run_out, "output directory (waveforms + summary.json)");
    run->add_option("--jobs", run_jobs, "parallel scenario workers (0 = all cores)");
    run->add_option("--seed", run_seed, "seed recorded in output headers");

    // egm
    auto* egm = app.add_subcommand("egm", "electro-geometric shielding analysis");
    std::string egm_config, egm_out, egm_oracle = "threshold";
    long egm_samples = -1, egm_seed = -1;
    double egm_ff = 20.0, egm_bf = 120.0;
    bool egm_json = false;
    egm->add_option("--config", egm_config, "config file with an [egm] section");
    egm->add_option("--out", egm_out, "output directory");
    egm->add_option("--samples", egm_samples, "stroke count (default 20000)");
    egm->add_option("--seed", egm_seed, "RNG seed");
    egm->add_option("--oracle", egm_oracle, "flashover oracle: transient | threshold");
    egm->add_option("--i-crit-ff", egm_ff, "threshold oracle: phase flashover current, kA");
    egm->add_option("--i-crit-bf", egm_bf, "threshold oracle: back-flashover current, kA");
    egm->add_flag("--json", egm_json, "emit JSON to stdout");

    // analyze
    auto* ana = app.add_subcommand("analyze", "FFT / filter / Hilbert-marginal analysis");
    std::string ana_wave, ana_pair, ana_out;
    bool ana_emd = false, ana_hann = false;
    ana->add_option("waveform", ana_wave, "waveform CSV (reference, e.g. without arrester)")
        ->required();
    ana->add_option("--pair", ana_pair, "second waveform CSV (e.g. with arrester)");
    ana->add_option("--out", ana_out, "output directory");
    ana->add_flag("--emd", ana_emd, "also run EMD + Hilbert marginal spectrum");
    ana->add_flag("--hann", ana_hann, "apply a Hann window before the FFT");

    // preset
    auto* pre = app.add_subcommand("preset", "emit a built-in scenario config");
    std::string pre_name, pre_out;
    pre->add_option("name", pre_name, "set1 | set2 | set3 | front | tail")->required();
    pre->add_option("-o,--out", pre_out, "write to file instead of stdout");

    // sensitivity
    auto* sen = app.add_subcommand("sensitivity", "front/tail-time overvoltage tables");
    std::string sen_out;
    int sen_jobs = 0;
    sen->add_option("--out", sen_out, "output directory");
    sen->add_option("--jobs", sen_jobs, "parallel workers");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_config, run_out, run_jobs, run_seed);
        if (*egm)
            return cmd_egm(egm_config, egm_out, egm_samples, egm_seed, egm_oracle, egm_ff,
                           egm_bf, egm_json);
        if (*ana) return cmd_analyze(ana_wave, ana_pair, ana_out, ana_emd, ana_hann);
        if (*pre) {
            const std::string text = preset_config(pre_name);
            if (pre_out.empty())
                std::cout << text;
            else
                write_text(pre_out, text);
            return 0;
        }
        if (*sen) return cmd_sensitivity(sen_out, sen_jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
