#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "surgesim/waveform.hpp"

using namespace surgesim;

namespace {
Waveform sine(double f, double dt, std::size_t n, double amp = 1.0) {
    Waveform w;
    w.dt = dt;
    w.unit = Unit::Volt;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        w.samples[i] = amp * std::sin(2.0 * M_PI * f * static_cast<double>(i) * dt);
    return w;
}
} // namespace

TEST_CASE("resample identity at the same rate") {
    auto w = sine(1e3, 1e-8, 1001);
    auto r = resample(w, 1e-8);
    REQUIRE(r.samples.size() == w.samples.size());
    for (std::size_t i = 0; i < w.samples.size(); ++i) CHECK(r.samples[i] == w.samples[i]);
}

TEST_CASE("resample 1001 samples at 10 ns to 20 ns gives 501 samples") {
    auto w = sine(1e3, 1e-8, 1001);
    auto r = resample(w, 2e-8);
    CHECK(r.samples.size() == 501);
    CHECK(r.dt == doctest::Approx(2e-8));
    CHECK(r.t0 == w.t0);
}

TEST_CASE("decimating a slow sine keeps its peak") {
    // 1 kHz sine sampled at 100 MHz, decimated 10x: the peak sample of a
    // waveform this oversampled moves by less than 1e-6 relative
    const double f = 1e3;
    auto w = sine(f, 1e-8, 200001);
    auto r = resample(w, 1e-7);
    CHECK(r.peak() == doctest::Approx(w.peak()).epsilon(1e-6));
}

TEST_CASE("resample rejects non-integer ratios and upsampling") {
    auto w = sine(1e3, 1e-8, 101);
    CHECK_THROWS_AS((void)resample(w, 2.5e-8), AnalysisError);
    CHECK_THROWS_AS((void)resample(w, 0.5e-8), AnalysisError);
}

TEST_CASE("waveform validation") {
    Waveform w;
    w.dt = 1e-8;
    w.samples = {1.0};
    CHECK_THROWS_AS(w.validate(), AnalysisError);
    w.samples = {1.0, std::nan("")};
    CHECK_THROWS_AS(w.validate(), AnalysisError);
    w.samples = {1.0, 2.0};
    CHECK_NOTHROW(w.validate());
}

TEST_CASE("waveform csv round trip") {
    auto w = sine(5e4, 1e-8, 256, 3.25);
    w.label = "poc_a";
    const auto path =
        (std::filesystem::temp_directory_path() / "surgesim_wave_test.csv").string();
    write_waveform_csv(path, w, {{"config_hash", "deadbeef"}});
    const auto r = read_waveform_csv(path);
    REQUIRE(r.samples.size() == w.samples.size());
    CHECK(r.dt == doctest::Approx(w.dt).epsilon(1e-12));
    CHECK(r.unit == Unit::Volt);
    CHECK(r.label == "poc_a");
    for (std::size_t i = 0; i < w.samples.size(); i += 17)
        CHECK(r.samples[i] == doctest::Approx(w.samples[i]).epsilon(1e-8));
    std::filesystem::remove(path);
}
