#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "vitalcam/rvid.hpp"
#include "vitalcam/synth.hpp"

using namespace vitalcam;

namespace {

std::filesystem::path temp_path(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("generators are bit-reproducible") {
    PulseScene scene;
    scene.width = 32;
    scene.height = 24;
    scene.face_rect = Roi{8, 6, 16, 12};
    scene.duration_seconds = 2.0;
    scene.noise_sigma = 3.0;
    scene.seed = 42;

    auto a = generate_pulse_video(scene);
    auto b = generate_pulse_video(scene);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].pixels == b[i].pixels);
        CHECK(a[i].timestamp_ms == b[i].timestamp_ms);
    }
}

TEST_CASE("zero amplitude and zero noise freeze the scene") {
    PulseScene scene;
    scene.width = 32;
    scene.height = 24;
    scene.face_rect = Roi{8, 6, 16, 12};
    scene.duration_seconds = 1.0;
    scene.pulse_amplitude = 0.0;
    scene.noise_sigma = 0.0;
    auto frames = generate_pulse_video(scene);
    for (size_t i = 1; i < frames.size(); ++i) CHECK(frames[i].pixels == frames[0].pixels);
}

TEST_CASE("face-region green mean peaks at the configured rate") {
    PulseScene scene;
    scene.width = 64;
    scene.height = 48;
    scene.face_rect = Roi{16, 12, 32, 24};
    scene.pulse_bpm = 90.0;
    scene.pulse_amplitude = 2.0;
    scene.noise_sigma = 1.0;
    scene.duration_seconds = 10.0;
    scene.seed = 3;
    auto frames = generate_pulse_video(scene);

    std::vector<double> series;
    for (const Frame& f : frames) {
        GrayPlane g = crop(extract_channel(f, Channel::G), scene.face_rect);
        series.push_back(mean(g));
    }
    const double m = [&] {
        double s = 0;
        for (double v : series) s += v;
        return s / static_cast<double>(series.size());
    }();
    std::vector<std::complex<double>> x(series.size());
    for (size_t i = 0; i < series.size(); ++i) x[i] = series[i] - m;
    auto spec = oracle::naive_dft(x, false);

    size_t peak = 1;
    for (size_t k = 1; k <= series.size() / 2; ++k)
        if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;
    const double df = scene.fps / static_cast<double>(series.size());
    const double peak_hz = static_cast<double>(peak) * df;
    CHECK(std::fabs(peak_hz - scene.pulse_bpm / 60.0) <= df + 1e-9);
}

TEST_CASE("distance scene keeps the requested area ratio") {
    for (double ratio : {0.05, 0.10, 0.25, 0.5}) {
        PulseScene scene = make_distance_scene(ratio, 72.0, 40.0, 1.0, 3.0);
        const double got = static_cast<double>(scene.face_rect.area()) /
                           (static_cast<double>(scene.width) * scene.height);
        CHECK(got >= 0.95 * ratio);
        CHECK(got <= 1.05 * ratio);
    }
}

TEST_CASE("distance scene at ratio one matches the plain generator") {
    PulseScene scene = make_distance_scene(1.0, 72.0, 0.0, 1.0, 0.0);
    CHECK(scene.face_rect.w == static_cast<int32_t>(scene.width));
    CHECK(scene.face_rect.h == static_cast<int32_t>(scene.height));
}

TEST_CASE("face set is deterministic, balanced and separable") {
    SyntheticFaceSet a = generate_face_set(70, 5);
    SyntheticFaceSet b = generate_face_set(70, 5);
    REQUIRE(a.faces.size() == 70);
    for (size_t i = 0; i < a.faces.size(); ++i) CHECK(a.faces[i].values == b.faces[i].values);

    std::array<int, 7> counts{};
    for (int label : a.labels) ++counts[static_cast<size_t>(label)];
    for (int c : counts) CHECK(c == 10);

    // Mean intra-class distance must fall below mean inter-class distance.
    auto dist = [](const GrayPlane& x, const GrayPlane& y) {
        double s = 0.0;
        for (size_t i = 0; i < x.values.size(); ++i) s += std::fabs(x.values[i] - y.values[i]);
        return s / static_cast<double>(x.values.size());
    };
    double intra = 0.0, inter = 0.0;
    size_t n_intra = 0, n_inter = 0;
    for (size_t i = 0; i < a.faces.size(); ++i)
        for (size_t j = i + 1; j < a.faces.size(); ++j) {
            const double d = dist(a.faces[i], a.faces[j]);
            if (a.labels[i] == a.labels[j]) {
                intra += d;
                ++n_intra;
            } else {
                inter += d;
                ++n_inter;
            }
        }
    intra /= static_cast<double>(n_intra);
    inter /= static_cast<double>(n_inter);
    CHECK(inter > intra);
}

TEST_CASE("rvid round-trips frames and header") {
    PulseScene scene;
    scene.width = 32;
    scene.height = 24;
    scene.face_rect = Roi{8, 6, 16, 12};
    scene.duration_seconds = 1.0;
    scene.fps = 20.0;
    scene.noise_sigma = 1.5;
    auto frames = generate_pulse_video(scene);

    const auto path = temp_path("vitalcam_rt.rvid");
    {
        RvidWriter w(path.string(), 32, 24, 20.0);
        for (const Frame& f : frames) w.write(f);
    }
    RvidReader r(path.string());
    CHECK(r.header().width == 32);
    CHECK(r.header().height == 24);
    CHECK(r.header().fps() == Catch::Approx(20.0));
    auto back = r.read_all();
    REQUIRE(back.size() == frames.size());
    for (size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].pixels == frames[i].pixels);
        CHECK(back[i].timestamp_ms == frames[i].timestamp_ms);
    }
    std::filesystem::remove(path);
}

TEST_CASE("rvid rejects corrupt inputs") {
    const auto path = temp_path("vitalcam_bad.rvid");
    {
        std::ofstream out(path, std::ios::binary);
        out << "JUNKxxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_MATCHES(RvidReader(path.string()), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::bad_magic;
                         }));

    {
        RvidWriter w(path.string(), 32, 24, 20.0);
        Frame f;
        f.width = 32;
        f.height = 24;
        f.pixels.assign(32 * 24 * 3, 7);
        w.write(f);
    }
    // Truncate mid-frame.
    std::filesystem::resize_file(path, 16 + 100);
    RvidReader r(path.string());
    CHECK_THROWS_MATCHES(r.next(), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::truncated_file;
                         }));
    std::filesystem::remove(path);
}
