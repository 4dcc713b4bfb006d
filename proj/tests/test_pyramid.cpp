#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "vitalcam/pyramid.hpp"
#include "vitalcam/rng.hpp"

using namespace vitalcam;

namespace {

GrayPlane random_plane(uint32_t w, uint32_t h, Rng& rng) {
    GrayPlane p(w, h);
    for (auto& v : p.values) v = rng.uniform(0.0, 255.0);
    return p;
}

double max_abs_diff(const GrayPlane& a, const GrayPlane& b) {
    REQUIRE(a.values.size() == b.values.size());
    double m = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::fabs(a.values[i] - b.values[i]));
    return m;
}

}  // namespace

TEST_CASE("blur_downsample halves dimensions with ceiling") {
    GrayPlane p(320, 240, 1.0);
    GrayPlane d = blur_downsample(p);
    CHECK(d.width == 160);
    CHECK(d.height == 120);

    GrayPlane odd(7, 5, 0.0);
    GrayPlane d2 = blur_downsample(odd);
    CHECK(d2.width == 4);
    CHECK(d2.height == 3);

    CHECK_THROWS_MATCHES(blur_downsample(GrayPlane(1, 8)), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::too_small;
                         }));
}

TEST_CASE("blur_downsample preserves constants") {
    GrayPlane p(8, 8, 77.25);
    GrayPlane d = blur_downsample(p);
    for (double v : d.values) CHECK(v == Catch::Approx(77.25).margin(1e-12));
}

TEST_CASE("blur_downsample matches the direct convolution oracle") {
    Rng rng(101);
    // Impulse at the center of a 9x9 zero plane plus random planes.
    GrayPlane impulse(9, 9, 0.0);
    impulse.at(4, 4) = 1.0;
    GrayPlane got = blur_downsample(impulse);
    GrayPlane want = oracle::blur_downsample_reference(impulse);
    CHECK(max_abs_diff(got, want) < 1e-12);

    for (int trial = 0; trial < 20; ++trial) {
        const uint32_t w = 2 + static_cast<uint32_t>(rng.next_u64() % 40);
        const uint32_t h = 2 + static_cast<uint32_t>(rng.next_u64() % 40);
        GrayPlane p = random_plane(w, h, rng);
        CHECK(max_abs_diff(blur_downsample(p), oracle::blur_downsample_reference(p)) < 1e-9);
    }
}

TEST_CASE("upsample accepts both parities and rejects level skips") {
    GrayPlane p(4, 4, 3.0);
    GrayPlane a = upsample(p, 8, 8);
    CHECK(a.width == 8);
    GrayPlane b = upsample(p, 7, 7);
    CHECK(b.width == 7);
    for (double v : a.values) CHECK(v == Catch::Approx(3.0).margin(1e-12));
    for (double v : b.values) CHECK(v == Catch::Approx(3.0).margin(1e-12));

    CHECK_THROWS_MATCHES(upsample(p, 16, 16), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::dimension_mismatch;
                         }));
}

TEST_CASE("laplacian structure and dimensions") {
    Rng rng(55);
    GrayPlane p = random_plane(320, 240, rng);
    LaplacianPyramid pyr = build_laplacian(p, 3);
    REQUIRE(pyr.bands.size() == 3);
    CHECK(pyr.bands[0].width == 320);
    CHECK(pyr.bands[0].height == 240);
    CHECK(pyr.bands[1].width == 160);
    CHECK(pyr.bands[1].height == 120);
    CHECK(pyr.bands[2].width == 80);
    CHECK(pyr.bands[2].height == 60);
    CHECK(pyr.residual.width == 40);
    CHECK(pyr.residual.height == 30);
}

TEST_CASE("laplacian of a constant plane has zero bands") {
    LaplacianPyramid pyr = build_laplacian(GrayPlane(16, 16, 9.5), 2);
    for (const auto& band : pyr.bands)
        for (double v : band.values) CHECK(v == Catch::Approx(0.0).margin(1e-12));
    for (double v : pyr.residual.values) CHECK(v == Catch::Approx(9.5).margin(1e-12));
    GrayPlane back = collapse_laplacian(pyr);
    for (double v : back.values) CHECK(v == Catch::Approx(9.5).margin(1e-12));
}

TEST_CASE("minimal pyramid and level cap") {
    GrayPlane p(8, 8, 1.0);
    LaplacianPyramid one = build_laplacian(p, 1);
    CHECK(one.bands.size() == 1);
    CHECK(one.residual.width == 4);

    CHECK_THROWS_MATCHES(build_laplacian(GrayPlane(8, 8), 3), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::too_many_levels;
                         }));
}

TEST_CASE("collapse of zero bands repeatedly upsamples the residual") {
    Rng rng(77);
    GrayPlane p = random_plane(17, 13, rng);
    LaplacianPyramid pyr = build_laplacian(p, 2);
    for (auto& band : pyr.bands) std::fill(band.values.begin(), band.values.end(), 0.0);
    GrayPlane got = collapse_laplacian(pyr);
    GrayPlane want = upsample(upsample(pyr.residual, 9, 7), 17, 13);
    CHECK(max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("round-trip reconstruction over random planes") {
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const uint32_t w = 16 + static_cast<uint32_t>(rng.next_u64() % 120);
        const uint32_t h = 16 + static_cast<uint32_t>(rng.next_u64() % 120);
        const int cap = std::min(5, max_levels(w, h));
        const int levels = 1 + static_cast<int>(rng.next_u64() % static_cast<uint64_t>(cap));
        GrayPlane p = random_plane(w, h, rng);
        worst = std::max(worst, max_abs_diff(collapse_laplacian(build_laplacian(p, levels)), p));
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("pyramid construction is linear") {
    Rng rng(31);
    GrayPlane p = random_plane(33, 21, rng);
    GrayPlane q = random_plane(33, 21, rng);
    const double a = 1.75, b = -0.5;
    GrayPlane combo(33, 21);
    for (size_t i = 0; i < combo.values.size(); ++i)
        combo.values[i] = a * p.values[i] + b * q.values[i];

    LaplacianPyramid lp = build_laplacian(p, 3);
    LaplacianPyramid lq = build_laplacian(q, 3);
    LaplacianPyramid lc = build_laplacian(combo, 3);
    for (size_t lvl = 0; lvl < lc.bands.size(); ++lvl)
        for (size_t i = 0; i < lc.bands[lvl].values.size(); ++i) {
            const double want = a * lp.bands[lvl].values[i] + b * lq.bands[lvl].values[i];
            CHECK(lc.bands[lvl].values[i] ==
                  Catch::Approx(want).margin(1e-6 * (1.0 + std::fabs(want))));
        }
}

TEST_CASE("level dimensions follow ceiling halving for random sizes") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const uint32_t w = 9 + static_cast<uint32_t>(rng.next_u64() % 300);
        const uint32_t h = 9 + static_cast<uint32_t>(rng.next_u64() % 300);
        const int levels = std::min(3, max_levels(w, h));
        GaussianPyramid g = build_gaussian(GrayPlane(w, h, 1.0), levels);
        uint32_t ew = w, eh = h;
        for (size_t k = 0; k < g.levels.size(); ++k) {
            CHECK(g.levels[k].width == ew);
            CHECK(g.levels[k].height == eh);
            ew = (ew + 1) / 2;
            eh = (eh + 1) / 2;
        }
    }
}
