#include <catch_amalgamated.hpp>

#include "vitalcam/frame.hpp"
#include "vitalcam/rng.hpp"

using namespace vitalcam;

namespace {

Frame make_frame(uint32_t w, uint32_t h, std::initializer_list<uint8_t> px) {
    Frame f;
    f.width = w;
    f.height = h;
    f.pixels.assign(px);
    return f;
}

// Small frames below the 8x8 invariant are fine for pixel-level op tests.
Frame tiny(std::initializer_list<uint8_t> px, uint32_t w = 1, uint32_t h = 1) {
    return make_frame(w, h, px);
}

}  // namespace

TEST_CASE("to_grayscale applies the fixed luma weights") {
    CHECK(to_grayscale(tiny({255, 255, 255})).values[0] == Catch::Approx(255.0));
    CHECK(to_grayscale(tiny({0, 0, 0})).values[0] == Catch::Approx(0.0));
    // 0.299*100 + 0.587*200 + 0.114*50 = 153.0
    CHECK(to_grayscale(tiny({100, 200, 50})).values[0] == Catch::Approx(153.0));
}

TEST_CASE("to_grayscale stays in range and matches G when channels agree") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const uint8_t r = static_cast<uint8_t>(rng.next_u64() & 0xff);
        const uint8_t g = static_cast<uint8_t>(rng.next_u64() & 0xff);
        const uint8_t b = static_cast<uint8_t>(rng.next_u64() & 0xff);
        const double y = to_grayscale(tiny({r, g, b})).values[0];
        CHECK(y >= 0.0);
        CHECK(y <= 255.0);
        CHECK(to_grayscale(tiny({g, g, g})).values[0] == Catch::Approx(g));
    }
}

TEST_CASE("extract_channel projects the requested component") {
    CHECK(extract_channel(tiny({10, 20, 30}), Channel::G).values[0] == 20.0);
    CHECK(extract_channel(tiny({10, 20, 30}), Channel::B).values[0] == 30.0);
    Frame two = tiny({1, 2, 3, 4, 5, 6}, 2, 1);
    GrayPlane r = extract_channel(two, Channel::R);
    CHECK(r.values == std::vector<double>{1.0, 4.0});
}

TEST_CASE("crop copies the clamped region") {
    GrayPlane p(4, 4);
    for (uint32_t i = 0; i < 16; ++i) p.values[i] = i;

    GrayPlane inner = crop(p, Roi{1, 1, 2, 2});
    CHECK(inner.width == 2);
    CHECK(inner.height == 2);
    CHECK(inner.values == std::vector<double>{5, 6, 9, 10});

    GrayPlane corner = crop(p, Roi{3, 3, 4, 4});
    CHECK(corner.width == 1);
    CHECK(corner.height == 1);
    CHECK(corner.values[0] == 15.0);

    CHECK_THROWS_MATCHES(crop(p, Roi{4, 4, 2, 2}), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::empty_region;
                         }));
}

TEST_CASE("extract then crop commutes with crop of the full frame") {
    Rng rng(5);
    Frame f = make_frame(12, 9, {});
    f.pixels.resize(12 * 9 * 3);
    for (auto& b : f.pixels) b = static_cast<uint8_t>(rng.next_u64() & 0xff);
    const Roi r{3, 2, 5, 4};

    GrayPlane a = crop(extract_channel(f, Channel::G), r);
    // Crop on the frame first by building a sub-frame.
    Frame sub;
    sub.width = 5;
    sub.height = 4;
    sub.pixels.resize(5 * 4 * 3);
    for (uint32_t y = 0; y < 4; ++y)
        for (uint32_t x = 0; x < 5; ++x)
            for (int c = 0; c < 3; ++c)
                sub.pixels[(y * 5 + x) * 3 + c] =
                    f.pixels[((y + 2) * 12 + (x + 3)) * 3 + c];
    GrayPlane b = extract_channel(sub, Channel::G);
    CHECK(a.values == b.values);
}

TEST_CASE("resize_bilinear identity and constants") {
    Rng rng(7);
    GrayPlane p(7, 5);
    for (auto& v : p.values) v = rng.uniform(0.0, 255.0);
    GrayPlane same = resize_bilinear(p, 7, 5);
    CHECK(same.values == p.values);

    GrayPlane c(6, 4, 42.5);
    GrayPlane r = resize_bilinear(c, 13, 3);
    for (double v : r.values) CHECK(v == Catch::Approx(42.5));
}

TEST_CASE("resize_bilinear upsamples monotonically") {
    GrayPlane p(2, 1);
    p.values = {0.0, 255.0};
    GrayPlane r = resize_bilinear(p, 4, 1);
    REQUIRE(r.values.size() == 4);
    // Half-pixel centers: clamped end values, interpolation between.
    CHECK(r.values[0] == Catch::Approx(0.0));
    CHECK(r.values[1] == Catch::Approx(63.75));
    CHECK(r.values[2] == Catch::Approx(191.25));
    CHECK(r.values[3] == Catch::Approx(255.0));
    for (size_t i = 1; i < r.values.size(); ++i) CHECK(r.values[i] >= r.values[i - 1]);
}
