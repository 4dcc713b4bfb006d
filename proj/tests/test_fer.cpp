#include <catch_amalgamated.hpp>

#include <filesystem>

#include "oracles.hpp"
#include "vitalcam/fer/eval.hpp"
#include "vitalcam/fer/ferw.hpp"
#include "vitalcam/fer/reference.hpp"
#include "vitalcam/rng.hpp"
#include "vitalcam/synth.hpp"

using namespace vitalcam;
using fer::Tensor;

namespace {

Tensor random_tensor(int h, int w, int c, Rng& rng) {
    Tensor t(h, w, c);
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

std::vector<float> random_floats(size_t n, Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.h == b.h);
    REQUIRE(a.w == b.w);
    REQUIRE(a.c == b.c);
    float m = 0.0f;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace

TEST_CASE("conv2d basics") {
    // 1x1 kernel of value 1 is the identity.
    Rng rng(1);
    Tensor in = random_tensor(4, 5, 1, rng);
    Tensor id = fer::conv2d(in, std::vector<float>{1.0f}, {}, 1, 1, fer::Padding::same, 1);
    CHECK(max_abs_diff(id, in) == 0.0f);

    // 3x3 ones over 3x3 ones, valid: a single 9.0.
    Tensor ones(3, 3, 1, 1.0f);
    Tensor nine = fer::conv2d(ones, std::vector<float>(9, 1.0f), {}, 3, 1,
                              fer::Padding::valid, 1);
    REQUIRE(nine.size() == 1);
    CHECK(nine.data[0] == 9.0f);
}

TEST_CASE("conv2d matches the nested-loop oracle over random configurations") {
    Rng rng(1234);
    for (int trial = 0; trial < 60; ++trial) {
        const int h = 3 + static_cast<int>(rng.next_u64() % 9);
        const int w = 3 + static_cast<int>(rng.next_u64() % 9);
        const int m = 1 + static_cast<int>(rng.next_u64() % 4);
        const int n = 1 + static_cast<int>(rng.next_u64() % 4);
        const int k = 1 + 2 * static_cast<int>(rng.next_u64() % 3);  // 1,3,5
        const int stride = 1 + static_cast<int>(rng.next_u64() % 2);
        const bool same = (rng.next_u64() & 1) != 0;
        if (!same && (h < k || w < k)) continue;
        const bool bias = (rng.next_u64() & 1) != 0;

        Tensor in = random_tensor(h, w, m, rng);
        auto weights = random_floats(static_cast<size_t>(n) * m * k * k, rng);
        auto b = bias ? random_floats(static_cast<size_t>(n), rng) : std::vector<float>{};

        Tensor got = fer::conv2d(in, weights, b, k, stride,
                                 same ? fer::Padding::same : fer::Padding::valid, n);
        Tensor want = oracle::conv2d_reference(in, weights, b, k, stride, same, n);
        INFO("h=" << h << " w=" << w << " m=" << m << " n=" << n << " k=" << k
                  << " stride=" << stride << " same=" << same);
        CHECK(max_abs_diff(got, want) <= 1e-5f);
    }
}

TEST_CASE("depthwise_conv2d keeps channels independent and matches its oracle") {
    Rng rng(99);
    // Delta kernels leave the input unchanged.
    Tensor in = random_tensor(6, 6, 3, rng);
    std::vector<float> delta(3 * 9, 0.0f);
    for (int ch = 0; ch < 3; ++ch) delta[static_cast<size_t>(ch) * 9 + 4] = 1.0f;
    Tensor same = fer::depthwise_conv2d(in, delta, {}, 3, 1, fer::Padding::same);
    CHECK(max_abs_diff(same, in) == 0.0f);

    // Zeroing channel 0's kernel silences only channel 0.
    auto kernels = random_floats(2 * 9, rng);
    std::fill(kernels.begin(), kernels.begin() + 9, 0.0f);
    Tensor two = random_tensor(5, 5, 2, rng);
    Tensor out = fer::depthwise_conv2d(two, kernels, {}, 3, 1, fer::Padding::same);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) CHECK(out.at(y, x, 0) == 0.0f);

    for (int trial = 0; trial < 40; ++trial) {
        const int h = 3 + static_cast<int>(rng.next_u64() % 8);
        const int w = 3 + static_cast<int>(rng.next_u64() % 8);
        const int m = 1 + static_cast<int>(rng.next_u64() % 5);
        const int stride = 1 + static_cast<int>(rng.next_u64() % 2);
        const bool same_pad = (rng.next_u64() & 1) != 0;
        if (!same_pad && (h < 3 || w < 3)) continue;
        Tensor t = random_tensor(h, w, m, rng);
        auto ks = random_floats(static_cast<size_t>(m) * 9, rng);
        Tensor got = fer::depthwise_conv2d(t, ks, {}, 3, stride,
                                           same_pad ? fer::Padding::same : fer::Padding::valid);
        Tensor want = oracle::depthwise_reference(t, ks, 3, stride, same_pad);
        CHECK(max_abs_diff(got, want) <= 1e-5f);
    }
}

TEST_CASE("pointwise_conv2d mixes channels per pixel") {
    Rng rng(7);
    Tensor in = random_tensor(4, 4, 3, rng);
    // Identity matrix weights.
    std::vector<float> eye(9, 0.0f);
    eye[0] = eye[4] = eye[8] = 1.0f;
    Tensor same = fer::pointwise_conv2d(in, eye, {}, 3);
    CHECK(max_abs_diff(same, in) == 0.0f);

    Tensor two = random_tensor(3, 3, 2, rng);
    Tensor summed = fer::pointwise_conv2d(two, std::vector<float>{1.0f, 1.0f}, {}, 1);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            CHECK(summed.at(y, x, 0) ==
                  Catch::Approx(two.at(y, x, 0) + two.at(y, x, 1)).margin(1e-6));
}

TEST_CASE("depthwise plus pointwise equals the fused separable oracle") {
    Rng rng(555);
    for (int trial = 0; trial < 40; ++trial) {
        const int h = 4 + static_cast<int>(rng.next_u64() % 8);
        const int w = 4 + static_cast<int>(rng.next_u64() % 8);
        const int m = 1 + static_cast<int>(rng.next_u64() % 4);
        const int n = 1 + static_cast<int>(rng.next_u64() % 5);
        Tensor in = random_tensor(h, w, m, rng);
        auto dw = random_floats(static_cast<size_t>(m) * 9, rng);
        auto pw = random_floats(static_cast<size_t>(n) * m, rng);

        Tensor mid = fer::depthwise_conv2d(in, dw, {}, 3, 1, fer::Padding::same);
        Tensor got = fer::pointwise_conv2d(mid, pw, {}, n);
        Tensor want = oracle::separable_reference(in, dw, pw, 3, 1, true, n);
        CHECK(max_abs_diff(got, want) <= 1e-5f);
    }
}

TEST_CASE("separable pair equals a full conv with merged weights") {
    Rng rng(31337);
    for (int trial = 0; trial < 20; ++trial) {
        const int h = 5 + static_cast<int>(rng.next_u64() % 6);
        const int w = 5 + static_cast<int>(rng.next_u64() % 6);
        const int m = 1 + static_cast<int>(rng.next_u64() % 3);
        const int n = 1 + static_cast<int>(rng.next_u64() % 3);
        Tensor in = random_tensor(h, w, m, rng);
        auto dw = random_floats(static_cast<size_t>(m) * 9, rng);
        auto pw = random_floats(static_cast<size_t>(n) * m, rng);

        // merged[n][m][ky][kx] = pw[n][m] * dw[m][ky][kx]
        std::vector<float> merged(static_cast<size_t>(n) * m * 9);
        for (int nn = 0; nn < n; ++nn)
            for (int mm = 0; mm < m; ++mm)
                for (int t = 0; t < 9; ++t)
                    merged[(static_cast<size_t>(nn) * m + mm) * 9 + t] =
                        pw[static_cast<size_t>(nn) * m + mm] *
                        dw[static_cast<size_t>(mm) * 9 + t];

        Tensor sep = fer::pointwise_conv2d(
            fer::depthwise_conv2d(in, dw, {}, 3, 1, fer::Padding::same), pw, {}, n);
        Tensor full = fer::conv2d(in, merged, {}, 3, 1, fer::Padding::same, n);
        CHECK(max_abs_diff(sep, full) <= 1e-5f);
    }
}

TEST_CASE("batch_norm applies the running statistics") {
    Tensor x(1, 1, 1);
    x.data[0] = 3.0f;
    Tensor id = fer::batch_norm(x, std::vector<float>{1.0f}, std::vector<float>{0.0f},
                                std::vector<float>{0.0f}, std::vector<float>{1.0f}, 0.0f);
    CHECK(id.data[0] == 3.0f);
    Tensor y = fer::batch_norm(x, std::vector<float>{2.0f}, std::vector<float>{1.0f},
                               std::vector<float>{0.0f}, std::vector<float>{1.0f}, 0.0f);
    CHECK(y.data[0] == 7.0f);

    // Normalizing by the channel's own statistics centers it at beta.
    Rng rng(8);
    Tensor big(10, 10, 1);
    double sum = 0.0, sq = 0.0;
    for (auto& v : big.data) {
        v = static_cast<float>(rng.gaussian(5.0, 2.0));
        sum += v;
        sq += static_cast<double>(v) * v;
    }
    const double mean = sum / 100.0;
    const double var = sq / 100.0 - mean * mean;
    Tensor normed = fer::batch_norm(big, std::vector<float>{1.0f}, std::vector<float>{0.5f},
                                    std::vector<float>{static_cast<float>(mean)},
                                    std::vector<float>{static_cast<float>(var)}, 0.0f);
    double out_mean = 0.0;
    for (float v : normed.data) out_mean += v;
    CHECK(out_mean / 100.0 == Catch::Approx(0.5).margin(1e-4));
}

TEST_CASE("head ops behave") {
    Tensor logits(1, 1, 7, 0.25f);
    Tensor sm = fer::softmax(logits);
    for (float v : sm.data) CHECK(v == Catch::Approx(1.0 / 7.0).margin(1e-6));

    Tensor c(3, 4, 2);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) {
            c.at(y, x, 0) = 6.5f;
            c.at(y, x, 1) = static_cast<float>(y);
        }
    Tensor gap = fer::global_avg_pool(c);
    CHECK(gap.at(0, 0, 0) == Catch::Approx(6.5));
    CHECK(gap.at(0, 0, 1) == Catch::Approx(1.0));

    Rng rng(3);
    Tensor x = random_tensor(2, 2, 3, rng);
    Tensor zeros(2, 2, 3, 0.0f);
    CHECK(max_abs_diff(fer::residual_add(x, zeros), x) == 0.0f);
    Tensor other(2, 2, 4, 0.0f);
    CHECK_THROWS_MATCHES(fer::residual_add(x, other), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::shape_mismatch;
                         }));

    // Softmax is shift invariant. Integer logits keep the shifted tensor
    // exactly representable, isolating the softmax itself.
    Tensor ints(2, 2, 3);
    for (size_t i = 0; i < ints.data.size(); ++i)
        ints.data[i] = static_cast<float>(static_cast<int>(rng.next_u64() % 7) - 3);
    Tensor shifted = ints;
    for (auto& v : shifted.data) v += 11.0f;
    Tensor a = fer::softmax(ints);
    Tensor b = fer::softmax(shifted);
    CHECK(max_abs_diff(a, b) <= 1e-9f);
}

TEST_CASE("relu clips negatives") {
    Tensor x(1, 1, 4);
    x.data = {-1.0f, 0.0f, 2.5f, -0.1f};
    Tensor y = fer::relu(x);
    CHECK(y.data == std::vector<float>{0.0f, 0.0f, 2.5f, 0.0f});
}

TEST_CASE("param_count follows the separable formula") {
    fer::Model m;
    m.layers.push_back(fer::Layer{
        {fer::LayerKind::depthwise_conv, 3, 1, fer::Padding::same, 8, 8, 0},
        std::vector<float>(3 * 3 * 8, 0.1f)});
    m.layers.push_back(fer::Layer{
        {fer::LayerKind::pointwise_conv, 1, 1, fer::Padding::same, 8, 16, 0},
        std::vector<float>(8 * 16, 0.1f)});
    CHECK(m.param_count() == 200);
    CHECK(fer::Model{}.param_count() == 0);
}

TEST_CASE("reference model has the frozen parameter count") {
    fer::Model m = fer::reference_model(7);
    CHECK(m.param_count() == fer::kReferenceParamCount);
    CHECK(m.param_count() >= 50000);
    CHECK(m.param_count() <= 70000);
}

TEST_CASE("classify validates input and normalizes distributions") {
    fer::Model m = fer::reference_model(7);
    CHECK_THROWS_MATCHES(classify(m, GrayPlane(32, 32)), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::wrong_input_size;
                         }));
    Rng rng(12);
    for (int i = 0; i < 20; ++i) {
        GrayPlane face(48, 48);
        for (auto& v : face.values) v = rng.uniform(0.0, 255.0);
        auto dist = classify(m, face);
        double sum = 0.0;
        for (double p : dist.p) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            sum += p;
        }
        CHECK(sum == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("a zeroed head produces the uniform distribution") {
    fer::Model m = fer::reference_model(7);
    // The head conv is the third-from-last layer.
    fer::Layer& head = m.layers[m.layers.size() - 3];
    REQUIRE(head.spec.kind == fer::LayerKind::conv);
    std::fill(head.payload.begin(), head.payload.end(), 0.0f);
    GrayPlane face(48, 48, 130.0);
    auto dist = classify(m, face);
    for (double p : dist.p) CHECK(p == Catch::Approx(1.0 / 7.0).margin(1e-6));
}

TEST_CASE("forward pass is deterministic") {
    fer::Model m = fer::reference_model(21);
    GrayPlane face(48, 48);
    Rng rng(77);
    for (auto& v : face.values) v = rng.uniform(0.0, 255.0);
    auto a = classify(m, face);
    auto b = classify(m, face);
    for (int i = 0; i < 7; ++i) CHECK(a.p[static_cast<size_t>(i)] == b.p[static_cast<size_t>(i)]);
}

TEST_CASE("ferw round-trips bit for bit") {
    fer::Model m = fer::reference_model(7);
    const std::string bytes = fer::serialize(m);
    fer::Model back = fer::load_model(bytes);
    CHECK(fer::serialize(back) == bytes);

    // Classification agrees bit-for-float across the round trip.
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        GrayPlane face(48, 48);
        for (auto& v : face.values) v = rng.uniform(0.0, 255.0);
        auto a = classify(m, face);
        auto b = classify(back, face);
        for (int k = 0; k < 7; ++k)
            CHECK(a.p[static_cast<size_t>(k)] == b.p[static_cast<size_t>(k)]);
    }
}

TEST_CASE("ferw rejects corruption") {
    fer::Model m = fer::reference_model(7);
    std::string bytes = fer::serialize(m);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_MATCHES(fer::load_model(bad_magic), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::bad_magic;
                         }));

    std::string truncated = bytes.substr(0, 200);
    try {
        fer::load_model(truncated);
        FAIL("expected TruncatedFile");
    } catch (const error& e) {
        CHECK(e.code() == errc::truncated_file);
        CHECK(e.detail() >= 0);  // names the offending layer
    }

    std::string bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_MATCHES(fer::load_model(bad_version), error,
                         Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::unsupported_version;
                         }));

    // Flip one payload byte: the checksum must catch it.
    std::string flipped = bytes;
    flipped[100] = static_cast<char>(flipped[100] ^ 0x40);
    CHECK_THROWS_AS(fer::load_model(flipped), error);
}

TEST_CASE("shape checker rejects single-field mutations") {
    Rng rng(909);
    for (int trial = 0; trial < 40; ++trial) {
        fer::Model m = fer::reference_model(7);
        // Perturb one shape field of one random parameterized layer.
        const size_t idx = rng.next_u64() % m.layers.size();
        fer::LayerSpec& s = m.layers[idx].spec;
        switch (rng.next_u64() % 3) {
            case 0: s.in_channels += 1; break;
            case 1: s.out_channels += 1; break;
            default: s.kernel += 2; break;
        }
        if (fer::detail::expected_payload(s) == m.layers[idx].payload.size())
            continue;  // mutation not observable for kinds without payload
        CHECK_THROWS_MATCHES(m.shape_check(), error,
                             Catch::Matchers::Predicate<error>([](const error& e) {
                                 return e.code() == errc::shape_check_failed;
                             }));
    }
}

TEST_CASE("evaluate with an oracle stub yields the identity matrix") {
    SyntheticFaceSet set = generate_face_set(70, 3);
    auto result = fer::evaluate_with(
        [&set](const GrayPlane&, size_t i) { return set.labels[i]; }, set.faces, set.labels);
    CHECK(result.accuracy == 1.0);
    for (int t = 0; t < 7; ++t) {
        double row = 0.0;
        for (int p = 0; p < 7; ++p) {
            row += result.confusion.at(t, p);
            CHECK(result.confusion.at(t, p) == (t == p ? 1.0 : 0.0));
        }
        CHECK(row == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("a constant classifier fills one column") {
    SyntheticFaceSet set = generate_face_set(70, 3);
    auto result = fer::evaluate_with([](const GrayPlane&, size_t) { return 3; },  // Happy
                                     set.faces, set.labels);
    CHECK(result.accuracy == Catch::Approx(1.0 / 7.0));
    for (int t = 0; t < 7; ++t) CHECK(result.confusion.at(t, 3) == 1.0);
}

TEST_CASE("evaluate rejects bad inputs") {
    SyntheticFaceSet set = generate_face_set(7, 3);
    CHECK_THROWS_MATCHES(
        fer::evaluate_with([](const GrayPlane&, size_t) { return 0; }, {}, {}), error,
        Catch::Matchers::Predicate<error>(
            [](const error& e) { return e.code() == errc::empty_dataset; }));
    std::vector<int> bad_labels = set.labels;
    bad_labels[0] = 9;
    CHECK_THROWS_MATCHES(fer::evaluate_with([](const GrayPlane&, size_t) { return 0; },
                                            set.faces, bad_labels),
                         error, Catch::Matchers::Predicate<error>([](const error& e) {
                             return e.code() == errc::bad_label;
                         }));
}

TEST_CASE("random weights score close to chance on the balanced set") {
    fer::Model m = fer::reference_model(7);
    SyntheticFaceSet set = generate_face_set(700, 1);
    auto result = fer::evaluate(m, set.faces, set.labels);
    CHECK(result.accuracy >= 0.08);
    CHECK(result.accuracy <= 0.22);
}
