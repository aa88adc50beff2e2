#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "grudepth/ops.hpp"
#include "grudepth/rng.hpp"
#include "naive_conv.hpp"

using namespace grudepth;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, float lo = -1, float hi = 1) {
    return Tensor::uniform(std::move(shape), rng, lo, hi);
}

}  // namespace

TEST_CASE("tensor invariants") {
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK_THROWS_AS(Tensor({2, 3}, {1.f, 2.f}), ShapeError);
    CHECK_THROWS_AS(Tensor({0, 3}), ShapeError);

    Tensor a({2}, {1.f, 2.f});
    Tensor b({2}, {1.f, 2.f});
    CHECK(a == b);
    b.data[1] = 3.f;
    CHECK(a != b);
}

TEST_CASE("conv2d identity filter") {
    Tensor input({1, 2, 2}, {1, 2, 3, 4});
    Tensor weight({1, 1, 1, 1}, {1});
    Tensor bias({1}, {0});
    ConvSpec spec{1, 1, 1, 0, 1, 1};
    CHECK(conv2d(input, weight, bias, spec) == input);
}

TEST_CASE("conv2d all-ones 2x2 filter sums windows") {
    Tensor input = Tensor::full({1, 3, 3}, 1.f);
    Tensor weight = Tensor::full({1, 1, 2, 2}, 1.f);
    Tensor bias({1}, {0});
    ConvSpec spec{2, 2, 1, 0, 1, 1};
    Tensor out = conv2d(input, weight, bias, spec);
    CHECK(out.shape == std::vector<int>{1, 2, 2});
    for (float v : out.data) CHECK(v == doctest::Approx(4.f));
}

TEST_CASE("conv2d output extent formula") {
    // 4x4 input, kernel 3, stride 2, pad 1 -> floor((4+2-3)/2)+1 = 2
    Rng rng(7);
    Tensor input = random_tensor({1, 4, 4}, rng);
    Tensor weight = random_tensor({1, 1, 3, 3}, rng);
    Tensor bias({1}, {0.5f});
    ConvSpec spec{3, 3, 2, 1, 1, 1};
    Tensor out = conv2d(input, weight, bias, spec);
    CHECK(out.shape == std::vector<int>{1, 2, 2});
}

TEST_CASE("conv2d shape errors name the axis") {
    Rng rng(3);
    Tensor input = random_tensor({2, 4, 4}, rng);
    Tensor weight = random_tensor({1, 3, 3, 3}, rng);
    ConvSpec spec{3, 3, 1, 1, 3, 1};
    CHECK_THROWS_WITH_AS(conv2d(input, weight, Tensor({1}), spec),
                         doctest::Contains("channel axis"), ShapeError);

    Tensor w2 = random_tensor({2, 2, 3, 3}, rng);
    ConvSpec spec2{3, 3, 1, 1, 2, 2};
    CHECK_THROWS_WITH_AS(conv2d(input, w2, Tensor({3}), spec2), doctest::Contains("bias axis"),
                         ShapeError);
}

TEST_CASE("conv2d matches the naive quadruple-loop oracle") {
    Rng rng(42);
    for (int trial = 0; trial < 40; ++trial) {
        const int C = 1 + static_cast<int>(rng.uniform_int(8));
        const int O = 1 + static_cast<int>(rng.uniform_int(6));
        const int H = 3 + static_cast<int>(rng.uniform_int(14));
        const int W = 3 + static_cast<int>(rng.uniform_int(14));
        const int k = rng.uniform() < 0.5 ? 1 : 3;
        const int stride = 1 + static_cast<int>(rng.uniform_int(2));
        const int pad = k == 3 ? static_cast<int>(rng.uniform_int(2)) : 0;
        if ((H + 2 * pad - k) / stride + 1 < 1 || (W + 2 * pad - k) / stride + 1 < 1) continue;

        ConvSpec spec{k, k, stride, pad, C, O};
        Tensor input = random_tensor({C, H, W}, rng);
        Tensor weight = random_tensor({O, C, k, k}, rng);
        Tensor bias = random_tensor({O}, rng);

        Tensor fast = conv2d(input, weight, bias, spec);
        Tensor ref = testing::naive_conv2d(input, weight, bias, spec);
        REQUIRE(fast.shape == ref.shape);
        for (std::size_t i = 0; i < fast.data.size(); ++i)
            CHECK(std::abs(fast.data[i] - ref.data[i]) < 1e-5f);
    }
}

TEST_CASE("conv2d stride/pad extent properties") {
    Rng rng(11);
    for (int n : {1, 2, 5, 9}) {
        ConvSpec s{3, 3, 1, 1, 1, 1};
        CHECK(s.out_h(n) == n);  // stride 1, kernel 3, pad 1 preserves extents
    }
    for (int n : {2, 4, 8, 16}) {
        ConvSpec s{3, 3, 2, 1, 1, 1};
        CHECK(s.out_h(n) == n / 2);  // stride 2 halves even extents
    }
    (void)rng;
}

TEST_CASE("depth_to_space permutation rule") {
    Tensor in({4, 1, 1}, {1, 2, 3, 4});
    Tensor out = depth_to_space(in, 2);
    CHECK(out == Tensor({1, 2, 2}, {1, 2, 3, 4}));
}

TEST_CASE("depth_to_space shape arithmetic") {
    Rng rng(5);
    Tensor in = random_tensor({512, 2, 2}, rng);
    CHECK(depth_to_space(in, 2).shape == std::vector<int>{128, 4, 4});
    Tensor s = random_tensor({3, 4, 4}, rng);
    CHECK(space_to_depth(s, 2).shape == std::vector<int>{12, 2, 2});
}

TEST_CASE("depth_to_space rejects indivisible channels") {
    CHECK_THROWS_AS(depth_to_space(Tensor({3, 2, 2}), 2), ConfigError);
    CHECK_THROWS_AS(space_to_depth(Tensor({3, 3, 3}), 2), ConfigError);
}

TEST_CASE("space_to_depth inverts depth_to_space bit-exactly") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const int c = 4 * (1 + static_cast<int>(rng.uniform_int(6)));
        const int h = 1 + static_cast<int>(rng.uniform_int(6));
        const int w = 1 + static_cast<int>(rng.uniform_int(6));
        Tensor x = random_tensor({c, h, w}, rng);
        CHECK(space_to_depth(depth_to_space(x, 2), 2) == x);
    }
    // and the 1x2x2 example the other way round
    Tensor img({1, 2, 2}, {1, 2, 3, 4});
    CHECK(space_to_depth(img, 2) == Tensor({4, 1, 1}, {1, 2, 3, 4}));
}

TEST_CASE("depth_to_space preserves the multiset of values") {
    Rng rng(13);
    Tensor x = random_tensor({8, 3, 5}, rng);
    Tensor y = depth_to_space(x, 2);
    auto a = x.data, b = y.data;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("lrelu standard variant") {
    Tensor x({3}, {2.f, -1.f, 0.f});
    Tensor y = lrelu(x, 0.1f, LReluVariant::Standard);
    CHECK(y.data[0] == doctest::Approx(2.f));
    CHECK(y.data[1] == doctest::Approx(-0.1f));
    CHECK(y.data[2] == doctest::Approx(0.f));
}

TEST_CASE("lrelu paper-verbatim variant") {
    Tensor x({3}, {2.f, -1.f, 0.f});
    Tensor y = lrelu(x, 0.1f, LReluVariant::PaperVerbatim);
    CHECK(y.data[0] == doctest::Approx(0.2f));
    CHECK(y.data[1] == doctest::Approx(0.9f));
    CHECK(y.data[2] == doctest::Approx(0.f));
}

TEST_CASE("lrelu standard is monotone and identity at alpha 1") {
    Rng rng(21);
    Tensor x = random_tensor({64}, rng, -3, 3);
    Tensor sorted = x;
    std::sort(sorted.data.begin(), sorted.data.end());
    Tensor y = lrelu(sorted, 0.1f, LReluVariant::Standard);
    for (std::size_t i = 1; i < y.data.size(); ++i) CHECK(y.data[i] >= y.data[i - 1]);
    CHECK(lrelu(x, 1.0f, LReluVariant::Standard) == x);
    CHECK_THROWS_AS(lrelu(x, -0.1f), ConfigError);
}

TEST_CASE("elementwise basics") {
    CHECK(grudepth::tanh_t(Tensor({1}, {0})).data[0] == doctest::Approx(0));
    CHECK(sigmoid(Tensor({1}, {0})).data[0] == doctest::Approx(0.5));
    CHECK(add(Tensor({2}, {1, 2}), Tensor({2}, {3, 4})) == Tensor({2}, {4, 6}));
    CHECK_THROWS_AS(add(Tensor({2}), Tensor({3})), ShapeError);

    Rng rng(17);
    Tensor x = random_tensor({32}, rng);
    Tensor sq = mul(x, x);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        CHECK(sq.data[i] == doctest::Approx(x.data[i] * x.data[i]));
}
