#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "hfq/gradcheck.hpp"
#include "hfq/hfq_former.hpp"

using namespace hfq;

namespace {

using DTensor = TensorT<double>;
using DGraph = GraphT<double>;

HfqConfig tiny_config(int stages = 3, AttentionMode mode = AttentionMode::projected) {
    HfqConfig cfg;
    cfg.d_model = 8;
    cfg.num_stages = stages;
    cfg.queries_per_stage = 2;
    cfg.compressed_tokens = 2;
    cfg.heads = mode == AttentionMode::literal_eq1 ? 1 : 2;
    cfg.attention_mode = mode;
    return cfg;
}

// gelu(gelu(x)) sampled at even time steps: what the two-conv downsampler must
// produce when both kernels are center-tap identities with zero bias.
std::vector<float> double_gelu_strided(const Tensor& x) {
    const int t = x.rows(), d = x.cols();
    std::vector<float> out;
    for (int i = 0; i < t; i += 2) {
        for (int c = 0; c < d; ++c) {
            out.push_back(detail::gelu_scalar(detail::gelu_scalar(x.at(i, c))));
        }
    }
    return out;
}

} // namespace

TEST_SUITE("downsampler") {

TEST_CASE("halves length with ceiling for every T up to 64") {
    Rng rng(40);
    DownsamplerT<float> ds(4, 3, 2, rng);
    Graph g;
    for (int t = 1; t <= 64; ++t) {
        Rng fill(1000 + t);
        Tensor x = Tensor::randn({t, 4}, fill, 0.f, 1.f);
        Tensor y = ds.forward(g, x);
        CHECK(y.rows() == (t + 1) / 2);
        CHECK(y.cols() == 4);
    }
}

TEST_CASE("crafted identity kernels reduce to strided double GELU") {
    Rng rng(41);
    DownsamplerT<float> ds(4, 3, 2, rng);
    for (auto* w : {&ds.w1, &ds.w2}) {
        std::fill((*w).data->begin(), (*w).data->end(), 0.f);
        for (int c = 0; c < 4; ++c) (*(*w).data)[1 * 16 + c * 4 + c] = 1.f; // center tap = I
    }
    std::fill(ds.b1.data->begin(), ds.b1.data->end(), 0.f);
    std::fill(ds.b2.data->begin(), ds.b2.data->end(), 0.f);

    Graph g;
    Rng fill(42);
    Tensor x = Tensor::randn({7, 4}, fill, 0.f, 1.f);
    Tensor y = ds.forward(g, x);
    std::vector<float> expect = double_gelu_strided(x);
    REQUIRE(y.numel() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK((*y.data)[i] == doctest::Approx(expect[i]).epsilon(1e-6));
    }
}

} // suite

TEST_SUITE("compression stack") {

TEST_CASE("desk config stage shapes at sixty frames") {
    Rng rng(43);
    HfqFormer model(HfqConfig::desk(), rng);
    Graph g;
    Rng fill(44);
    Tensor x = Tensor::randn({60, 64}, fill, 0.f, 1.f);
    auto res = model.forward(g, x);

    CHECK(res.tokens.rows() == 5);
    CHECK(res.tokens.cols() == 64);
    REQUIRE(res.diagnostics.stage_attention.size() == 3);
    const int expect_t[3] = {60, 30, 15};
    for (int i = 0; i < 3; ++i) {
        CHECK(res.diagnostics.stage_attention[i].rows() == 8);
        CHECK(res.diagnostics.stage_attention[i].cols() == expect_t[i]);
    }
    CHECK(res.diagnostics.distill_attention.rows() == 5);
    CHECK(res.diagnostics.distill_attention.cols() == 24);  // 3 stages x 8 queries
    CHECK(res.diagnostics.recovery_attention.cols() == 105); // 60 + 30 + 15
}

TEST_CASE("output arity is fixed across input lengths") {
    Rng rng(45);
    HfqFormer model(HfqConfig::desk(), rng);
    for (int t : {1, 7, 60, 1500}) {
        Graph g;
        Rng fill(46);
        Tensor x = Tensor::randn({t, 64}, fill, 0.f, 1.f);
        auto res = model.forward(g, x);
        CHECK(res.tokens.rows() == 5);
        CHECK(res.tokens.all_finite());
    }
}

TEST_CASE("single frame in literal mode pools to that frame at stage one") {
    Rng rng(47);
    HfqFormerT<float> model(tiny_config(3, AttentionMode::literal_eq1), rng);
    Graph g;
    Rng fill(48);
    Tensor x = Tensor::randn({1, 8}, fill, 0.f, 1.f);
    auto attn = model.stages[0].compressor.forward(g, model.stages[0].queries, x, true);
    for (int i = 0; i < attn.output.rows(); ++i) {
        for (int c = 0; c < 8; ++c) {
            CHECK(attn.output.at(i, c) == doctest::Approx(x.at(0, c)).epsilon(1e-6));
        }
    }
}

TEST_CASE("every diagnostic attention row sums to one") {
    Rng rng(49);
    HfqFormer model(HfqConfig::desk(), rng);
    Graph g;
    Rng fill(50);
    Tensor x = Tensor::randn({23, 64}, fill, 0.f, 1.f);
    auto res = model.forward(g, x);
    auto check_rows = [](const Tensor& w) {
        for (int i = 0; i < w.rows(); ++i) {
            float s = 0.f;
            for (int j = 0; j < w.cols(); ++j) s += w.at(i, j);
            CHECK(s == doctest::Approx(1.f).epsilon(1e-5));
        }
    };
    for (const auto& w : res.diagnostics.stage_attention) check_rows(w);
    check_rows(res.diagnostics.distill_attention);
    check_rows(res.diagnostics.recovery_attention);
}

TEST_CASE("stage-count ablations all run and keep the token count") {
    for (int stages : {1, 2, 3}) {
        Rng rng(51);
        HfqFormerT<float> model(tiny_config(stages), rng);
        Graph g;
        Rng fill(52);
        Tensor x = Tensor::randn({12, 8}, fill, 0.f, 1.f);
        auto res = model.forward(g, x);
        CHECK(res.tokens.rows() == 2);
        CHECK(res.diagnostics.distill_attention.cols() == stages * 2);
    }
}

TEST_CASE("mismatched feature width is rejected") {
    Rng rng(53);
    HfqFormer model(HfqConfig::desk(), rng);
    Graph g;
    CHECK_THROWS_AS(model.forward(g, Tensor::zeros({4, 32})), DimensionError);
}

} // suite

TEST_SUITE("attention mass") {

TEST_CASE("zeroed condensing queries spread mass uniformly across stages") {
    Rng rng(54);
    HfqFormerT<float> model(tiny_config(3, AttentionMode::literal_eq1), rng);
    std::fill(model.compressed_queries.data->begin(), model.compressed_queries.data->end(), 0.f);
    Graph g;
    Rng fill(55);
    Tensor x = Tensor::randn({16, 8}, fill, 0.f, 1.f);
    auto res = model.forward(g, x);
    auto mass = attention_mass_per_stage(res.diagnostics.distill_attention, 3, 2);
    for (float m : mass) CHECK(m == doctest::Approx(1.f / 3.f).epsilon(1e-5));
}

TEST_CASE("masses sum to one for two-stage configs") {
    Rng rng(56);
    HfqFormerT<float> model(tiny_config(2), rng);
    Graph g;
    Rng fill(57);
    Tensor x = Tensor::randn({9, 8}, fill, 0.f, 1.f);
    auto res = model.forward(g, x);
    auto mass = attention_mass_per_stage(res.diagnostics.distill_attention, 2, 2);
    REQUIRE(mass.size() == 2);
    CHECK(mass[0] + mass[1] == doctest::Approx(1.f).epsilon(1e-5));
}

TEST_CASE("matches a direct column-summation oracle") {
    Rng rng(58);
    HfqFormer model(HfqConfig::desk(), rng);
    Graph g;
    Rng fill(59);
    Tensor x = Tensor::randn({31, 64}, fill, 0.f, 1.f);
    auto res = model.forward(g, x);
    const Tensor& w = res.diagnostics.distill_attention;
    auto mass = attention_mass_per_stage(w, 3, 8);
    for (int s = 0; s < 3; ++s) {
        double direct = 0.0;
        for (int i = 0; i < w.rows(); ++i) {
            for (int q = 0; q < 8; ++q) direct += w.at(i, s * 8 + q);
        }
        direct /= w.rows();
        CHECK(mass[s] == doctest::Approx(direct).epsilon(1e-6));
    }
}

} // suite

TEST_SUITE("long form") {

TEST_CASE("window count follows the ceiling rule") {
    HfqConfig cfg = tiny_config();
    cfg.window_seconds = 0.2; // 10-frame windows at 50 Hz keep the test quick
    Rng rng(60);
    HfqFormerT<float> model(cfg, rng);
    struct Case { int frames; int windows; };
    for (auto c : {Case{10, 1}, Case{11, 2}, Case{30, 3}, Case{1, 1}}) {
        Rng fill(61);
        Tensor x = Tensor::randn({c.frames, 8}, fill, 0.f, 1.f);
        auto out = model.compress_long_form(x);
        CHECK(static_cast<int>(out.size()) == c.windows);
        for (const auto& ct : out) CHECK(ct.tokens.rows() == 2);
    }
}

TEST_CASE("windows are processed independently") {
    HfqConfig cfg = tiny_config();
    cfg.window_seconds = 0.2;
    Rng rng(62);
    HfqFormerT<float> model(cfg, rng);
    Rng fill(63);
    Tensor x = Tensor::randn({30, 8}, fill, 0.f, 1.f);
    auto windows = model.compress_long_form(x);
    REQUIRE(windows.size() == 3);
    for (int w = 0; w < 3; ++w) {
        Tensor slice = Tensor::zeros({10, 8});
        std::copy(x.data->begin() + w * 80, x.data->begin() + (w + 1) * 80, slice.data->begin());
        Graph g;
        auto direct = model.forward(g, slice);
        CHECK(*windows[w].tokens.data == *direct.tokens.data); // bitwise
        CHECK(windows[w].window_index == w);
        CHECK(windows[w].source_duration_sec == doctest::Approx(0.2));
    }
}

TEST_CASE("the trailing partial window reports its unpadded duration") {
    HfqConfig cfg = tiny_config();
    cfg.window_seconds = 0.2;
    Rng rng(64);
    HfqFormerT<float> model(cfg, rng);
    Rng fill(65);
    Tensor x = Tensor::randn({25, 8}, fill, 0.f, 1.f);
    auto windows = model.compress_long_form(x);
    REQUIRE(windows.size() == 3);
    CHECK(windows[2].source_duration_sec == doctest::Approx(0.1));
}

} // suite

TEST_SUITE("parameter accounting") {

TEST_CASE("desk-config parameter count matches the frozen enumeration") {
    Rng rng(66);
    HfqFormer model(HfqConfig::desk(), rng);
    std::size_t by_entries = 0;
    for (const auto& [name, t] : model.parameters()) by_entries += t.numel();
    CHECK(by_entries == model.count_parameters());
    CHECK(model.count_parameters() == 167808u); // frozen from the first enumeration
}

TEST_CASE("doubling the query count adds exactly stages x M x d") {
    HfqConfig base = HfqConfig::desk();
    HfqConfig doubled = base;
    doubled.queries_per_stage *= 2;
    Rng r1(67), r2(68);
    HfqFormer a(base, r1), b(doubled, r2);
    CHECK(b.count_parameters() - a.count_parameters() ==
          std::size_t(3) * base.queries_per_stage * base.d_model);
}

TEST_CASE("parameter names are unique and hierarchical") {
    Rng rng(69);
    HfqFormer model(HfqConfig::desk(), rng);
    auto params = model.parameters();
    std::set<std::string> names;
    for (const auto& [name, t] : params) {
        CHECK(names.insert(name).second);
        CHECK(name.find('.') != std::string::npos);
    }
    CHECK(names.count("stage1.compressor.wq.weight") == 1);
    CHECK(names.count("stage2.downsampler.conv1.weight") == 1);
    CHECK(names.count("distill.queries") == 1);
}

} // suite

TEST_SUITE("end-to-end gradients") {

TEST_CASE("tiny config, every coordinate, both modes and all stage counts") {
    struct Case { int stages; AttentionMode mode; };
    for (auto c : {Case{3, AttentionMode::projected}, Case{3, AttentionMode::literal_eq1},
                   Case{1, AttentionMode::projected}, Case{2, AttentionMode::projected}}) {
        Rng rng(70);
        HfqFormerT<double> model(tiny_config(c.stages, c.mode), rng);
        Rng fill(71);
        DTensor x = DTensor::randn({5, 8}, fill, 0.0, 1.0, true);
        std::vector<DTensor> params = {x};
        for (auto& [name, t] : model.parameters()) params.push_back(t);
        DGraph g;
        auto loss = [&](DGraph& gr) { return mean_square(gr, model.forward(gr, x).tokens); };
        // Step 1e-4: the default 1e-3 leaves visible O(h^2) truncation on a
        // graph this deep (verified quadratic: 2.9e-3 -> 2.9e-5 per decade).
        CHECK(grad_check<double>(g, loss, params, 1e-4) < 1e-3);
    }
}

TEST_CASE("desk config at twelve frames, deterministic coordinate sample") {
    Rng rng(72);
    HfqFormerT<double> model(HfqConfig::desk(), rng);
    Rng fill(73);
    DTensor x = DTensor::randn({12, 64}, fill, 0.0, 1.0, true);
    std::vector<DTensor> params = {x};
    for (auto& [name, t] : model.parameters()) params.push_back(t);
    DGraph g;
    auto loss = [&](DGraph& gr) { return mean_square(gr, model.forward(gr, x).tokens); };
    CHECK(grad_check<double>(g, loss, params, 1e-4, 16) < 1e-3);
}

} // suite
