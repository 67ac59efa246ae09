#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "tsem/attribution.hpp"
#include "tsem/errors.hpp"
#include "tsem/model.hpp"

using namespace tsem;
using testutil::random_tensor;

namespace {

Model small_model(Arch arch, std::uint64_t seed = 41) {
    ModelConfig cfg;
    cfg.n_features = 3;
    cfg.seq_length = 16;
    cfg.n_classes = 4;
    cfg.filters_2d = 4;
    cfg.filters_1d = 4;
    cfg.arch = arch;
    cfg.seed = seed;
    return Model::build(cfg);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return 1.0;
    return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("method registry round trips and rejects unknown names") {
    CHECK(all_methods().size() == 10);
    for (Method m : all_methods()) {
        CHECK(method_from_name(method_name(m)) == m);
    }
    try {
        method_from_name("gradcam");
        CHECK(false);
    } catch (const UsageError& e) {
        // The error lists the valid identifiers.
        CHECK(std::string(e.what()).find("grad_cam_pp") != std::string::npos);
    }
}

TEST_CASE("maps have input geometry and respect class range") {
    for (Arch arch : {Arch::MtexCnn, Arch::Xcm, Arch::Tsem}) {
        auto model = small_model(arch);
        CamContext ctx;
        ctx.model = &model;
        ctx.smooth_samples = 2;
        ctx.integration_steps = 2;
        auto x = random_tensor({3, 16}, 51);
        for (Method m : all_methods()) {
            INFO(arch_name(arch) << " / " << method_name(m));
            auto map = explain(ctx, x, 1, m);
            CHECK(map.n_features == 3);
            CHECK(map.seq_length == 16);
            CHECK(static_cast<int>(map.values.size()) == 48);
            for (double v : map.values) {
                CHECK(std::isfinite(v));
                CHECK(v >= 0.0);  // ReLU'd combination
            }
        }
        CamContext bad = ctx;
        CHECK_THROWS_AS(cam(bad, x, 7), UsageError);
        CHECK_THROWS_AS(cam(bad, x, -1), UsageError);
    }
}

TEST_CASE("degeneracy chain: smoothed and integrated variants equal bases exactly") {
    for (Arch arch : {Arch::Tsem, Arch::Xcm}) {
        auto model = small_model(arch);
        auto x = random_tensor({3, 16}, 52);
        CamContext base_ctx;
        base_ctx.model = &model;

        {
            // sigma = 0 with any n.
            CamContext ctx = base_ctx;
            ctx.noise_sigma = 0.0;
            ctx.smooth_samples = 5;
            auto smooth = smooth_grad_cam_pp(ctx, x, 2);
            auto plain = grad_cam_pp(base_ctx, x, 2);
            CHECK(smooth.values == plain.values);

            auto in_smooth = input_smoothed_score_cam(ctx, x, 2);
            auto plain_score = score_cam(base_ctx, x, 2);
            CHECK(in_smooth.values == plain_score.values);

            auto act_smooth = activation_smoothed_score_cam(ctx, x, 2);
            CHECK(act_smooth.values == plain_score.values);
        }
        {
            // n = 1 means the single sample is the clean input even when
            // sigma is nonzero.
            CamContext ctx = base_ctx;
            ctx.noise_sigma = 0.5;
            ctx.smooth_samples = 1;
            auto smooth = smooth_grad_cam_pp(ctx, x, 1);
            auto plain = grad_cam_pp(base_ctx, x, 1);
            CHECK(smooth.values == plain.values);
        }
        {
            // m = 1 integrated score-cam equals score-cam exactly.
            CamContext ctx = base_ctx;
            ctx.integration_steps = 1;
            auto integrated = integrated_score_cam(ctx, x, 0);
            auto plain = score_cam(base_ctx, x, 0);
            CHECK(integrated.values == plain.values);
        }
    }
}

TEST_CASE("cam and grad-cam nearly coincide on a GAP + linear head") {
    // For maps read at the GAP boundary the gradient of logit c w.r.t. map k
    // is dense.w[c,k]/size, so grad-cam weights are proportional to CAM's.
    for (Arch arch : {Arch::Tsem, Arch::Xcm, Arch::MtexCnn}) {
        auto model = small_model(arch, 43);
        CamContext ctx;
        ctx.model = &model;
        auto x = random_tensor({3, 16}, 53);
        auto a = cam(ctx, x, 1);
        auto b = grad_cam(ctx, x, 1);
        INFO(arch_name(arch));
        CHECK(cosine(a.values, b.values) > 0.999);
    }
}

TEST_CASE("grad-cam++ 0/0 guard yields zero weights on dead activations") {
    auto model = small_model(Arch::Tsem);
    CamContext ctx;
    ctx.model = &model;
    // Zero input produces zero 2-D conv activations before bias; the map must
    // still be finite and non-negative.
    auto x = Tensor::zeros({3, 16});
    auto map = grad_cam_pp(ctx, x, 0);
    for (double v : map.values) CHECK(std::isfinite(v));
}

TEST_CASE("score-cam weights ignore flat activation channels") {
    auto model = small_model(Arch::Tsem);
    CamContext ctx;
    ctx.model = &model;
    auto x = Tensor::zeros({3, 16});  // all activations flat after conv of zeros?
    // Whatever the activations, score_cam must not produce NaNs from flat maps.
    auto map = score_cam(ctx, x, 0);
    for (double v : map.values) CHECK(std::isfinite(v));
}

TEST_CASE("ablation-cam weights match the explicit ablation formula") {
    auto model = small_model(Arch::Tsem);
    CamContext ctx;
    ctx.model = &model;
    auto x = random_tensor({3, 16}, 54);
    int c = 2;
    auto res = model.forward(x, nullptr);
    auto act = res.activations.at("pre_gap_maps");
    double y = res.logits->data[static_cast<std::size_t>(c)];
    int channels = act->dim(0);
    int inner = act->size() / channels;
    // Recompute the expected map by hand.
    std::vector<double> weights(static_cast<std::size_t>(channels));
    for (int k = 0; k < channels; ++k) {
        ForwardOptions opts;
        opts.ablate_pre_gap_channel = k;
        auto ab = model.forward(x, nullptr, opts);
        weights[static_cast<std::size_t>(k)] =
            (y - ab.logits->data[static_cast<std::size_t>(c)]) / (std::abs(y) + 1e-12);
    }
    std::vector<double> expect(static_cast<std::size_t>(inner), 0.0);
    for (int k = 0; k < channels; ++k) {
        for (int i = 0; i < inner; ++i) {
            expect[static_cast<std::size_t>(i)] += weights[static_cast<std::size_t>(k)] * act->data[k * inner + i];
        }
    }
    for (auto& v : expect) v = std::max(0.0, v);
    auto map = ablation_cam(ctx, x, c);
    REQUIRE(map.values.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(map.values[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
}

TEST_CASE("grad-cam weights equal mean gradients (hand check)") {
    auto model = small_model(Arch::Tsem);
    CamContext ctx;
    ctx.model = &model;
    auto x = random_tensor({3, 16}, 55);
    int c = 1;
    // Independent recomputation through the tape.
    Tape tape;
    auto res = model.forward(x, &tape);
    auto act = res.activations.at("pre_gap_maps");
    auto y_c = slice0(&tape, res.logits, c, 1);
    tape.backward(y_c);
    int channels = act->dim(0), inner = act->size() / channels;
    std::vector<double> expect(static_cast<std::size_t>(inner), 0.0);
    for (int k = 0; k < channels; ++k) {
        double alpha = 0.0;
        for (int i = 0; i < inner; ++i) alpha += act->grad[static_cast<std::size_t>(k * inner + i)];
        alpha /= inner;
        for (int i = 0; i < inner; ++i) {
            expect[static_cast<std::size_t>(i)] += alpha * act->data[k * inner + i];
        }
    }
    for (auto& v : expect) v = std::max(0.0, v);
    auto map = grad_cam(ctx, x, c);
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(map.values[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    }
}

TEST_CASE("xgrad-cam weights match the normalized formula") {
    auto model = small_model(Arch::Xcm);
    CamContext ctx;
    ctx.model = &model;
    auto x = random_tensor({3, 16}, 56);
    auto map = xgrad_cam(ctx, x, 3);
    for (double v : map.values) CHECK(std::isfinite(v));
    // TimeOnly layout: rows must be identical replicas.
    for (int t = 0; t < 16; ++t) {
        CHECK(map.at(0, t) == map.at(1, t));
        CHECK(map.at(0, t) == map.at(2, t));
    }
}

TEST_CASE("mtex maps reshape and upsample the strided layout") {
    auto model = small_model(Arch::MtexCnn);
    CamContext ctx;
    ctx.model = &model;
    auto x = random_tensor({3, 16}, 57);
    auto map = grad_cam(ctx, x, 0);
    CHECK(map.n_features == 3);
    CHECK(map.seq_length == 16);
    // Values along time are piecewise-linear between 4 anchors, so strictly
    // monotone segments of length > 1 exist rather than constant blocks.
    for (double v : map.values) CHECK(std::isfinite(v));
}

TEST_CASE("normalize_map modes") {
    ExplanationMap map;
    map.n_features = 2;
    map.seq_length = 2;
    map.values = {0.0, 1.0, 3.0, 4.0};
    auto mm = normalize_map(map, MapNormalization::MinMax);
    CHECK(mm.values == std::vector<double>{0.0, 0.25, 0.75, 1.0});
    auto s1 = normalize_map(map, MapNormalization::Sum1);
    double sum = 0.0;
    for (double v : s1.values) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // Constant positive map: sum1 spreads uniformly, minmax collapses to 0.
    map.values = {2.0, 2.0, 2.0, 2.0};
    auto flat_s1 = normalize_map(map, MapNormalization::Sum1);
    for (double v : flat_s1.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    auto flat_mm = normalize_map(map, MapNormalization::MinMax);
    for (double v : flat_mm.values) CHECK(v == 0.0);
}

TEST_CASE("explanations are deterministic given the context seed") {
    auto model = small_model(Arch::Tsem);
    CamContext ctx;
    ctx.model = &model;
    ctx.seed = 77;
    ctx.smooth_samples = 3;
    auto x = random_tensor({3, 16}, 58);
    auto a = smooth_grad_cam_pp(ctx, x, 1);
    auto b = smooth_grad_cam_pp(ctx, x, 1);
    CHECK(a.values == b.values);
    auto c = input_smoothed_score_cam(ctx, x, 1);
    auto d = input_smoothed_score_cam(ctx, x, 1);
    CHECK(c.values == d.values);
}
