#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "tsem/errors.hpp"
#include "tsem/model.hpp"

using namespace tsem;
using testutil::random_tensor;

namespace {

ModelConfig small_config(Arch arch) {
    ModelConfig cfg;
    cfg.n_features = 3;
    cfg.seq_length = 16;
    cfg.n_classes = 4;
    cfg.filters_2d = 4;
    cfg.filters_1d = 4;
    cfg.arch = arch;
    cfg.seed = 11;
    return cfg;
}

MTSDataset micro_dataset(int n, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.seq_length = 16;
    spec.n_classes = 4;
    spec.bump_sigma = 1.5;
    spec.n_instances = n;
    spec.seed = seed;
    return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("window size follows the clamp rule") {
    ModelConfig cfg = small_config(Arch::Tsem);
    cfg.seq_length = 64;
    cfg.window_fraction = 0.2;
    CHECK(cfg.window_size() == 13);
    cfg.window_fraction = 0.001;
    CHECK(cfg.window_size() == 1);
    cfg.seq_length = 10000;
    cfg.window_fraction = 1.0;
    CHECK(cfg.window_size() == 500);  // hard cap
    cfg.seq_length = 5;
    cfg.window_fraction = 1.0;
    CHECK(cfg.window_size() == 5);
}

TEST_CASE("config validation rejects nonsense") {
    ModelConfig cfg = small_config(Arch::Xcm);
    cfg.n_classes = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = small_config(Arch::Xcm);
    cfg.window_fraction = 0.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.window_fraction = 1.5;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("all architectures emit probability simplexes and registry keys") {
    for (Arch arch : {Arch::MtexCnn, Arch::Xcm, Arch::Tsem}) {
        auto model = Model::build(small_config(arch));
        auto x = random_tensor({3, 16}, 21);
        auto res = model.forward(x, nullptr);
        INFO("arch " << arch_name(arch));
        REQUIRE(res.probs->size() == 4);
        double sum = 0.0;
        for (double p : res.probs->data) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        CHECK(res.activations.count("branch1_maps") == 1);
        CHECK(res.activations.count("pre_gap_maps") == 1);
        CHECK(res.activations.count("logits") == 1);
        CHECK(res.activations.count("probs") == 1);
        if (arch != Arch::MtexCnn) CHECK(res.activations.count("temporal_vector") == 1);
    }
}

TEST_CASE("xcm intermediate concat map is (D+1) x T") {
    auto model = Model::build(small_config(Arch::Xcm));
    auto x = random_tensor({3, 16}, 22);
    auto res = model.forward(x, nullptr);
    REQUIRE(res.activations.count("concat_maps") == 1);
    CHECK(res.activations.at("concat_maps")->shape == std::vector<int>{4, 16});
}

TEST_CASE("tsem pre-gap maps keep (D,T) and branch1 maps keep filters_2d") {
    auto model = Model::build(small_config(Arch::Tsem));
    auto x = random_tensor({3, 16}, 23);
    auto res = model.forward(x, nullptr);
    CHECK(res.activations.at("branch1_maps")->shape == std::vector<int>{4, 3, 16});
    CHECK(res.activations.at("pre_gap_maps")->shape == std::vector<int>{4, 3, 16});
    CHECK(res.activations.at("temporal_vector")->shape == std::vector<int>{16});
    CHECK(model.map_layout() == MapLayout::FeatureTime);
}

TEST_CASE("tsem gate forced to ones reproduces the pre-fusion maps exactly") {
    auto model = Model::build(small_config(Arch::Tsem));
    auto x = random_tensor({3, 16}, 24);
    std::vector<double> ones(16, 1.0);
    ForwardOptions opts;
    opts.gate_override = &ones;
    auto res = model.forward(x, nullptr, opts);
    auto fused = res.activations.at("branch1_maps");
    auto pre = res.activations.at("branch1_prefuse");
    REQUIRE(fused->shape == pre->shape);
    for (std::size_t i = 0; i < fused->data.size(); ++i) {
        CHECK(fused->data[i] == pre->data[i]);  // bit exact
    }
}

TEST_CASE("mtex-cnn halves the time axis twice") {
    auto model = Model::build(small_config(Arch::MtexCnn));
    CHECK(model.map_time_extent() == 4);  // T=16 -> 8 -> 4
    auto x = random_tensor({3, 16}, 25);
    auto res = model.forward(x, nullptr);
    CHECK(res.activations.at("branch1_maps")->dim(2) == 4);
    CHECK(model.map_layout() == MapLayout::FlatStrided);
}

TEST_CASE("forward is deterministic and parameter counts stay desk scale") {
    for (Arch arch : {Arch::MtexCnn, Arch::Xcm, Arch::Tsem}) {
        auto m1 = Model::build(small_config(arch));
        auto m2 = Model::build(small_config(arch));
        CHECK(m1.parameter_checksum() == m2.parameter_checksum());
        auto x = random_tensor({3, 16}, 26);
        CHECK(m1.forward(x, nullptr).probs->data == m2.forward(x, nullptr).probs->data);
        CHECK(m1.parameter_count() < 500000);
    }
    // Reference geometry stays under the parameter budget too.
    ModelConfig uwave;
    uwave.n_features = 3;
    uwave.seq_length = 315;
    uwave.n_classes = 8;
    uwave.arch = Arch::Tsem;
    CHECK(Model::build(uwave).parameter_count() < 500000);
}

TEST_CASE("forward latency at reference geometry is under 50 ms") {
    ModelConfig cfg;
    cfg.n_features = 3;
    cfg.seq_length = 315;
    cfg.n_classes = 8;
    cfg.arch = Arch::Tsem;
    auto model = Model::build(cfg);
    auto x = random_tensor({3, 315}, 27);
    model.forward(x, nullptr);  // warm up
    auto t0 = std::chrono::steady_clock::now();
    model.forward(x, nullptr);
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    CHECK(ms < 50.0);
}

TEST_CASE("ablation hook zeroes exactly one pre-gap channel") {
    auto model = Model::build(small_config(Arch::Tsem));
    auto x = random_tensor({3, 16}, 28);
    ForwardOptions opts;
    opts.ablate_pre_gap_channel = 2;
    auto res = model.forward(x, nullptr, opts);
    auto maps = res.activations.at("pre_gap_maps");
    int inner = maps->size() / maps->dim(0);
    for (int i = 0; i < inner; ++i) CHECK(maps->data[static_cast<std::size_t>(2 * inner + i)] == 0.0);
    auto clean = model.forward(x, nullptr);
    bool differs = clean.logits->data != res.logits->data;
    CHECK(differs);
}

TEST_CASE("training with lr 0 leaves parameters and loss flat") {
    auto ds = micro_dataset(24, 31);
    auto model = Model::build(small_config(Arch::Tsem));
    auto before = model.parameter_checksum();
    TrainOptions opts;
    opts.epochs = 3;
    opts.batch_size = 8;
    opts.lr = 0.0;
    opts.seed = 5;
    auto report = train(model, ds, nullptr, opts);
    CHECK(model.parameter_checksum() == before);
    for (std::size_t e = 1; e < report.epoch_loss.size(); ++e) {
        CHECK(report.epoch_loss[e] == doctest::Approx(report.epoch_loss[0]).epsilon(1e-12));
    }
}

TEST_CASE("training is deterministic given a seed and reduces loss") {
    auto ds = micro_dataset(36, 33);
    TrainOptions opts;
    opts.epochs = 4;
    opts.batch_size = 6;
    opts.seed = 17;
    auto m1 = Model::build(small_config(Arch::Xcm));
    auto m2 = Model::build(small_config(Arch::Xcm));
    auto r1 = train(m1, ds, nullptr, opts);
    auto r2 = train(m2, ds, nullptr, opts);
    CHECK(r1.epoch_loss == r2.epoch_loss);
    CHECK(m1.parameter_checksum() == m2.parameter_checksum());
    CHECK(r1.epoch_loss.back() < r1.epoch_loss.front());
}

TEST_CASE("checkpoint save/load round trips bit exactly") {
    namespace fs = std::filesystem;
    auto path = (fs::temp_directory_path() / "tsem_ckpt_test.tsem").string();
    for (Arch arch : {Arch::MtexCnn, Arch::Xcm, Arch::Tsem}) {
        auto model = Model::build(small_config(arch));
        // Touch the BN running stats so they are exercised by the round trip.
        auto ds = micro_dataset(12, 35);
        TrainOptions opts;
        opts.epochs = 1;
        opts.batch_size = 4;
        train(model, ds, nullptr, opts);
        model.save(path);
        auto back = Model::load(path);
        CHECK(back.parameter_checksum() == model.parameter_checksum());
        auto x = random_tensor({3, 16}, 36);
        CHECK(back.forward(x, nullptr).probs->data == model.forward(x, nullptr).probs->data);
    }
}

TEST_CASE("checkpoint loader rejects corruption") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path();
    auto good = (dir / "tsem_ckpt_good.tsem").string();
    auto model = Model::build(small_config(Arch::Tsem));
    model.save(good);

    SUBCASE("bad magic") {
        auto bad = (dir / "tsem_ckpt_magic.tsem").string();
        std::ifstream in(good, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        bytes[0] = 'X';
        std::ofstream(bad, std::ios::binary) << bytes;
        CHECK_THROWS_AS(Model::load(bad), DataError);
    }
    SUBCASE("truncated") {
        auto bad = (dir / "tsem_ckpt_trunc.tsem").string();
        std::ifstream in(good, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        bytes.resize(bytes.size() / 2);
        std::ofstream(bad, std::ios::binary) << bytes;
        CHECK_THROWS_AS(Model::load(bad), DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(Model::load((dir / "tsem_no_such.tsem").string()), DataError);
    }
}

TEST_CASE("non-finite training data raises a numeric error naming the epoch") {
    auto ds = micro_dataset(12, 37);
    ds.instances[3][5] = std::numeric_limits<double>::quiet_NaN();
    auto model = Model::build(small_config(Arch::Tsem));
    TrainOptions opts;
    opts.epochs = 2;
    opts.batch_size = 4;
    CHECK_THROWS_AS(train(model, ds, nullptr, opts), NumericError);
}
