#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "tsem/data.hpp"
#include "tsem/errors.hpp"

using namespace tsem;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("tsem_data_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

MTSDataset tiny_dataset() {
    MTSDataset ds;
    ds.n_features = 2;
    ds.seq_length = 4;
    ds.n_classes = 2;
    ds.class_names = {"a", "b"};
    ds.instances = {{0.25, -1.5, 3.0, 0.125, 1.0, 2.0, -2.0, 0.5},
                    {1.1, 1.2, 1.3, 1.4, -0.1, -0.2, -0.3, -0.4},
                    {0.0, 0.5, 0.0, 0.5, 2.0, 2.0, 2.0, 2.0}};
    ds.labels = {0, 1, 0};
    return ds;
}

}  // namespace

TEST_CASE("uea text round trip is bit exact") {
    auto ds = tiny_dataset();
    auto dir = temp_dir("ts_rt");
    auto path = (dir / "x.ts").string();
    save_uea_text(ds, path, "tiny");
    auto back = load_uea_text(path);
    CHECK(back.n_features == ds.n_features);
    CHECK(back.seq_length == ds.seq_length);
    CHECK(back.n_classes == ds.n_classes);
    CHECK(back.labels == ds.labels);
    REQUIRE(back.instances.size() == ds.instances.size());
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        CHECK(back.instances[i] == ds.instances[i]);  // exact, %.17g serialization
    }
}

TEST_CASE("csv directory round trip is bit exact") {
    auto ds = tiny_dataset();
    auto dir = temp_dir("csv_rt");
    save_csv(ds, (dir / "d").string());
    auto back = load_csv((dir / "d").string());
    CHECK(back.labels == ds.labels);
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        CHECK(back.instances[i] == ds.instances[i]);
    }
}

TEST_CASE("ts parser reports malformed lines with numbers") {
    auto dir = temp_dir("ts_err");
    SUBCASE("ragged channel length") {
        auto p = (dir / "ragged.ts").string();
        std::ofstream(p) << "@problemName t\n@classLabel true a b\n@data\n"
                         << "1,2,3:4,5,6:a\n1,2:4,5,6:a\n";
        try {
            load_uea_text(p);
            CHECK(false);
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("5") != std::string::npos);
        }
    }
    SUBCASE("unknown label") {
        auto p = (dir / "label.ts").string();
        std::ofstream(p) << "@problemName t\n@classLabel true a b\n@data\n1,2:3,4:zzz\n";
        CHECK_THROWS_AS(load_uea_text(p), DataError);
    }
    SUBCASE("non finite token") {
        auto p = (dir / "nan.ts").string();
        std::ofstream(p) << "@problemName t\n@classLabel true a b\n@data\n1,nan:3,4:a\n";
        CHECK_THROWS_AS(load_uea_text(p), DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_uea_text((dir / "nope.ts").string()), DataError);
    }
}

TEST_CASE("z normalization and constant channel guard") {
    auto ds = tiny_dataset();
    auto stats = compute_channel_stats(ds);
    auto norm = apply_normalization(ds, stats);
    for (int c = 0; c < ds.n_features; ++c) {
        double mean = 0.0;
        int count = 0;
        for (const auto& inst : norm.instances) {
            for (int t = 0; t < ds.seq_length; ++t) {
                mean += inst[static_cast<std::size_t>(c * ds.seq_length + t)];
                ++count;
            }
        }
        CHECK(mean / count == doctest::Approx(0.0).epsilon(1e-9));
    }
    // A constant channel must not divide by ~0.
    MTSDataset flat = ds;
    for (auto& inst : flat.instances) {
        for (int t = 0; t < 4; ++t) inst[static_cast<std::size_t>(t)] = 5.0;
    }
    auto fstats = compute_channel_stats(flat);
    CHECK(fstats.std_dev[0] == doctest::Approx(1.0));
    auto fnorm = apply_normalization(flat, fstats);
    for (const auto& inst : fnorm.instances) {
        CHECK(inst[0] == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("synthetic generator places bumps per spec") {
    SyntheticSpec spec;
    spec.noise_sigma = 0.0;
    spec.n_instances = 60;
    auto ds = generate_synthetic(spec);
    ds.validate();
    CHECK(ds.n_features == 3);
    CHECK(ds.seq_length == 64);
    CHECK(ds.n_classes == 6);
    CHECK(ds.instances.size() == 60);
    CHECK(spec.bump_channel(4) == 1);
    CHECK(spec.bump_center(0) == doctest::Approx(16.0));
    CHECK(spec.bump_center(3) == doctest::Approx(48.0));
    // Noise-free: the bump channel peaks at the center, other channels are 0.
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        int k = ds.labels[i];
        int c = spec.bump_channel(k);
        double center = spec.bump_center(k);
        const auto& inst = ds.instances[i];
        int argmax = 0;
        double best = -1.0;
        for (int t = 0; t < 64; ++t) {
            double v = inst[static_cast<std::size_t>(c * 64 + t)];
            if (v > best) {
                best = v;
                argmax = t;
            }
        }
        CHECK(std::abs(argmax - center) <= 0.5);
        CHECK(best == doctest::Approx(spec.amplitude).epsilon(1e-12));
        for (int oc = 0; oc < 3; ++oc) {
            if (oc == c) continue;
            for (int t = 0; t < 64; ++t) {
                CHECK(inst[static_cast<std::size_t>(oc * 64 + t)] == 0.0);
            }
        }
    }
}

TEST_CASE("noise free synthetic data is nearest-centroid separable") {
    SyntheticSpec spec;
    spec.noise_sigma = 0.0;
    spec.n_instances = 60;
    auto ds = generate_synthetic(spec);
    // With no noise every instance equals its class centroid exactly.
    std::vector<std::vector<double>> centroid(6);
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        if (centroid[static_cast<std::size_t>(ds.labels[i])].empty()) {
            centroid[static_cast<std::size_t>(ds.labels[i])] = ds.instances[i];
        }
    }
    int correct = 0;
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        int best = -1;
        double best_d = 1e300;
        for (int k = 0; k < 6; ++k) {
            double d = 0.0;
            for (std::size_t j = 0; j < ds.instances[i].size(); ++j) {
                double diff = ds.instances[i][j] - centroid[static_cast<std::size_t>(k)][j];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        correct += best == ds.labels[i];
    }
    CHECK(correct == 60);
}

TEST_CASE("synthetic generation is deterministic per seed") {
    SyntheticSpec spec;
    spec.n_instances = 30;
    auto a = generate_synthetic(spec);
    auto b = generate_synthetic(spec);
    CHECK(a.instances == b.instances);
    spec.seed = 43;
    auto c = generate_synthetic(spec);
    CHECK(a.instances != c.instances);
}

TEST_CASE("bump window leaving the series is rejected") {
    SyntheticSpec spec;
    spec.bump_sigma = 40.0;  // +/- 2 sigma leaves [0,T)
    CHECK_THROWS_AS(spec.validate(), UsageError);
}

TEST_CASE("stratified split is deterministic and stratified") {
    SyntheticSpec spec;
    spec.n_instances = 120;
    auto ds = generate_synthetic(spec);
    auto [train1, test1] = split(ds, 0.75, 9);
    auto [train2, test2] = split(ds, 0.75, 9);
    CHECK(train1.instances == train2.instances);
    CHECK(test1.labels == test2.labels);
    CHECK(train1.instances.size() + test1.instances.size() == 120);
    std::vector<int> per_class(6, 0);
    for (int l : test1.labels) ++per_class[static_cast<std::size_t>(l)];
    for (int count : per_class) CHECK(count == 5);  // 25% of 20 per class
}
