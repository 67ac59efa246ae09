#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "rank_fixture.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef TSEMLAB_BIN
#error "TSEMLAB_BIN must point at the tsemlab executable"
#endif

#ifndef TSEMLAB_SCHEMA
#error "TSEMLAB_SCHEMA must point at the report schema json"
#endif

namespace {

const fs::path kScratch = fs::path("cli_scratch");

int run(const std::string& args, const std::string& log_name = "") {
    std::string cmd = std::string(TSEMLAB_BIN) + " " + args;
    if (!log_name.empty()) {
        cmd += " >" + (kScratch / log_name).string() + " 2>&1";
    } else {
        cmd += " >/dev/null 2>&1";
    }
    int status = std::system(cmd.c_str());
#ifdef _WIN32
    return status;
#else
    return WEXITSTATUS(status);
#endif
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_json(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return json::parse(in);
}

// Minimal structural validator for the type/required/properties/items schema
// subset used by the shipped schema document.
void validate_schema(const json& schema, const json& value, const std::string& where,
                     std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        const std::string t = schema["type"].get<std::string>();
        bool ok = (t == "object" && value.is_object()) || (t == "array" && value.is_array()) ||
                  (t == "string" && value.is_string()) || (t == "boolean" && value.is_boolean()) ||
                  (t == "integer" && value.is_number_integer()) ||
                  (t == "number" && value.is_number());
        if (!ok) errors.push_back(where + ": expected " + t);
    }
    if (schema.contains("required") && value.is_object()) {
        for (const auto& key : schema["required"]) {
            if (!value.contains(key.get<std::string>())) {
                errors.push_back(where + ": missing " + key.get<std::string>());
            }
        }
    }
    if (schema.contains("properties") && value.is_object()) {
        for (const auto& [key, sub] : schema["properties"].items()) {
            if (value.contains(key)) validate_schema(sub, value[key], where + "." + key, errors);
        }
    }
    if (schema.contains("items") && value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) {
            validate_schema(schema["items"], value[i], where + "[" + std::to_string(i) + "]", errors);
        }
    }
}

void check_report_against_schema(const fs::path& report_path) {
    auto schema = load_json(fs::path(TSEMLAB_SCHEMA));
    auto report = load_json(report_path);
    std::vector<std::string> errors;
    validate_schema(schema, report, "report", errors);
    for (const auto& e : errors) {
        INFO(e);
        CHECK(false);
    }
}

}  // namespace

TEST_CASE("cli pipeline: generate, train, explain, evaluate, rank, report") {
    fs::remove_all(kScratch);
    fs::create_directories(kScratch);
    const std::string data = (kScratch / "data").string();
    const std::string ckpt = (kScratch / "model.ckpt").string();

    CHECK(run("--help") == 0);

    REQUIRE(run("generate --out " + data +
                " --instances 120 --test-ratio 0.25 --seed 42 --format csv") == 0);
    CHECK(fs::exists(kScratch / "data" / "train"));
    CHECK(fs::exists(kScratch / "data" / "test"));
    CHECK(fs::exists(kScratch / "data" / "generate_config.json"));

    REQUIRE(run("train --data " + data + "/train --test-data " + data +
                "/test --arch tsem --epochs 8 --batch 4 --lr 0.003 --patience 8 --seed 42"
                " --val-ratio 0.2 --filters-2d 8 --filters-1d 8 --out " + ckpt +
                " --report " + (kScratch / "train.json").string()) == 0);
    REQUIRE(fs::exists(ckpt));
    CHECK(fs::exists(ckpt + ".stats.json"));
    auto train_json = load_json(kScratch / "train.json");
    CHECK(train_json["schema_version"].get<int>() == 1);
    CHECK(train_json["epochs_run"].get<int>() >= 1);
    CHECK(train_json.contains("test_accuracy"));

    SUBCASE("explain writes maps and smoothing degenerates at sigma zero") {
        const std::string out = (kScratch / "explain").string();
        REQUIRE(run("explain --checkpoint " + ckpt + " --data " + data +
                    "/test --methods grad_cam_pp,smooth_grad_cam_pp --instances 0,1"
                    " --noise-sigma 0 --smooth-samples 4 --jobs 2 --out " + out) == 0);
        for (const char* stem : {"grad_cam_pp_0", "grad_cam_pp_1", "smooth_grad_cam_pp_0",
                                 "smooth_grad_cam_pp_1"}) {
            CHECK(fs::exists(fs::path(out) / "maps" / (std::string(stem) + ".csv")));
            CHECK(fs::exists(fs::path(out) / "figures" / (std::string(stem) + ".svg")));
        }
        CHECK(slurp(fs::path(out) / "maps" / "grad_cam_pp_0.csv") ==
              slurp(fs::path(out) / "maps" / "smooth_grad_cam_pp_0.csv"));
        CHECK(slurp(fs::path(out) / "maps" / "grad_cam_pp_1.csv") ==
              slurp(fs::path(out) / "maps" / "smooth_grad_cam_pp_1.csv"));
    }

    SUBCASE("explain output is seed reproducible and job-count invariant") {
        const std::string a = (kScratch / "seed_a").string();
        const std::string b = (kScratch / "seed_b").string();
        const std::string c = (kScratch / "seed_c").string();
        const std::string base = " --data " + data +
                                 "/test --methods smooth_grad_cam_pp --instances 0"
                                 " --noise-sigma 0.1 --smooth-samples 4 --seed 9 --checkpoint " + ckpt;
        REQUIRE(run("explain" + base + " --jobs 1 --out " + a) == 0);
        REQUIRE(run("explain" + base + " --jobs 1 --out " + b) == 0);
        REQUIRE(run("explain" + base + " --jobs 3 --out " + c) == 0);
        auto map = slurp(fs::path(a) / "maps" / "smooth_grad_cam_pp_0.csv");
        CHECK(map == slurp(fs::path(b) / "maps" / "smooth_grad_cam_pp_0.csv"));
        CHECK(map == slurp(fs::path(c) / "maps" / "smooth_grad_cam_pp_0.csv"));
    }

    SUBCASE("evaluate emits a schema-valid report with curves and figures") {
        const std::string out = (kScratch / "eval").string();
        REQUIRE(run("evaluate --checkpoint " + ckpt + " --data " + data +
                    "/test --methods grad_cam --which all --max-instances 6"
                    " --causality-instances 3 --jobs 2 --seed 1 --out " + out) == 0);
        check_report_against_schema(fs::path(out) / "report.json");
        auto report = load_json(fs::path(out) / "report.json");
        CHECK(report["command"].get<std::string>() == "evaluate");
        CHECK(report["accuracy"].get<double>() >= 0.0);
        REQUIRE(report["methods"].size() == 1);
        CHECK(report["methods"][0]["name"].get<std::string>() == "grad_cam");
        CHECK(fs::exists(fs::path(out) / "curves" / "grad_cam_deletion.csv"));
        CHECK(fs::exists(fs::path(out) / "curves" / "grad_cam_insertion.csv"));
        CHECK(fs::exists(fs::path(out) / "figures" / "ad_ai_scatter.svg"));
        CHECK(fs::exists(fs::path(out) / "figures" / "causality_bars.svg"));

        // Curve CSV starts with the header and the zero-fraction point.
        auto curve = slurp(fs::path(out) / "curves" / "grad_cam_deletion.csv");
        CHECK(curve.rfind("fraction,prob\n0,", 0) == 0);

        // report re-renders figures from the same json.
        const std::string figs = (kScratch / "refigs").string();
        REQUIRE(run("report --input " + (fs::path(out) / "report.json").string() +
                    " --out " + figs) == 0);
        CHECK(fs::exists(fs::path(figs) / "ad_ai_scatter.svg"));
        CHECK(fs::exists(fs::path(figs) / "causality_bars.svg"));
    }

    SUBCASE("rank reproduces the frozen benchmark ranking") {
        const fs::path csv = kScratch / "accuracy.csv";
        {
            std::ofstream out(csv);
            out << "model";
            for (const auto& d : rankfix::dataset_names()) out << "," << d;
            out << "\n";
            const auto& table = rankfix::accuracy_by_dataset();
            const auto& models = rankfix::model_names();
            for (std::size_t m = 0; m < models.size(); ++m) {
                out << models[m];
                for (std::size_t d = 0; d < table.size(); ++d) {
                    if (std::isnan(table[d][m])) {
                        out << ",-";
                    } else {
                        out << "," << table[d][m];
                    }
                }
                out << "\n";
            }
        }
        const std::string out_dir = (kScratch / "rank").string();
        REQUIRE(run("rank --input " + csv.string() + " --alpha 0.05 --out " + out_dir) == 0);
        check_report_against_schema(fs::path(out_dir) / "report.json");
        auto report = load_json(fs::path(out_dir) / "report.json");
        REQUIRE(report["ranking"].size() == 11);
        const auto& ranks = rankfix::expected_avg_ranks();
        const auto& wins = rankfix::expected_wins_ties();
        for (std::size_t m = 0; m < 11; ++m) {
            CHECK(report["ranking"][m]["model"].get<std::string>() == rankfix::model_names()[m]);
            CHECK(report["ranking"][m]["avg_rank"].get<double>() ==
                  doctest::Approx(ranks[m]).epsilon(1e-5));
            CHECK(report["ranking"][m]["wins_ties"].get<int>() == wins[m]);
        }
        CHECK(report["cd"]["value"].get<double>() ==
              doctest::Approx(2.403800107369537).epsilon(1e-9));
        CHECK(fs::exists(fs::path(out_dir) / "figures" / "critical_difference.svg"));
    }

    SUBCASE("exit codes distinguish usage, data, and numeric failures") {
        // Unknown subcommand or option: usage error.
        CHECK(run("frobnicate") == 2);
        CHECK(run("explain --no-such-flag") == 2);
        // Unknown method id: usage error, and the message lists valid ids.
        CHECK(run("explain --checkpoint " + ckpt + " --data " + data +
                      "/test --methods gradcam --out " + (kScratch / "bad").string(),
                  "bad_method.log") == 2);
        auto log = slurp(kScratch / "bad_method.log");
        CHECK(log.find("grad_cam_pp") != std::string::npos);
        // Missing dataset path: rejected during parsing.
        CHECK(run("explain --checkpoint " + ckpt + " --data " + data +
                  "/nowhere --out x") == 2);
        // Corrupt checkpoint: data error.
        const fs::path bad_ckpt = kScratch / "bad.ckpt";
        {
            std::ofstream out(bad_ckpt, std::ios::binary);
            out << "XXXXnot a checkpoint";
        }
        CHECK(run("explain --checkpoint " + bad_ckpt.string() + " --data " + data +
                  "/test --out " + (kScratch / "bad2").string()) == 3);
        // Malformed report json: data error.
        const fs::path bad_json = kScratch / "bad.json";
        {
            std::ofstream out(bad_json);
            out << "{ nope";
        }
        CHECK(run("report --input " + bad_json.string() + " --out " +
                  (kScratch / "bad3").string()) == 3);
    }
}
