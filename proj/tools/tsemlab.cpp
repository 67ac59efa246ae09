// tsemlab: data generation, training, explanation, evaluation and ranking
// for the TSEM / XCM / MTEX-CNN laboratory.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "tsem/attribution.hpp"
#include "tsem/data.hpp"
#include "tsem/errors.hpp"
#include "tsem/metrics.hpp"
#include "tsem/model.hpp"
#include "tsem/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tsem;

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

MTSDataset load_dataset(const std::string& path) {
    if (fs::is_directory(path)) return load_csv(path);
    if (path.size() > 3 && path.substr(path.size() - 3) == ".ts") return load_uea_text(path);
    throw DataError("dataset path must be a CSV directory or a .ts file: " + path);
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_map_csv(const ExplanationMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (int row = 0; row < map.n_features; ++row) {
        for (int col = 0; col < map.seq_length; ++col) {
            out << (col ? "," : "") << g17(map.at(row, col));
        }
        out << "\n";
    }
}

void write_curve_csv(const std::vector<CurvePoint>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "fraction,prob\n";
    for (const auto& p : points) out << g17(p.fraction) << "," << g17(p.prob) << "\n";
}

// Sidecar with the training-split normalization statistics so evaluation
// applies the same transform instead of refitting.
void save_stats(const ChannelStats& stats, const std::string& path) {
    json j;
    j["mean"] = stats.mean;
    j["std_dev"] = stats.std_dev;
    write_json(j, path);
}

std::optional<ChannelStats> load_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed stats sidecar: " + path);
    ChannelStats stats;
    stats.mean = j.at("mean").get<std::vector<double>>();
    stats.std_dev = j.at("std_dev").get<std::vector<double>>();
    return stats;
}

MTSDataset prepare_eval_data(const std::string& data_path, const std::string& checkpoint) {
    auto ds = load_dataset(data_path);
    ds.validate();
    auto stats = load_stats(checkpoint + ".stats.json");
    if (stats) return apply_normalization(ds, *stats);
    return z_normalize(ds);
}

// Stable-order instance parallelism: fn(i) writes only into slot i of
// caller-owned storage, so output is independent of the worker count.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mu;
    for (int w = 0; w < std::min(jobs, n); ++w) {
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    failed = true;
                    if (error.empty()) error = e.what();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed) throw NumericError(error);
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<Method> methods;
    if (names.empty() || (names.size() == 1 && names[0] == "all")) {
        return all_methods();
    }
    for (const auto& n : names) methods.push_back(method_from_name(n));
    return methods;
}

struct CommonModelFlags {
    std::string arch = "tsem";
    double window_fraction = 0.2;
    int filters_2d = 16;
    int filters_1d = 16;
};

struct CamFlags {
    int smooth_samples = 8;
    double noise_sigma = 0.1;
    int integration_steps = 8;
};

CamContext make_context(const Model& model, const CamFlags& cf, std::uint64_t seed) {
    CamContext ctx;
    ctx.model = &model;
    ctx.smooth_samples = cf.smooth_samples;
    ctx.noise_sigma = cf.noise_sigma;
    ctx.integration_steps = cf.integration_steps;
    ctx.seed = seed;
    return ctx;
}

int run_generate(const SyntheticSpec& spec, const std::string& out, const std::string& format,
                 double test_ratio) {
    spec.validate();
    auto ds = generate_synthetic(spec);
    fs::create_directories(out);
    json cfg;
    cfg["n_features"] = spec.n_features;
    cfg["seq_length"] = spec.seq_length;
    cfg["n_classes"] = spec.n_classes;
    cfg["bump_sigma"] = spec.bump_sigma;
    cfg["amplitude"] = spec.amplitude;
    cfg["noise_sigma"] = spec.noise_sigma;
    cfg["n_instances"] = spec.n_instances;
    cfg["seed"] = spec.seed;
    cfg["format"] = format;
    cfg["test_ratio"] = test_ratio;
    auto emit = [&](const MTSDataset& part, const std::string& name) {
        if (format == "ts") {
            save_uea_text(part, (fs::path(out) / (name + ".ts")).string(), "synthetic");
        } else {
            save_csv(part, (fs::path(out) / name).string());
        }
    };
    if (test_ratio > 0.0) {
        auto [train_part, test_part] = split(ds, 1.0 - test_ratio, spec.seed);
        emit(train_part, "train");
        emit(test_part, "test");
    } else {
        emit(ds, "train");
    }
    write_json(cfg, (fs::path(out) / "generate_config.json").string());
    std::cout << "wrote " << ds.size() << " instances to " << out << "\n";
    return 0;
}

int run_train(const std::string& data_path, const std::string& test_path,
              const CommonModelFlags& mf, const TrainOptions& topts, double val_ratio,
              const std::string& checkpoint, const std::string& report_path) {
    auto full = load_dataset(data_path);
    full.validate();
    auto [train_raw, val_raw] = split(full, 1.0 - val_ratio, topts.seed);
    auto stats = compute_channel_stats(train_raw);
    auto train_set = apply_normalization(train_raw, stats);
    auto val_set = apply_normalization(val_raw, stats);

    ModelConfig cfg;
    cfg.n_features = full.n_features;
    cfg.seq_length = full.seq_length;
    cfg.n_classes = full.n_classes;
    cfg.window_fraction = mf.window_fraction;
    cfg.filters_2d = mf.filters_2d;
    cfg.filters_1d = mf.filters_1d;
    cfg.arch = arch_from_name(mf.arch);
    cfg.seed = topts.seed;
    auto model = Model::build(cfg);

    auto report = train(model, train_set, val_set.size() ? &val_set : nullptr, topts);
    fs::create_directories(fs::path(checkpoint).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(checkpoint).parent_path());
    model.save(checkpoint);
    save_stats(stats, checkpoint + ".stats.json");

    json j;
    j["schema_version"] = 1;
    j["command"] = "train";
    j["config"] = {{"data", data_path},        {"arch", mf.arch},
                   {"window_fraction", mf.window_fraction}, {"filters_2d", mf.filters_2d},
                   {"filters_1d", mf.filters_1d},           {"epochs", topts.epochs},
                   {"batch_size", topts.batch_size},        {"lr", topts.lr},
                   {"seed", topts.seed},                    {"val_ratio", val_ratio}};
    j["epochs_run"] = report.epochs_run;
    j["epoch_loss"] = report.epoch_loss;
    j["train_accuracy"] = report.train_accuracy;
    j["val_accuracy"] = report.val_accuracy;
    j["wall_seconds"] = report.wall_seconds;
    j["params_checksum"] = report.params_checksum;
    j["parameter_count"] = model.parameter_count();
    if (!test_path.empty()) {
        auto test_set = apply_normalization(load_dataset(test_path), stats);
        j["test_accuracy"] = evaluate_accuracy(model, test_set);
    }
    if (!report_path.empty()) write_json(j, report_path);
    double final_acc = report.val_accuracy.empty()
                           ? (report.train_accuracy.empty() ? 0.0 : report.train_accuracy.back())
                           : report.val_accuracy.back();
    std::cout << "trained " << mf.arch << " for " << report.epochs_run << " epochs, accuracy "
              << final_acc << ", checkpoint " << checkpoint << "\n";
    return 0;
}

int run_explain(const std::string& checkpoint, const std::string& data_path,
                const std::vector<std::string>& method_names, std::vector<int> instances,
                int target, const CamFlags& cf, std::uint64_t seed, int jobs,
                const std::string& out) {
    auto methods = parse_methods(method_names);
    auto model = Model::load(checkpoint);
    auto ds = prepare_eval_data(data_path, checkpoint);
    if (instances.empty()) instances.push_back(0);
    for (int i : instances) {
        if (i < 0 || static_cast<std::size_t>(i) >= ds.size()) {
            throw UsageError("instance index " + std::to_string(i) + " out of range");
        }
    }
    fs::create_directories(fs::path(out) / "maps");
    fs::create_directories(fs::path(out) / "figures");
    auto ctx = make_context(model, cf, seed);
    struct Item { Method method; int instance; };
    std::vector<Item> items;
    for (Method m : methods) {
        for (int i : instances) items.push_back({m, i});
    }
    std::vector<ExplanationMap> results(items.size());
    parallel_for(static_cast<int>(items.size()), jobs, [&](int idx) {
        const auto& item = items[static_cast<std::size_t>(idx)];
        auto instance = ds.instance_tensor(static_cast<std::size_t>(item.instance));
        int c = target >= 0 ? target : model.predict_class(instance);
        results[static_cast<std::size_t>(idx)] = explain(ctx, instance, c, item.method);
    });
    for (std::size_t idx = 0; idx < items.size(); ++idx) {
        const auto& item = items[idx];
        std::string stem = method_name(item.method) + "_" + std::to_string(item.instance);
        write_map_csv(results[idx], (fs::path(out) / "maps" / (stem + ".csv")).string());
        render_heatmap(results[idx], method_name(item.method),
                       (fs::path(out) / "figures" / (stem + ".svg")).string());
    }
    std::cout << "wrote " << items.size() << " maps to " << out << "\n";
    return 0;
}

int run_evaluate(const std::string& checkpoint, const std::string& data_path,
                 const std::vector<std::string>& method_names, const std::string& which,
                 double step_fraction, int max_instances, int causality_instances,
                 const CamFlags& cf, std::uint64_t seed, int jobs, const std::string& out) {
    if (which != "faithfulness" && which != "causality" && which != "spatiotemporality" &&
        which != "all") {
        throw UsageError("--which must be faithfulness|causality|spatiotemporality|all");
    }
    auto methods = parse_methods(method_names);
    auto model = Model::load(checkpoint);
    auto ds = prepare_eval_data(data_path, checkpoint);
    int n = static_cast<int>(ds.size());
    if (max_instances > 0) n = std::min(n, max_instances);
    fs::create_directories(fs::path(out) / "curves");
    fs::create_directories(fs::path(out) / "figures");
    auto ctx = make_context(model, cf, seed);

    json j;
    j["schema_version"] = 1;
    j["command"] = "evaluate";
    j["config"] = {{"checkpoint", checkpoint}, {"data", data_path},
                   {"which", which},           {"step_fraction", step_fraction},
                   {"max_instances", max_instances}, {"causality_instances", causality_instances},
                   {"smooth_samples", cf.smooth_samples}, {"noise_sigma", cf.noise_sigma},
                   {"integration_steps", cf.integration_steps}, {"seed", seed}, {"jobs", jobs}};
    j["accuracy"] = evaluate_accuracy(model, ds);
    j["methods"] = json::array();

    std::vector<ScatterPoint> scatter;
    std::vector<BarDatum> bars;
    std::vector<NamedCurve> del_curves, ins_curves;

    for (Method m : methods) {
        json mj;
        mj["name"] = method_name(m);
        if (which == "faithfulness" || which == "all") {
            std::vector<FaithfulnessSample> samples(static_cast<std::size_t>(n));
            std::vector<double> del_auc(static_cast<std::size_t>(n)), ins_auc(static_cast<std::size_t>(n));
            std::vector<Curve> dels(static_cast<std::size_t>(n)), inss(static_cast<std::size_t>(n));
            parallel_for(n, jobs, [&](int i) {
                auto instance = ds.instance_tensor(static_cast<std::size_t>(i));
                int c = model.predict_class(instance);
                auto map = explain(ctx, instance, c, m);
                double y = model.predict_proba(instance)[static_cast<std::size_t>(c)];
                auto masked = mask_by_explanation(instance, map);
                double o = model.predict_proba(masked)[static_cast<std::size_t>(c)];
                samples[static_cast<std::size_t>(i)] = {y, o};
                dels[static_cast<std::size_t>(i)] = deletion_curve(model, instance, c, map, step_fraction);
                inss[static_cast<std::size_t>(i)] = insertion_curve(model, instance, c, map, step_fraction);
                del_auc[static_cast<std::size_t>(i)] = dels[static_cast<std::size_t>(i)].auc;
                ins_auc[static_cast<std::size_t>(i)] = inss[static_cast<std::size_t>(i)].auc;
            });
            double ad = average_drop(samples), ai = average_increase(samples);
            double mean_del = 0.0, mean_ins = 0.0;
            for (int i = 0; i < n; ++i) {
                mean_del += del_auc[static_cast<std::size_t>(i)];
                mean_ins += ins_auc[static_cast<std::size_t>(i)];
            }
            mean_del /= n;
            mean_ins /= n;
            // Pointwise mean curve; all instances share the same fraction grid.
            auto mean_curve = [&](const std::vector<Curve>& curves) {
                std::vector<CurvePoint> pts = curves[0].points;
                for (auto& p : pts) p.prob = 0.0;
                for (const auto& c2 : curves) {
                    for (std::size_t k = 0; k < pts.size(); ++k) pts[k].prob += c2.points[k].prob;
                }
                for (auto& p : pts) p.prob /= static_cast<double>(curves.size());
                return pts;
            };
            auto del_mean = mean_curve(dels);
            auto ins_mean = mean_curve(inss);
            write_curve_csv(del_mean, (fs::path(out) / "curves" / (method_name(m) + "_deletion.csv")).string());
            write_curve_csv(ins_mean, (fs::path(out) / "curves" / (method_name(m) + "_insertion.csv")).string());
            del_curves.push_back({method_name(m), del_mean});
            ins_curves.push_back({method_name(m), ins_mean});
            mj["faithfulness"] = {{"average_drop", ad},
                                  {"average_increase", ai},
                                  {"deletion_auc_mean", mean_del},
                                  {"insertion_auc_mean", mean_ins},
                                  {"instances", n}};
            scatter.push_back({method_name(m), ad, ai});
        }
        if (which == "causality" || which == "all") {
            CausalityOptions copts;
            copts.seed = seed;
            copts.max_instances = causality_instances;
            Explainer explainer = [&](const TensorPtr& x, int c) { return explain(ctx, x, c, m); };
            auto report = causality_report(model, explainer, ds, copts);
            mj["causality"] = {{"feature_prop", report.feature_prop},
                               {"time_prop", report.time_prop},
                               {"pass", report.pass},
                               {"chi_square", report.chi.statistic},
                               {"dof", report.chi.dof},
                               {"p_value", report.chi.p_value}};
            bars.push_back({method_name(m), report.feature_prop, report.time_prop});
        }
        if (which == "spatiotemporality" || which == "all") {
            std::vector<int> spat(static_cast<std::size_t>(n)), temp(static_cast<std::size_t>(n)),
                both(static_cast<std::size_t>(n));
            parallel_for(n, jobs, [&](int i) {
                auto instance = ds.instance_tensor(static_cast<std::size_t>(i));
                int c = model.predict_class(instance);
                auto map = normalize_map(explain(ctx, instance, c, m), MapNormalization::Sum1);
                bool s = spatiality_check(map), t = temporality_check(map);
                spat[static_cast<std::size_t>(i)] = s;
                temp[static_cast<std::size_t>(i)] = t;
                both[static_cast<std::size_t>(i)] = s && t;
            });
            auto rate = [&](const std::vector<int>& v) {
                double sum = 0.0;
                for (int x : v) sum += x;
                return sum / n;
            };
            mj["spatiotemporality"] = {{"spatiality_rate", rate(spat)},
                                       {"temporality_rate", rate(temp)},
                                       {"pass_rate", rate(both)}};
        }
        j["methods"].push_back(mj);
    }
    if (!scatter.empty()) {
        render_ad_ai_scatter(scatter, (fs::path(out) / "figures" / "ad_ai_scatter.svg").string());
        render_curves(del_curves, "deletion", (fs::path(out) / "figures" / "deletion_curves.svg").string());
        render_curves(ins_curves, "insertion", (fs::path(out) / "figures" / "insertion_curves.svg").string());
    }
    if (!bars.empty()) {
        render_causality_bars(bars, 0.10, (fs::path(out) / "figures" / "causality_bars.svg").string());
    }
    write_json(j, (fs::path(out) / "report.json").string());
    std::cout << "wrote report to " << (fs::path(out) / "report.json").string() << "\n";
    return 0;
}

struct RankInput {
    std::vector<std::string> models;
    std::vector<std::string> datasets;
    std::vector<std::vector<double>> table;  // model x dataset
};

RankInput read_accuracy_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    RankInput input;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        for (char ch : line) {
            if (ch == ',') {
                cells.push_back(cell);
                cell.clear();
            } else if (ch != '\r') {
                cell += ch;
            }
        }
        cells.push_back(cell);
        if (lineno == 1) {
            input.datasets.assign(cells.begin() + 1, cells.end());
            continue;
        }
        if (cells.size() != input.datasets.size() + 1) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(input.datasets.size() + 1) + " columns");
        }
        input.models.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            const auto& c = cells[i];
            if (c.empty() || c == "-" || c == "nan" || c == "NaN") {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            } else {
                try {
                    row.push_back(std::stod(c));
                } catch (const std::exception&) {
                    throw DataError(path + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
                }
            }
        }
        input.table.push_back(std::move(row));
    }
    if (input.table.empty()) throw DataError(path + ": no data rows");
    return input;
}

void render_cd_diagram(const RankInput& input, const RankResult& ranks, const CdResult& cd,
                       const std::string& path) {
    int k = static_cast<int>(input.models.size());
    SvgDocument doc(720, 140 + 20.0 * k);
    double x0 = 80, w = 560, y_axis = 50;
    doc.line(x0, y_axis, x0 + w, y_axis, "#333333", 1.5);
    for (int r = 1; r <= k; ++r) {
        double x = x0 + (r - 1) * w / std::max(1, k - 1);
        doc.line(x, y_axis - 5, x, y_axis + 5, "#333333");
        doc.text(x, y_axis - 10, std::to_string(r), 10, "middle");
    }
    auto px = [&](double rank) { return x0 + (rank - 1) * w / std::max(1, k - 1); };
    doc.line(x0, 24, x0 + px(1 + cd.cd) - x0, 24, "#a8323e", 2.5);
    doc.text(px(1 + cd.cd) + 8, 28, "CD = " + std::to_string(cd.cd).substr(0, 5), 10);
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return ranks.avg_ranks[static_cast<std::size_t>(a)] < ranks.avg_ranks[static_cast<std::size_t>(b)];
    });
    for (int i = 0; i < k; ++i) {
        int m = order[static_cast<std::size_t>(i)];
        double rank = ranks.avg_ranks[static_cast<std::size_t>(m)];
        double y = 80 + 20.0 * i;
        doc.line(px(rank), y_axis, px(rank), y, "#666666");
        doc.circle(px(rank), y, 3, "#1f6fb2");
        doc.text(px(rank) + 8, y + 4, input.models[static_cast<std::size_t>(m)] + " (" +
                                            std::to_string(rank).substr(0, 5) + ")", 10);
    }
    doc.save(path);
}

int run_rank(const std::string& input_path, double alpha, const std::string& out) {
    auto input = read_accuracy_csv(input_path);
    auto ranks = rank_table(input.table);
    auto cd = critical_difference(ranks.avg_ranks, static_cast<int>(input.datasets.size()), alpha);
    fs::create_directories(fs::path(out) / "figures");
    json j;
    j["schema_version"] = 1;
    j["command"] = "rank";
    j["config"] = {{"input", input_path}, {"alpha", alpha}};
    j["datasets"] = input.datasets;
    j["ranking"] = json::array();
    for (std::size_t m = 0; m < input.models.size(); ++m) {
        j["ranking"].push_back({{"model", input.models[m]},
                                {"avg_rank", ranks.avg_ranks[m]},
                                {"wins_ties", ranks.wins_ties[m]}});
    }
    j["cd"] = {{"alpha", alpha}, {"value", cd.cd}};
    json groups = json::array();
    for (const auto& g : cd.groups) {
        json names = json::array();
        for (int m : g) names.push_back(input.models[static_cast<std::size_t>(m)]);
        groups.push_back(names);
    }
    j["cd"]["groups"] = groups;
    render_cd_diagram(input, ranks, cd, (fs::path(out) / "figures" / "critical_difference.svg").string());
    write_json(j, (fs::path(out) / "report.json").string());
    for (std::size_t m = 0; m < input.models.size(); ++m) {
        std::cout << input.models[m] << "\trank " << ranks.avg_ranks[m] << "\twins/ties "
                  << ranks.wins_ties[m] << "\n";
    }
    std::cout << "CD(alpha=" << alpha << ") = " << cd.cd << "\n";
    return 0;
}

int run_report(const std::string& report_path, const std::string& out) {
    std::ifstream in(report_path);
    if (!in) throw DataError("cannot read " + report_path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed report json: " + report_path);
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1) {
        throw DataError("unsupported report schema version");
    }
    fs::create_directories(out);
    std::vector<ScatterPoint> scatter;
    std::vector<BarDatum> bars;
    if (j.contains("methods")) {
        for (const auto& mj : j["methods"]) {
            std::string name = mj.at("name").get<std::string>();
            if (mj.contains("faithfulness")) {
                scatter.push_back({name, mj["faithfulness"]["average_drop"].get<double>(),
                                   mj["faithfulness"]["average_increase"].get<double>()});
            }
            if (mj.contains("causality")) {
                bars.push_back({name, mj["causality"]["feature_prop"].get<double>(),
                                mj["causality"]["time_prop"].get<double>()});
            }
        }
    }
    int emitted = 0;
    if (!scatter.empty()) {
        render_ad_ai_scatter(scatter, (fs::path(out) / "ad_ai_scatter.svg").string());
        ++emitted;
    }
    if (!bars.empty()) {
        render_causality_bars(bars, 0.10, (fs::path(out) / "causality_bars.svg").string());
        ++emitted;
    }
    if (emitted == 0) throw DataError("report contains no figure data");
    std::cout << "rendered " << emitted << " figure(s) to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tsemlab: TSEM / XCM / MTEX-CNN training and interpretability laboratory"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; flags override file values");
    app.allow_config_extras(false);

    int exit_code = 0;
    std::function<int()> action;

    // generate
    auto* gen = app.add_subcommand("generate", "generate the synthetic bump dataset");
    auto spec = std::make_shared<SyntheticSpec>();
    auto gen_out = std::make_shared<std::string>("data/synthetic");
    auto gen_format = std::make_shared<std::string>("csv");
    auto gen_test_ratio = std::make_shared<double>(0.25);
    gen->add_option("--features", spec->n_features, "channel count D")->envname("TSEMLAB_FEATURES");
    gen->add_option("--length", spec->seq_length, "series length T")->envname("TSEMLAB_LENGTH");
    gen->add_option("--classes", spec->n_classes, "class count K")->envname("TSEMLAB_CLASSES");
    gen->add_option("--bump-sigma", spec->bump_sigma, "bump width");
    gen->add_option("--amplitude", spec->amplitude, "bump amplitude");
    gen->add_option("--noise-sigma", spec->noise_sigma, "additive noise scale");
    gen->add_option("--instances", spec->n_instances, "total instance count");
    gen->add_option("--seed", spec->seed, "rng seed")->envname("TSEMLAB_SEED");
    gen->add_option("--test-ratio", *gen_test_ratio, "held-out fraction (0 disables the split)");
    gen->add_option("--format", *gen_format, "csv | ts")->check(CLI::IsMember({"csv", "ts"}));
    gen->add_option("--out", *gen_out, "output directory")->envname("TSEMLAB_OUT");
    gen->callback([&, spec, gen_out, gen_format, gen_test_ratio] {
        action = [=] { return run_generate(*spec, *gen_out, *gen_format, *gen_test_ratio); };
    });

    // train
    auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
    auto tr_data = std::make_shared<std::string>();
    auto tr_test = std::make_shared<std::string>();
    auto tr_mf = std::make_shared<CommonModelFlags>();
    auto tr_opts = std::make_shared<TrainOptions>();
    auto tr_val_ratio = std::make_shared<double>(0.2);
    auto tr_ckpt = std::make_shared<std::string>("model.tsem");
    auto tr_report = std::make_shared<std::string>();
    tr->add_option("--data", *tr_data, "training dataset (.ts file or CSV directory)")
        ->required()
        ->check(CLI::ExistingPath);
    tr->add_option("--test-data", *tr_test, "held-out dataset scored after training")
        ->check(CLI::ExistingPath);
    tr->add_option("--arch", tr_mf->arch, "mtexcnn | xcm | tsem")
        ->check(CLI::IsMember({"mtexcnn", "xcm", "tsem"}))
        ->envname("TSEMLAB_ARCH");
    tr->add_option("--window-fraction", tr_mf->window_fraction, "conv window as fraction of T");
    tr->add_option("--filters-2d", tr_mf->filters_2d, "2-D branch filter count");
    tr->add_option("--filters-1d", tr_mf->filters_1d, "1-D branch filter count");
    tr->add_option("--epochs", tr_opts->epochs, "max epochs");
    tr->add_option("--batch", tr_opts->batch_size, "minibatch size");
    tr->add_option("--lr", tr_opts->lr, "Adam learning rate");
    tr->add_option("--patience", tr_opts->early_stop_patience, "early-stop patience");
    tr->add_option("--seed", tr_opts->seed, "rng seed")->envname("TSEMLAB_SEED");
    tr->add_option("--val-ratio", *tr_val_ratio, "validation fraction for early stopping");
    tr->add_option("--out", *tr_ckpt, "checkpoint path")->envname("TSEMLAB_OUT");
    tr->add_option("--report", *tr_report, "training report json path");
    tr->callback([&, tr_data, tr_test, tr_mf, tr_opts, tr_val_ratio, tr_ckpt, tr_report] {
        action = [=] {
            return run_train(*tr_data, *tr_test, *tr_mf, *tr_opts, *tr_val_ratio, *tr_ckpt,
                             *tr_report);
        };
    });

    // explain
    auto* ex = app.add_subcommand("explain", "emit attribution maps for chosen instances");
    auto ex_ckpt = std::make_shared<std::string>();
    auto ex_data = std::make_shared<std::string>();
    auto ex_methods = std::make_shared<std::vector<std::string>>();
    auto ex_instances = std::make_shared<std::vector<int>>();
    auto ex_target = std::make_shared<int>(-1);
    auto ex_cf = std::make_shared<CamFlags>();
    auto ex_seed = std::make_shared<std::uint64_t>(0);
    auto ex_jobs = std::make_shared<int>(1);
    auto ex_out = std::make_shared<std::string>("explain_out");
    ex->add_option("--checkpoint", *ex_ckpt, "trained checkpoint")->required()->check(CLI::ExistingFile);
    ex->add_option("--data", *ex_data, "dataset")->required()->check(CLI::ExistingPath);
    ex->add_option("--methods", *ex_methods, "method ids, or 'all'")->delimiter(',');
    ex->add_option("--instances", *ex_instances, "instance indices")->delimiter(',');
    ex->add_option("--target", *ex_target, "target class (default: predicted)");
    ex->add_option("--smooth-samples", ex_cf->smooth_samples, "n for smoothed variants");
    ex->add_option("--noise-sigma", ex_cf->noise_sigma, "relative noise scale");
    ex->add_option("--integration-steps", ex_cf->integration_steps, "m for integrated score-cam");
    ex->add_option("--seed", *ex_seed, "rng seed")->envname("TSEMLAB_SEED");
    ex->add_option("--jobs", *ex_jobs, "worker threads")->envname("TSEMLAB_JOBS");
    ex->add_option("--out", *ex_out, "output directory")->envname("TSEMLAB_OUT");
    ex->callback([&, ex_ckpt, ex_data, ex_methods, ex_instances, ex_target, ex_cf, ex_seed,
                  ex_jobs, ex_out] {
        action = [=] {
            return run_explain(*ex_ckpt, *ex_data, *ex_methods, *ex_instances, *ex_target, *ex_cf,
                               *ex_seed, *ex_jobs, *ex_out);
        };
    });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "run the interpretability evaluation suite");
    auto ev_ckpt = std::make_shared<std::string>();
    auto ev_data = std::make_shared<std::string>();
    auto ev_methods = std::make_shared<std::vector<std::string>>();
    auto ev_which = std::make_shared<std::string>("all");
    auto ev_step = std::make_shared<double>(0.05);
    auto ev_max = std::make_shared<int>(0);
    auto ev_causal = std::make_shared<int>(8);
    auto ev_cf = std::make_shared<CamFlags>();
    auto ev_seed = std::make_shared<std::uint64_t>(0);
    auto ev_jobs = std::make_shared<int>(1);
    auto ev_out = std::make_shared<std::string>("evaluate_out");
    ev->add_option("--checkpoint", *ev_ckpt, "trained checkpoint")->required()->check(CLI::ExistingFile);
    ev->add_option("--data", *ev_data, "evaluation dataset")->required()->check(CLI::ExistingPath);
    ev->add_option("--methods", *ev_methods, "method ids, or 'all'")->delimiter(',');
    ev->add_option("--which", *ev_which, "faithfulness|causality|spatiotemporality|all");
    ev->add_option("--step-fraction", *ev_step, "deletion/insertion batch fraction");
    ev->add_option("--max-instances", *ev_max, "cap evaluated instances (0 = all)");
    ev->add_option("--causality-instances", *ev_causal, "instances for the causality harness");
    ev->add_option("--smooth-samples", ev_cf->smooth_samples, "n for smoothed variants");
    ev->add_option("--noise-sigma", ev_cf->noise_sigma, "relative noise scale");
    ev->add_option("--integration-steps", ev_cf->integration_steps, "m for integrated score-cam");
    ev->add_option("--seed", *ev_seed, "rng seed")->envname("TSEMLAB_SEED");
    ev->add_option("--jobs", *ev_jobs, "worker threads")->envname("TSEMLAB_JOBS");
    ev->add_option("--out", *ev_out, "output directory")->envname("TSEMLAB_OUT");
    ev->callback([&, ev_ckpt, ev_data, ev_methods, ev_which, ev_step, ev_max, ev_causal, ev_cf,
                  ev_seed, ev_jobs, ev_out] {
        action = [=] {
            return run_evaluate(*ev_ckpt, *ev_data, *ev_methods, *ev_which, *ev_step, *ev_max,
                                *ev_causal, *ev_cf, *ev_seed, *ev_jobs, *ev_out);
        };
    });

    // rank
    auto* rk = app.add_subcommand("rank", "rank models from an accuracy table");
    auto rk_input = std::make_shared<std::string>();
    auto rk_alpha = std::make_shared<double>(0.05);
    auto rk_out = std::make_shared<std::string>("rank_out");
    rk->add_option("--input", *rk_input, "accuracy CSV (header row: model,<dataset names>)")
        ->required()
        ->check(CLI::ExistingFile);
    rk->add_option("--alpha", *rk_alpha, "significance level (0.05 or 0.1)");
    rk->add_option("--out", *rk_out, "output directory")->envname("TSEMLAB_OUT");
    rk->callback([&, rk_input, rk_alpha, rk_out] {
        action = [=] { return run_rank(*rk_input, *rk_alpha, *rk_out); };
    });

    // report
    auto* rp = app.add_subcommand("report", "re-render figures from an existing report.json");
    auto rp_input = std::make_shared<std::string>();
    auto rp_out = std::make_shared<std::string>("figures");
    rp->add_option("--input", *rp_input, "report.json path")->required()->check(CLI::ExistingFile);
    rp->add_option("--out", *rp_out, "figure output directory")->envname("TSEMLAB_OUT");
    rp->callback([&, rp_input, rp_out] {
        action = [=] { return run_report(*rp_input, *rp_out); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }

    try {
        exit_code = action ? action() : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return exit_code;
}
