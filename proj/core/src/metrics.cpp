#include "tsem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsem/errors.hpp"

namespace tsem {

namespace {

constexpr double kEps = 1e-12;

std::vector<int> saliency_order(const ExplanationMap& map) {
    std::vector<int> order(map.values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return map.values[static_cast<std::size_t>(a)] > map.values[static_cast<std::size_t>(b)];
    });
    return order;
}

void check_curve_args(const Model& model, const TensorPtr& instance, int c,
                      const ExplanationMap& map, double step_fraction) {
    if (step_fraction <= 0.0 || step_fraction > 0.5) {
        throw UsageError("curve: step_fraction must be in (0, 0.5]");
    }
    if (c < 0 || c >= model.config().n_classes) throw UsageError("curve: class id out of range");
    if (map.n_features != model.config().n_features || map.seq_length != model.config().seq_length) {
        throw DimensionError("curve: explanation map does not match the model geometry");
    }
    if (instance->ndim() != 2 || instance->dim(0) != map.n_features || instance->dim(1) != map.seq_length) {
        throw DimensionError("curve: instance does not match the model geometry");
    }
}

double class_prob(const Model& model, const TensorPtr& instance, int c, int step_for_error) {
    auto res = model.forward(instance, nullptr);
    double p = res.probs->data[static_cast<std::size_t>(c)];
    if (!std::isfinite(p)) {
        throw NumericError("curve: non-finite probability at step " + std::to_string(step_for_error));
    }
    return p;
}

double trapezoid_auc(const std::vector<CurvePoint>& pts) {
    double auc = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        auc += 0.5 * (pts[i].prob + pts[i - 1].prob) * (pts[i].fraction - pts[i - 1].fraction);
    }
    return auc;
}

// Lower regularized incomplete gamma via series expansion; valid for x < a+1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 10000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma via Lentz continued fraction; x >= a+1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Two-tailed normal quantiles z_{1 - alpha/(2(k-1))} for the Bonferroni-Dunn
// test, k = 2..20.
const double kDunnQ05[19] = {
    1.959963984540054, 2.241402727604946, 2.393979799818510, 2.497705474412374,
    2.575829303548900, 2.638257273476751, 2.690109527158866, 2.734368786533176,
    2.772921294608662, 2.807033768343811, 2.837596912943787, 2.865260238532133,
    2.890511560691739, 2.913726318334338, 2.935199468866698, 2.955166847497834,
    2.973819901220312, 2.991316115183780, 3.007786556473264};
const double kDunnQ10[19] = {
    1.644853626951472, 1.959963984540054, 2.128045234184984, 2.241402727604946,
    2.326347874040841, 2.393979799818510, 2.449997660602729, 2.497705474412374,
    2.539184813651313, 2.575829303548900, 2.608616387360549, 2.638257273476751,
    2.665285106024977, 2.690109527158866, 2.713051888472720, 2.734368786533176,
    2.754268270633685, 2.772921294608662, 2.790469991089076};

}  // namespace

double accuracy(const ConfusionCounts& counts) {
    long long total = counts.tp + counts.fp + counts.tn + counts.fn;
    if (counts.tp < 0 || counts.fp < 0 || counts.tn < 0 || counts.fn < 0 || total <= 0) {
        throw UsageError("accuracy: counts must be non-negative with a positive total");
    }
    return static_cast<double>(counts.tp + counts.tn) / static_cast<double>(total);
}

double average_drop(const std::vector<FaithfulnessSample>& samples) {
    if (samples.empty()) throw UsageError("average_drop: no samples");
    double sum = 0.0;
    int used = 0;
    for (const auto& s : samples) {
        if (s.y == 0.0) continue;
        sum += std::max(0.0, s.y - s.o) / s.y;
        ++used;
    }
    return used == 0 ? 0.0 : 100.0 * sum / used;
}

double average_increase(const std::vector<FaithfulnessSample>& samples) {
    if (samples.empty()) return 0.0;
    int count = 0;
    for (const auto& s : samples) {
        if (s.o > s.y) ++count;
    }
    return 100.0 * count / static_cast<double>(samples.size());
}

TensorPtr mask_by_explanation(const TensorPtr& instance, const ExplanationMap& map) {
    if (instance->ndim() != 2 || instance->dim(0) != map.n_features || instance->dim(1) != map.seq_length) {
        throw DimensionError("mask_by_explanation: instance and map shapes differ");
    }
    auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
    double lo = *lo_it, range = *hi_it - *lo_it;
    auto out = Tensor::of(instance->shape, instance->data);
    if (range < kEps) return out;
    for (std::size_t i = 0; i < out->data.size(); ++i) {
        out->data[i] *= (map.values[i] - lo) / range;
    }
    return out;
}

Curve deletion_curve(const Model& model, const TensorPtr& instance, int target_class,
                     const ExplanationMap& map, double step_fraction) {
    check_curve_args(model, instance, target_class, map, step_fraction);
    int total = instance->size();
    int batch = static_cast<int>(std::ceil(step_fraction * total));
    auto order = saliency_order(map);
    auto work = Tensor::of(instance->shape, instance->data);
    Curve curve;
    curve.points.push_back({0.0, class_prob(model, work, target_class, 0)});
    int removed = 0, step = 1;
    while (removed < total) {
        int n = std::min(batch, total - removed);
        for (int i = 0; i < n; ++i) work->data[static_cast<std::size_t>(order[removed + i])] = 0.0;
        removed += n;
        curve.points.push_back({static_cast<double>(removed) / total,
                                class_prob(model, work, target_class, step)});
        ++step;
    }
    curve.auc = trapezoid_auc(curve.points);
    return curve;
}

Curve insertion_curve(const Model& model, const TensorPtr& instance, int target_class,
                      const ExplanationMap& map, double step_fraction) {
    check_curve_args(model, instance, target_class, map, step_fraction);
    int total = instance->size();
    int batch = static_cast<int>(std::ceil(step_fraction * total));
    auto order = saliency_order(map);
    auto work = Tensor::zeros(instance->shape);
    Curve curve;
    curve.points.push_back({0.0, class_prob(model, work, target_class, 0)});
    int inserted = 0, step = 1;
    while (inserted < total) {
        int n = std::min(batch, total - inserted);
        for (int i = 0; i < n; ++i) {
            int idx = order[inserted + i];
            work->data[static_cast<std::size_t>(idx)] = instance->data[static_cast<std::size_t>(idx)];
        }
        inserted += n;
        curve.points.push_back({static_cast<double>(inserted) / total,
                                class_prob(model, work, target_class, step)});
        ++step;
    }
    curve.auc = trapezoid_auc(curve.points);
    return curve;
}

std::string axis_name(CascadeAxis axis) {
    return axis == CascadeAxis::Feature ? "feature" : "time";
}

TensorPtr cascade_randomize(const TensorPtr& instance, CascadeAxis axis, int step,
                            std::mt19937_64& rng) {
    if (instance->ndim() != 2) throw DimensionError("cascade_randomize: expected a (D,T) instance");
    int d = instance->dim(0), t = instance->dim(1);
    int limit = axis == CascadeAxis::Feature ? d : t;
    if (step < 0 || step >= limit) throw UsageError("cascade_randomize: step out of range");
    auto out = Tensor::of(instance->shape, instance->data);
    if (axis == CascadeAxis::Feature) {
        for (int row = 0; row <= step; ++row) {
            std::shuffle(out->data.begin() + static_cast<std::ptrdiff_t>(row) * t,
                         out->data.begin() + static_cast<std::ptrdiff_t>(row + 1) * t, rng);
        }
    } else {
        for (int col = 0; col <= step; ++col) {
            std::vector<double> slice(static_cast<std::size_t>(d));
            for (int row = 0; row < d; ++row) slice[static_cast<std::size_t>(row)] = out->at(row, col);
            std::shuffle(slice.begin(), slice.end(), rng);
            for (int row = 0; row < d; ++row) out->data[static_cast<std::size_t>(row) * t + col] = slice[static_cast<std::size_t>(row)];
        }
    }
    return out;
}

PearsonResult pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw UsageError("pearson: inputs must match and hold at least two points");
    }
    double n = static_cast<double>(a.size());
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) return {0.0, true};
    double r = sab / std::sqrt(saa * sbb);
    return {std::clamp(r, -1.0, 1.0), false};
}

double regularized_gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw UsageError("regularized_gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

ChiSquareTest chi_square(const std::vector<double>& observed) {
    if (observed.size() < 2) throw UsageError("chi_square: need at least two observations");
    ChiSquareTest test;
    test.observed = observed;
    for (double o : observed) {
        double d = o - 1.0;
        test.statistic += d * d;
    }
    test.dof = static_cast<int>(observed.size()) - 1;
    test.p_value = regularized_gamma_q(test.dof / 2.0, test.statistic / 2.0);
    return test;
}

CausalityReport causality_report(const Model& model, const Explainer& explainer,
                                 const MTSDataset& test, const CausalityOptions& opts) {
    double acc = evaluate_accuracy(model, test);
    double chance = 1.0 / test.n_classes;
    if (acc <= chance + 0.05) {
        throw UsageError("causality_report: model accuracy " + std::to_string(acc) +
                         " is chance-like; train the model first");
    }
    int n = static_cast<int>(test.instances.size());
    if (opts.max_instances > 0) n = std::min(n, opts.max_instances);
    CausalityReport report;
    int non_causal_feature = 0, total_feature = 0;
    int non_causal_time = 0, total_time = 0;
    for (int i = 0; i < n; ++i) {
        auto instance = test.instance_tensor(i);
        int c = model.predict_class(instance);
        auto original = explainer(instance, c);
        for (CascadeAxis axis : {CascadeAxis::Feature, CascadeAxis::Time}) {
            int steps = axis == CascadeAxis::Feature ? test.n_features : test.seq_length;
            for (int s = 0; s < steps; ++s) {
                // Derived per-record seed keeps records independent of
                // evaluation order.
                std::uint64_t record_seed = opts.seed * 0x9e3779b97f4a7c15ULL +
                                            static_cast<std::uint64_t>(i) * 1000003ULL +
                                            (axis == CascadeAxis::Time ? 500009ULL : 0ULL) +
                                            static_cast<std::uint64_t>(s);
                std::mt19937_64 rng(record_seed);
                auto randomized = cascade_randomize(instance, axis, s, rng);
                auto perturbed = explainer(randomized, c);
                auto res = pearson(original.values, perturbed.values);
                CausalityRecord rec;
                rec.axis = axis;
                rec.instance = i;
                rec.step = s;
                rec.r = res.r;
                rec.non_causal = !res.degenerate && res.r >= opts.non_causal_threshold;
                if (axis == CascadeAxis::Feature) {
                    ++total_feature;
                    if (rec.non_causal) ++non_causal_feature;
                } else {
                    ++total_time;
                    if (rec.non_causal) ++non_causal_time;
                }
                report.records.push_back(rec);
            }
        }
    }
    report.feature_prop = total_feature == 0 ? 0.0 : static_cast<double>(non_causal_feature) / total_feature;
    report.time_prop = total_time == 0 ? 0.0 : static_cast<double>(non_causal_time) / total_time;
    report.pass = report.feature_prop < opts.pass_threshold && report.time_prop < opts.pass_threshold;
    std::vector<double> rs;
    rs.reserve(report.records.size());
    for (const auto& rec : report.records) rs.push_back(rec.r);
    if (rs.size() >= 2) report.chi = chi_square(rs);
    return report;
}

bool spatiality_check(const ExplanationMap& map, double tolerance) {
    double target = 1.0 / map.n_features;
    for (int row = 0; row < map.n_features; ++row) {
        double sum = 0.0;
        for (int col = 0; col < map.seq_length; ++col) sum += map.at(row, col);
        if (std::abs(sum - target) <= tolerance) return false;
    }
    return true;
}

bool temporality_check(const ExplanationMap& map, double tolerance) {
    double target = 1.0 / map.seq_length;
    for (int col = 0; col < map.seq_length; ++col) {
        double sum = 0.0;
        for (int row = 0; row < map.n_features; ++row) sum += map.at(row, col);
        if (std::abs(sum - target) <= tolerance) return false;
    }
    return true;
}

bool spatiotemporality_check(const ExplanationMap& map, double tolerance) {
    return spatiality_check(map, tolerance) && temporality_check(map, tolerance);
}

RankResult rank_table(const std::vector<std::vector<double>>& accuracy_table) {
    if (accuracy_table.empty() || accuracy_table[0].empty()) {
        throw UsageError("rank_table: empty accuracy table");
    }
    std::size_t k = accuracy_table.size();
    std::size_t n = accuracy_table[0].size();
    for (const auto& row : accuracy_table) {
        if (row.size() != n) throw DimensionError("rank_table: ragged accuracy table");
    }
    RankResult result;
    result.avg_ranks.assign(k, 0.0);
    result.wins_ties.assign(k, 0);
    for (std::size_t ds = 0; ds < n; ++ds) {
        // Missing values (NaN) take the worst rank.
        std::vector<double> col(k);
        double best = -1e300;
        bool any = false;
        for (std::size_t m = 0; m < k; ++m) {
            col[m] = accuracy_table[m][ds];
            if (!std::isnan(col[m])) {
                best = std::max(best, col[m]);
                any = true;
            }
        }
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto key = [&](std::size_t m) { return std::isnan(col[m]) ? -1e300 : col[m]; };
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
        std::size_t i = 0;
        while (i < k) {
            std::size_t j = i;
            while (j + 1 < k && key(order[j + 1]) == key(order[i])) ++j;
            double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t p = i; p <= j; ++p) result.avg_ranks[order[p]] += shared;
            i = j + 1;
        }
        if (any) {
            for (std::size_t m = 0; m < k; ++m) {
                if (!std::isnan(col[m]) && col[m] == best) ++result.wins_ties[m];
            }
        }
    }
    for (auto& r : result.avg_ranks) r /= static_cast<double>(n);
    return result;
}

CdResult critical_difference(const std::vector<double>& avg_ranks, int n_datasets, double alpha) {
    int k = static_cast<int>(avg_ranks.size());
    if (k < 2 || k > 20) throw UsageError("critical_difference: need 2 <= k <= 20 methods");
    if (n_datasets < 1) throw UsageError("critical_difference: need at least one dataset");
    const double* table = nullptr;
    if (std::abs(alpha - 0.05) < 1e-12) {
        table = kDunnQ05;
    } else if (std::abs(alpha - 0.1) < 1e-12) {
        table = kDunnQ10;
    } else {
        throw UsageError("critical_difference: alpha must be 0.05 or 0.1");
    }
    CdResult result;
    double q = table[k - 2];
    result.cd = q * std::sqrt(k * (k + 1) / (6.0 * n_datasets));
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return avg_ranks[static_cast<std::size_t>(a)] < avg_ranks[static_cast<std::size_t>(b)];
    });
    // Maximal runs of methods whose rank spread stays below CD.
    int prev_end = -1;
    for (int i = 0; i < k; ++i) {
        int j = i;
        while (j + 1 < k &&
               avg_ranks[static_cast<std::size_t>(order[j + 1])] -
                       avg_ranks[static_cast<std::size_t>(order[i])] < result.cd) {
            ++j;
        }
        if (j > prev_end) {
            std::vector<int> group(order.begin() + i, order.begin() + j + 1);
            result.groups.push_back(std::move(group));
            prev_end = j;
        }
    }
    return result;
}

}  // namespace tsem
