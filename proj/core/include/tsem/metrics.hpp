#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tsem/attribution.hpp"
#include "tsem/data.hpp"
#include "tsem/model.hpp"

namespace tsem {

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;
};

double accuracy(const ConfusionCounts& counts);

struct FaithfulnessSample {
    double y = 0.0;  // class probability on the original instance
    double o = 0.0;  // class probability on the masked instance
};

// Percentages in [0,100]. Samples with y == 0 are excluded from the drop mean.
double average_drop(const std::vector<FaithfulnessSample>& samples);
double average_increase(const std::vector<FaithfulnessSample>& samples);

// instance (D,T) elementwise-multiplied by the minmax-normalized map.
// Flat maps normalize to all ones so the instance passes through unchanged.
TensorPtr mask_by_explanation(const TensorPtr& instance, const ExplanationMap& map);

struct CurvePoint {
    double fraction = 0.0;
    double prob = 0.0;
};

struct Curve {
    std::vector<CurvePoint> points;
    double auc = 0.0;
};

Curve deletion_curve(const Model& model, const TensorPtr& instance, int target_class,
                     const ExplanationMap& map, double step_fraction = 0.05);
Curve insertion_curve(const Model& model, const TensorPtr& instance, int target_class,
                      const ExplanationMap& map, double step_fraction = 0.05);

enum class CascadeAxis { Feature, Time };

std::string axis_name(CascadeAxis axis);

// Permutes the values within every slice with index <= step along the given
// axis; slices beyond the step are copied bit-identically.
TensorPtr cascade_randomize(const TensorPtr& instance, CascadeAxis axis, int step,
                            std::mt19937_64& rng);

struct PearsonResult {
    double r = 0.0;
    bool degenerate = false;  // either input had zero variance
};

PearsonResult pearson(const std::vector<double>& a, const std::vector<double>& b);

struct ChiSquareTest {
    std::vector<double> observed;
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

// Expected value is 1 for every observation; dof = n - 1.
ChiSquareTest chi_square(const std::vector<double>& observed);

// Upper regularized incomplete gamma Q(a, x), abs err < 1e-10.
double regularized_gamma_q(double a, double x);

struct CausalityRecord {
    CascadeAxis axis = CascadeAxis::Feature;
    int instance = 0;
    int step = 0;
    double r = 0.0;
    bool non_causal = false;
};

struct CausalityReport {
    double feature_prop = 0.0;
    double time_prop = 0.0;
    bool pass = false;
    std::vector<CausalityRecord> records;
    ChiSquareTest chi;
};

using Explainer = std::function<ExplanationMap(const TensorPtr&, int)>;

struct CausalityOptions {
    std::uint64_t seed = 0;
    double non_causal_threshold = 0.95;
    double pass_threshold = 0.10;
    int max_instances = -1;  // -1 = all
};

CausalityReport causality_report(const Model& model, const Explainer& explainer,
                                 const MTSDataset& test, const CausalityOptions& opts = {});

// All three expect a sum1-normalized map.
bool spatiality_check(const ExplanationMap& map, double tolerance = 1e-9);
bool temporality_check(const ExplanationMap& map, double tolerance = 1e-9);
bool spatiotemporality_check(const ExplanationMap& map, double tolerance = 1e-9);

struct RankResult {
    std::vector<double> avg_ranks;  // one per model, rank 1 = best
    std::vector<int> wins_ties;     // datasets where the model attains the max
};

// accuracy_table[model][dataset]; NaN marks a missing result and takes the
// worst rank for that dataset.
RankResult rank_table(const std::vector<std::vector<double>>& accuracy_table);

struct CdResult {
    double cd = 0.0;
    // Groups of model indices whose average ranks differ by less than cd,
    // listed as maximal runs in rank order.
    std::vector<std::vector<int>> groups;
};

CdResult critical_difference(const std::vector<double>& avg_ranks, int n_datasets, double alpha);

}  // namespace tsem
