#include "tsem/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tsem {

namespace {

constexpr double kEps = 1e-12;

const TensorPtr& fetch_activation(const ForwardResult& res, const std::string& key) {
    auto it = res.activations.find(key);
    if (it == res.activations.end()) throw UsageError("unknown activation key '" + key + "'");
    return it->second;
}

void check_class(const Model& model, int c) {
    if (c < 0 || c >= model.config().n_classes) {
        throw UsageError("class id " + std::to_string(c) + " out of range [0," +
                         std::to_string(model.config().n_classes) + ")");
    }
}

double value_range(const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

std::vector<double> upsample_row(const std::vector<double>& row, int target) {
    int l = static_cast<int>(row.size());
    std::vector<double> out(static_cast<std::size_t>(target));
    for (int t = 0; t < target; ++t) {
        if (l == 1 || target == 1) {
            out[static_cast<std::size_t>(t)] = row[0];
            continue;
        }
        double pos = static_cast<double>(t) * (l - 1) / (target - 1);
        int lo = std::min(static_cast<int>(pos), l - 2);
        double w = pos - lo;
        out[static_cast<std::size_t>(t)] = (1.0 - w) * row[static_cast<std::size_t>(lo)] +
                                           w * row[static_cast<std::size_t>(lo + 1)];
    }
    return out;
}

// Maps a combined activation-space map onto the D x T input grid.
std::vector<double> align_to_input(const Model& model, const std::vector<double>& spatial,
                                   const std::vector<int>& spatial_shape) {
    int d = model.config().n_features, t = model.config().seq_length;
    std::vector<double> out(static_cast<std::size_t>(d) * t, 0.0);
    switch (model.map_layout()) {
        case MapLayout::FeatureTime: {
            if (spatial_shape.size() != 2 || spatial_shape[0] != d || spatial_shape[1] != t) {
                throw DimensionError("attribution: expected (D,T) activation maps");
            }
            out = spatial;
            break;
        }
        case MapLayout::TimeOnly: {
            if (spatial_shape.size() != 1) throw DimensionError("attribution: expected (T) activation maps");
            auto row = upsample_row(spatial, t);
            for (int i = 0; i < d; ++i) {
                std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(i) * t);
            }
            break;
        }
        case MapLayout::FlatStrided: {
            int t_int = model.map_time_extent();
            if (spatial_shape.size() != 1 || spatial_shape[0] != d * t_int) {
                throw DimensionError("attribution: expected flattened (D*T') activation maps");
            }
            for (int i = 0; i < d; ++i) {
                std::vector<double> row(spatial.begin() + static_cast<std::ptrdiff_t>(i) * t_int,
                                        spatial.begin() + static_cast<std::ptrdiff_t>(i + 1) * t_int);
                auto up = upsample_row(row, t);
                std::copy(up.begin(), up.end(), out.begin() + static_cast<std::ptrdiff_t>(i) * t);
            }
            break;
        }
    }
    return out;
}

// ReLU(sum_k w_k A_k) combined in activation space, then aligned to D x T.
ExplanationMap combine(const Model& model, const TensorPtr& act, const std::vector<double>& weights,
                       Method method, int target_class) {
    int channels = act->dim(0);
    int inner = act->size() / channels;
    std::vector<double> spatial(static_cast<std::size_t>(inner), 0.0);
    for (int k = 0; k < channels; ++k) {
        double w = weights[static_cast<std::size_t>(k)];
        if (w == 0.0) continue;
        for (int i = 0; i < inner; ++i) spatial[static_cast<std::size_t>(i)] += w * act->data[k * inner + i];
    }
    for (auto& v : spatial) v = std::max(0.0, v);
    std::vector<int> spatial_shape(act->shape.begin() + 1, act->shape.end());
    ExplanationMap map;
    map.n_features = model.config().n_features;
    map.seq_length = model.config().seq_length;
    map.values = align_to_input(model, spatial, spatial_shape);
    map.method = method;
    map.target_class = target_class;
    return map;
}

struct GradPass {
    TensorPtr act;              // activation tensor from a clean forward
    std::vector<double> grad;   // d(logit_c)/d(act)
};

GradPass gradient_pass(const CamContext& ctx, const TensorPtr& instance, int c) {
    Tape tape;
    auto res = ctx.model->forward(instance, &tape);
    auto act = fetch_activation(res, ctx.activation_key);
    auto y_c = slice0(&tape, res.logits, c, 1);
    tape.backward(y_c);
    if (!act->requires_grad) throw UsageError("activation '" + ctx.activation_key + "' has no gradient path");
    return {act, act->grad};
}

double masked_logit(const Model& model, const std::vector<double>& masked, int c) {
    auto inst = Tensor::of({model.config().n_features, model.config().seq_length}, masked);
    auto res = model.forward(inst, nullptr);
    return res.logits->data[static_cast<std::size_t>(c)];
}

// Shared Score-CAM skeleton: `score` receives the aligned, minmax-normalized
// mask H_k and returns the masked class score for channel k.
template <typename ScoreFn>
ExplanationMap score_cam_impl(const CamContext& ctx, const TensorPtr& instance, int c,
                              Method method, ScoreFn&& score) {
    auto res = ctx.model->forward(instance, nullptr);
    auto act = fetch_activation(res, ctx.activation_key);
    int channels = act->dim(0);
    int inner = act->size() / channels;
    std::vector<int> spatial_shape(act->shape.begin() + 1, act->shape.end());
    std::vector<double> scores(static_cast<std::size_t>(channels), 0.0);
    std::vector<bool> flat(static_cast<std::size_t>(channels), false);
    for (int k = 0; k < channels; ++k) {
        std::vector<double> a_k(act->data.begin() + static_cast<std::ptrdiff_t>(k) * inner,
                                act->data.begin() + static_cast<std::ptrdiff_t>(k + 1) * inner);
        auto h = align_to_input(*ctx.model, a_k, spatial_shape);
        auto [lo_it, hi_it] = std::minmax_element(h.begin(), h.end());
        double lo = *lo_it, hi = *hi_it;
        if (hi - lo < kEps) {
            flat[static_cast<std::size_t>(k)] = true;  // flat map: weight 0
            continue;
        }
        for (auto& v : h) v = (v - lo) / (hi - lo);
        scores[static_cast<std::size_t>(k)] = score(k, h);
    }
    // Softmax over the non-flat channels only.
    std::vector<double> weights(static_cast<std::size_t>(channels), 0.0);
    double mx = -1e300;
    bool any = false;
    for (int k = 0; k < channels; ++k) {
        if (!flat[static_cast<std::size_t>(k)]) {
            mx = std::max(mx, scores[static_cast<std::size_t>(k)]);
            any = true;
        }
    }
    if (any) {
        double sum = 0.0;
        for (int k = 0; k < channels; ++k) {
            if (flat[static_cast<std::size_t>(k)]) continue;
            weights[static_cast<std::size_t>(k)] = std::exp(scores[static_cast<std::size_t>(k)] - mx);
            sum += weights[static_cast<std::size_t>(k)];
        }
        for (auto& w : weights) w /= sum;
    }
    return combine(*ctx.model, act, weights, method, c);
}

// Grad-CAM++ weights from gradient statistics (mean g, g^2, g^3 per cell).
std::vector<double> grad_cam_pp_weights(const TensorPtr& act, const std::vector<double>& g1,
                                        const std::vector<double>& g2, const std::vector<double>& g3) {
    int channels = act->dim(0);
    int inner = act->size() / channels;
    std::vector<double> weights(static_cast<std::size_t>(channels), 0.0);
    for (int k = 0; k < channels; ++k) {
        double s_ag3 = 0.0;
        for (int i = 0; i < inner; ++i) s_ag3 += act->data[k * inner + i] * g3[static_cast<std::size_t>(k * inner + i)];
        double w = 0.0;
        for (int i = 0; i < inner; ++i) {
            std::size_t idx = static_cast<std::size_t>(k * inner + i);
            double den = 2.0 * g2[idx] + s_ag3;
            double alpha = std::abs(den) < kEps ? 0.0 : g2[idx] / den;
            w += alpha * std::max(0.0, g1[idx]);
        }
        weights[static_cast<std::size_t>(k)] = w;
    }
    return weights;
}

}  // namespace

const std::vector<Method>& all_methods() {
    static const std::vector<Method> kAll = {
        Method::Cam, Method::GradCam, Method::GradCamPP, Method::SmoothGradCamPP,
        Method::XGradCam, Method::AblationCam, Method::ScoreCam, Method::IntegratedScoreCam,
        Method::ActivationSmoothedScoreCam, Method::InputSmoothedScoreCam};
    return kAll;
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Cam: return "cam";
        case Method::GradCam: return "grad_cam";
        case Method::GradCamPP: return "grad_cam_pp";
        case Method::SmoothGradCamPP: return "smooth_grad_cam_pp";
        case Method::XGradCam: return "xgrad_cam";
        case Method::AblationCam: return "ablation_cam";
        case Method::ScoreCam: return "score_cam";
        case Method::IntegratedScoreCam: return "integrated_score_cam";
        case Method::ActivationSmoothedScoreCam: return "activation_smoothed_score_cam";
        case Method::InputSmoothedScoreCam: return "input_smoothed_score_cam";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    for (Method m : all_methods()) {
        if (method_name(m) == name) return m;
    }
    std::string valid;
    for (Method m : all_methods()) valid += (valid.empty() ? "" : ", ") + method_name(m);
    throw UsageError("unknown method '" + name + "' (valid: " + valid + ")");
}

void CamContext::validate() const {
    if (!model) throw UsageError("cam context: no model");
    if (smooth_samples < 1 || integration_steps < 1 || noise_sigma < 0.0) {
        throw UsageError("cam context: need n >= 1, m >= 1, sigma >= 0");
    }
}

ExplanationMap cam(const CamContext& ctx, const TensorPtr& instance, int c) {
    ctx.validate();
    check_class(*ctx.model, c);
    auto res = ctx.model->forward(instance, nullptr);
    auto act = fetch_activation(res, ctx.activation_key);
    auto dense = ctx.model->dense_weights();
    if (dense->dim(1) != act->dim(0)) {
        throw UsageError("cam: activation '" + ctx.activation_key + "' has " + std::to_string(act->dim(0)) +
                         " channels but the dense head expects " + std::to_string(dense->dim(1)));
    }
    std::vector<double> weights(static_cast<std::size_t>(act->dim(0)));
    for (int k = 0; k < act->dim(0); ++k) weights[static_cast<std::size_t>(k)] = dense->at(c, k);
    return combine(*ctx.model, act, weights, Method::Cam, c);
}

ExplanationMap grad_cam(const CamContext& ctx, const TensorPtr& instance, int c) {
    ctx.validate();
    check_class(*ctx.model, c);
    auto gp = gradient_pass(ctx, instance, c);
    int channels = gp.act->dim(0);
    int inner = gp.act->size() / channels;
    std::vector<double> weights(static_cast<std::size_t>(channels), 0.0);
    for (int k = 0; k < channels; ++k) {
        double s = 0.0;
        for (int i = 0; i < inner; ++i) s += gp.grad[static_cast<std::size_t>(k * inner + i)];
        weights[static_cast<std::size_t>(k)] = s / inner;
    }
    return combine(*ctx.model, gp.act, weights, Method::GradCam, c);
}

ExplanationMap grad_cam_pp(const CamContext& ctx, const TensorPtr& instance, int c) {
    ctx.validate();
    check_class(*ctx.model, c);
    auto gp = gradient_pass(ctx, instance, c);
    std::vector<double> g2(gp.grad.size()), g3(gp.grad.size());
    for (std::size_t i = 0; i < gp.grad.size(); ++i) {
        g2[i] = gp.grad[i] * gp.grad[i];
        g3[i] = g2[i] * gp.grad[i];
    }
    auto weights = grad_cam_pp_weights(gp.act, gp.grad, g2, g3);
    return combine(*ctx.model, gp.act, weights, Method::GradCamPP, c);
}

ExplanationMap smooth_grad_cam_pp(const CamContext& ctx, const TensorPtr& instance, int c) {
    ctx.validate();
    check_class(*ctx.model, c);
    int n = ctx.smooth_samples;
    double sigma = ctx.noise_sigma * value_range(instance->data);
    if (n == 1 || sigma == 0.0) {
        auto map = grad_cam_pp(ctx, instance, c);
        map.method = Method::SmoothGradCamPP;
        return map;
    }
    auto clean = gradient_pass(ctx, instance, c);
    std::vector<double> g1(clean.grad.size(), 0.0), g2(clean.grad.size(), 0.0), g3(clean.grad.size(), 0.0);
    std::mt19937_64 rng(ctx.seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (int s = 0; s < n; ++s) {
        auto noisy = Tensor::of(instance->shape, instance->data);
        for (auto& v : noisy->data) v += noise(rng);
        auto gp = gradient_pass(ctx, noisy, c);
        for (std::size_t i = 0; i < gp.grad.size(); ++i) {
            double g = gp.grad[i];
            g1[i] += g;
            g2[i] += g * g;
            g3[i] += g * g * g;
        }
    }
    for (std::size_t i = 0; i < g1.size(); ++i) {
        g1[i] /= n;
        g2[i] /= n;
        g3[i] /= n;
    }
    auto weights = grad_cam_pp_weights(clean.act, g1, g2, g3);
    return combine(*ctx.model, clean.act, weights, Method::SmoothGradCamPP, c);
}

ExplanationMap xgrad_cam(const CamContext& ctx, const TensorPtr& instance, int c) {
    ctx.validate();
    check_class(*ctx.model, c);
    auto gp = gradient_pass(ctx, instance, c);
    int channels = gp.act->dim(0);
    int inner = gp.act->size() / channels;
    std::vector<double> weights(static_cast<std::size_t>(channels));
    for (int k = 0; k < channels; ++k) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < inner; ++i) {
            num += gp.act->data[k * inner + i] * gp.grad[static_cast<std::size_t>(k * inner + i)];
            den += gp.act->data[k * inner + i];
        }
        weights[static_cast<std::size_t>(k)] = num / (den + kEps);
    }
    return combine(*ctx.model, gp.act, weights, Method::XGradCam, c);
}

ExplanationMap ablation_cam(const CamContext& ctx, const TensorPtr& instance, int c) {
    ctx.validate();
    check_class(*ctx.model, c);
    if (ctx.activation_key != "pre_gap_maps") {
        throw UsageError("ablation_cam: only the pre-GAP activation can be ablated");
    }
    auto res = ctx.model->forward(instance, nullptr);
    auto act = fetch_activation(res, ctx.activation_key);
    double y = res.logits->data[static_cast<std::size_t>(c)];
    int channels = act->dim(0);
    std::vector<double> weights(static_cast<std::size_t>(channels));
    for (int k = 0; k < channels; ++k) {
        ForwardOptions fo;
        fo.ablate_pre_gap_channel = k;
        auto ab = ctx.model->forward(instance, nullptr, fo);
        double y_k = ab.logits->data[static_cast<std::size_t>(c)];
        weights[static_cast<std::size_t>(k)] = (y - y_k) / (std::abs(y) + kEps);
    }
    return combine(*ctx.model, act, weights, Method::AblationCam, c);
}

ExplanationMap score_cam(const CamContext& ctx, const TensorPtr& instance, int c) {
    ctx.validate();
    check_class(*ctx.model, c);
    return score_cam_impl(ctx, instance, c, Method::ScoreCam, [&](int, const std::vector<double>& h) {
        std::vector<double> masked(instance->data.size());
        for (std::size_t i = 0; i < masked.size(); ++i) masked[i] = instance->data[i] * h[i];
        return masked_logit(*ctx.model, masked, c);
    });
}

ExplanationMap integrated_score_cam(const CamContext& ctx, const TensorPtr& instance, int c) {
    ctx.validate();
    check_class(*ctx.model, c);
    int m = ctx.integration_steps;
    return score_cam_impl(ctx, instance, c, Method::IntegratedScoreCam, [&](int, const std::vector<double>& h) {
        double s = 0.0;
        for (int j = 1; j <= m; ++j) {
            double t = static_cast<double>(j) / m;
            std::vector<double> masked(instance->data.size());
            for (std::size_t i = 0; i < masked.size(); ++i) masked[i] = t * instance->data[i] * h[i];
            s += masked_logit(*ctx.model, masked, c);
        }
        return s / m;
    });
}

ExplanationMap activation_smoothed_score_cam(const CamContext& ctx, const TensorPtr& instance, int c) {
    ctx.validate();
    check_class(*ctx.model, c);
    // Noise is injected into the activation map before mask normalization.
    auto res = ctx.model->forward(instance, nullptr);
    auto act = fetch_activation(res, ctx.activation_key);
    int channels = act->dim(0);
    int inner = act->size() / channels;
    std::vector<int> spatial_shape(act->shape.begin() + 1, act->shape.end());
    std::mt19937_64 rng(ctx.seed);
    std::vector<double> scores(static_cast<std::size_t>(channels), 0.0);
    std::vector<bool> flat(static_cast<std::size_t>(channels), false);
    for (int k = 0; k < channels; ++k) {
        std::vector<double> a_k(act->data.begin() + static_cast<std::ptrdiff_t>(k) * inner,
                                act->data.begin() + static_cast<std::ptrdiff_t>(k + 1) * inner);
        double sigma = ctx.noise_sigma * value_range(a_k);
        int n = sigma == 0.0 ? 1 : ctx.smooth_samples;
        std::normal_distribution<double> noise(0.0, sigma == 0.0 ? 1.0 : sigma);
        double acc = 0.0;
        bool all_flat = true;
        for (int s = 0; s < n; ++s) {
            auto a_noisy = a_k;
            if (sigma > 0.0) {
                for (auto& v : a_noisy) v += noise(rng);
            }
            auto h = align_to_input(*ctx.model, a_noisy, spatial_shape);
            auto [lo_it, hi_it] = std::minmax_element(h.begin(), h.end());
            if (*hi_it - *lo_it < kEps) continue;
            all_flat = false;
            double lo = *lo_it, range = *hi_it - *lo_it;
            std::vector<double> masked(instance->data.size());
            for (std::size_t i = 0; i < masked.size(); ++i) {
                masked[i] = instance->data[i] * ((h[i] - lo) / range);
            }
            acc += masked_logit(*ctx.model, masked, c);
        }
        if (all_flat) {
            flat[static_cast<std::size_t>(k)] = true;
        } else {
            scores[static_cast<std::size_t>(k)] = acc / n;
        }
    }
    std::vector<double> weights(static_cast<std::size_t>(channels), 0.0);
    double mx = -1e300;
    bool any = false;
    for (int k = 0; k < channels; ++k) {
        if (!flat[static_cast<std::size_t>(k)]) {
            mx = std::max(mx, scores[static_cast<std::size_t>(k)]);
            any = true;
        }
    }
    if (any) {
        double sum = 0.0;
        for (int k = 0; k < channels; ++k) {
            if (flat[static_cast<std::size_t>(k)]) continue;
            weights[static_cast<std::size_t>(k)] = std::exp(scores[static_cast<std::size_t>(k)] - mx);
            sum += weights[static_cast<std::size_t>(k)];
        }
        for (auto& w : weights) w /= sum;
    }
    auto map = combine(*ctx.model, act, weights, Method::ActivationSmoothedScoreCam, c);
    return map;
}

ExplanationMap input_smoothed_score_cam(const CamContext& ctx, const TensorPtr& instance, int c) {
    ctx.validate();
    check_class(*ctx.model, c);
    double sigma = ctx.noise_sigma * value_range(instance->data);
    int n = sigma == 0.0 ? 1 : ctx.smooth_samples;
    std::mt19937_64 rng(ctx.seed);
    std::normal_distribution<double> noise(0.0, sigma == 0.0 ? 1.0 : sigma);
    return score_cam_impl(ctx, instance, c, Method::InputSmoothedScoreCam, [&](int, const std::vector<double>& h) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            std::vector<double> masked(instance->data.size());
            for (std::size_t i = 0; i < masked.size(); ++i) {
                double v = instance->data[i];
                if (sigma > 0.0) v += noise(rng);
                masked[i] = v * h[i];
            }
            s += masked_logit(*ctx.model, masked, c);
        }
        return s / n;
    });
}

ExplanationMap explain(const CamContext& ctx, const TensorPtr& instance, int target_class, Method method) {
    switch (method) {
        case Method::Cam: return cam(ctx, instance, target_class);
        case Method::GradCam: return grad_cam(ctx, instance, target_class);
        case Method::GradCamPP: return grad_cam_pp(ctx, instance, target_class);
        case Method::SmoothGradCamPP: return smooth_grad_cam_pp(ctx, instance, target_class);
        case Method::XGradCam: return xgrad_cam(ctx, instance, target_class);
        case Method::AblationCam: return ablation_cam(ctx, instance, target_class);
        case Method::ScoreCam: return score_cam(ctx, instance, target_class);
        case Method::IntegratedScoreCam: return integrated_score_cam(ctx, instance, target_class);
        case Method::ActivationSmoothedScoreCam: return activation_smoothed_score_cam(ctx, instance, target_class);
        case Method::InputSmoothedScoreCam: return input_smoothed_score_cam(ctx, instance, target_class);
    }
    throw UsageError("explain: bad method id");
}

ExplanationMap normalize_map(const ExplanationMap& map, MapNormalization mode) {
    ExplanationMap out = map;
    out.normalization = mode;
    if (mode == MapNormalization::Raw || out.values.empty()) return out;
    if (mode == MapNormalization::MinMax) {
        auto [lo_it, hi_it] = std::minmax_element(out.values.begin(), out.values.end());
        double lo = *lo_it, range = *hi_it - *lo_it;
        if (range < kEps) {
            std::fill(out.values.begin(), out.values.end(), 0.0);
        } else {
            for (auto& v : out.values) v = (v - lo) / range;
        }
    } else {
        double total = 0.0;
        for (double v : out.values) total += v;
        if (std::abs(total) >= kEps) {
            for (auto& v : out.values) v /= total;
        }
    }
    return out;
}

}  // namespace tsem
