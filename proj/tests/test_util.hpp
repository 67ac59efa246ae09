#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "tsem/tensor.hpp"

namespace testutil {

inline tsem::TensorPtr random_tensor(std::vector<int> shape, std::uint64_t seed,
                                     double lo = -1.0, double hi = 1.0) {
    auto t = tsem::Tensor::zeros(shape);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : t->data) v = dist(rng);
    return t;
}

// Keeps values away from the ReLU kink so finite differences stay valid.
inline tsem::TensorPtr random_tensor_no_kink(std::vector<int> shape, std::uint64_t seed) {
    auto t = random_tensor(shape, seed);
    for (auto& v : t->data) {
        if (std::abs(v) < 0.05) v = v < 0 ? v - 0.1 : v + 0.1;
    }
    return t;
}

using ScalarFn = std::function<tsem::TensorPtr(tsem::Tape*, const std::vector<tsem::TensorPtr>&)>;

// Central finite-difference gradient check. `fn` must build a scalar loss on
// the given tape from clones of the provided inputs. Returns the worst
// relative error across all input elements.
inline double grad_check(const ScalarFn& fn, const std::vector<tsem::TensorPtr>& inputs,
                         double h = 1e-6) {
    auto clone_all = [&](int perturb_input, std::size_t perturb_idx, double delta) {
        std::vector<tsem::TensorPtr> copies;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            auto c = tsem::Tensor::of(inputs[i]->shape, inputs[i]->data);
            if (static_cast<int>(i) == perturb_input) c->data[perturb_idx] += delta;
            copies.push_back(c);
        }
        return copies;
    };

    std::vector<tsem::TensorPtr> tracked = clone_all(-1, 0, 0.0);
    for (auto& t : tracked) t->set_requires_grad(true);
    tsem::Tape tape;
    auto loss = fn(&tape, tracked);
    tape.backward(loss);

    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (std::size_t j = 0; j < inputs[i]->data.size(); ++j) {
            auto plus = clone_all(static_cast<int>(i), j, h);
            auto minus = clone_all(static_cast<int>(i), j, -h);
            tsem::Tape t1, t2;
            double fp = fn(&t1, plus)->data[0];
            double fm = fn(&t2, minus)->data[0];
            double numeric = (fp - fm) / (2.0 * h);
            double analytic = tracked[i]->grad[j];
            double err = std::abs(numeric - analytic) /
                         std::max({1.0, std::abs(numeric), std::abs(analytic)});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace testutil
