#include "tsem/tensor.hpp"

#include <sstream>

namespace tsem {

TensorPtr Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

TensorPtr Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    for (int e : shape) {
        if (e <= 0) throw DimensionError("tensor extent must be positive, got " + shape_to_string(shape));
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data.assign(static_cast<std::size_t>(shape_product(t->shape)), value);
    t->set_requires_grad(requires_grad);
    return t;
}

TensorPtr Tensor::of(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    if (shape_product(shape) != static_cast<std::int64_t>(values.size())) {
        throw DimensionError("value count " + std::to_string(values.size()) +
                             " does not match shape " + shape_to_string(shape));
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(values);
    t->set_requires_grad(requires_grad);
    return t;
}

TensorPtr Tensor::scalar(double value, bool requires_grad) {
    return of({1}, {value}, requires_grad);
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

void Tape::backward(const TensorPtr& loss) {
    if (!loss) throw UsageError("backward: null loss tensor");
    if (loss->size() != 1) throw UsageError("backward: loss must be a scalar, got shape " + shape_to_string(loss->shape));
    if (!loss->requires_grad || nodes_.empty()) {
        throw UsageError("backward: loss tensor was not produced on this tape");
    }
    loss->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

}  // namespace tsem
