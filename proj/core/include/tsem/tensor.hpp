#ifndef TSEM_TENSOR_HPP
#define TSEM_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "tsem/errors.hpp"

namespace tsem {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major tensor of 64-bit reals. The grad buffer is allocated
// whenever requires_grad is set and accumulates additively during backward.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;

    int size() const { return static_cast<int>(data.size()); }
    int dim(int axis) const { return shape[static_cast<std::size_t>(axis)]; }
    int ndim() const { return static_cast<int>(shape.size()); }

    void set_requires_grad(bool rg) {
        requires_grad = rg;
        if (rg) grad.assign(data.size(), 0.0);
        else grad.clear();
    }
    void zero_grad() {
        if (requires_grad) grad.assign(data.size(), 0.0);
    }

    double& at(int i) { return data[static_cast<std::size_t>(i)]; }
    double at(int i) const { return data[static_cast<std::size_t>(i)]; }
    double& at(int i, int j) { return data[static_cast<std::size_t>(i * shape[1] + j)]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i * shape[1] + j)]; }

    static TensorPtr zeros(std::vector<int> shape, bool requires_grad = false);
    static TensorPtr full(std::vector<int> shape, double value, bool requires_grad = false);
    static TensorPtr of(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);
    static TensorPtr scalar(double value, bool requires_grad = false);
};

inline std::int64_t shape_product(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int e : shape) n *= e;
    return n;
}

std::string shape_to_string(const std::vector<int>& shape);

// Reverse-mode tape: append-only list of backward closures, visited exactly
// once in reverse insertion order. One tape belongs to one thread.
class Tape {
  public:
    void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

    // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be a scalar
    // produced by ops recorded on this tape.
    void backward(const TensorPtr& loss);

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

  private:
    std::vector<std::function<void()>> nodes_;
};

}  // namespace tsem

#endif
