#pragma once

#include <cstdint>
#include <vector>

#include "ftm/params.hpp"
#include "ftm/tensor.hpp"

namespace ftm {

/// Adam with bias correction. Moment arrays mirror the parameter store;
/// one shared step counter.
class Adam {
public:
    explicit Adam(const ParameterStore& params, double learning_rate = 1e-4,
                  double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

    /// Applies one update in place. `grads` holds one tensor per parameter in
    /// store order; a NaN gradient aborts naming the offending parameter.
    void step(ParameterStore& params, const std::vector<Tensor>& grads);

    std::uint64_t step_count() const { return step_; }
    double learning_rate() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t step_ = 0;
    std::vector<Tensor> m_, v_;
};

} // namespace ftm
