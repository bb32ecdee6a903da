#include "ftm/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "ftm/errors.hpp"

namespace ftm {

Adam::Adam(const ParameterStore& params, double learning_rate, double beta1, double beta2,
           double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Param& p : params) {
        m_.push_back(Tensor::zeros(p.value.shape));
        v_.push_back(Tensor::zeros(p.value.shape));
    }
}

void Adam::step(ParameterStore& params, const std::vector<Tensor>& grads) {
    if (grads.size() != params.size()) {
        std::ostringstream os;
        os << "adam: " << grads.size() << " gradients for " << params.size() << " parameters";
        throw ContractViolation(os.str());
    }
    ++step_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param& p = params.at(i);
        const Tensor& g = grads[i];
        if (g.shape != p.value.shape) {
            throw ContractViolation("adam: gradient shape " + shape_to_string(g.shape) +
                                    " mismatches parameter '" + p.name + "' " +
                                    shape_to_string(p.value.shape));
        }
        for (std::size_t j = 0; j < g.values.size(); ++j) {
            double gv = g.values[j];
            if (std::isnan(gv)) {
                throw NumericalError("adam: NaN gradient for parameter '" + p.name + "'");
            }
            double& m = m_[i].values[j];
            double& v = v_[i].values[j];
            m = beta1_ * m + (1.0 - beta1_) * gv;
            v = beta2_ * v + (1.0 - beta2_) * gv * gv;
            double mhat = m / bc1;
            double vhat = v / bc2;
            p.value.values[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

} // namespace ftm
