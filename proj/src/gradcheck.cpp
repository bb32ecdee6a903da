#include "ftm/gradcheck.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "ftm/errors.hpp"

namespace ftm {
namespace {

Var run_program(Tape& tape, const ParameterStore& params, const TapeProgram& program,
                std::vector<Var>* leaves_out = nullptr) {
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Param& p : params) leaves.push_back(tape.leaf(p.value));
    Var loss = program(tape, leaves);
    if (loss.value().numel() != 1) {
        throw ContractViolation("program loss must be scalar, got shape " +
                                shape_to_string(loss.value().shape));
    }
    if (leaves_out) *leaves_out = std::move(leaves);
    return loss;
}

} // namespace

double evaluate_program(const ParameterStore& params, const TapeProgram& program) {
    Tape tape;
    return run_program(tape, params, program).scalar();
}

std::vector<Tensor> analytic_gradients(const ParameterStore& params, const TapeProgram& program,
                                       double* loss_out) {
    Tape tape;
    std::vector<Var> leaves;
    Var loss = run_program(tape, params, program, &leaves);
    if (loss_out) *loss_out = loss.scalar();
    std::vector<Tensor> adj = tape.backward(loss);
    std::vector<Tensor> grads;
    grads.reserve(leaves.size());
    for (const Var& leaf : leaves) grads.push_back(adj[static_cast<std::size_t>(leaf.id)]);
    return grads;
}

double finite_diff_check(ParameterStore params, const TapeProgram& program, double h) {
    if (!(h > 0.0) || h > 1e-2) {
        std::ostringstream os;
        os << "finite_diff_check: h must be in (0, 1e-2], got " << h;
        throw ContractViolation(os.str());
    }
    double base1 = evaluate_program(params, program);
    double base2 = evaluate_program(params, program);
    if (std::memcmp(&base1, &base2, sizeof(double)) != 0) {
        std::ostringstream os;
        os << "finite_diff_check: program is not deterministic (" << base1 << " vs " << base2
           << ")";
        throw NumericalError(os.str());
    }

    std::vector<Tensor> analytic = analytic_gradients(params, program);

    double max_rel = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& value = params.at(i).value;
        for (std::size_t j = 0; j < value.values.size(); ++j) {
            double saved = value.values[j];
            value.values[j] = saved + h;
            double fp = evaluate_program(params, program);
            value.values[j] = saved - h;
            double fm = evaluate_program(params, program);
            value.values[j] = saved;
            double central = (fp - fm) / (2.0 * h);
            double rel = std::abs(analytic[i].values[j] - central) /
                         std::max(1.0, std::abs(central));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace ftm
