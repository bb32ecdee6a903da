#include "ftm/tape.hpp"

#include <cmath>
#include <sstream>

#include "ftm/errors.hpp"

namespace ftm {
namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    std::ostringstream os;
    os << op << ": incompatible shapes " << shape_to_string(a.shape) << " and "
       << shape_to_string(b.shape);
    throw ContractViolation(os.str());
}

void require_rank2(const char* op, const Tensor& a) {
    if (a.rank() != 2) {
        throw ContractViolation(std::string(op) + ": expected a rank-2 tensor, got shape " +
                                shape_to_string(a.shape));
    }
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

const char* op_name(OpKind kind) {
    switch (kind) {
        case OpKind::Leaf: return "leaf";
        case OpKind::Add: return "add";
        case OpKind::AddRowVec: return "add_rowvec";
        case OpKind::Mul: return "mul";
        case OpKind::Scale: return "scale";
        case OpKind::MatMul: return "matmul";
        case OpKind::Transpose: return "transpose";
        case OpKind::ConcatRows: return "concat_rows";
        case OpKind::ConcatCols: return "concat_cols";
        case OpKind::Slice: return "slice";
        case OpKind::Relu: return "relu";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Log: return "log";
        case OpKind::Cos: return "cos";
        case OpKind::SoftmaxRows: return "softmax_rows";
        case OpKind::SumAll: return "sum_all";
        case OpKind::MeanAll: return "mean_all";
    }
    return "?";
}

const Tensor& Var::value() const { return tape->value(id); }

double Var::scalar() const {
    const Tensor& t = value();
    if (t.numel() != 1) {
        throw ContractViolation("scalar() on tensor of shape " + shape_to_string(t.shape));
    }
    return t.values[0];
}

Var Tape::leaf(Tensor t) {
    Node n;
    n.kind = OpKind::Leaf;
    n.out = std::move(t);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::apply(OpKind kind, std::vector<std::int32_t> inputs,
                std::vector<std::int64_t> iattrs, double dattr) {
    Node n;
    n.kind = kind;
    n.inputs = std::move(inputs);
    n.iattrs = std::move(iattrs);
    n.dattr = dattr;
    n.out = eval(n);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::replay() {
    for (Node& n : nodes_) {
        if (n.kind != OpKind::Leaf) n.out = eval(n);
    }
}

Tensor Tape::eval(const Node& n) const {
    auto in = [&](std::size_t i) -> const Tensor& { return value(n.inputs[i]); };
    switch (n.kind) {
        case OpKind::Leaf:
            return n.out;
        case OpKind::Add: {
            const Tensor &a = in(0), &b = in(1);
            if (!a.same_shape(b)) shape_error("add", a, b);
            Tensor out = a;
            for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
            return out;
        }
        case OpKind::AddRowVec: {
            const Tensor &a = in(0), &b = in(1);
            require_rank2("add_rowvec", a);
            if (b.rows() != 1 || b.cols() != a.cols()) shape_error("add_rowvec", a, b);
            Tensor out = a;
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t c = 0; c < a.cols(); ++c) out.at(r, c) += b.values[c];
            return out;
        }
        case OpKind::Mul: {
            const Tensor &a = in(0), &b = in(1);
            if (!a.same_shape(b)) shape_error("mul", a, b);
            Tensor out = a;
            for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= b.values[i];
            return out;
        }
        case OpKind::Scale: {
            Tensor out = in(0);
            for (double& v : out.values) v *= n.dattr;
            return out;
        }
        case OpKind::MatMul: {
            const Tensor &a = in(0), &b = in(1);
            require_rank2("matmul", a);
            require_rank2("matmul", b);
            if (a.cols() != b.rows()) shape_error("matmul", a, b);
            std::size_t m = a.rows(), k = a.cols(), p = b.cols();
            Tensor out = Tensor::zeros({m, p});
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t kk = 0; kk < k; ++kk) {
                    double av = a.values[i * k + kk];
                    const double* brow = &b.values[kk * p];
                    double* orow = &out.values[i * p];
                    for (std::size_t j = 0; j < p; ++j) orow[j] += av * brow[j];
                }
            }
            return out;
        }
        case OpKind::Transpose: {
            const Tensor& a = in(0);
            require_rank2("transpose", a);
            Tensor out = Tensor::zeros({a.cols(), a.rows()});
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t c = 0; c < a.cols(); ++c) out.at(c, r) = a.at(r, c);
            return out;
        }
        case OpKind::ConcatRows: {
            std::size_t cols = in(0).cols(), rows = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                require_rank2("concat_rows", in(i));
                if (in(i).cols() != cols) shape_error("concat_rows", in(0), in(i));
                rows += in(i).rows();
            }
            Tensor out = Tensor::zeros({rows, cols});
            std::size_t r = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                const Tensor& part = in(i);
                std::copy(part.values.begin(), part.values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(r * cols));
                r += part.rows();
            }
            return out;
        }
        case OpKind::ConcatCols: {
            std::size_t rows = in(0).rows(), cols = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                require_rank2("concat_cols", in(i));
                if (in(i).rows() != rows) shape_error("concat_cols", in(0), in(i));
                cols += in(i).cols();
            }
            Tensor out = Tensor::zeros({rows, cols});
            std::size_t c0 = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                const Tensor& part = in(i);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < part.cols(); ++c) out.at(r, c0 + c) = part.at(r, c);
                c0 += part.cols();
            }
            return out;
        }
        case OpKind::Slice: {
            const Tensor& a = in(0);
            require_rank2("slice", a);
            auto r0 = static_cast<std::size_t>(n.iattrs[0]), r1 = static_cast<std::size_t>(n.iattrs[1]);
            auto c0 = static_cast<std::size_t>(n.iattrs[2]), c1 = static_cast<std::size_t>(n.iattrs[3]);
            if (r0 >= r1 || c0 >= c1 || r1 > a.rows() || c1 > a.cols()) {
                std::ostringstream os;
                os << "slice [" << r0 << "," << r1 << ")x[" << c0 << "," << c1
                   << ") out of bounds for shape " << shape_to_string(a.shape);
                throw ContractViolation(os.str());
            }
            Tensor out = Tensor::zeros({r1 - r0, c1 - c0});
            for (std::size_t r = r0; r < r1; ++r)
                for (std::size_t c = c0; c < c1; ++c) out.at(r - r0, c - c0) = a.at(r, c);
            return out;
        }
        case OpKind::Relu: {
            Tensor out = in(0);
            for (double& v : out.values) v = v > 0.0 ? v : 0.0;
            return out;
        }
        case OpKind::Sigmoid: {
            Tensor out = in(0);
            for (double& v : out.values) v = stable_sigmoid(v);
            return out;
        }
        case OpKind::Log: {
            Tensor out = in(0);
            for (double& v : out.values) {
                if (!(v > 0.0)) {
                    std::ostringstream os;
                    os << "log of non-positive value " << v;
                    throw NumericalError(os.str());
                }
                v = std::log(v);
            }
            return out;
        }
        case OpKind::Cos: {
            Tensor out = in(0);
            for (double& v : out.values) v = std::cos(v);
            return out;
        }
        case OpKind::SoftmaxRows: {
            const Tensor& a = in(0);
            require_rank2("softmax_rows", a);
            Tensor out = a;
            for (std::size_t r = 0; r < a.rows(); ++r) {
                double mx = a.at(r, 0);
                for (std::size_t c = 1; c < a.cols(); ++c) mx = std::max(mx, a.at(r, c));
                double sum = 0.0;
                for (std::size_t c = 0; c < a.cols(); ++c) {
                    double e = std::exp(a.at(r, c) - mx);
                    out.at(r, c) = e;
                    sum += e;
                }
                for (std::size_t c = 0; c < a.cols(); ++c) out.at(r, c) /= sum;
            }
            return out;
        }
        case OpKind::SumAll: {
            const Tensor& a = in(0);
            double s = 0.0;
            for (double v : a.values) s += v;
            return Tensor::scalar(s);
        }
        case OpKind::MeanAll: {
            const Tensor& a = in(0);
            double s = 0.0;
            for (double v : a.values) s += v;
            return Tensor::scalar(s / static_cast<double>(a.numel()));
        }
    }
    throw ContractViolation("unknown op kind");
}

std::vector<Tensor> Tape::backward(Var loss) const {
    if (loss.tape != this) throw ContractViolation("backward: loss recorded on a different tape");
    const Tensor& lv = value(loss.id);
    if (lv.numel() != 1) {
        throw ContractViolation("backward: loss must be scalar, got shape " +
                                shape_to_string(lv.shape));
    }
    std::vector<Tensor> adj(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) adj[i] = Tensor::zeros(nodes_[i].out.shape);
    adj[static_cast<std::size_t>(loss.id)].values[0] = 1.0;

    for (std::size_t idx = static_cast<std::size_t>(loss.id) + 1; idx-- > 0;) {
        const Node& n = nodes_[idx];
        if (n.kind == OpKind::Leaf) continue;
        const Tensor& g = adj[idx];
        auto in = [&](std::size_t i) -> const Tensor& { return value(n.inputs[i]); };
        auto gin = [&](std::size_t i) -> Tensor& { return adj[static_cast<std::size_t>(n.inputs[i])]; };
        switch (n.kind) {
            case OpKind::Add: {
                for (std::size_t i = 0; i < g.values.size(); ++i) gin(0).values[i] += g.values[i];
                for (std::size_t i = 0; i < g.values.size(); ++i) gin(1).values[i] += g.values[i];
                break;
            }
            case OpKind::AddRowVec: {
                Tensor& ga = gin(0);
                Tensor& gb = gin(1);
                for (std::size_t i = 0; i < g.values.size(); ++i) ga.values[i] += g.values[i];
                std::size_t cols = in(0).cols();
                for (std::size_t r = 0; r < in(0).rows(); ++r)
                    for (std::size_t c = 0; c < cols; ++c) gb.values[c] += g.values[r * cols + c];
                break;
            }
            case OpKind::Mul: {
                const Tensor &a = in(0), &b = in(1);
                for (std::size_t i = 0; i < g.values.size(); ++i) gin(0).values[i] += g.values[i] * b.values[i];
                for (std::size_t i = 0; i < g.values.size(); ++i) gin(1).values[i] += g.values[i] * a.values[i];
                break;
            }
            case OpKind::Scale: {
                for (std::size_t i = 0; i < g.values.size(); ++i) gin(0).values[i] += g.values[i] * n.dattr;
                break;
            }
            case OpKind::MatMul: {
                const Tensor &a = in(0), &b = in(1);
                std::size_t m = a.rows(), k = a.cols(), p = b.cols();
                // dA = g * B^T
                Tensor& ga = gin(0);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < p; ++j) s += g.values[i * p + j] * b.values[kk * p + j];
                        ga.values[i * k + kk] += s;
                    }
                // dB = A^T * g
                Tensor& gb = gin(1);
                for (std::size_t kk = 0; kk < k; ++kk)
                    for (std::size_t j = 0; j < p; ++j) {
                        double s = 0.0;
                        for (std::size_t i = 0; i < m; ++i) s += a.values[i * k + kk] * g.values[i * p + j];
                        gb.values[kk * p + j] += s;
                    }
                break;
            }
            case OpKind::Transpose: {
                const Tensor& a = in(0);
                Tensor& ga = gin(0);
                for (std::size_t r = 0; r < a.rows(); ++r)
                    for (std::size_t c = 0; c < a.cols(); ++c) ga.at(r, c) += g.at(c, r);
                break;
            }
            case OpKind::ConcatRows: {
                std::size_t cols = n.out.cols(), r = 0;
                for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                    Tensor& gi = gin(i);
                    for (std::size_t idx2 = 0; idx2 < gi.values.size(); ++idx2)
                        gi.values[idx2] += g.values[r * cols + idx2];
                    r += in(i).rows();
                }
                break;
            }
            case OpKind::ConcatCols: {
                std::size_t rows = n.out.rows(), c0 = 0;
                for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                    Tensor& gi = gin(i);
                    std::size_t w = in(i).cols();
                    for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < w; ++c) gi.at(r, c) += g.at(r, c0 + c);
                    c0 += w;
                }
                break;
            }
            case OpKind::Slice: {
                Tensor& ga = gin(0);
                auto r0 = static_cast<std::size_t>(n.iattrs[0]), r1 = static_cast<std::size_t>(n.iattrs[1]);
                auto c0 = static_cast<std::size_t>(n.iattrs[2]), c1 = static_cast<std::size_t>(n.iattrs[3]);
                for (std::size_t r = r0; r < r1; ++r)
                    for (std::size_t c = c0; c < c1; ++c) ga.at(r, c) += g.at(r - r0, c - c0);
                break;
            }
            case OpKind::Relu: {
                const Tensor& a = in(0);
                // subgradient at exactly 0 is taken as 0
                for (std::size_t i = 0; i < g.values.size(); ++i)
                    gin(0).values[i] += a.values[i] > 0.0 ? g.values[i] : 0.0;
                break;
            }
            case OpKind::Sigmoid: {
                const Tensor& y = n.out;
                for (std::size_t i = 0; i < g.values.size(); ++i)
                    gin(0).values[i] += g.values[i] * y.values[i] * (1.0 - y.values[i]);
                break;
            }
            case OpKind::Log: {
                const Tensor& a = in(0);
                for (std::size_t i = 0; i < g.values.size(); ++i)
                    gin(0).values[i] += g.values[i] / a.values[i];
                break;
            }
            case OpKind::Cos: {
                const Tensor& a = in(0);
                for (std::size_t i = 0; i < g.values.size(); ++i)
                    gin(0).values[i] += -g.values[i] * std::sin(a.values[i]);
                break;
            }
            case OpKind::SoftmaxRows: {
                const Tensor& y = n.out;
                Tensor& ga = gin(0);
                std::size_t cols = y.cols();
                for (std::size_t r = 0; r < y.rows(); ++r) {
                    double dotv = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) dotv += g.at(r, c) * y.at(r, c);
                    for (std::size_t c = 0; c < cols; ++c)
                        ga.at(r, c) += y.at(r, c) * (g.at(r, c) - dotv);
                }
                break;
            }
            case OpKind::SumAll: {
                Tensor& ga = gin(0);
                for (double& v : ga.values) v += g.values[0];
                break;
            }
            case OpKind::MeanAll: {
                Tensor& ga = gin(0);
                double s = g.values[0] / static_cast<double>(ga.numel());
                for (double& v : ga.values) v += s;
                break;
            }
            case OpKind::Leaf:
                break;
        }
    }
    return adj;
}

namespace {

Tape* common_tape(Var a, Var b, const char* op) {
    if (a.tape == nullptr || b.tape == nullptr || a.tape != b.tape) {
        throw ContractViolation(std::string(op) + ": operands must live on the same tape");
    }
    return a.tape;
}

} // namespace

Var add(Var a, Var b) { return common_tape(a, b, "add")->apply(OpKind::Add, {a.id, b.id}); }
Var add_rowvec(Var m, Var row) {
    return common_tape(m, row, "add_rowvec")->apply(OpKind::AddRowVec, {m.id, row.id});
}
Var mul(Var a, Var b) { return common_tape(a, b, "mul")->apply(OpKind::Mul, {a.id, b.id}); }
Var scale(Var a, double c) { return a.tape->apply(OpKind::Scale, {a.id}, {}, c); }
Var matmul(Var a, Var b) { return common_tape(a, b, "matmul")->apply(OpKind::MatMul, {a.id, b.id}); }
Var transpose(Var a) { return a.tape->apply(OpKind::Transpose, {a.id}); }

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ContractViolation("concat_rows: no inputs");
    std::vector<std::int32_t> ids;
    for (const Var& v : parts) {
        common_tape(parts[0], v, "concat_rows");
        ids.push_back(v.id);
    }
    return parts[0].tape->apply(OpKind::ConcatRows, std::move(ids));
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ContractViolation("concat_cols: no inputs");
    std::vector<std::int32_t> ids;
    for (const Var& v : parts) {
        common_tape(parts[0], v, "concat_cols");
        ids.push_back(v.id);
    }
    return parts[0].tape->apply(OpKind::ConcatCols, std::move(ids));
}

Var slice(Var a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    return a.tape->apply(OpKind::Slice, {a.id},
                         {static_cast<std::int64_t>(r0), static_cast<std::int64_t>(r1),
                          static_cast<std::int64_t>(c0), static_cast<std::int64_t>(c1)});
}

Var relu(Var a) { return a.tape->apply(OpKind::Relu, {a.id}); }
Var sigmoid(Var a) { return a.tape->apply(OpKind::Sigmoid, {a.id}); }
Var log(Var a) { return a.tape->apply(OpKind::Log, {a.id}); }
Var cos(Var a) { return a.tape->apply(OpKind::Cos, {a.id}); }
Var softmax_rows(Var a) { return a.tape->apply(OpKind::SoftmaxRows, {a.id}); }
Var sum_all(Var a) { return a.tape->apply(OpKind::SumAll, {a.id}); }
Var mean_all(Var a) { return a.tape->apply(OpKind::MeanAll, {a.id}); }

} // namespace ftm
