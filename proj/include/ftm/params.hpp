#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ftm/tensor.hpp"

namespace ftm {

struct Param {
    std::string name;
    Tensor value;
};

/// Ordered collection of named learnable tensors. Registration order is
/// stable and defines the checkpoint serialization order.
class ParameterStore {
public:
    std::size_t add(std::string name, Tensor value);

    std::size_t size() const { return params_.size(); }
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    std::size_t index_of(const std::string& name) const;

    Param& at(std::size_t i) { return params_[i]; }
    const Param& at(std::size_t i) const { return params_[i]; }
    Tensor& value(const std::string& name) { return params_[index_of(name)].value; }
    const Tensor& value(const std::string& name) const { return params_[index_of(name)].value; }

    std::size_t total_entries() const;

    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::vector<Param> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Flat binary checkpoint: magic "FTM1", then per parameter
/// u32 name length (LE), name bytes, u32 rank, u32 extents, f64 values (LE).
void save_checkpoint(const ParameterStore& params, const std::string& path);

/// Loads a checkpoint written by save_checkpoint. When `expected` is given,
/// names and shapes must match it parameter-for-parameter.
ParameterStore load_checkpoint(const std::string& path);
void load_checkpoint_into(ParameterStore& expected, const std::string& path);

} // namespace ftm
