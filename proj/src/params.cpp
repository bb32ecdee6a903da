#include "ftm/params.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ftm/errors.hpp"

namespace ftm {

std::size_t ParameterStore::add(std::string name, Tensor value) {
    if (index_.count(name)) throw ContractViolation("duplicate parameter name: " + name);
    std::size_t idx = params_.size();
    index_.emplace(name, idx);
    params_.push_back(Param{std::move(name), std::move(value)});
    return idx;
}

std::size_t ParameterStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractViolation("unknown parameter: " + name);
    return it->second;
}

std::size_t ParameterStore::total_entries() const {
    std::size_t n = 0;
    for (const Param& p : params_) n += p.value.numel();
    return n;
}

namespace {

constexpr char kMagic[4] = {'F', 'T', 'M', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace

void save_checkpoint(const ParameterStore& params, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ParseError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    for (const Param& p : params) {
        write_u32(os, static_cast<std::uint32_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_u32(os, static_cast<std::uint32_t>(p.value.rank()));
        for (std::size_t e : p.value.shape) write_u32(os, static_cast<std::uint32_t>(e));
        for (double v : p.value.values) write_f64(os, v);
    }
    if (!os) throw ParseError("checkpoint write failed: " + path);
}

ParameterStore load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw ParseError("not a checkpoint file (bad magic): " + path);
    }
    ParameterStore store;
    while (true) {
        std::uint32_t name_len = read_u32(is);
        if (is.eof()) break;
        if (!is) throw ParseError("truncated checkpoint: " + path);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        std::uint32_t rank = read_u32(is);
        std::vector<std::size_t> shape(rank);
        for (std::uint32_t i = 0; i < rank; ++i) shape[i] = read_u32(is);
        std::size_t n = shape_numel(shape);
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) values[i] = read_f64(is);
        if (!is) throw ParseError("truncated checkpoint: " + path);
        store.add(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    return store;
}

void load_checkpoint_into(ParameterStore& expected, const std::string& path) {
    ParameterStore loaded = load_checkpoint(path);
    if (loaded.size() != expected.size()) {
        std::ostringstream os;
        os << "checkpoint has " << loaded.size() << " parameters, model expects "
           << expected.size();
        throw ConfigError(os.str());
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        Param& want = expected.at(i);
        const Param& got = loaded.at(i);
        if (got.name != want.name || got.value.shape != want.value.shape) {
            std::ostringstream os;
            os << "checkpoint parameter " << i << " is '" << got.name << "' "
               << shape_to_string(got.value.shape) << ", model expects '" << want.name << "' "
               << shape_to_string(want.value.shape);
            throw ConfigError(os.str());
        }
        want.value = got.value;
    }
}

} // namespace ftm
