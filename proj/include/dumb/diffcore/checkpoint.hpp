#ifndef DUMB_DIFFCORE_CHECKPOINT_HPP
#define DUMB_DIFFCORE_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "dumb/diffcore/tensor.hpp"

namespace dumb {

using NamedTensors = std::vector<std::pair<std::string, Tensor<float>>>;

// Container layout, all integers little-endian:
//   "DMB1" | u32 tensor count | per tensor:
//   u32 name length | name bytes | u32 rank | u32 dims[rank] | f32 values[prod(dims)]
namespace checkpoint_detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw Error("checkpoint-error", "truncated container");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

} // namespace checkpoint_detail

inline std::string encode_checkpoint(const NamedTensors& tensors) {
    using namespace checkpoint_detail;
    std::string out = "DMB1";
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t d : tensor.shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

inline NamedTensors decode_checkpoint(const std::string& bytes) {
    using namespace checkpoint_detail;
    if (bytes.size() < 8 || bytes.compare(0, 4, "DMB1") != 0) throw Error("checkpoint-error", "bad magic");
    std::size_t pos = 4;
    const std::uint32_t count = get_u32(bytes, pos);
    NamedTensors tensors;
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint32_t len = get_u32(bytes, pos);
        if (pos + len > bytes.size()) throw Error("checkpoint-error", "truncated name");
        std::string name = bytes.substr(pos, len);
        pos += len;
        Shape shape(get_u32(bytes, pos));
        for (auto& d : shape) d = get_u32(bytes, pos);
        std::vector<float> values(numel(shape));
        for (auto& v : values) v = std::bit_cast<float>(get_u32(bytes, pos));
        tensors.emplace_back(std::move(name), Tensor<float>(std::move(shape), std::move(values)));
    }
    if (pos != bytes.size()) throw Error("checkpoint-error", "trailing bytes");
    return tensors;
}

inline void save_checkpoint(const std::string& path, const NamedTensors& tensors) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("checkpoint-error", "cannot write " + path);
    const std::string bytes = encode_checkpoint(tensors);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline NamedTensors load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("checkpoint-error", "cannot read " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

} // namespace dumb

#endif
