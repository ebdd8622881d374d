#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include "poselab/nn.hpp"

namespace poselab {

// Checkpoint container, version 1. Little-endian throughout:
//   magic "PLCK", u32 version, u32 entry count;
//   per entry: u32 name length, name bytes, 4 x u32 shape (n,c,h,w),
//   then n*c*h*w float32 values.
// Layout is documented in README.md and stable across versions.

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void save_checkpoint(const std::string& path, const ParamRegistry<T>& reg) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    auto put_u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    f.write("PLCK", 4);
    put_u32(kCheckpointVersion);
    put_u32(static_cast<std::uint32_t>(reg.entries().size()));
    for (const auto& e : reg.entries()) {
        put_u32(static_cast<std::uint32_t>(e.name.size()));
        f.write(e.name.data(), std::streamsize(e.name.size()));
        for (int d : e.tensor->shape) put_u32(static_cast<std::uint32_t>(d));
        for (T v : e.tensor->values) {
            const float fv = static_cast<float>(v);
            f.write(reinterpret_cast<const char*>(&fv), 4);
        }
    }
    if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

/// Loads values into an already-constructed registry; names and shapes
/// must match exactly.
template <class T>
void load_checkpoint(const std::string& path, ParamRegistry<T>& reg) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
    auto get_u32 = [&]() {
        std::uint32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    char magic[4] = {};
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "PLCK")
        throw std::runtime_error("checkpoint: bad magic in " + path);
    if (get_u32() != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version in " + path);
    const std::uint32_t count = get_u32();
    if (count != reg.entries().size())
        throw std::runtime_error("checkpoint: entry count mismatch in " + path + ": file has " +
                                 std::to_string(count) + ", model has " +
                                 std::to_string(reg.entries().size()));
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = get_u32();
        std::string name(len, '\0');
        f.read(name.data(), len);
        auto p = reg.find(name);
        if (!p) throw std::runtime_error("checkpoint: unknown parameter '" + name + "' in " + path);
        std::array<int, 4> shape{};
        for (int& d : shape) d = static_cast<int>(get_u32());
        if (shape != p->shape)
            throw std::runtime_error("checkpoint: shape mismatch for '" + name + "' in " + path);
        for (auto& v : p->values) {
            float fv = 0;
            f.read(reinterpret_cast<char*>(&fv), 4);
            v = static_cast<T>(fv);
        }
        if (!f) throw std::runtime_error("checkpoint: truncated file: " + path);
    }
}

}  // namespace poselab
