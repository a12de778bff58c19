#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace rntc::io {

// Little-endian primitives; readers throw IoError on short reads.
void write_u8(std::ostream& out, std::uint8_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, std::string_view s);
void write_f32_array(std::ostream& out, const float* data, std::size_t count);

std::uint8_t read_u8(std::istream& in);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
std::string read_string(std::istream& in, std::size_t max_length = 1 << 20);
void read_f32_array(std::istream& in, float* data, std::size_t count);

/// 64-bit FNV-1a, used for config and scenario-list fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// SplitMix64 finalizer; derives independent stream seeds from (seed, index) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0);

}  // namespace rntc::io
