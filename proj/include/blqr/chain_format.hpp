#pragma once

#include <cstdint>
#include <string>

#include "blqr/gibbs.hpp"

namespace blqr {

inline constexpr char kChainMagic[8] = {'B', 'L', 'Q', 'R', 'C', 'H', 'N', '1'};
inline constexpr int kChainFormatVersion = 1;
inline constexpr const char* kCodeVersion = "0.1.0";

// Columnar binary chain file: 8-byte magic, little-endian u64 header length,
// UTF-8 JSON header, then the draw blocks as little-endian float64 rows.
// Timing fields are deliberately not stored; identical draws give identical
// bytes. manifest_hash (0 outside CLI runs) and manifest_echo travel in the
// header. Writing is atomic (temp file + rename).
void write_chain(const std::string& path, const ChainResult& chain,
                 std::uint64_t manifest_hash = 0, const std::string& manifest_echo = "");

struct LoadedChain {
  ChainResult chain;
  std::uint64_t manifest_hash = 0;
  std::string manifest_echo;
};

LoadedChain read_chain(const std::string& path);

// Per-parameter draw series as `iteration,value` rows; iteration is the
// absolute sweep index the draw was taken at.
void write_trace_csv(const std::string& path, const ChainResult& chain,
                     const std::string& row_name, std::uint64_t manifest_hash);

// File-name-safe version of a parameter name.
std::string sanitize_param_name(const std::string& name);

}  // namespace blqr
