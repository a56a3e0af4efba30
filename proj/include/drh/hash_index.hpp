// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drh/model.hpp"

namespace drh {

/// K-bit code; bit k of the word sequence is set iff entry k is +1. Unused high bits are zero.
struct PackedCode {
  std::size_t bits = 0;
  std::vector<std::uint64_t> words;

  bool operator==(const PackedCode&) const = default;
};

inline std::size_t words_for_bits(std::size_t bits) { return (bits + 63) / 64; }

PackedCode pack(std::span<const std::int8_t> code);
std::vector<std::int8_t> unpack(const PackedCode& code);
std::uint32_t hamming(const PackedCode& a, const PackedCode& b);

struct Neighbor {
  std::uint64_t id;
  std::uint32_t distance;
  bool operator==(const Neighbor&) const = default;
};

/// Flat, immutable collection of packed codes with unique ids. Queries only read.
class CodeIndex {
 public:
  CodeIndex() = default;
  CodeIndex(std::size_t bits, std::vector<std::uint64_t> ids, std::vector<std::uint64_t> words);
  static CodeIndex from_codes(const BinaryCodes& codes, std::vector<std::uint64_t> ids);

  std::size_t bits() const { return bits_; }
  std::size_t size() const { return ids_.size(); }
  std::size_t words_per_code() const { return words_for_bits(bits_); }
  const std::vector<std::uint64_t>& ids() const { return ids_; }
  const std::vector<std::uint64_t>& words() const { return words_; }
  PackedCode code(std::size_t row) const;

  /// Distance from query to every stored code, in storage order.
  std::vector<std::uint32_t> distances(const PackedCode& query) const;
  /// Every item by ascending distance, ties by ascending id.
  std::vector<Neighbor> rank_all(const PackedCode& query) const;
  /// Items with distance <= radius, ordered like rank_all.
  std::vector<Neighbor> radius_query(const PackedCode& query, std::uint32_t radius) const;

 private:
  void check_query(const PackedCode& query) const;

  std::size_t bits_ = 0;
  std::vector<std::uint64_t> ids_;
  std::vector<std::uint64_t> words_;  // size() x words_per_code()
};

// Code file: "DRHC", u32 version, u32 K, u64 count, then per item u64 id followed by its code words.
inline constexpr std::uint32_t kCodeFileVersion = 1;

std::vector<std::uint8_t> serialize_codes(const CodeIndex& index);
CodeIndex deserialize_codes(const std::vector<std::uint8_t>& bytes, const std::string& what = "code file");
void write_code_file(const std::string& path, const CodeIndex& index);
CodeIndex read_code_file(const std::string& path);

}  // namespace drh
