// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/hash_index.hpp"

#include <algorithm>
#include <bit>
#include <unordered_set>

#include "drh/binary_io.hpp"
#include "drh/kernels.hpp"

namespace drh {

PackedCode pack(std::span<const std::int8_t> code) {
  if (code.empty()) throw_invalid("pack: empty code");
  PackedCode out;
  out.bits = code.size();
  out.words.assign(words_for_bits(code.size()), 0);
  for (std::size_t k = 0; k < code.size(); ++k) {
    if (code[k] == 1) {
      out.words[k / 64] |= std::uint64_t{1} << (k % 64);
    } else if (code[k] != -1) {
      throw_invalid("pack: entry " + std::to_string(k) + " is " + std::to_string(code[k]) + ", expected +1 or -1");
    }
  }
  return out;
}

std::vector<std::int8_t> unpack(const PackedCode& code) {
  std::vector<std::int8_t> out(code.bits);
  for (std::size_t k = 0; k < code.bits; ++k) out[k] = ((code.words[k / 64] >> (k % 64)) & 1u) ? 1 : -1;
  return out;
}

std::uint32_t hamming(const PackedCode& a, const PackedCode& b) {
  if (a.bits != b.bits || a.words.size() != b.words.size()) {
    throw_invalid("hamming: code sizes differ (" + std::to_string(a.bits) + " vs " + std::to_string(b.bits) + " bits)");
  }
  std::uint32_t d = 0;
  for (std::size_t w = 0; w < a.words.size(); ++w) d += static_cast<std::uint32_t>(std::popcount(a.words[w] ^ b.words[w]));
  return d;
}

CodeIndex::CodeIndex(std::size_t bits, std::vector<std::uint64_t> ids, std::vector<std::uint64_t> words)
    : bits_(bits), ids_(std::move(ids)), words_(std::move(words)) {
  if (bits_ == 0) throw_invalid("code index: code size must be positive");
  if (words_.size() != ids_.size() * words_per_code()) throw_invalid("code index: word buffer does not match ids");
  std::unordered_set<std::uint64_t> seen;
  for (auto id : ids_) {
    if (!seen.insert(id).second) throw_invalid("code index: duplicate id " + std::to_string(id));
  }
  const std::size_t tail = bits_ % 64;
  if (tail) {
    const std::uint64_t mask = ~((std::uint64_t{1} << tail) - 1);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (words_[i * words_per_code() + words_per_code() - 1] & mask) {
        throw_invalid("code index: unused high bits set for id " + std::to_string(ids_[i]));
      }
    }
  }
}

CodeIndex CodeIndex::from_codes(const BinaryCodes& codes, std::vector<std::uint64_t> ids) {
  if (ids.size() != codes.rows) throw_invalid("code index: id count does not match code rows");
  std::vector<std::uint64_t> words;
  words.reserve(codes.rows * words_for_bits(codes.bits));
  for (std::size_t r = 0; r < codes.rows; ++r) {
    auto p = pack(std::span<const std::int8_t>(codes.values.data() + r * codes.bits, codes.bits));
    words.insert(words.end(), p.words.begin(), p.words.end());
  }
  return CodeIndex(codes.bits, std::move(ids), std::move(words));
}

PackedCode CodeIndex::code(std::size_t row) const {
  PackedCode c;
  c.bits = bits_;
  c.words.assign(words_.begin() + static_cast<std::ptrdiff_t>(row * words_per_code()),
                 words_.begin() + static_cast<std::ptrdiff_t>((row + 1) * words_per_code()));
  return c;
}

void CodeIndex::check_query(const PackedCode& query) const {
  if (query.bits != bits_ || query.words.size() != words_per_code()) {
    throw_invalid("code index: query has " + std::to_string(query.bits) + " bits, index has " + std::to_string(bits_));
  }
}

std::vector<std::uint32_t> CodeIndex::distances(const PackedCode& query) const {
  check_query(query);
  std::vector<std::uint32_t> d(size());
  kernels::omp::hamming_scan(words_.data(), size(), words_per_code(), query.words.data(), d.data());
  return d;
}

std::vector<Neighbor> CodeIndex::rank_all(const PackedCode& query) const {
  if (size() == 0) throw_invalid("rank_all: index is empty");
  const auto d = distances(query);
  std::vector<Neighbor> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = {ids_[i], d[i]};
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  return out;
}

std::vector<Neighbor> CodeIndex::radius_query(const PackedCode& query, std::uint32_t radius) const {
  if (radius > bits_) throw_invalid("radius_query: radius exceeds the code size");
  const auto d = distances(query);
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (d[i] <= radius) out.push_back({ids_[i], d[i]});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  return out;
}

namespace {
constexpr char kMagic[4] = {'D', 'R', 'H', 'C'};
}

std::vector<std::uint8_t> serialize_codes(const CodeIndex& index) {
  io::ByteWriter w;
  w.bytes(kMagic, 4);
  w.le<std::uint32_t>(kCodeFileVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(index.bits()));
  w.le<std::uint64_t>(index.size());
  const std::size_t W = index.words_per_code();
  for (std::size_t i = 0; i < index.size(); ++i) {
    w.le<std::uint64_t>(index.ids()[i]);
    for (std::size_t k = 0; k < W; ++k) w.le<std::uint64_t>(index.words()[i * W + k]);
  }
  return w.take();
}

CodeIndex deserialize_codes(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  io::ByteReader r(bytes, what);
  if (r.str(4) != std::string(kMagic, 4)) throw_data(what + ": bad magic (expected DRHC)");
  const auto version = r.le<std::uint32_t>();
  if (version != kCodeFileVersion) throw_data(what + ": unsupported version " + std::to_string(version));
  const auto bits = r.le<std::uint32_t>();
  const auto count = r.le<std::uint64_t>();
  if (bits == 0) throw_data(what + ": zero code size");
  const std::size_t W = words_for_bits(bits);
  if (count > r.remaining() / (8 * (W + 1))) throw_data(what + ": truncated (header promises " + std::to_string(count) + " codes)");
  std::vector<std::uint64_t> ids(count), words(count * W);
  for (std::size_t i = 0; i < count; ++i) {
    ids[i] = r.le<std::uint64_t>();
    for (std::size_t k = 0; k < W; ++k) words[i * W + k] = r.le<std::uint64_t>();
  }
  if (r.remaining() != 0) throw_data(what + ": trailing bytes after codes");
  try {
    return CodeIndex(bits, std::move(ids), std::move(words));
  } catch (const Error& e) {
    throw_data(what + ": " + e.what());
  }
}

void write_code_file(const std::string& path, const CodeIndex& index) { io::write_file(path, serialize_codes(index)); }

CodeIndex read_code_file(const std::string& path) { return deserialize_codes(io::read_file(path), path); }

}  // namespace drh
