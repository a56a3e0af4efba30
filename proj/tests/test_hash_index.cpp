// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include <algorithm>
#include <random>

#include "doctest.h"
#include "drh/hash_index.hpp"
#include "oracles.hpp"

using namespace drh;

namespace {

struct Instance {
  std::vector<std::vector<std::int8_t>> codes;
  std::vector<std::uint64_t> ids;
  CodeIndex index;
};

Instance random_instance(std::size_t n, std::size_t bits, std::mt19937_64& rng) {
  Instance in;
  BinaryCodes bc;
  bc.rows = n;
  bc.bits = bits;
  for (std::size_t i = 0; i < n; ++i) {
    // Reuse earlier codes now and then so ties and duplicates occur.
    auto c = (i > 0 && rng() % 4 == 0) ? in.codes[rng() % i] : oracle::random_code(bits, rng);
    in.codes.push_back(c);
    bc.values.insert(bc.values.end(), c.begin(), c.end());
    in.ids.push_back(1000 + 3 * i);
  }
  std::shuffle(in.ids.begin(), in.ids.end(), rng);
  in.index = CodeIndex::from_codes(bc, in.ids);
  return in;
}

std::vector<Neighbor> naive_rank(const Instance& in, const std::vector<std::int8_t>& q) {
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < in.codes.size(); ++i) out.push_back({in.ids[i], oracle::hamming(in.codes[i], q)});
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  return out;
}

}  // namespace

TEST_SUITE("hash-index") {
  TEST_CASE("pack puts entry k in bit k") {
    const std::vector<std::int8_t> c{1, -1, 1, -1};
    const auto p = pack(c);
    CHECK(p.bits == 4);
    CHECK(p.words == std::vector<std::uint64_t>{5});
    CHECK(unpack(p) == c);
    CHECK(pack(std::vector<std::int8_t>(64, -1)).words == std::vector<std::uint64_t>{0});
    CHECK(pack(std::vector<std::int8_t>(65, 1)).words == std::vector<std::uint64_t>{~0ull, 1});
    CHECK_THROWS_AS(pack(std::vector<std::int8_t>{1, 0}), Error);
  }

  TEST_CASE("hamming on the small examples") {
    const auto a = pack(std::vector<std::int8_t>{1, 1, -1, 1});
    const auto b = pack(std::vector<std::int8_t>{1, -1, -1, -1});
    CHECK(hamming(a, a) == 0);
    CHECK(hamming(a, b) == 2);
    CHECK_THROWS_AS(hamming(a, pack(std::vector<std::int8_t>{1, 1, 1})), Error);
  }

  TEST_CASE("rank_all and radius_query agree with a naive scan") {
    std::mt19937_64 rng(1);
    for (std::size_t bits : {16u, 32u, 48u, 64u, 100u}) {
      for (int trial = 0; trial < 10; ++trial) {
        const auto in = random_instance(1 + rng() % 120, bits, rng);
        const auto q = (trial % 2) ? in.codes[rng() % in.codes.size()] : oracle::random_code(bits, rng);
        const auto ref = naive_rank(in, q);
        CHECK(in.index.rank_all(pack(q)) == ref);
        for (std::uint32_t r : {0u, 2u, static_cast<std::uint32_t>(bits / 2), static_cast<std::uint32_t>(bits)}) {
          std::vector<Neighbor> ball;
          for (const auto& nb : ref)
            if (nb.distance <= r) ball.push_back(nb);
          CHECK(in.index.radius_query(pack(q), r) == ball);
        }
      }
    }
  }

  TEST_CASE("single item, exact hits and full radius") {
    BinaryCodes one{1, 4, {1, -1, -1, 1}};
    const auto idx = CodeIndex::from_codes(one, {42});
    const auto q = pack(std::vector<std::int8_t>{1, 1, 1, 1});
    CHECK(idx.rank_all(q) == std::vector<Neighbor>{{42, 2}});
    CHECK(idx.radius_query(q, 4).size() == 1);
    CHECK(idx.radius_query(q, 1).empty());
    CHECK_THROWS_AS(idx.radius_query(q, 5), Error);

    BinaryCodes dup{3, 4, {1, 1, 1, 1, -1, 1, 1, 1, 1, 1, 1, 1}};
    const auto d = CodeIndex::from_codes(dup, {9, 4, 7});
    CHECK(d.rank_all(q).front() == Neighbor{7, 0});
    CHECK(d.radius_query(q, 0) == std::vector<Neighbor>{{7, 0}, {9, 0}});
  }

  TEST_CASE("index construction is validated") {
    CHECK_THROWS_AS(CodeIndex(4, {1, 1}, {0, 0}), Error);
    CHECK_THROWS_AS(CodeIndex(4, {1, 2}, {0}), Error);
    CHECK_THROWS_AS(CodeIndex(4, {1}, {0x10}), Error);  // bit above K set
    CHECK_THROWS_AS(CodeIndex().rank_all(pack(std::vector<std::int8_t>{1})), Error);
  }

  TEST_CASE("code files round trip and reject corruption") {
    std::mt19937_64 rng(2);
    const auto in = random_instance(30, 48, rng);
    const auto bytes = serialize_codes(in.index);
    const auto back = deserialize_codes(bytes);
    CHECK(back.ids() == in.index.ids());
    CHECK(back.words() == in.index.words());
    CHECK(serialize_codes(back) == bytes);

    auto bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_AS(deserialize_codes(bad), Error);
    CHECK_THROWS_AS(deserialize_codes(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1)), Error);
    auto extra = bytes;
    extra.push_back(1);
    CHECK_THROWS_AS(deserialize_codes(extra), Error);
  }

  TEST_CASE("hamming is a metric on random triples") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 2000; ++t) {
      const std::size_t bits = 1 + rng() % 130;
      const auto a = pack(oracle::random_code(bits, rng));
      const auto b = pack(oracle::random_code(bits, rng));
      const auto c = pack(oracle::random_code(bits, rng));
      CHECK(hamming(a, b) == hamming(b, a));
      CHECK(hamming(a, c) <= hamming(a, b) + hamming(b, c));
      CHECK(hamming(a, b) == oracle::hamming(unpack(a), unpack(b)));
    }
  }
}
