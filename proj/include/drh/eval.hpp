// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drh/data.hpp"
#include "drh/hash_index.hpp"
#include "drh/tensor.hpp"

namespace drh {

/// relevant(query id, database id). Must be symmetric; a query is never ranked against itself.
using Relevance = std::function<bool(std::uint64_t, std::uint64_t)>;

/// Items are relevant when their label sets intersect. Ids index into data.
Relevance label_relevance(const Dataset& data);

/// Mean precision over the relevant hits of a ranking. nullopt when nothing is relevant.
std::optional<double> average_precision(std::span<const std::uint64_t> ranking,
                                        const std::function<bool(std::uint64_t)>& is_relevant);
/// Same, with the relevance of each rank given directly.
std::optional<double> average_precision(std::span<const std::uint8_t> relevant_by_rank);

struct MapResult {
  double map = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // queries with no relevant database item
};

/// Full Hamming ranking of the database per query (ties by ascending id).
MapResult mean_average_precision(const CodeIndex& database, const CodeIndex& queries, const Relevance& relevant);

/// Ranking by squared Euclidean distance between real-valued embeddings (ties by ascending id).
MapResult mean_average_precision_continuous(const Tensor<float>& database, std::span<const std::uint64_t> database_ids,
                                            const Tensor<float>& queries, std::span<const std::uint64_t> query_ids,
                                            const Relevance& relevant);

struct PrecisionResult {
  double precision = 0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

/// Mean over queries of relevant/retrieved inside the radius; an empty ball scores 0.
/// Queries without any relevant database item are skipped, as for MAP.
PrecisionResult precision_within_radius(const CodeIndex& database, const CodeIndex& queries, const Relevance& relevant,
                                        std::uint32_t radius);
inline PrecisionResult precision_at_h2(const CodeIndex& database, const CodeIndex& queries, const Relevance& relevant) {
  return precision_within_radius(database, queries, relevant, 2);
}

struct PrPoint {
  std::uint32_t radius = 0;
  double precision = 0;
  double recall = 0;
};

/// Radius sweep r = 0..K, precision and recall averaged over non-skipped queries.
std::vector<PrPoint> pr_curve(const CodeIndex& database, const CodeIndex& queries, const Relevance& relevant);

struct MetricsRow {
  std::string method;
  std::size_t bits = 0;
  double map = 0;
  std::optional<double> p_at_h2;  // none for real-valued rankings
  std::size_t skipped = 0;
};

std::string metrics_csv(std::span<const MetricsRow> rows);
std::string pr_csv(std::span<const PrPoint> curve);
void write_text(const std::string& path, const std::string& text);

}  // namespace drh
