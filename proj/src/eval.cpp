// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

namespace drh {

Relevance label_relevance(const Dataset& data) {
  auto labels = std::make_shared<std::vector<LabelSet>>(data.labels);
  return [labels](std::uint64_t a, std::uint64_t b) {
    if (a >= labels->size() || b >= labels->size()) {
      throw_data("relevance: id " + std::to_string(std::max(a, b)) + " has no label row");
    }
    return share_label((*labels)[a], (*labels)[b]);
  };
}

std::optional<double> average_precision(std::span<const std::uint8_t> relevant_by_rank) {
  if (relevant_by_rank.empty()) throw_invalid("average_precision: empty ranking");
  double sum = 0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < relevant_by_rank.size(); ++r) {
    if (relevant_by_rank[r]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

std::optional<double> average_precision(std::span<const std::uint64_t> ranking,
                                        const std::function<bool(std::uint64_t)>& is_relevant) {
  std::vector<std::uint8_t> rel(ranking.size());
  for (std::size_t r = 0; r < ranking.size(); ++r) rel[r] = is_relevant(ranking[r]) ? 1 : 0;
  return average_precision(rel);
}

namespace {

void check_compatible(const CodeIndex& database, const CodeIndex& queries) {
  if (database.size() == 0) throw_invalid("eval: empty database");
  if (queries.size() == 0) throw_invalid("eval: no queries");
  if (database.bits() != queries.bits()) {
    throw_invalid("eval: database codes have " + std::to_string(database.bits()) + " bits, queries have " +
                  std::to_string(queries.bits()));
  }
}

// Database rows by ascending id, so a stable sort on distance gives the id tie-break.
std::vector<std::size_t> rows_by_id(std::span<const std::uint64_t> ids) {
  std::vector<std::size_t> rows(ids.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  return rows;
}

// Relevance of every database row for one query (2 marks the query itself).
std::vector<std::uint8_t> relevance_row(std::uint64_t query_id, std::span<const std::uint64_t> ids,
                                        const Relevance& relevant) {
  std::vector<std::uint8_t> rel(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) rel[i] = ids[i] == query_id ? 2 : (relevant(query_id, ids[i]) ? 1 : 0);
  return rel;
}

// Runs per-query work in parallel, returning results in query order.
template <typename R, typename F>
std::vector<R> per_query(std::size_t count, F&& f) {
  std::vector<R> out(count);
  std::vector<std::string> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t q = 0; q < count; ++q) {
    try {
      out[q] = f(q);
    } catch (const std::exception& e) {
      errors[q] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw_data(e);
  }
  return out;
}

std::optional<double> ap_for_order(std::span<const std::size_t> order, std::span<const std::uint8_t> rel) {
  std::vector<std::uint8_t> ranked;
  ranked.reserve(order.size());
  for (auto row : order) {
    if (rel[row] != 2) ranked.push_back(rel[row]);
  }
  if (ranked.empty()) throw_invalid("eval: ranking is empty once the query itself is excluded");
  return average_precision(ranked);
}

MapResult reduce_map(const std::vector<std::optional<double>>& aps) {
  MapResult r;
  double sum = 0;
  for (const auto& ap : aps) {
    if (ap) {
      sum += *ap;
      ++r.evaluated;
    } else {
      ++r.skipped;
    }
  }
  if (r.evaluated == 0) throw_invalid("eval: every query was skipped (no relevant database items)");
  r.map = sum / static_cast<double>(r.evaluated);
  return r;
}

}  // namespace

MapResult mean_average_precision(const CodeIndex& database, const CodeIndex& queries, const Relevance& relevant) {
  check_compatible(database, queries);
  const auto by_id = rows_by_id(database.ids());
  const auto aps = per_query<std::optional<double>>(queries.size(), [&](std::size_t q) {
    const auto rel = relevance_row(queries.ids()[q], database.ids(), relevant);
    const auto dist = database.distances(queries.code(q));
    std::vector<std::size_t> order = by_id;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    return ap_for_order(order, rel);
  });
  return reduce_map(aps);
}

MapResult mean_average_precision_continuous(const Tensor<float>& database, std::span<const std::uint64_t> database_ids,
                                            const Tensor<float>& queries, std::span<const std::uint64_t> query_ids,
                                            const Relevance& relevant) {
  if (database.rank() != 2 || queries.rank() != 2 || database.dim(1) != queries.dim(1)) {
    throw_invalid("eval: embeddings must be N x K with equal K (got " + shape_string(database.shape()) + " and " +
                  shape_string(queries.shape()) + ")");
  }
  if (database.dim(0) != database_ids.size() || queries.dim(0) != query_ids.size()) {
    throw_invalid("eval: embedding rows do not match ids");
  }
  if (database_ids.empty() || query_ids.empty()) throw_invalid("eval: empty database or query set");
  const std::size_t K = database.dim(1);
  const auto by_id = rows_by_id(database_ids);
  const auto aps = per_query<std::optional<double>>(query_ids.size(), [&](std::size_t q) {
    const auto rel = relevance_row(query_ids[q], database_ids, relevant);
    std::vector<double> dist(database_ids.size());
    const float* qv = queries.ptr() + q * K;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      const float* dv = database.ptr() + i * K;
      double d = 0;
      for (std::size_t k = 0; k < K; ++k) {
        const double diff = static_cast<double>(qv[k]) - dv[k];
        d += diff * diff;
      }
      dist[i] = d;
    }
    std::vector<std::size_t> order = by_id;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    return ap_for_order(order, rel);
  });
  return reduce_map(aps);
}

namespace {

struct BallCounts {
  bool skipped = true;
  std::vector<double> precision;  // by radius
  std::vector<double> recall;
};

// Cumulative retrieved/relevant counts by radius for one query, for radii 0..max_radius.
BallCounts ball_counts(const CodeIndex& database, const CodeIndex& queries, const Relevance& relevant, std::size_t q,
                       std::uint32_t max_radius) {
  const auto rel = relevance_row(queries.ids()[q], database.ids(), relevant);
  const auto dist = database.distances(queries.code(q));
  std::vector<std::size_t> retrieved(database.bits() + 1, 0), hits(database.bits() + 1, 0);
  std::size_t total_relevant = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (rel[i] == 2) continue;
    ++retrieved[dist[i]];
    if (rel[i]) {
      ++hits[dist[i]];
      ++total_relevant;
    }
  }
  BallCounts out;
  if (total_relevant == 0) return out;
  out.skipped = false;
  std::size_t cum_retrieved = 0, cum_hits = 0;
  for (std::uint32_t r = 0; r <= max_radius; ++r) {
    cum_retrieved += retrieved[r];
    cum_hits += hits[r];
    out.precision.push_back(cum_retrieved ? static_cast<double>(cum_hits) / static_cast<double>(cum_retrieved) : 0.0);
    out.recall.push_back(static_cast<double>(cum_hits) / static_cast<double>(total_relevant));
  }
  return out;
}

}  // namespace

PrecisionResult precision_within_radius(const CodeIndex& database, const CodeIndex& queries, const Relevance& relevant,
                                        std::uint32_t radius) {
  check_compatible(database, queries);
  if (radius > database.bits()) throw_invalid("eval: radius exceeds the code size");
  const auto balls = per_query<BallCounts>(
      queries.size(), [&](std::size_t q) { return ball_counts(database, queries, relevant, q, radius); });
  PrecisionResult r;
  double sum = 0;
  for (const auto& b : balls) {
    if (b.skipped) {
      ++r.skipped;
      continue;
    }
    sum += b.precision[radius];
    ++r.evaluated;
  }
  if (r.evaluated == 0) throw_invalid("eval: every query was skipped (no relevant database items)");
  r.precision = sum / static_cast<double>(r.evaluated);
  return r;
}

std::vector<PrPoint> pr_curve(const CodeIndex& database, const CodeIndex& queries, const Relevance& relevant) {
  check_compatible(database, queries);
  const auto K = static_cast<std::uint32_t>(database.bits());
  const auto balls =
      per_query<BallCounts>(queries.size(), [&](std::size_t q) { return ball_counts(database, queries, relevant, q, K); });
  std::vector<PrPoint> curve(K + 1);
  std::size_t evaluated = 0;
  for (const auto& b : balls) {
    if (b.skipped) continue;
    ++evaluated;
    for (std::uint32_t r = 0; r <= K; ++r) {
      curve[r].precision += b.precision[r];
      curve[r].recall += b.recall[r];
    }
  }
  if (evaluated == 0) throw_invalid("eval: every query was skipped (no relevant database items)");
  for (std::uint32_t r = 0; r <= K; ++r) {
    curve[r].radius = r;
    curve[r].precision /= static_cast<double>(evaluated);
    curve[r].recall /= static_cast<double>(evaluated);
  }
  return curve;
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::ostringstream out;
  out << "# MAP over the full ranking (Hamming, or Euclidean for -continuous rows), ties by ascending id; "
         "P@H2 counts an empty ball as 0 and is blank for real-valued rows\n";
  out << "method,bits,map,p_at_h2,skipped_queries\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.method << ',' << r.bits << ',';
    std::snprintf(buf, sizeof buf, "%.6f,", r.map);
    out << buf;
    if (r.p_at_h2) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.p_at_h2);
      out << buf;
    }
    out << ',' << r.skipped << '\n';
  }
  return out.str();
}

std::string pr_csv(std::span<const PrPoint> curve) {
  std::ostringstream out;
  out << "radius,precision,recall\n";
  char buf[64];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%u,%.6f,%.6f\n", p.radius, p.precision, p.recall);
    out << buf;
  }
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw_data("cannot write '" + path + "'");
  out << text;
  if (!out) throw_data("write failed for '" + path + "'");
}

}  // namespace drh
