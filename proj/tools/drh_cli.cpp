// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
//
// drh: command-line front end for data generation, training, encoding, retrieval and evaluation.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "drh/baselines.hpp"
#include "drh/data.hpp"
#include "drh/eval.hpp"
#include "drh/gradcheck.hpp"
#include "drh/hash_index.hpp"
#include "drh/model.hpp"
#include "drh/optimizer.hpp"

namespace {

using namespace drh;

constexpr const char* kCodeSizeNote =
    "Code sizes: evaluated at 16, 32, 48 and 64 bits; any positive bit count is accepted.";

struct Preset {
  std::string blocks;  // "18-layer" | "34-layer"
  bool residual = true;
  bool quantization_losses = true;
  bool binarize = true;
};

const std::map<std::string, Preset>& presets() {
  static const std::map<std::string, Preset> p{
      {"drh18", {"18-layer", true, true, true}},   {"drh34", {"34-layer", true, true, true}},
      {"dph18", {"18-layer", false, true, true}},  {"dph34", {"34-layer", false, true, true}},
      {"drh-nq", {"18-layer", true, false, true}}, {"drh-nb", {"18-layer", true, true, false}},
  };
  return p;
}

std::string preset_list() {
  std::string s;
  for (const auto& [name, _] : presets()) s += (s.empty() ? "" : ", ") + name;
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::uint64_t> as_ids(std::span<const std::size_t> items) { return {items.begin(), items.end()}; }

// Items of the requested side of the split recorded in a checkpoint (or given on the command line).
std::vector<std::size_t> select_items(const Dataset& data, const std::string& side, double fraction,
                                      std::uint64_t seed) {
  if (side == "all") {
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  const Split split = split_dataset(data, fraction, seed);
  return side == "train" ? split.train : split.test;
}

void write_embeddings(const std::string& path, const Tensor<float>& h, std::span<const std::size_t> items) {
  std::ostringstream out;
  out << "id";
  for (std::size_t k = 0; k < h.dim(1); ++k) out << ",h" << k;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < items.size(); ++r) {
    out << items[r];
    for (std::size_t k = 0; k < h.dim(1); ++k) {
      std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(h.at(r, k)));
      out << buf;
    }
    out << '\n';
  }
  write_text(path, out.str());
}

struct Embeddings {
  std::vector<std::uint64_t> ids;
  Tensor<float> values;
};

Embeddings read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("id,", 0) != 0) throw_data(path + ": missing 'id,h0,...' header");
  const std::size_t k = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  Embeddings e;
  std::vector<float> vals;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != k + 1) throw_data(path + ":" + std::to_string(row) + ": expected " + std::to_string(k + 1) + " fields");
    try {
      e.ids.push_back(std::stoull(cells[0]));
      for (std::size_t j = 1; j <= k; ++j) vals.push_back(std::stof(cells[j]));
    } catch (const std::logic_error&) {
      throw_data(path + ":" + std::to_string(row) + ": malformed number");
    }
  }
  e.values = Tensor<float>(Shape{e.ids.size(), k}, std::move(vals));
  return e;
}

void set_threads(int threads) {
  if (threads < 1) throw_invalid("--threads must be at least 1");
  omp_set_num_threads(threads);
}

// ------------------------------------------------------------------------------------------------

struct GenArgs {
  std::string out;
  SynthConfig synth;
};

void run_gen(const GenArgs& a) {
  const Dataset data = generate_synthetic(a.synth);
  std::filesystem::create_directories(a.out);
  save_dataset_dir(a.out, data);
  std::fprintf(stderr, "wrote %zu images (%zux%zu, %zu labels) to %s\n", data.size(), data.height, data.width,
               data.vocab.size(), a.out.c_str());
}

struct TrainArgs {
  std::string data, out, log;
  std::string preset = "drh18";
  std::size_t bits = 64;
  std::uint64_t seed = 1;
  std::size_t epochs = 60;
  Hyperparams hyper;
  double split = 0.8;
  bool augment = false;
  bool deterministic = false;
  bool verbose = false;
  int threads = 1;
};

void run_train(TrainArgs a, const std::set<std::string>& explicit_flags) {
  set_threads(a.threads);
  const auto it = presets().find(a.preset);
  if (it == presets().end()) throw_invalid("unknown preset '" + a.preset + "' (choose from " + preset_list() + ")");
  const Preset& p = it->second;
  if (!p.quantization_losses) {
    if (explicit_flags.count("--lambda-q") || explicit_flags.count("--lambda-b")) {
      throw_invalid("preset " + a.preset + " fixes --lambda-q and --lambda-b at 0");
    }
    a.hyper.lambda_q = 0;
    a.hyper.lambda_b = 0;
  }
  a.hyper.validate();

  const Dataset data = load_dataset_dir(a.data);
  NetworkConfig cfg;
  cfg.in_height = data.height;
  cfg.in_width = data.width;
  cfg.block_counts = block_preset(p.blocks);
  cfg.residual = p.residual;
  cfg.bits = a.bits;
  cfg.seed = a.seed;
  auto net = build_network<float>(cfg);

  const Split split = split_dataset(data, a.split, a.seed);
  if (!split.within_tolerance) {
    std::fprintf(stderr, "warning: split fraction %.4f is outside 2%% of %.2f (too few groups)\n",
                 split.achieved_fraction, a.split);
  }
  TrainConfig tc;
  tc.max_epochs = a.epochs;
  tc.seed = a.seed;
  tc.augment = a.augment;
  tc.verbose = a.verbose;
  const TrainLog log = train(net, data, split.train, a.hyper, tc);

  std::map<std::string, std::string> extra{
      {"preset", a.preset},
      {"binarize", p.binarize ? "true" : "false"},
      {"lambda_q", fmt(a.hyper.lambda_q)},
      {"lambda_b", fmt(a.hyper.lambda_b)},
      {"lambda_o", fmt(a.hyper.lambda_o)},
      {"lambda_w", fmt(a.hyper.lambda_w)},
      {"momentum", fmt(a.hyper.momentum)},
      {"learning_rate", fmt(a.hyper.learning_rate)},
      {"batch_size", std::to_string(a.hyper.batch_size)},
      {"split_fraction", fmt(a.split)},
      {"split_seed", std::to_string(a.seed)},
      {"epochs_run", std::to_string(log.epochs.size())},
      {"augment", a.augment ? "true" : "false"},
  };
  save_checkpoint(a.out, net, extra);
  if (!a.log.empty()) log.write_csv(a.log);
  const auto& last = log.epochs.back();
  std::fprintf(stderr, "trained %s (%zu bits) for %zu epochs: J %.5f, J_S %.5f; skipped batches %zu\n",
               a.preset.c_str(), a.bits, log.epochs.size(), last.j, last.j_s, log.skipped_batches);
}

struct EncodeArgs {
  std::string checkpoint, data, out, embeddings;
  std::string split = "test";
  int threads = 1;
  bool deterministic = false;
};

double extra_double(const std::map<std::string, std::string>& extra, const std::string& key) {
  const auto it = extra.find(key);
  if (it == extra.end()) throw_data("checkpoint has no '" + key + "' entry");
  try {
    return std::stod(it->second);
  } catch (const std::logic_error&) {
    throw_data("checkpoint entry '" + key + "' is not a number");
  }
}

void run_encode(const EncodeArgs& a) {
  set_threads(a.threads);
  std::map<std::string, std::string> extra;
  auto net = load_checkpoint(a.checkpoint, &extra);
  const Dataset data = load_dataset_dir(a.data);
  if (data.height != net.config.in_height || data.width != net.config.in_width) {
    throw_data("dataset images are " + std::to_string(data.height) + "x" + std::to_string(data.width) +
               ", checkpoint expects " + std::to_string(net.config.in_height) + "x" +
               std::to_string(net.config.in_width));
  }
  const auto items = select_items(data, a.split, extra_double(extra, "split_fraction"),
                                  static_cast<std::uint64_t>(extra_double(extra, "split_seed")));
  if (items.empty()) throw_data("split '" + a.split + "' is empty");
  const auto h = encode_items(net, data, items);
  const auto index = CodeIndex::from_codes(binarize(h), as_ids(items));
  write_code_file(a.out, index);
  if (!a.embeddings.empty()) write_embeddings(a.embeddings, h, items);
  if (extra.count("binarize") && extra.at("binarize") == "false" && a.embeddings.empty()) {
    std::fprintf(stderr, "note: this checkpoint is evaluated without binarization; pass --embeddings as well\n");
  }
  std::fprintf(stderr, "encoded %zu %s items into %zu-bit codes\n", items.size(), a.split.c_str(), index.bits());
}

struct IndexArgs {
  std::vector<std::string> codes;
  std::string out;
};

void run_index(const IndexArgs& a) {
  std::vector<std::uint64_t> ids, words;
  std::size_t bits = 0;
  for (const auto& path : a.codes) {
    const auto part = read_code_file(path);
    if (bits != 0 && part.bits() != bits) throw_data(path + ": " + std::to_string(part.bits()) + "-bit codes, expected " + std::to_string(bits));
    bits = part.bits();
    ids.insert(ids.end(), part.ids().begin(), part.ids().end());
    words.insert(words.end(), part.words().begin(), part.words().end());
  }
  CodeIndex index;
  try {
    index = CodeIndex(bits, std::move(ids), std::move(words));
  } catch (const Error& e) {
    throw_data(e.what());
  }
  std::vector<std::size_t> ones(bits, 0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto code = unpack(index.code(i));
    for (std::size_t k = 0; k < bits; ++k) ones[k] += code[k] == 1;
  }
  double worst = 0;
  for (auto c : ones) worst = std::max(worst, std::abs(static_cast<double>(c) / static_cast<double>(index.size()) - 0.5));
  std::printf("codes %zu\nbits %zu\nmax_bit_imbalance %.4f\n", index.size(), bits, worst);
  if (!a.out.empty()) write_code_file(a.out, index);
}

struct QueryArgs {
  std::string index, queries, out;
  std::size_t top = 10;
  int radius = -1;
  int threads = 1;
};

void run_query(const QueryArgs& a) {
  set_threads(a.threads);
  const auto index = read_code_file(a.index);
  const auto queries = read_code_file(a.queries);
  if (index.size() == 0) throw_data(a.index + ": empty index");
  if (queries.bits() != index.bits()) throw_data("query codes and index codes differ in size");
  std::ostringstream out;
  out << "query_id,rank,id,distance\n";
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto code = queries.code(q);
    std::vector<Neighbor> hits;
    if (a.radius >= 0) {
      if (static_cast<std::size_t>(a.radius) > index.bits()) throw_invalid("--radius exceeds the code size");
      hits = index.radius_query(code, static_cast<std::uint32_t>(a.radius));
    } else {
      hits = index.rank_all(code);
      if (hits.size() > a.top) hits.resize(a.top);
    }
    for (std::size_t r = 0; r < hits.size(); ++r) {
      out << queries.ids()[q] << ',' << r + 1 << ',' << hits[r].id << ',' << hits[r].distance << '\n';
    }
  }
  if (a.out.empty()) {
    std::cout << out.str();
  } else {
    write_text(a.out, out.str());
  }
}

struct EvalArgs {
  std::string codes, queries, labels, vocab, out, pr, method = "drh";
  std::string db_embeddings, query_embeddings;
  int threads = 1;
};

void run_eval(const EvalArgs& a) {
  set_threads(a.threads);
  std::optional<std::vector<std::string>> vocab;
  if (!a.vocab.empty()) {
    vocab = read_vocab(a.vocab);
  } else if (const auto sibling = std::filesystem::path(a.labels).parent_path() / "vocab.txt";
             std::filesystem::exists(sibling)) {
    vocab = read_vocab(sibling.string());
  }
  const Dataset labels = load_labels(a.labels, vocab);
  const auto relevant = label_relevance(labels);
  const auto db = read_code_file(a.codes);
  const auto queries = read_code_file(a.queries);

  std::vector<MetricsRow> rows;
  const auto map = mean_average_precision(db, queries, relevant);
  const auto p2 = precision_at_h2(db, queries, relevant);
  rows.push_back({a.method, db.bits(), map.map, p2.precision, map.skipped});
  if (!a.db_embeddings.empty() || !a.query_embeddings.empty()) {
    if (a.db_embeddings.empty() || a.query_embeddings.empty()) {
      throw_invalid("--db-embeddings and --query-embeddings go together");
    }
    const auto de = read_embeddings(a.db_embeddings);
    const auto qe = read_embeddings(a.query_embeddings);
    const auto cmap = mean_average_precision_continuous(de.values, de.ids, qe.values, qe.ids, relevant);
    rows.push_back({a.method + "-continuous", de.values.dim(1), cmap.map, std::nullopt, cmap.skipped});
  }
  const std::string csv = metrics_csv(rows);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_text(a.out, csv);
  }
  if (!a.pr.empty()) write_text(a.pr, pr_csv(pr_curve(db, queries, relevant)));
}

struct BaselineArgs {
  std::string method, data, db_out, query_out, objective_log;
  std::size_t bits = 16;
  std::uint64_t seed = 1;
  double split = 0.8;
  std::size_t iterations = 50;
  std::size_t restarts = drh::kItqRestarts;
  bool deterministic = false;
  int threads = 1;
};

void run_baseline(const BaselineArgs& a) {
  set_threads(a.threads);
  const Dataset data = load_dataset_dir(a.data);
  const Split split = split_dataset(data, a.split, a.seed);
  const Matrix train_raw = pixel_features(data, split.train);
  const auto standardizer = Standardizer::fit(train_raw);
  const Matrix train_f = standardizer.apply(train_raw);
  const Matrix test_f = standardizer.apply(pixel_features(data, split.test));

  BinaryCodes db, q;
  if (a.method == "lsh") {
    const auto model = make_lsh(a.bits, train_f.dim(1), a.seed);
    db = lsh_encode(train_f, model);
    q = lsh_encode(test_f, model);
  } else if (a.method == "itq") {
    const auto model = itq_train(train_f, a.bits, a.iterations, a.seed, a.restarts);
    db = itq_encode(train_f, model);
    q = itq_encode(test_f, model);
    if (!a.objective_log.empty()) {
      std::ostringstream out;
      out << "iteration,objective\n";
      for (std::size_t i = 0; i < model.objective.size(); ++i) out << i + 1 << ',' << fmt(model.objective[i]) << '\n';
      write_text(a.objective_log, out.str());
    }
  } else {
    throw_invalid("unknown baseline '" + a.method + "' (choose lsh or itq)");
  }
  write_code_file(a.db_out, CodeIndex::from_codes(db, as_ids(split.train)));
  write_code_file(a.query_out, CodeIndex::from_codes(q, as_ids(split.test)));
  std::fprintf(stderr, "%s: %zu database and %zu query codes, %zu bits\n", a.method.c_str(), db.rows, q.rows, a.bits);
}

struct GradcheckArgs {
  GradcheckOptions options;
  bool deterministic = false;
  int threads = 1;
};

int run_gradcheck_cmd(const GradcheckArgs& a) {
  set_threads(a.threads);
  const auto report = run_gradcheck(a.options);
  std::cout << report.to_text(!a.deterministic);
  return report.passed() ? 0 : 3;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kInvalidArgument:
      return 1;
    case ErrorKind::kData:
      return 2;
    case ErrorKind::kNumerical:
      return 3;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep residual hashing: train binary codes, index them, and evaluate retrieval."};
  app.require_subcommand(1);
  app.footer(kCodeSizeNote);
  app.set_version_flag("--version", "drh 1.0");

  auto add_threads = [](CLI::App* cmd, int& threads) {
    cmd->add_option("--threads", threads, "OpenMP threads (results do not depend on it)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };
  auto add_deterministic = [](CLI::App* cmd, bool& flag) {
    cmd->add_flag("--deterministic", flag,
                  "Require bit-reproducible output (every kernel already reduces in a fixed order; "
                  "this also drops wall-clock timings from the output)");
  };

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic multi-label image dataset");
  gen_cmd->add_option("--out", gen.out, "Output directory (images.idx, labels.csv, vocab.txt)")->required();
  gen_cmd->add_option("--count", gen.synth.count, "Number of images")->capture_default_str();
  gen_cmd->add_option("--size", gen.synth.image_size, "Image height and width in pixels")->capture_default_str();
  gen_cmd->add_option("--labels", gen.synth.vocab_size, "Label vocabulary size")->capture_default_str();
  gen_cmd->add_option("--cooccurrence", gen.synth.cooccurrence, "Probability of a second label")->capture_default_str();
  gen_cmd->add_option("--noise", gen.synth.noise, "Nuisance level (pixel noise, jitter, background)")
      ->capture_default_str();
  gen_cmd->add_option("--group-size", gen.synth.max_group_size, "Largest number of items per group")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.synth.seed, "Random seed")->capture_default_str();
  bool gen_det = false;
  add_deterministic(gen_cmd, gen_det);
  gen_cmd->footer(kCodeSizeNote);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a hashing network and write a checkpoint");
  train_cmd->add_option("--data", tr.data, "Dataset directory from gen-data")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--log", tr.log, "Per-epoch loss CSV");
  train_cmd->add_option("--preset", tr.preset,
                        "drh18 | drh34 (residual), dph18 | dph34 (plain), drh-nq (no quantization or balance "
                        "losses), drh-nb (evaluated without binarization)")
      ->capture_default_str();
  train_cmd->add_option("--bits", tr.bits, "Code length K (16, 32, 48 or 64)")->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", tr.seed, "Seed for initialization, split and batch order")->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs, "Maximum epochs (the LR schedule may stop earlier)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--lambda-q", tr.hyper.lambda_q, "Quantization loss weight")->capture_default_str();
  train_cmd->add_option("--lambda-b", tr.hyper.lambda_b, "Bit balance loss weight")->capture_default_str();
  train_cmd->add_option("--lambda-o", tr.hyper.lambda_o, "Orthogonality weight on the hash layer")
      ->capture_default_str();
  train_cmd->add_option("--lambda-w", tr.hyper.lambda_w, "Weight decay")->capture_default_str();
  train_cmd->add_option("--lr", tr.hyper.learning_rate, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--momentum", tr.hyper.momentum, "SGD momentum")->capture_default_str();
  train_cmd->add_option("--batch", tr.hyper.batch_size, "Mini-batch size")->capture_default_str()->check(CLI::Range(2, 1 << 20));
  train_cmd->add_option("--split", tr.split, "Training fraction of the group-level split")->capture_default_str();
  train_cmd->add_flag("--augment", tr.augment, "Shift, rotation and intensity augmentation");
  train_cmd->add_flag("--verbose", tr.verbose, "Print one line per epoch to stderr");
  add_deterministic(train_cmd, tr.deterministic);
  add_threads(train_cmd, tr.threads);
  train_cmd->footer(kCodeSizeNote);

  EncodeArgs enc;
  auto* enc_cmd = app.add_subcommand("encode", "Write DRHC codes for one side of the dataset split");
  enc_cmd->add_option("--checkpoint", enc.checkpoint, "Checkpoint from train")->required();
  enc_cmd->add_option("--data", enc.data, "Dataset directory")->required();
  enc_cmd->add_option("--out", enc.out, "Code file to write")->required();
  enc_cmd->add_option("--split", enc.split, "train (database), test (queries) or all")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "test", "all"}));
  enc_cmd->add_option("--embeddings", enc.embeddings, "Also write the real-valued activations as CSV");
  add_deterministic(enc_cmd, enc.deterministic);
  add_threads(enc_cmd, enc.threads);
  enc_cmd->footer(kCodeSizeNote);

  IndexArgs idx;
  auto* idx_cmd = app.add_subcommand("index", "Validate and merge code files into one index, printing statistics");
  idx_cmd->add_option("--codes", idx.codes, "Code files (repeatable)")->required();
  idx_cmd->add_option("--out", idx.out, "Merged code file");
  bool idx_det = false;
  add_deterministic(idx_cmd, idx_det);
  idx_cmd->footer(kCodeSizeNote);

  QueryArgs qry;
  auto* qry_cmd = app.add_subcommand("query", "Hamming ranking or radius search of query codes against an index");
  qry_cmd->add_option("--index", qry.index, "Database code file")->required();
  qry_cmd->add_option("--queries", qry.queries, "Query code file")->required();
  qry_cmd->add_option("--top", qry.top, "Results per query for ranking")->capture_default_str();
  qry_cmd->add_option("--radius", qry.radius, "Return everything within this Hamming radius instead of --top");
  qry_cmd->add_option("--out", qry.out, "CSV output (default stdout)");
  bool qry_det = false;
  add_deterministic(qry_cmd, qry_det);
  add_threads(qry_cmd, qry.threads);
  qry_cmd->footer(kCodeSizeNote);

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "MAP, precision within Hamming radius 2 and PR curve");
  ev_cmd->add_option("--codes", ev.codes, "Database code file")->required();
  ev_cmd->add_option("--queries", ev.queries, "Query code file")->required();
  ev_cmd->add_option("--labels", ev.labels, "labels.csv giving every id's labels")->required();
  ev_cmd->add_option("--vocab", ev.vocab, "vocab.txt (default: next to labels.csv when present)");
  ev_cmd->add_option("--method", ev.method, "Method name for the report")->capture_default_str();
  ev_cmd->add_option("--out", ev.out, "Metrics CSV (default stdout)");
  ev_cmd->add_option("--pr", ev.pr, "PR curve CSV");
  ev_cmd->add_option("--db-embeddings", ev.db_embeddings, "Database activations CSV for a continuous-ranking row");
  ev_cmd->add_option("--query-embeddings", ev.query_embeddings, "Query activations CSV");
  bool ev_det = false;
  add_deterministic(ev_cmd, ev_det);
  add_threads(ev_cmd, ev.threads);
  ev_cmd->footer(kCodeSizeNote);

  BaselineArgs bl;
  auto* bl_cmd = app.add_subcommand("baseline", "Train and apply LSH or ITQ on 16x16 pixel features");
  bl_cmd->add_option("method", bl.method, "lsh or itq")->required()->check(CLI::IsMember({"lsh", "itq"}));
  bl_cmd->add_option("--data", bl.data, "Dataset directory")->required();
  bl_cmd->add_option("--bits", bl.bits, "Code length K (16, 32, 48 or 64)")->capture_default_str()->check(CLI::PositiveNumber);
  bl_cmd->add_option("--seed", bl.seed, "Seed for the split and the random projection or rotation")
      ->capture_default_str();
  bl_cmd->add_option("--split", bl.split, "Training fraction of the group-level split")->capture_default_str();
  bl_cmd->add_option("--iterations", bl.iterations, "ITQ alternating iterations")->capture_default_str();
  bl_cmd->add_option("--restarts", bl.restarts, "ITQ random initial rotations (best final objective kept)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bl_cmd->add_option("--db-out", bl.db_out, "Database (train split) code file")->required();
  bl_cmd->add_option("--query-out", bl.query_out, "Query (test split) code file")->required();
  bl_cmd->add_option("--objective-log", bl.objective_log, "ITQ objective per iteration (CSV)");
  add_deterministic(bl_cmd, bl.deterministic);
  add_threads(bl_cmd, bl.threads);
  bl_cmd->footer(kCodeSizeNote);

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of all layer and loss gradients (64-bit)");
  gc_cmd->add_option("--seed", gc.options.seed, "Base seed")->capture_default_str();
  gc_cmd->add_option("--trials", gc.options.trials, "Random instances per layer and loss")->capture_default_str();
  gc_cmd->add_option("--network-trials", gc.options.network_trials, "End-to-end network instances")
      ->capture_default_str();
  gc_cmd->add_option("--step", gc.options.step, "Central difference step")->capture_default_str();
  gc_cmd->add_option("--floor", gc.options.floor, "Denominator floor of the relative error")->capture_default_str();
  gc_cmd->add_option("--tolerance", gc.options.tolerance, "Maximum relative error")->capture_default_str();
  add_deterministic(gc_cmd, gc.deterministic);
  add_threads(gc_cmd, gc.threads);
  gc_cmd->footer(kCodeSizeNote);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) run_gen(gen);
    if (*train_cmd) {
      std::set<std::string> given;
      for (const auto* opt : train_cmd->get_options()) {
        if (opt->count() > 0) given.insert(opt->get_name());
      }
      run_train(tr, given);
    }
    if (*enc_cmd) run_encode(enc);
    if (*idx_cmd) run_index(idx);
    if (*qry_cmd) run_query(qry);
    if (*ev_cmd) run_eval(ev);
    if (*bl_cmd) run_baseline(bl);
    if (*gc_cmd) return run_gradcheck_cmd(gc);
  } catch (const Error& e) {
    std::fprintf(stderr, "drh: %s\n", e.what());
    return exit_code(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "drh: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "drh: %s\n", e.what());
    return 2;
  }
  return 0;
}
