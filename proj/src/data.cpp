// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "drh/binary_io.hpp"
#include "drh/random.hpp"

namespace drh {

void Dataset::validate() const {
  if (pixels.size() != size() * image_size()) throw_data("dataset: pixel buffer does not match N x H x W");
  if (groups.size() != size()) throw_data("dataset: group ids do not match item count");
  for (std::size_t i = 0; i < size(); ++i) {
    if (labels[i].empty()) throw_data("dataset: item " + std::to_string(i) + " has no label");
    for (auto l : labels[i]) {
      if (l >= vocab.size()) throw_data("dataset: item " + std::to_string(i) + " has unknown label id " + std::to_string(l));
    }
  }
}

std::vector<std::string> default_vocab(std::size_t size) {
  static const char* kNames[] = {"normal",  "opacity",     "calcified_granuloma", "calcinosis",
                                 "cardiomegaly", "granulomatous_disease", "lung_hyperdistention",
                                 "lung_hypoinflation", "nodule"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < size; ++i) out.push_back(i < 9 ? kNames[i] : "label" + std::to_string(i));
  return out;
}

void SynthConfig::validate() const {
  if (vocab_size < 2) throw_invalid("synthetic data: vocabulary needs at least 2 labels");
  if (!(cooccurrence >= 0 && cooccurrence < 1)) throw_invalid("synthetic data: co-occurrence rate must lie in [0, 1)");
  if (noise < 0) throw_invalid("synthetic data: noise must be non-negative");
  if (image_size < 8) throw_invalid("synthetic data: image size must be at least 8");
  if (max_group_size == 0) throw_invalid("synthetic data: max group size must be positive");
}

namespace {

// Adds label l's motif at (cx, cy) with the given contrast.
void draw_motif(std::vector<double>& canvas, std::size_t size, std::uint16_t label, double cx, double cy,
                double contrast) {
  const double r = static_cast<double>(size) / 8.0;
  const int kind = label % 5;
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double d = std::hypot(dx, dy);
      bool on = false;
      switch (kind) {
        case 0: on = std::abs(dy) <= r / 3 && std::abs(dx) <= r; break;          // horizontal bar
        case 1: on = std::abs(dx) <= r / 3 && std::abs(dy) <= r; break;          // vertical bar
        case 2: on = d <= 0.8 * r; break;                                        // disc
        case 3: on = std::abs(d - r) <= 0.75; break;                             // ring
        default: on = std::abs(dx - dy) <= 0.75 && std::abs(dx) <= r; break;    // diagonal
      }
      if (on) canvas[y * size + x] += contrast;
    }
  }
}

std::pair<double, double> motif_centre(std::uint16_t label, std::size_t size) {
  const double s = static_cast<double>(size);
  const double col = label % 3, row = (label / 3) % 3;
  const double offset = 0.1 * static_cast<double>(label / 9);
  return {s * (0.2 + 0.3 * col + offset), s * (0.2 + 0.3 * row + offset)};
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t S = cfg.image_size;
  Dataset data;
  data.height = data.width = S;
  data.vocab = default_vocab(cfg.vocab_size);
  data.pixels.resize(cfg.count * S * S);
  data.labels.resize(cfg.count);
  data.groups.resize(cfg.count);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int jitter = static_cast<int>(std::lround(16.0 * cfg.noise));
  const double bg_amp = 2.0 * cfg.noise;

  std::vector<double> background(S * S);
  std::vector<double> canvas(S * S);
  std::uint32_t group = 0;
  std::size_t left_in_group = 0;
  for (std::size_t i = 0; i < cfg.count; ++i) {
    if (left_in_group == 0) {
      if (i) ++group;
      left_in_group = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.max_group_size));
      left_in_group = std::min(left_in_group, cfg.max_group_size);
      // Smooth per-group background: a few random low-frequency gratings.
      std::fill(background.begin(), background.end(), 0.1);
      for (int w = 0; w < 3; ++w) {
        const double amp = bg_amp * (0.5 + 0.5 * unit(rng)) / 3.0;
        const double fx = (unit(rng) * 3.0 - 1.5), fy = (unit(rng) * 3.0 - 1.5);
        const double phase = unit(rng) * 2.0 * std::numbers::pi;
        for (std::size_t y = 0; y < S; ++y)
          for (std::size_t x = 0; x < S; ++x)
            background[y * S + x] +=
                amp * (0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * (fx * x + fy * y) / static_cast<double>(S) + phase));
      }
    }
    --left_in_group;
    data.groups[i] = group;

    LabelSet labels;
    const auto first = static_cast<std::uint16_t>(std::min<std::size_t>(
        static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.vocab_size)), cfg.vocab_size - 1));
    labels.push_back(first);
    if (unit(rng) < cfg.cooccurrence) {
      auto second = static_cast<std::uint16_t>(std::min<std::size_t>(
          static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.vocab_size - 1)), cfg.vocab_size - 2));
      if (second >= first) ++second;
      labels.push_back(second);
    }
    std::sort(labels.begin(), labels.end());
    data.labels[i] = labels;

    canvas = background;
    for (auto l : labels) {
      auto [cx, cy] = motif_centre(l, S);
      if (jitter > 0) {
        cx += static_cast<double>(static_cast<int>(unit(rng) * (2 * jitter + 1)) - jitter);
        cy += static_cast<double>(static_cast<int>(unit(rng) * (2 * jitter + 1)) - jitter);
      }
      const double contrast = 1.0 - cfg.noise * unit(rng);
      draw_motif(canvas, S, l, cx, cy, 0.7 * contrast);
    }
    std::uint8_t* out = data.pixels.data() + i * S * S;
    for (std::size_t p = 0; p < S * S; ++p) {
      double v = canvas[p];
      if (cfg.noise > 0) v += cfg.noise * gauss(rng);
      out[p] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
  }
  return data;
}

bool share_label(const LabelSet& a, const LabelSet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i;
    else ++j;
  }
  return false;
}

SimilarityMatrix similarity_from_labels(std::span<const LabelSet> label_sets) {
  SimilarityMatrix s(label_sets.size());
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t j = i; j < s.n; ++j) {
      const std::uint8_t v = share_label(label_sets[i], label_sets[j]) ? 1 : 0;
      s(i, j) = s(j, i) = v;
    }
  }
  return s;
}

SimilarityMatrix similarity_for(const Dataset& data, std::span<const std::size_t> items) {
  std::vector<LabelSet> sets;
  sets.reserve(items.size());
  for (auto i : items) sets.push_back(data.labels.at(i));
  return similarity_from_labels(sets);
}

Split split_dataset(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0 && train_fraction < 1)) throw_invalid("split: fraction must lie in (0, 1)");
  std::map<std::uint32_t, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < data.size(); ++i) by_group[data.groups[i]].push_back(i);
  std::vector<std::uint32_t> order;
  for (const auto& [g, _] : by_group) order.push_back(g);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
  Split out;
  for (auto g : order) {
    const auto& members = by_group[g];
    auto& side = (out.train.size() + members.size() <= target) ? out.train : out.test;
    side.insert(side.end(), members.begin(), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  out.achieved_fraction = data.size() ? static_cast<double>(out.train.size()) / static_cast<double>(data.size()) : 0;
  out.within_tolerance = std::abs(out.achieved_fraction - train_fraction) <= 0.02 + 1e-12;
  return out;
}

AugmentParams draw_augment(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> shift(-2, 2);
  std::uniform_real_distribution<double> angle(-10.0, 10.0);
  std::uniform_real_distribution<double> scale(0.9, 1.1);
  AugmentParams p;
  p.shift_x = shift(rng);
  p.shift_y = shift(rng);
  p.rotation_deg = angle(rng);
  p.intensity = scale(rng);
  return p;
}

std::vector<std::uint8_t> apply_augment(std::span<const std::uint8_t> image, std::size_t height, std::size_t width,
                                        const AugmentParams& p) {
  if (image.size() != height * width) throw_invalid("augment: image buffer does not match its size");
  std::vector<std::uint8_t> out(image.size(), 0);
  const double theta = p.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double cy = (static_cast<double>(height) - 1) / 2, cx = (static_cast<double>(width) - 1) / 2;
  const bool identity_geometry = p.shift_x == 0 && p.shift_y == 0 && p.rotation_deg == 0;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      long sx = static_cast<long>(x), sy = static_cast<long>(y);
      if (!identity_geometry) {
        // inverse map: undo the shift, then rotate back about the centre
        const double ux = static_cast<double>(x) - p.shift_x - cx;
        const double uy = static_cast<double>(y) - p.shift_y - cy;
        sx = std::lround(c * ux + s * uy + cx);
        sy = std::lround(-s * ux + c * uy + cy);
      }
      if (sx < 0 || sy < 0 || sx >= static_cast<long>(width) || sy >= static_cast<long>(height)) continue;
      const double v = image[static_cast<std::size_t>(sy) * width + static_cast<std::size_t>(sx)] * p.intensity;
      out[y * width + x] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  }
  return out;
}

std::vector<std::uint8_t> augment(std::span<const std::uint8_t> image, std::size_t height, std::size_t width,
                                  std::uint64_t seed) {
  return apply_augment(image, height, width, draw_augment(seed));
}

template <typename T>
Tensor<T> make_batch(const Dataset& data, std::span<const std::size_t> items, std::optional<std::uint64_t> augment_seed) {
  const std::size_t H = data.height, W = data.width;
  Tensor<T> batch(Shape{items.size(), 1, H, W});
  for (std::size_t k = 0; k < items.size(); ++k) {
    auto img = data.image(items[k]);
    std::vector<std::uint8_t> tmp;
    if (augment_seed) {
      tmp = augment(img, H, W, mix_seed(*augment_seed, k));
      img = tmp;
    }
    T* dst = batch.ptr() + k * H * W;
    for (std::size_t p = 0; p < H * W; ++p) dst[p] = static_cast<T>(img[p]) / T(255);
  }
  return batch;
}

template Tensor<float> make_batch<float>(const Dataset&, std::span<const std::size_t>, std::optional<std::uint64_t>);
template Tensor<double> make_batch<double>(const Dataset&, std::span<const std::size_t>, std::optional<std::uint64_t>);

// ---------------------------------------------------------------------------------------------
// Files

void write_idx_images(const std::string& path, const Dataset& data) {
  io::ByteWriter w;
  w.be<std::uint32_t>(kIdxMagic);
  w.be<std::uint32_t>(static_cast<std::uint32_t>(data.size()));
  w.be<std::uint32_t>(static_cast<std::uint32_t>(data.height));
  w.be<std::uint32_t>(static_cast<std::uint32_t>(data.width));
  w.bytes(data.pixels.data(), data.pixels.size());
  io::write_file(path, w.buffer());
}

void write_label_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_data("cannot write '" + path + "'");
  out << "id,group,labels\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << i << ',' << data.groups[i] << ',';
    for (std::size_t k = 0; k < data.labels[i].size(); ++k) {
      if (k) out << '|';
      out << data.vocab.at(data.labels[i][k]);
    }
    out << '\n';
  }
}

void write_vocab(const std::string& path, const std::vector<std::string>& vocab) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_data("cannot write '" + path + "'");
  for (const auto& v : vocab) out << v << '\n';
}

std::vector<std::string> read_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

namespace {

std::uint64_t parse_field(const std::string& path, std::size_t line_no, const std::string& field) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw_data(path + ":" + std::to_string(line_no) + ": expected an integer, got '" + field + "'");
  }
  return v;
}

void read_label_rows(const std::string& path, const std::optional<std::vector<std::string>>& vocab, Dataset& data) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open '" + path + "'");
  std::map<std::string, std::uint16_t> ids;
  if (vocab) {
    data.vocab = *vocab;
    for (std::size_t i = 0; i < vocab->size(); ++i) ids[(*vocab)[i]] = static_cast<std::uint16_t>(i);
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("id,", 0) == 0) continue;  // header
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw_data(path + ":" + std::to_string(line_no) + ": expected id,group,labels");
    const auto id = parse_field(path, line_no, line.substr(0, c1));
    const auto group = parse_field(path, line_no, line.substr(c1 + 1, c2 - c1 - 1));
    if (id != data.labels.size()) {
      throw_data(path + ":" + std::to_string(line_no) + ": id mismatch (expected " +
                 std::to_string(data.labels.size()) + ", got " + std::to_string(id) + ")");
    }
    LabelSet set;
    std::stringstream names(line.substr(c2 + 1));
    std::string name;
    while (std::getline(names, name, '|')) {
      if (name.empty()) continue;
      auto it = ids.find(name);
      if (it == ids.end()) {
        if (vocab) throw_data(path + ":" + std::to_string(line_no) + ": unknown label '" + name + "'");
        it = ids.emplace(name, static_cast<std::uint16_t>(data.vocab.size())).first;
        data.vocab.push_back(name);
      }
      set.push_back(it->second);
    }
    if (set.empty()) throw_data(path + ":" + std::to_string(line_no) + ": item has no label");
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    data.labels.push_back(std::move(set));
    data.groups.push_back(static_cast<std::uint32_t>(group));
  }
}

}  // namespace

Dataset load_labels(const std::string& labels_path, const std::optional<std::vector<std::string>>& vocab) {
  Dataset data;
  read_label_rows(labels_path, vocab, data);
  return data;
}

Dataset load_dataset(const std::string& images_path, const std::string& labels_path,
                     const std::optional<std::vector<std::string>>& vocab) {
  const auto bytes = io::read_file(images_path);
  io::ByteReader r(bytes, images_path);
  const auto magic = r.be<std::uint32_t>();
  if (magic != kIdxMagic) throw_data(images_path + ": bad magic (expected 0x00000803)");
  const auto n = r.be<std::uint32_t>();
  const auto h = r.be<std::uint32_t>();
  const auto w = r.be<std::uint32_t>();
  const std::size_t count = static_cast<std::size_t>(n) * h * w;
  const auto* px = r.raw(count);
  if (r.remaining() != 0) throw_data(images_path + ": trailing bytes after pixel data");

  Dataset data;
  data.height = h;
  data.width = w;
  data.pixels.assign(px, px + count);
  read_label_rows(labels_path, vocab, data);
  if (data.labels.size() != n) {
    throw_data(labels_path + ": id mismatch (" + std::to_string(data.labels.size()) + " label rows for " +
               std::to_string(n) + " images)");
  }
  data.validate();
  return data;
}

void save_dataset_dir(const std::string& dir, const Dataset& data) {
  std::filesystem::create_directories(dir);
  write_idx_images(dir + "/images.idx", data);
  write_label_csv(dir + "/labels.csv", data);
  write_vocab(dir + "/vocab.txt", data.vocab);
}

Dataset load_dataset_dir(const std::string& dir) {
  std::optional<std::vector<std::string>> vocab;
  if (std::filesystem::exists(dir + "/vocab.txt")) vocab = read_vocab(dir + "/vocab.txt");
  return load_dataset(dir + "/images.idx", dir + "/labels.csv", vocab);
}

}  // namespace drh
