// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drh/losses.hpp"
#include "drh/tensor.hpp"

namespace drh {

using LabelSet = std::vector<std::uint16_t>;  // sorted, unique

/// 8-bit grayscale multi-label image collection. Item i has id i.
struct Dataset {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // N x H x W
  std::vector<LabelSet> labels;
  std::vector<std::uint32_t> groups;  // items of one group never straddle a split
  std::vector<std::string> vocab;     // label id -> name

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const { return height * width; }
  std::span<const std::uint8_t> image(std::size_t i) const {
    return {pixels.data() + i * image_size(), image_size()};
  }
  /// Throws unless every item has >= 1 known label and the buffers agree.
  void validate() const;
  bool operator==(const Dataset&) const = default;
};

std::vector<std::string> default_vocab(std::size_t size);

struct SynthConfig {
  std::size_t count = 2000;
  std::size_t image_size = 32;
  std::size_t vocab_size = 9;
  double cooccurrence = 0.3;  // probability of a second label
  // Nuisance level. Pixel noise sigma = noise, motif jitter = round(16 * noise) px,
  // per-group background amplitude = 2 * noise, motif contrast drawn from [1 - noise, 1].
  double noise = 0.15;
  std::size_t max_group_size = 4;
  std::uint64_t seed = 1;

  void validate() const;
};

Dataset generate_synthetic(const SynthConfig& config);

bool share_label(const LabelSet& a, const LabelSet& b);
SimilarityMatrix similarity_from_labels(std::span<const LabelSet> label_sets);
/// Similarity restricted to the given items, in the given order.
SimilarityMatrix similarity_for(const Dataset& data, std::span<const std::size_t> items);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  double achieved_fraction = 0;
  bool within_tolerance = true;  // |achieved - target| <= 0.02
};

/// Group-level split: every group lands wholly on one side.
Split split_dataset(const Dataset& data, double train_fraction, std::uint64_t seed);

struct AugmentParams {
  int shift_x = 0, shift_y = 0;  // pixels, zero fill
  double rotation_deg = 0;       // nearest-neighbour resampling about the centre
  double intensity = 1;          // multiplicative, clipped to [0, 255]
};

AugmentParams draw_augment(std::uint64_t seed);
std::vector<std::uint8_t> apply_augment(std::span<const std::uint8_t> image, std::size_t height, std::size_t width,
                                        const AugmentParams& params);
std::vector<std::uint8_t> augment(std::span<const std::uint8_t> image, std::size_t height, std::size_t width,
                                  std::uint64_t seed);

/// Images scaled to [0, 1] as an N x 1 x H x W batch. With augment_seed set, item k of the
/// batch is augmented with seed (augment_seed, k).
template <typename T>
Tensor<T> make_batch(const Dataset& data, std::span<const std::size_t> items,
                     std::optional<std::uint64_t> augment_seed = std::nullopt);

// File I/O. Images: IDX (magic 0x00000803, big-endian u32 dims N, H, W, u8 pixels).
// Labels: CSV "id,group,name1|name2|..." with an optional header row.
inline constexpr std::uint32_t kIdxMagic = 0x00000803;

void write_idx_images(const std::string& path, const Dataset& data);
void write_label_csv(const std::string& path, const Dataset& data);
void write_vocab(const std::string& path, const std::vector<std::string>& vocab);
std::vector<std::string> read_vocab(const std::string& path);

/// Without a vocab, label names are numbered in order of first appearance.
Dataset load_dataset(const std::string& images_path, const std::string& labels_path,
                     const std::optional<std::vector<std::string>>& vocab = std::nullopt);

/// Labels only (for evaluation against code files); ids must still be 0..N-1 in order.
Dataset load_labels(const std::string& labels_path, const std::optional<std::vector<std::string>>& vocab);

/// Writes images.idx, labels.csv and vocab.txt into dir.
void save_dataset_dir(const std::string& dir, const Dataset& data);
Dataset load_dataset_dir(const std::string& dir);

}  // namespace drh
