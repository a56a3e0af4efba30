// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include <charconv>
#include <sstream>

#include "drh/binary_io.hpp"
#include "drh/model.hpp"

namespace drh {

namespace {

constexpr char kMagic[4] = {'D', 'R', 'H', '1'};

std::string join4(const std::array<std::size_t, 4>& a) {
  return std::to_string(a[0]) + "," + std::to_string(a[1]) + "," + std::to_string(a[2]) + "," + std::to_string(a[3]);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw_data("checkpoint: bad value for " + key + ": '" + v + "'");
  return out;
}

std::array<std::size_t, 4> parse4(const std::string& key, const std::string& v) {
  std::array<std::size_t, 4> out{};
  std::stringstream ss(v);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 4) throw_data("checkpoint: " + key + " needs four values");
    out[i++] = parse_u64(key, item);
  }
  if (i != 4) throw_data("checkpoint: " + key + " needs four values");
  return out;
}

std::map<std::string, std::string> config_entries(const NetworkConfig& c) {
  return {{"in_channels", std::to_string(c.in_channels)},
          {"in_height", std::to_string(c.in_height)},
          {"in_width", std::to_string(c.in_width)},
          {"stage_widths", join4(c.stage_widths)},
          {"block_counts", join4(c.block_counts)},
          {"bits", std::to_string(c.bits)},
          {"seed", std::to_string(c.seed)},
          {"residual", c.residual ? "1" : "0"}};
}

void write_tensor(io::ByteWriter& w, const std::string& name, const Tensor<float>& t) {
  w.le<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  w.str(name);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.le<std::uint64_t>(d);
  for (float v : t.values()) w.f32(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Network<float>& net,
                                               const std::map<std::string, std::string>& extra) {
  auto entries = config_entries(net.config);
  for (const auto& [k, v] : extra) {
    if (entries.count(k)) throw_invalid("checkpoint: extra key '" + k + "' shadows a network setting");
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw_invalid("checkpoint: key/value may not contain '=' or newlines: " + k);
    }
    entries[k] = v;
  }
  std::string block;
  for (const auto& [k, v] : entries) block += k + "=" + v + "\n";

  io::ByteWriter w;
  w.bytes(kMagic, 4);
  w.le<std::uint32_t>(kCheckpointVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(block.size()));
  w.str(block);
  const auto params = net.parameters();
  const auto bufs = net.buffers();
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.size() + bufs.size()));
  for (const auto* p : params) write_tensor(w, p->name, p->value);
  for (const auto& [name, t] : bufs) write_tensor(w, name, *t);
  return w.take();
}

void save_checkpoint(const std::string& path, const Network<float>& net,
                     const std::map<std::string, std::string>& extra) {
  io::write_file(path, serialize_checkpoint(net, extra));
}

Network<float> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes,
                                      std::map<std::string, std::string>* extra) {
  io::ByteReader r(bytes, "checkpoint");
  if (r.str(4) != std::string(kMagic, 4)) throw_data("checkpoint: bad magic (expected DRH1)");
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) throw_data("checkpoint: unsupported version " + std::to_string(version));
  const auto block_len = r.le<std::uint32_t>();
  const std::string block = r.str(block_len);

  NetworkConfig cfg;
  std::map<std::string, std::string> rest;
  std::stringstream ss(block);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw_data("checkpoint: malformed config line '" + line + "'");
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "in_channels") cfg.in_channels = parse_u64(k, v);
    else if (k == "in_height") cfg.in_height = parse_u64(k, v);
    else if (k == "in_width") cfg.in_width = parse_u64(k, v);
    else if (k == "stage_widths") cfg.stage_widths = parse4(k, v);
    else if (k == "block_counts") cfg.block_counts = parse4(k, v);
    else if (k == "bits") cfg.bits = parse_u64(k, v);
    else if (k == "seed") cfg.seed = parse_u64(k, v);
    else if (k == "residual") cfg.residual = parse_u64(k, v) != 0;
    else rest[k] = v;
  }

  Network<float> net;
  try {
    net = build_network<float>(cfg);
  } catch (const Error& e) {
    throw_data(std::string("checkpoint: invalid network config: ") + e.what());
  }
  std::map<std::string, Tensor<float>*> slots;
  for (auto& p : net.parameters()) slots[p.param->name] = &p.param->value;
  for (auto& [name, t] : net.buffers()) slots[name] = t;

  const auto count = r.le<std::uint32_t>();
  std::size_t loaded = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.le<std::uint32_t>());
    const auto rank = r.le<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.le<std::uint64_t>();
    auto it = slots.find(name);
    if (it == slots.end()) throw_data("checkpoint: unknown tensor '" + name + "'");
    if (it->second->shape() != shape) {
      throw_data("checkpoint: tensor '" + name + "' has shape " + shape_string(shape) + ", network expects " +
                 shape_string(it->second->shape()));
    }
    r.need(it->second->size() * 4);
    for (auto& v : it->second->values()) v = r.f32();
    slots.erase(it);
    ++loaded;
  }
  if (!slots.empty()) throw_data("checkpoint: missing tensor '" + slots.begin()->first + "'");
  if (r.remaining() != 0) throw_data("checkpoint: trailing bytes after tensors");
  for (auto& p : net.parameters()) p.param->grad = Tensor<float>(p.param->value.shape());
  if (extra) *extra = std::move(rest);
  return net;
}

Network<float> load_checkpoint(const std::string& path, std::map<std::string, std::string>* extra) {
  return deserialize_checkpoint(io::read_file(path), extra);
}

}  // namespace drh
