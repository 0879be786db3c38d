// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/io.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>

namespace fovr::io {

namespace {

constexpr char kDatasetMagic[4] = {'F', 'O', 'V', 'E'};
constexpr char kCheckpointMagic[4] = {'F', 'O', 'V', 'R'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { uint(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void len16(std::size_t n) {
    if (n > std::numeric_limits<std::uint16_t>::max()) throw FormatError("sequence too long for a u16 length");
    uint(static_cast<std::uint16_t>(n));
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t n) : data_(data), n_(n) {}
  void need(std::size_t k) const {
    if (n_ - pos_ < k) throw FormatError("truncated file at byte " + std::to_string(pos_));
  }
  void bytes(void* p, std::size_t k) {
    need(k);
    std::memcpy(p, data_ + pos_, k);
    pos_ += k;
  }
  template <class T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(uint<std::uint32_t>())); }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return n_ - pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

void write_image(Writer& w, const env::Image& img) {
  w.uint(static_cast<std::uint16_t>(img.height));
  w.uint(static_cast<std::uint16_t>(img.width));
  for (double v : img.pixels) w.f32(v);
}

env::Image read_image(Reader& r) {
  const int h = r.uint<std::uint16_t>();
  const int w = r.uint<std::uint16_t>();
  r.need(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * 4);
  env::Image img(h, w);
  for (double& v : img.pixels) v = r.f32();
  return img;
}

void write_tokens(Writer& w, const std::vector<TokenId>& ids) {
  w.len16(ids.size());
  for (TokenId t : ids) w.uint(t);
}

std::vector<TokenId> read_tokens(Reader& r) {
  std::vector<TokenId> ids(r.uint<std::uint16_t>());
  for (auto& t : ids) {
    t = r.uint<std::uint16_t>();
    if (t >= tok::kVocabSize) throw FormatError("token id out of range: " + std::to_string(t));
  }
  return ids;
}

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

TargetLayout layout_of(const TargetSequence& target) {
  TargetLayout l;
  l.mode = target.mode;
  for (const auto& e : target.entries) l.codes.push_back(e.kind == EntryKind::visual ? kVisualCode : e.token);
  l.lm_mask = target.lm_mask;
  return l;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& data) {
  if (data.version != kDatasetVersion && data.version != kDatasetVersionWithTargets) {
    throw FormatError("unsupported dataset version " + std::to_string(data.version));
  }
  const bool targets = data.version == kDatasetVersionWithTargets;
  if (targets && data.layouts.size() != data.episodes.size()) throw FormatError("one target layout per episode required");
  Writer w;
  w.bytes(kDatasetMagic, 4);
  w.uint(data.version);
  w.uint(static_cast<std::uint32_t>(data.episodes.size()));
  for (std::size_t i = 0; i < data.episodes.size(); ++i) {
    const env::Episode& ep = data.episodes[i];
    w.uint(static_cast<std::uint8_t>(ep.kind));
    w.uint(ep.seed);
    write_image(w, ep.high_res);
    write_image(w, ep.low_res);
    write_tokens(w, ep.question);
    write_tokens(w, ep.answer);
    write_tokens(w, ep.glyphs);
    w.len16(ep.oracle_boxes.size());
    for (const auto& b : ep.oracle_boxes) {
      w.f32(b.cx);
      w.f32(b.cy);
      w.f32(b.w);
      w.f32(b.h);
    }
    if (targets) {
      const TargetLayout& l = data.layouts[i];
      if (l.codes.size() != l.lm_mask.size()) throw FormatError("target layout mask length mismatch");
      w.uint(static_cast<std::uint8_t>(l.mode));
      w.len16(l.codes.size());
      for (auto c : l.codes) w.uint(c);
      for (auto m : l.lm_mask) w.uint(m);
    }
  }
  return std::move(w.data());
}

Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes.data(), bytes.size());
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kDatasetMagic, 4) != 0) throw FormatError("not a dataset file (bad magic)");
  Dataset d;
  d.version = r.uint<std::uint16_t>();
  if (d.version != kDatasetVersion && d.version != kDatasetVersionWithTargets) {
    throw FormatError("unsupported dataset version " + std::to_string(d.version));
  }
  const std::uint32_t count = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    env::Episode ep;
    const auto kind = r.uint<std::uint8_t>();
    if (kind > 1) throw FormatError("unknown task kind " + std::to_string(kind));
    ep.kind = static_cast<env::TaskKind>(kind);
    ep.seed = r.uint<std::uint64_t>();
    ep.high_res = read_image(r);
    ep.low_res = read_image(r);
    ep.question = read_tokens(r);
    ep.answer = read_tokens(r);
    ep.glyphs = read_tokens(r);
    const std::size_t nb = r.uint<std::uint16_t>();
    for (std::size_t b = 0; b < nb; ++b) {
      env::BoxAction box;
      box.cx = r.f32();
      box.cy = r.f32();
      box.w = r.f32();
      box.h = r.f32();
      ep.oracle_boxes.push_back(box);
    }
    d.episodes.push_back(std::move(ep));
    if (d.version == kDatasetVersionWithTargets) {
      TargetLayout l;
      const auto mode = r.uint<std::uint8_t>();
      if (mode > 1) throw FormatError("unknown rationale mode " + std::to_string(mode));
      l.mode = static_cast<RationaleMode>(mode);
      l.codes.resize(r.uint<std::uint16_t>());
      for (auto& c : l.codes) c = r.uint<std::uint16_t>();
      l.lm_mask.resize(l.codes.size());
      for (auto& m : l.lm_mask) m = r.uint<std::uint8_t>();
      d.layouts.push_back(std::move(l));
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after the last episode");
  return d;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) { write_file(path, encode_dataset(data)); }
Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kModelMeta = "meta.model_config";
constexpr const char* kFovMeta = "meta.fov_config";
constexpr const char* kFovPrefix = "policy.";

// Config records carry "key=value;" text, one byte per element, so real
// fields survive the single-precision record format exactly.
Array text_record(const std::vector<std::pair<std::string, double>>& fields) {
  std::string text;
  char buf[64];
  for (const auto& [k, v] : fields) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    text += k + "=" + buf + ";";
  }
  Array a({text.size()});
  for (std::size_t i = 0; i < text.size(); ++i) a[i] = static_cast<unsigned char>(text[i]);
  return a;
}

std::vector<double> parse_text_record(const Array& a, const std::vector<std::string>& keys) {
  std::string text;
  for (double v : a.data()) {
    if (v < 0 || v > 255 || v != static_cast<double>(static_cast<int>(v))) throw FormatError("bad config record");
    text.push_back(static_cast<char>(static_cast<int>(v)));
  }
  std::vector<double> out;
  std::size_t pos = 0;
  for (const auto& key : keys) {
    const auto eq = text.find('=', pos), semi = text.find(';', pos);
    if (eq == std::string::npos || semi == std::string::npos || eq > semi || text.substr(pos, eq - pos) != key) {
      throw FormatError("config record lacks key " + key);
    }
    const std::string num = text.substr(eq + 1, semi - eq - 1);
    char* end = nullptr;
    const double v = std::strtod(num.c_str(), &end);
    if (num.empty() || end != num.c_str() + num.size()) throw FormatError("bad value for " + key);
    out.push_back(v);
    pos = semi + 1;
  }
  if (pos != text.size()) throw FormatError("unexpected fields in config record");
  return out;
}

const std::vector<std::string> kModelKeys{"d", "n_layers", "split", "n_heads", "patch", "vocab", "max_pos", "init_std"};
const std::vector<std::string> kFovKeys{"hidden_in", "hidden_mid", "sigma", "min_size", "max_size"};

Array model_meta(const ModelConfig& c) {
  return text_record({{"d", static_cast<double>(c.d)},
                      {"n_layers", static_cast<double>(c.n_layers)},
                      {"split", static_cast<double>(c.split)},
                      {"n_heads", static_cast<double>(c.n_heads)},
                      {"patch", static_cast<double>(c.patch)},
                      {"vocab", static_cast<double>(c.vocab)},
                      {"max_pos", static_cast<double>(c.max_pos)},
                      {"init_std", c.init_std}});
}

Array fov_meta(const FovPolicyConfig& c) {
  return text_record({{"hidden_in", static_cast<double>(c.hidden_in)},
                      {"hidden_mid", static_cast<double>(c.hidden_mid)},
                      {"sigma", c.sigma},
                      {"min_size", c.min_size},
                      {"max_size", c.max_size}});
}

std::size_t as_size(double v) {
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) throw FormatError("bad integer in config record");
  return static_cast<std::size_t>(v);
}

void write_record(Writer& w, const std::string& name, const Array& a) {
  w.uint(static_cast<std::uint32_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.uint(static_cast<std::uint32_t>(a.rank()));
  for (std::size_t d : a.shape()) w.uint(static_cast<std::uint32_t>(d));
  for (double v : a.data()) w.f32(v);
}

}  // namespace

Checkpoint make_checkpoint(const TransformerModel& model, const FovPolicy& policy) {
  return {model.config(), policy.config(), model.params(), policy.params()};
}

TransformerModel model_from(const Checkpoint& ckpt) { return TransformerModel(ckpt.model_config, ckpt.model); }
FovPolicy policy_from(const Checkpoint& ckpt) { return FovPolicy(ckpt.fov_config, ckpt.fov); }

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kCheckpointMagic, 4);
  w.uint(kCheckpointVersion);
  w.uint(static_cast<std::uint32_t>(2 + ckpt.model.size() + ckpt.fov.size()));
  write_record(w, kModelMeta, model_meta(ckpt.model_config));
  write_record(w, kFovMeta, fov_meta(ckpt.fov_config));
  for (const auto& p : ckpt.model) write_record(w, p.name, p.value);
  for (const auto& p : ckpt.fov) write_record(w, kFovPrefix + p.name, p.value);
  auto& bytes = w.data();
  const std::uint64_t sum = fnv1a64(bytes.data(), bytes.size());
  w.uint(sum);
  return std::move(bytes);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 + 4 + 4) throw FormatError("checkpoint too short");
  const std::size_t body = bytes.size() - 8;
  Reader tail(bytes.data() + body, 8);
  if (tail.uint<std::uint64_t>() != fnv1a64(bytes.data(), body)) throw FormatError("checkpoint checksum mismatch");

  Reader r(bytes.data(), body);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError("not a checkpoint file (bad magic)");
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.uint<std::uint32_t>();

  Checkpoint ck;
  bool have_model_meta = false, have_fov_meta = false;
  const std::string prefix = kFovPrefix;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.uint<std::uint32_t>(), '\0');
    r.bytes(name.data(), name.size());
    Shape shape(r.uint<std::uint32_t>());
    for (auto& d : shape) d = r.uint<std::uint32_t>();
    Array a(shape);
    r.need(a.size() * 4);
    for (double& v : a.data()) v = r.f32();
    if (name == kModelMeta) {
      const std::vector<double> m = parse_text_record(a, kModelKeys);
      ck.model_config = {as_size(m[0]), as_size(m[1]), as_size(m[2]), as_size(m[3]),
                         as_size(m[4]), as_size(m[5]), as_size(m[6]), m[7]};
      have_model_meta = true;
    } else if (name == kFovMeta) {
      const std::vector<double> f = parse_text_record(a, kFovKeys);
      ck.fov_config = {as_size(f[0]), as_size(f[1]), f[2], f[3], f[4]};
      have_fov_meta = true;
    } else if (name.compare(0, prefix.size(), prefix) == 0) {
      ck.fov.add(name.substr(prefix.size()), std::move(a));
    } else {
      ck.model.add(name, std::move(a));
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes before checksum");
  if (!have_model_meta || !have_fov_meta) throw FormatError("checkpoint lacks config records");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  // Write-then-rename keeps the previous checkpoint intact if the write fails.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write_file(tmp, encode_checkpoint(ckpt));
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace fovr::io
