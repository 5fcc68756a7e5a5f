#pragma once

// binary checkpoint for the LSTM: config, vocabulary, every tensor as dims +
// row-major 64-bit floats, the training rng state and the step counter.
// little-endian fixed-width fields; round-trips are bitwise.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "antilm/lstm.hpp"
#include "antilm/vocab.hpp"

namespace antilm {

namespace detail {

inline constexpr char kCkptMagic[8] = {'A', 'L', 'M', 'C', 'K', 'P', 'T', '\n'};
inline constexpr std::uint32_t kCkptVersion = 1;

struct ByteWriter {
  std::string buf;
  void u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf.append(s);
  }
};

struct ByteReader {
  const std::string& buf;
  std::size_t pos = 0;
  explicit ByteReader(const std::string& b) : buf(b) {}
  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("truncated checkpoint");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace detail

inline std::string serialize_checkpoint(const LstmLm& model, const Vocabulary& vocab) {
  if (vocab.fingerprint() != model.vocab_fingerprint)
    throw std::runtime_error("vocabulary does not match model fingerprint");
  detail::ByteWriter w;
  w.buf.append(detail::kCkptMagic, sizeof detail::kCkptMagic);
  w.u32(detail::kCkptVersion);
  w.u32(static_cast<std::uint32_t>(model.vocab_size));
  w.u32(static_cast<std::uint32_t>(model.cfg.embedding_dim));
  w.u32(static_cast<std::uint32_t>(model.cfg.hidden_units));
  w.u32(static_cast<std::uint32_t>(model.cfg.num_layers));
  w.u8(model.cfg.tie_embeddings ? 1 : 0);
  w.f64(model.cfg.dropout_keep);
  w.u64(model.vocab_fingerprint);
  w.u64(model.rng_seed);
  w.i64(model.step_count);
  w.str(model.rng.save_state());
  w.u32(static_cast<std::uint32_t>(vocab.tokens().size()));
  for (const auto& t : vocab.tokens()) w.str(t);

  auto tensors = model.named_tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (auto& [name, t] : tensors) {
    w.str(name);
    w.u64(static_cast<std::uint64_t>(t->rows()));
    w.u64(static_cast<std::uint64_t>(t->cols()));
    for (Eigen::Index r = 0; r < t->rows(); ++r)
      for (Eigen::Index c = 0; c < t->cols(); ++c) w.f64((*t)(r, c));
  }
  return std::move(w.buf);
}

struct LoadedCheckpoint {
  LstmLm model;
  Vocabulary vocab;
};

inline LoadedCheckpoint deserialize_checkpoint(const std::string& bytes) {
  detail::ByteReader r(bytes);
  r.need(sizeof detail::kCkptMagic);
  if (std::memcmp(bytes.data(), detail::kCkptMagic, sizeof detail::kCkptMagic) != 0)
    throw std::runtime_error("not a checkpoint file");
  r.pos += sizeof detail::kCkptMagic;
  if (r.u32() != detail::kCkptVersion) throw std::runtime_error("unsupported checkpoint version");

  LoadedCheckpoint out;
  LstmLm& m = out.model;
  m.vocab_size = static_cast<std::int32_t>(r.u32());
  m.cfg.embedding_dim = static_cast<int>(r.u32());
  m.cfg.hidden_units = static_cast<int>(r.u32());
  m.cfg.num_layers = static_cast<int>(r.u32());
  m.cfg.tie_embeddings = r.u8() != 0;
  m.cfg.dropout_keep = r.f64();
  m.cfg.validate();
  m.vocab_fingerprint = r.u64();
  m.rng_seed = r.u64();
  m.step_count = r.i64();
  m.rng.load_state(r.str());

  std::uint32_t ntok = r.u32();
  std::vector<std::string> tokens;
  tokens.reserve(ntok);
  for (std::uint32_t i = 0; i < ntok; ++i) tokens.push_back(r.str());
  if (tokens.size() < 3 || tokens[0] != kUnkToken || tokens[1] != kStartToken || tokens[2] != kEndToken)
    throw std::runtime_error("checkpoint vocabulary lacks reserved tokens");
  out.vocab = Vocabulary(std::vector<std::string>(tokens.begin() + 3, tokens.end()));
  if (out.vocab.fingerprint() != m.vocab_fingerprint)
    throw std::runtime_error("checkpoint vocabulary fingerprint mismatch");
  if (out.vocab.size() != m.vocab_size) throw std::runtime_error("checkpoint vocab size mismatch");

  const int H = m.cfg.hidden_units;
  m.embedding.resize(m.vocab_size, m.cfg.embedding_dim);
  for (int l = 0; l < m.cfg.num_layers; ++l) {
    m.gate_w.emplace_back(4 * H, m.input_dim(l) + H);
    m.gate_b.emplace_back(4 * H, 1);
  }
  if (!m.cfg.tie_embeddings) m.out_w.resize(H, m.vocab_size);
  m.out_b.resize(m.vocab_size, 1);

  auto tensors = m.named_tensors();
  std::uint32_t ntensors = r.u32();
  if (ntensors != tensors.size()) throw std::runtime_error("checkpoint tensor count mismatch");
  for (auto& [name, t] : tensors) {
    std::string got = r.str();
    if (got != name) throw std::runtime_error("unexpected tensor '" + got + "', wanted '" + name + "'");
    auto rows = static_cast<Eigen::Index>(r.u64());
    auto cols = static_cast<Eigen::Index>(r.u64());
    if (rows != t->rows() || cols != t->cols())
      throw std::runtime_error("tensor shape mismatch for " + name);
    for (Eigen::Index rr = 0; rr < rows; ++rr)
      for (Eigen::Index cc = 0; cc < cols; ++cc) (*t)(rr, cc) = r.f64();
  }
  if (r.pos != bytes.size()) throw std::runtime_error("trailing bytes in checkpoint");
  for (auto& [name, t] : tensors)
    if (!t->allFinite()) throw std::runtime_error("non-finite weights in tensor " + name);
  return out;
}

inline void save_checkpoint(const LstmLm& model, const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::string bytes = serialize_checkpoint(model, vocab);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace antilm
