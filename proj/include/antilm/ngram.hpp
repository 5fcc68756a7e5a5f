#pragma once

// the anti-model: an unsmoothed maximum-likelihood n-gram fit to positive
// text, used to sample negative sentences. counts are exact 64-bit integers
// and tables are kept for every order 1..n, so unseen contexts during
// conditioned generation can be handled by shortening the context one token
// at a time (the unigram table is always populated and ends the chain).

#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "antilm/corpus.hpp"
#include "antilm/rng.hpp"
#include "antilm/util.hpp"
#include "antilm/vocab.hpp"

namespace antilm {

inline constexpr int kMaxNgramOrder = 8;
inline constexpr int kDefaultMaxGenLen = 200;

struct ContinuationTable {
  std::vector<std::pair<std::int32_t, std::int64_t>> counts;  // ascending token id
  std::int64_t total = 0;
};

// count/total of the longest matched context, plus how long that context was
struct CountRatio {
  std::int64_t count = 0;
  std::int64_t total = 0;
  int context_len = 0;
};

class NGramModel {
 public:
  using ContextMap = std::map<std::vector<std::int32_t>, ContinuationTable>;

  NGramModel() = default;

  static NGramModel fit(const Corpus& corpus, int order) {
    if (order < 1 || order > kMaxNgramOrder)
      throw std::invalid_argument("ngram order must be in [1, " + std::to_string(kMaxNgramOrder) + "]");
    if (corpus.sentences.empty()) throw std::runtime_error("cannot fit ngram on empty corpus");

    NGramModel model;
    model.order_ = order;
    model.vocab_fingerprint_ = corpus.vocab_fingerprint;
    model.tables_.resize(static_cast<std::size_t>(order));

    // builder maps; converted to sorted count vectors below
    std::vector<std::map<std::vector<std::int32_t>, std::map<std::int32_t, std::int64_t>>> builders(
        static_cast<std::size_t>(order));
    std::vector<std::int32_t> padded;
    for (const auto& sent : corpus.sentences) {
      sent.validate();
      padded.assign(static_cast<std::size_t>(order - 1), kStartId);
      padded.insert(padded.end(), sent.ids.begin(), sent.ids.end());
      // every real token (terminal end included) is a target for every order
      for (std::size_t i = static_cast<std::size_t>(order - 1); i < padded.size(); ++i) {
        std::int32_t target = padded[i];
        for (int k = 1; k <= order; ++k) {
          std::vector<std::int32_t> ctx(padded.begin() + static_cast<std::ptrdiff_t>(i) - (k - 1),
                                        padded.begin() + static_cast<std::ptrdiff_t>(i));
          ++builders[static_cast<std::size_t>(k - 1)][std::move(ctx)][target];
        }
      }
    }
    for (int k = 0; k < order; ++k) {
      auto& table = model.tables_[static_cast<std::size_t>(k)];
      for (auto& [ctx, counter] : builders[static_cast<std::size_t>(k)]) {
        ContinuationTable cont;
        cont.counts.reserve(counter.size());
        for (auto& [tok, c] : counter) {  // std::map iteration: ascending token id
          cont.counts.emplace_back(tok, c);
          cont.total += c;
        }
        table.emplace(ctx, std::move(cont));
      }
    }
    return model;
  }

  // reassembly from persisted parts; tables[k] must hold contexts of length k
  static NGramModel from_parts(int order, std::uint64_t vocab_fingerprint,
                               std::vector<ContextMap> tables) {
    if (order < 1 || order > kMaxNgramOrder) throw std::invalid_argument("bad ngram order");
    if (tables.size() != static_cast<std::size_t>(order))
      throw std::invalid_argument("table count does not match order");
    NGramModel model;
    model.order_ = order;
    model.vocab_fingerprint_ = vocab_fingerprint;
    model.tables_ = std::move(tables);
    return model;
  }

  int order() const { return order_; }
  std::uint64_t vocab_fingerprint() const { return vocab_fingerprint_; }
  const std::vector<ContextMap>& tables() const { return tables_; }

  // longest-suffix match over the given context (shortening backoff);
  // terminates at the unigram table, which fit always populates
  const ContinuationTable& backoff_lookup(std::span<const std::int32_t> context,
                                          int* matched_len = nullptr) const {
    int max_len = std::min<int>(static_cast<int>(context.size()), order_ - 1);
    for (int len = max_len; len >= 0; --len) {
      std::vector<std::int32_t> key(context.end() - len, context.end());
      const auto& table = tables_[static_cast<std::size_t>(len)];
      auto it = table.find(key);
      if (it != table.end()) {
        if (matched_len) *matched_len = len;
        return it->second;
      }
    }
    throw std::logic_error("unigram table missing; model not fit");
  }

  CountRatio cond_count(std::span<const std::int32_t> context, std::int32_t token) const {
    int matched = 0;
    const ContinuationTable& cont = backoff_lookup(context, &matched);
    CountRatio r;
    r.total = cont.total;
    r.context_len = matched;
    for (const auto& [tok, c] : cont.counts)
      if (tok == token) {
        r.count = c;
        break;
      }
    return r;
  }

  double cond_prob(std::span<const std::int32_t> context, std::int32_t token) const {
    CountRatio r = cond_count(context, token);
    return static_cast<double>(r.count) / static_cast<double>(r.total);
  }

  // inverse-cdf draw over the matched table, continuations in token-id order;
  // pure integer arithmetic, no floating-point thresholds
  std::int32_t sample_next(std::span<const std::int32_t> context, RngStream& rng) const {
    const ContinuationTable& cont = backoff_lookup(context);
    std::int64_t r = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(cont.total)));
    for (const auto& [tok, c] : cont.counts) {
      if (r < c) return tok;
      r -= c;
    }
    throw std::logic_error("inverse cdf walked past total count");
  }

  // ancestral sampling from the last (n-1) ids of seed_context, left-padded
  // with the start boundary when the seed is short. stops when the end
  // boundary is sampled; if the sentence would otherwise exceed max_len
  // tokens in total, the end boundary is appended in place of a sample.
  Sentence generate_sentence(std::span<const std::int32_t> seed_context, RngStream& rng,
                             int max_len = kDefaultMaxGenLen) const {
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    std::vector<std::int32_t> ctx(static_cast<std::size_t>(order_ - 1), kStartId);
    for (std::int32_t id : seed_context.subspan(
             seed_context.size() - std::min<std::size_t>(seed_context.size(),
                                                         static_cast<std::size_t>(order_ - 1))))
      ctx.push_back(id);

    Sentence out;
    for (;;) {
      if (static_cast<int>(out.ids.size()) == max_len - 1) {
        out.ids.push_back(kEndId);
        break;
      }
      std::int32_t tok = sample_next(ctx, rng);
      out.ids.push_back(tok);
      if (tok == kEndId) break;
      ctx.push_back(tok);
    }
    return out;
  }

 private:
  int order_ = 0;
  std::uint64_t vocab_fingerprint_ = 0;
  std::vector<ContextMap> tables_;  // index k => contexts of length k (order k+1)
};

enum class NegativeDevMode { per_sentence_seeded, single_pass };

inline NegativeDevMode negative_dev_mode_from_string(const std::string& s) {
  if (s == "per_sentence_seeded") return NegativeDevMode::per_sentence_seeded;
  if (s == "single_pass") return NegativeDevMode::single_pass;
  throw std::runtime_error("unknown negative_dev_mode: " + s);
}

inline const char* to_string(NegativeDevMode m) {
  return m == NegativeDevMode::per_sentence_seeded ? "per_sentence_seeded" : "single_pass";
}

// one negative sentence per positive sentence. in the seeded mode sentence i
// conditions on positive sentence i-1 (the first on an empty context); the
// single-pass mode samples every sentence from a bare start context without
// re-conditioning on the positive text.
inline Corpus generate_negative_corpus(const NGramModel& model, const Corpus& positive,
                                       RngStream& rng, int max_len = kDefaultMaxGenLen,
                                       NegativeDevMode mode = NegativeDevMode::per_sentence_seeded) {
  Corpus negative;
  negative.split_label = Split::negative_dev;
  negative.vocab_fingerprint = model.vocab_fingerprint();
  negative.sentences.reserve(positive.sentences.size());
  static const std::vector<std::int32_t> kEmpty;
  for (std::size_t i = 0; i < positive.sentences.size(); ++i) {
    std::span<const std::int32_t> seed = kEmpty;
    if (mode == NegativeDevMode::per_sentence_seeded && i > 0)
      seed = positive.sentences[i - 1].ids;
    negative.sentences.push_back(model.generate_sentence(seed, rng, max_len));
  }
  return negative;
}

// paired on-the-fly batch for training: negative sentence k is seeded by
// previous_sentences[k] (null means empty context). the rng advances, so
// repeated calls give fresh samples.
inline std::vector<Sentence> negative_batch(const NGramModel& model,
                                            std::span<const Sentence* const> previous_sentences,
                                            RngStream& rng, int max_len = kDefaultMaxGenLen) {
  std::vector<Sentence> out;
  out.reserve(previous_sentences.size());
  static const std::vector<std::int32_t> kEmpty;
  for (const Sentence* prev : previous_sentences) {
    std::span<const std::int32_t> seed = prev ? std::span<const std::int32_t>(prev->ids)
                                              : std::span<const std::int32_t>(kEmpty);
    out.push_back(model.generate_sentence(seed, rng, max_len));
  }
  return out;
}

// ---------------------------------------------------------------------------
// persistence: plain text, one line per context across all orders, exact
// integer counts, vocabulary embedded so a model file is self-contained.
//
//   antilm-ngram v1
//   order <n>
//   vocab <size> <fingerprint hex>
//   <token>            (size lines, id order)
//   contexts <total>
//   <ctx ids> | <tok>:<count> ...
//   end

inline std::string serialize_ngram(const NGramModel& model, const Vocabulary& vocab) {
  if (vocab.fingerprint() != model.vocab_fingerprint())
    throw std::runtime_error("vocabulary does not match ngram model fingerprint");
  std::ostringstream out;
  out << "antilm-ngram v1\n";
  out << "order " << model.order() << "\n";
  out << "vocab " << vocab.size() << " " << hex64(vocab.fingerprint()) << "\n";
  for (const auto& tok : vocab.tokens()) out << tok << "\n";
  std::size_t total_contexts = 0;
  for (const auto& table : model.tables()) total_contexts += table.size();
  out << "contexts " << total_contexts << "\n";
  for (const auto& table : model.tables()) {
    for (const auto& [ctx, cont] : table) {
      for (std::int32_t id : ctx) out << id << " ";
      out << "|";
      for (const auto& [tok, c] : cont.counts) out << " " << tok << ":" << c;
      out << "\n";
    }
  }
  out << "end\n";
  return out.str();
}

inline void save_ngram(const NGramModel& model, const Vocabulary& vocab, const std::string& path) {
  write_text(path, serialize_ngram(model, vocab));
}

struct LoadedNgram {
  NGramModel model;
  Vocabulary vocab;
};

inline LoadedNgram load_ngram(const std::string& path) {
  auto lines = read_lines(path);
  std::size_t ln = 0;
  auto need = [&](const char* what) -> const std::string& {
    if (ln >= lines.size()) throw std::runtime_error(path + ": truncated ngram file (" + what + ")");
    return lines[ln++];
  };
  if (need("header") != "antilm-ngram v1") throw std::runtime_error(path + ": not an ngram model file");

  auto order_fields = split_ws(need("order"));
  if (order_fields.size() != 2 || order_fields[0] != "order")
    throw std::runtime_error(path + ": bad order line");
  int order = static_cast<int>(parse_int(order_fields[1], "order"));
  if (order < 1 || order > kMaxNgramOrder) throw std::runtime_error(path + ": order out of range");

  auto vocab_fields = split_ws(need("vocab"));
  if (vocab_fields.size() != 3 || vocab_fields[0] != "vocab")
    throw std::runtime_error(path + ": bad vocab line");
  auto vocab_size = parse_int(vocab_fields[1], "vocab size");
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(vocab_size));
  for (std::int64_t i = 0; i < vocab_size; ++i) tokens.push_back(need("vocab token"));
  if (tokens.size() < 3 || tokens[0] != kUnkToken || tokens[1] != kStartToken || tokens[2] != kEndToken)
    throw std::runtime_error(path + ": reserved tokens missing from vocabulary block");
  LoadedNgram loaded;
  loaded.vocab = Vocabulary(std::vector<std::string>(tokens.begin() + 3, tokens.end()));
  if (hex64(loaded.vocab.fingerprint()) != vocab_fields[2])
    throw std::runtime_error(path + ": vocabulary fingerprint mismatch");

  auto ctx_fields = split_ws(need("contexts"));
  if (ctx_fields.size() != 2 || ctx_fields[0] != "contexts")
    throw std::runtime_error(path + ": bad contexts line");
  auto n_contexts = parse_int(ctx_fields[1], "context count");

  std::vector<NGramModel::ContextMap> tables(static_cast<std::size_t>(order));
  for (std::int64_t i = 0; i < n_contexts; ++i) {
    const std::string& line = need("context row");
    auto bar = line.find('|');
    if (bar == std::string::npos) throw std::runtime_error(path + ": context row missing '|'");
    std::vector<std::int32_t> ctx;
    for (const auto& f : split_ws(line.substr(0, bar)))
      ctx.push_back(static_cast<std::int32_t>(parse_int(f, "context id")));
    if (static_cast<int>(ctx.size()) >= order)
      throw std::runtime_error(path + ": context longer than order allows");
    ContinuationTable cont;
    for (const auto& f : split_ws(line.substr(bar + 1))) {
      auto colon = f.find(':');
      if (colon == std::string::npos) throw std::runtime_error(path + ": bad count pair '" + f + "'");
      auto tok = parse_int(f.substr(0, colon), "token id");
      auto cnt = parse_int(f.substr(colon + 1), "count");
      if (cnt <= 0) throw std::runtime_error(path + ": non-positive count");
      if (!cont.counts.empty() && cont.counts.back().first >= tok)
        throw std::runtime_error(path + ": counts not in ascending token order");
      cont.counts.emplace_back(static_cast<std::int32_t>(tok), cnt);
      cont.total += cnt;
    }
    if (cont.counts.empty()) throw std::runtime_error(path + ": empty continuation table");
    auto [it, fresh] = tables[ctx.size()].emplace(std::move(ctx), std::move(cont));
    if (!fresh) throw std::runtime_error(path + ": duplicate context row");
  }
  if (need("end") != "end") throw std::runtime_error(path + ": missing end marker");
  if (tables[0].empty()) throw std::runtime_error(path + ": unigram table empty");
  loaded.model = NGramModel::from_parts(order, loaded.vocab.fingerprint(), std::move(tables));
  return loaded;
}

}  // namespace antilm
