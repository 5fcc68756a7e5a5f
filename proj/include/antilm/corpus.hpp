#pragma once

// encoded corpora and the subject-verb agreement evaluation set.
//
// a Sentence is the id sequence for one line of text plus the terminal
// end-boundary id. the start boundary is never stored; models that condition
// on it prepend it themselves.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "antilm/util.hpp"
#include "antilm/vocab.hpp"

namespace antilm {

struct Sentence {
  std::vector<std::int32_t> ids;  // ends with kEndId

  std::size_t length() const { return ids.size(); }

  void validate() const {
    if (ids.empty() || ids.back() != kEndId)
      throw std::runtime_error("sentence must end with the end boundary id");
    for (std::size_t i = 0; i + 1 < ids.size(); ++i)
      if (ids[i] == kStartId || ids[i] == kEndId)
        throw std::runtime_error("boundary id in sentence interior");
  }

  bool operator==(const Sentence&) const = default;
};

enum class Split { train, dev, test, negative_dev };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
    case Split::negative_dev: return "negative_dev";
  }
  throw std::logic_error("bad split");
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  if (s == "negative_dev") return Split::negative_dev;
  throw std::runtime_error("unknown split label: " + s);
}

struct Corpus {
  std::vector<Sentence> sentences;
  Split split_label = Split::train;
  std::uint64_t vocab_fingerprint = 0;

  std::int64_t token_count() const {  // includes terminal boundaries
    std::int64_t n = 0;
    for (const auto& s : sentences) n += static_cast<std::int64_t>(s.length());
    return n;
  }
};

// one encoded sentence per non-empty input line, in input order. empty and
// whitespace-only lines are skipped; the count of skipped lines is reported
// through skipped_lines when the caller wants to warn about them.
inline Corpus encode_corpus(std::span<const std::string> lines, const Vocabulary& vocab,
                            Split split, std::size_t* skipped_lines = nullptr) {
  Corpus corpus;
  corpus.split_label = split;
  corpus.vocab_fingerprint = vocab.fingerprint();
  std::size_t skipped = 0;
  for (const auto& line : lines) {
    auto toks = split_ws(line);
    if (toks.empty()) {
      ++skipped;
      continue;
    }
    Sentence sent;
    sent.ids.reserve(toks.size() + 1);
    for (const auto& t : toks) sent.ids.push_back(vocab.encode(t));
    sent.ids.push_back(kEndId);
    corpus.sentences.push_back(std::move(sent));
  }
  if (skipped_lines) *skipped_lines = skipped;
  return corpus;
}

// decode back to one-sentence-per-line text (terminal boundary dropped)
inline std::string corpus_to_text(const Corpus& corpus, const Vocabulary& vocab) {
  std::string out;
  for (const auto& sent : corpus.sentences) {
    for (std::size_t i = 0; i + 1 < sent.ids.size(); ++i) {
      if (i) out += ' ';
      out += vocab.decode(sent.ids[i]);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// subject-verb agreement data

struct AgreementInstance {
  Sentence grammatical;
  Sentence ungrammatical;
  std::int32_t verb_position = 0;  // 0-based index of the verb token
  std::int32_t n_attractors = 0;  // intervening nouns with opposite number
  bool verb_oov = false;          // either verb form encoded to unk
};

struct AgreementLoadResult {
  std::vector<AgreementInstance> instances;
  std::vector<std::string> rejected;  // one diagnostic per malformed row
};

// tab-separated rows: grammatical sentence, ungrammatical sentence,
// verb_position, n_attractors. lines starting with '#' are comments. rows
// whose sentence pair does not differ at exactly the verb position are
// rejected with a diagnostic instead of aborting the whole load.
inline AgreementLoadResult load_agreement_rows(std::span<const std::string> lines,
                                               const Vocabulary& vocab) {
  AgreementLoadResult result;
  for (std::size_t lineno = 0; lineno < lines.size(); ++lineno) {
    const std::string& raw = lines[lineno];
    auto reject = [&](const std::string& why) {
      result.rejected.push_back("line " + std::to_string(lineno + 1) + ": " + why);
    };
    if (trim(raw).empty() || raw[0] == '#') continue;
    auto cols = split_on(raw, '\t');
    if (cols.size() != 4) {
      reject("expected 4 tab-separated columns, got " + std::to_string(cols.size()));
      continue;
    }
    auto gram_toks = split_ws(cols[0]);
    auto ungram_toks = split_ws(cols[1]);
    std::int64_t verb_pos = 0, attractors = 0;
    try {
      verb_pos = parse_int(trim(cols[2]), "verb_position");
      attractors = parse_int(trim(cols[3]), "n_attractors");
    } catch (const std::exception& e) {
      reject(e.what());
      continue;
    }
    if (gram_toks.size() != ungram_toks.size()) {
      reject("variants differ in length");
      continue;
    }
    if (verb_pos < 0 || verb_pos >= static_cast<std::int64_t>(gram_toks.size())) {
      reject("verb position out of range");
      continue;
    }
    if (attractors < 0) {
      reject("negative attractor count");
      continue;
    }
    std::size_t ndiff = 0;
    bool diff_at_verb = false;
    for (std::size_t i = 0; i < gram_toks.size(); ++i) {
      if (gram_toks[i] != ungram_toks[i]) {
        ++ndiff;
        if (static_cast<std::int64_t>(i) == verb_pos) diff_at_verb = true;
      }
    }
    if (ndiff != 1 || !diff_at_verb) {
      reject("variants must differ exactly at the verb position");
      continue;
    }

    AgreementInstance inst;
    inst.verb_position = static_cast<std::int32_t>(verb_pos);
    inst.n_attractors = static_cast<std::int32_t>(attractors);
    auto encode_sentence = [&](const std::vector<std::string>& toks) {
      Sentence s;
      s.ids.reserve(toks.size() + 1);
      for (const auto& t : toks) s.ids.push_back(vocab.encode(t));
      s.ids.push_back(kEndId);
      return s;
    };
    inst.grammatical = encode_sentence(gram_toks);
    inst.ungrammatical = encode_sentence(ungram_toks);
    inst.verb_oov = inst.grammatical.ids[verb_pos] == kUnkId ||
                    inst.ungrammatical.ids[verb_pos] == kUnkId;
    result.instances.push_back(std::move(inst));
  }
  return result;
}

inline AgreementLoadResult load_agreement_data(const std::string& path, const Vocabulary& vocab) {
  auto lines = read_lines(path);
  return load_agreement_rows(lines, vocab);
}

// buckets 0..5 plus one overflow bucket for > 5 attractors
inline constexpr std::size_t kAttractorBuckets = 7;
inline constexpr std::size_t kOverflowBucket = 6;

inline std::size_t attractor_bucket(std::int32_t n_attractors) {
  return n_attractors > 5 ? kOverflowBucket : static_cast<std::size_t>(n_attractors);
}

// returns indices into the input span; the buckets partition the input
inline std::array<std::vector<std::size_t>, kAttractorBuckets> bucket_by_attractors(
    std::span<const AgreementInstance> instances) {
  std::array<std::vector<std::size_t>, kAttractorBuckets> buckets;
  for (std::size_t i = 0; i < instances.size(); ++i)
    buckets[attractor_bucket(instances[i].n_attractors)].push_back(i);
  return buckets;
}

}  // namespace antilm
