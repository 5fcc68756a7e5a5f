#pragma once

// scoring harness. anything that can produce per-token losses for a sentence
// can be evaluated: the LSTM, or tiny fixture scorers in tests. a scorer is a
// stateful stream so dev perplexity can carry recurrent context across
// sentences exactly as training does; agreement scoring restarts the stream
// for every variant so both are judged under identical conditioning.
//
// negative corpora are the exception to stream carry: each negative sentence
// is an independent machine-generated sample and is scored from a fresh
// state, the same conditioning it gets during training. carrying state from
// one sample into the next would score every sentence under a context that
// never produced it.

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "antilm/corpus.hpp"
#include "antilm/lstm.hpp"
#include "antilm/util.hpp"

namespace antilm {

template <class S>
concept SentenceScorer = requires(S s, const Sentence& sent) {
  { s.begin_stream() };
  { s.score_sentence(sent) } -> std::convertible_to<TokenLosses>;
};

struct LstmScorer {
  const LstmLm* model;
  LstmState state;

  explicit LstmScorer(const LstmLm& m) : model(&m), state(zero_state(m, 1)) {}
  void begin_stream() { state = zero_state(*model, 1); }
  TokenLosses score_sentence(const Sentence& sent) {
    auto [losses, next] = forward_token_losses(*model, sent, state);
    state = std::move(next);
    return losses;
  }
};

struct PerplexityReport {
  std::string split_label;
  std::int64_t token_count = 0;
  double mean_nll = 0.0;  // nats per token
  double perplexity = 1.0;
};

template <SentenceScorer S>
PerplexityReport perplexity(S& scorer, const Corpus& corpus) {
  if (corpus.sentences.empty()) throw std::runtime_error("cannot evaluate an empty corpus");
  PerplexityReport rep;
  rep.split_label = to_string(corpus.split_label);
  const bool independent_samples = corpus.split_label == Split::negative_dev;
  double total = 0.0;
  scorer.begin_stream();
  for (const auto& sent : corpus.sentences) {
    if (independent_samples) scorer.begin_stream();
    TokenLosses losses = scorer.score_sentence(sent);
    if (losses.size() != sent.ids.size())
      throw std::runtime_error("scorer returned wrong number of token losses");
    for (double v : losses) total += v;
    rep.token_count += static_cast<std::int64_t>(losses.size());
  }
  rep.mean_nll = total / static_cast<double>(rep.token_count);
  rep.perplexity = std::exp(rep.mean_nll);
  return rep;
}

struct GapReport {
  PerplexityReport positive;
  PerplexityReport negative;
  double gap = 0.0;  // negative ppl minus positive ppl; larger is better
};

template <SentenceScorer S>
GapReport perplexity_gap(S& scorer, const Corpus& positive, const Corpus& negative) {
  GapReport rep;
  rep.positive = perplexity(scorer, positive);
  rep.negative = perplexity(scorer, negative);
  rep.gap = rep.negative.perplexity - rep.positive.perplexity;
  return rep;
}

// whole-sentence comparison; the grammatical variant must be strictly more
// probable, so exact ties count as errors
template <SentenceScorer S>
bool judge_agreement(S& scorer, const AgreementInstance& inst) {
  scorer.begin_stream();
  TokenLosses lg = scorer.score_sentence(inst.grammatical);
  scorer.begin_stream();
  TokenLosses lu = scorer.score_sentence(inst.ungrammatical);
  double nll_gram = 0.0, nll_ungram = 0.0;
  for (double v : lg) nll_gram += v;
  for (double v : lu) nll_ungram += v;
  return nll_gram < nll_ungram;  // higher probability == lower total nll
}

struct BucketStat {
  std::int64_t count = 0;
  std::int64_t errors = 0;
  double error_rate = 0.0;
};

struct AgreementReport {
  std::array<BucketStat, kAttractorBuckets> buckets;  // 0..5 and the >5 overflow
  BucketStat overall;
  std::int64_t skipped_oov = 0;
};

template <SentenceScorer S>
AgreementReport agreement_error_rates(S& scorer, std::span<const AgreementInstance> instances,
                                      bool include_oov_verbs = false) {
  if (instances.empty()) throw std::invalid_argument("no agreement instances to score");
  AgreementReport rep;
  for (const auto& inst : instances) {
    if (inst.verb_oov && !include_oov_verbs) {
      ++rep.skipped_oov;
      continue;
    }
    bool correct = judge_agreement(scorer, inst);
    BucketStat& b = rep.buckets[attractor_bucket(inst.n_attractors)];
    ++b.count;
    ++rep.overall.count;
    if (!correct) {
      ++b.errors;
      ++rep.overall.errors;
    }
  }
  for (auto& b : rep.buckets)
    b.error_rate = b.count > 0 ? static_cast<double>(b.errors) / static_cast<double>(b.count) : 0.0;
  rep.overall.error_rate =
      rep.overall.count > 0
          ? static_cast<double>(rep.overall.errors) / static_cast<double>(rep.overall.count)
          : 0.0;
  return rep;
}

// pooled error rate over every bucket with at least one attractor
inline BucketStat attractor_pooled(const AgreementReport& rep) {
  BucketStat pooled;
  for (std::size_t b = 1; b < kAttractorBuckets; ++b) {
    pooled.count += rep.buckets[b].count;
    pooled.errors += rep.buckets[b].errors;
  }
  pooled.error_rate =
      pooled.count > 0 ? static_cast<double>(pooled.errors) / static_cast<double>(pooled.count) : 0.0;
  return pooled;
}

inline std::string bucket_label(std::size_t bucket) {
  return bucket == kOverflowBucket ? "6+" : std::to_string(bucket);
}

inline std::string agreement_report_csv(const AgreementReport& rep) {
  std::ostringstream out;
  out << "n_attractors,count,errors,error_rate\n";
  for (std::size_t b = 0; b < kAttractorBuckets; ++b) {
    const BucketStat& s = rep.buckets[b];
    out << bucket_label(b) << "," << s.count << "," << s.errors << ","
        << format_double(s.error_rate, 6) << "\n";
  }
  return out.str();
}

inline std::string agreement_report_json(const AgreementReport& rep) {
  std::ostringstream out;
  out << "{\n  \"buckets\": [\n";
  for (std::size_t b = 0; b < kAttractorBuckets; ++b) {
    const BucketStat& s = rep.buckets[b];
    out << "    {\"n_attractors\": \"" << bucket_label(b) << "\", \"count\": " << s.count
        << ", \"errors\": " << s.errors << ", \"error_rate\": " << format_double(s.error_rate, 6)
        << "}" << (b + 1 < kAttractorBuckets ? "," : "") << "\n";
  }
  out << "  ],\n";
  out << "  \"overall\": {\"count\": " << rep.overall.count << ", \"errors\": " << rep.overall.errors
      << ", \"error_rate\": " << format_double(rep.overall.error_rate, 6) << "},\n";
  out << "  \"skipped_oov\": " << rep.skipped_oov << "\n";
  out << "}\n";
  return out.str();
}

}  // namespace antilm
