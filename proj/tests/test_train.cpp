#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "antilm/ngram.hpp"
#include "antilm/train.hpp"
#include "antilm/vocab.hpp"

using namespace antilm;

namespace {

// tiny deterministic corpus with strong local structure
struct Toy {
  Vocabulary vocab;
  Corpus corpus;
};

Toy make_toy(int sentences) {
  std::vector<std::string> lines;
  const char* words[] = {"red", "green", "blue", "cat", "dog", "fox", "runs", "sits"};
  for (int i = 0; i < sentences; ++i) {
    std::string color = words[i % 3];
    std::string animal = words[3 + (i / 3) % 3];
    std::string verb = words[6 + i % 2];
    lines.push_back("the " + color + " " + animal + " " + verb);
  }
  Toy t{build_vocabulary(lines, 1), Corpus{}};
  t.corpus = encode_corpus(lines, t.vocab, Split::train);
  return t;
}

LstmLm toy_model(const Toy& t, int hidden, std::uint64_t seed) {
  LmConfig cfg;
  cfg.embedding_dim = hidden;
  cfg.hidden_units = hidden;
  cfg.num_layers = 1;
  return init_model(cfg, t.vocab.size(), t.vocab.fingerprint(), seed);
}

double max_param_diff(LstmLm& a, LstmLm& b) {
  auto ta = a.named_tensors();
  auto tb = b.named_tensors();
  double worst = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i)
    worst = std::max(worst, (*ta[i].second - *tb[i].second).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace

TEST_CASE("learning rate holds then decays multiplicatively", "[train]") {
  TrainConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.lr_hold_epochs = 10;
  cfg.lr_decay = 0.5;
  CHECK(epoch_learning_rate(cfg, 0) == 1.0);
  CHECK(epoch_learning_rate(cfg, 9) == 1.0);
  CHECK(epoch_learning_rate(cfg, 10) == 0.5);
  CHECK(epoch_learning_rate(cfg, 11) == 0.25);
  CHECK(epoch_learning_rate(cfg, 12) == 0.125);
  cfg.lr_hold_epochs = 0;
  CHECK(epoch_learning_rate(cfg, 0) == 0.5);
}

TEST_CASE("plain training reduces train perplexity epoch over epoch", "[train]") {
  Toy t = make_toy(50);
  LstmLm m = toy_model(t, 16, 2026);
  TrainConfig cfg;
  cfg.alpha = 0.0;
  cfg.learning_rate = 1.0;
  cfg.batch_size = 8;
  cfg.lr_hold_epochs = 100;  // no decay inside this test
  Trainer trainer(m, t.corpus, {}, cfg);
  double prev = std::exp(std::log(static_cast<double>(t.vocab.size())));  // untrained ceiling
  for (int e = 0; e < 5; ++e) {
    EpochStats st = trainer.train_epoch();
    INFO("epoch " << e << " ppl " << st.train_ppl);
    CHECK(st.train_ppl < prev);
    CHECK(std::isfinite(st.train_ppl));
    prev = st.train_ppl;
    CHECK(st.pos_sentences == 50);
    CHECK(st.pos_tokens == t.corpus.token_count());
    CHECK(st.neg_sentences == 0);
    CHECK(st.mean_negative_loss == 0.0);
  }
  // small uniform init spends many epochs near the unigram solution on a
  // corpus this tiny before the recurrent pathway takes over, so the
  // absolute bound gets a long horizon
  double final_ppl = prev;
  for (int e = 5; e < 40; ++e) final_ppl = trainer.train_epoch().train_ppl;
  CHECK(m.step_count > 0);
  CHECK(final_ppl < 6.0);
}

TEST_CASE("epoch stats expose the configured schedule", "[train]") {
  Toy t = make_toy(12);
  LstmLm m = toy_model(t, 8, 3);
  TrainConfig cfg;
  cfg.learning_rate = 0.8;
  cfg.lr_hold_epochs = 2;
  cfg.lr_decay = 0.5;
  cfg.batch_size = 4;
  Trainer trainer(m, t.corpus, {}, cfg);
  std::vector<double> lrs;
  for (int e = 0; e < 4; ++e) {
    EpochStats st = trainer.train_epoch();
    CHECK(st.epoch == e);
    lrs.push_back(st.learning_rate);
  }
  CHECK(lrs == std::vector<double>{0.8, 0.8, 0.4, 0.2});
}

TEST_CASE("anti-model training pairs one negative per positive sentence", "[train]") {
  Toy t = make_toy(10);
  NGramModel anti = NGramModel::fit(t.corpus, 3);
  LstmLm m = toy_model(t, 8, 5);
  TrainConfig cfg;
  cfg.alpha = 1.0;
  cfg.batch_size = 4;
  NegativeSource src;
  src.anti_model = &anti;
  Trainer trainer(m, t.corpus, src, cfg);
  EpochStats st = trainer.train_epoch();
  CHECK(st.pos_sentences == 10);
  CHECK(st.neg_sentences == 10);
  CHECK(st.neg_tokens > 0);
  CHECK(st.mean_negative_loss > 0.0);
  CHECK(std::isfinite(st.mean_negative_loss));
}

TEST_CASE("a static negative corpus is consumed round robin", "[train]") {
  Toy t = make_toy(10);
  Corpus statics;
  statics.split_label = Split::negative_dev;
  statics.vocab_fingerprint = t.corpus.vocab_fingerprint;
  statics.sentences = {Sentence{{3, kEndId}}, Sentence{{4, 5, kEndId}},
                       Sentence{{6, 7, 8, kEndId}}};
  LstmLm m = toy_model(t, 8, 5);
  TrainConfig cfg;
  cfg.alpha = 1.0;
  cfg.batch_size = 4;
  NegativeSource src;
  src.static_corpus = &statics;
  Trainer trainer(m, t.corpus, src, cfg);
  EpochStats st = trainer.train_epoch();
  CHECK(st.neg_sentences == 10);
  // ten draws cycling lengths 2,3,4: three full cycles then one more 2
  CHECK(st.neg_tokens == 29);
}

TEST_CASE("training is bitwise deterministic given seed and data", "[train]") {
  Toy t = make_toy(20);
  NGramModel anti = NGramModel::fit(t.corpus, 2);
  NegativeSource src;
  src.anti_model = &anti;
  TrainConfig cfg;
  cfg.alpha = 2.0;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.3;

  LstmLm m1 = toy_model(t, 8, 99);
  LstmLm m2 = toy_model(t, 8, 99);
  Trainer tr1(m1, t.corpus, src, cfg);
  Trainer tr2(m2, t.corpus, src, cfg);
  for (int e = 0; e < 2; ++e) {
    tr1.train_epoch();
    tr2.train_epoch();
  }
  CHECK(max_param_diff(m1, m2) == 0.0);
  CHECK(m1.rng == m2.rng);
  CHECK(m1.step_count == m2.step_count);
}

TEST_CASE("alpha zero leaves the negative source and rng untouched", "[train]") {
  Toy t = make_toy(15);
  NGramModel anti = NGramModel::fit(t.corpus, 2);
  NegativeSource src;
  src.anti_model = &anti;
  TrainConfig cfg;
  cfg.alpha = 0.0;
  cfg.batch_size = 4;

  LstmLm with_src = toy_model(t, 8, 7);
  LstmLm without = toy_model(t, 8, 7);
  Trainer tr1(with_src, t.corpus, src, cfg);
  Trainer tr2(without, t.corpus, {}, cfg);
  tr1.train_epoch();
  tr2.train_epoch();
  CHECK(max_param_diff(with_src, without) == 0.0);
  CHECK(with_src.rng == without.rng);

  LstmLm untouched = toy_model(t, 8, 7);
  CHECK(with_src.rng == untouched.rng);  // not a single negative draw
}

TEST_CASE("alpha changes the trained weights", "[train]") {
  Toy t = make_toy(20);
  NGramModel anti = NGramModel::fit(t.corpus, 2);
  NegativeSource src;
  src.anti_model = &anti;

  LstmLm m0 = toy_model(t, 8, 1);
  LstmLm m8 = toy_model(t, 8, 1);
  TrainConfig c0;
  c0.alpha = 0.0;
  c0.batch_size = 4;
  TrainConfig c8 = c0;
  c8.alpha = 8.0;
  Trainer t0(m0, t.corpus, src, c0);
  Trainer t8(m8, t.corpus, src, c8);
  t0.train_epoch();
  t8.train_epoch();
  CHECK(max_param_diff(m0, m8) > 0.0);
}

TEST_CASE("a tiny clip norm freezes the model in place", "[train]") {
  Toy t = make_toy(20);
  LstmLm m = toy_model(t, 8, 42);
  LstmLm before = m;
  TrainConfig cfg;
  cfg.alpha = 0.0;
  cfg.batch_size = 4;
  cfg.learning_rate = 1.0;
  cfg.grad_clip_norm = 1e-8;
  Trainer trainer(m, t.corpus, {}, cfg);
  trainer.train_epoch();
  // each of the five steps moves the parameters by at most lr * clip
  CHECK(max_param_diff(m, before) <= 5 * 1e-8 + 1e-12);
  CHECK(max_param_diff(m, before) > 0.0);  // but they do move
}

TEST_CASE("trainer constructor validates its inputs", "[train]") {
  Toy t = make_toy(6);
  LstmLm m = toy_model(t, 8, 1);
  TrainConfig cfg;

  Corpus empty;
  empty.vocab_fingerprint = t.corpus.vocab_fingerprint;
  CHECK_THROWS_AS(Trainer(m, empty, {}, cfg), std::invalid_argument);

  Corpus mismatched = t.corpus;
  mismatched.vocab_fingerprint ^= 1;
  CHECK_THROWS_AS(Trainer(m, mismatched, {}, cfg), std::invalid_argument);

  TrainConfig needs_neg;
  needs_neg.alpha = 1.0;
  CHECK_THROWS_AS(Trainer(m, t.corpus, {}, needs_neg), std::invalid_argument);

  NGramModel anti = NGramModel::fit(t.corpus, 2);
  Corpus statics = t.corpus;
  NegativeSource both;
  both.anti_model = &anti;
  both.static_corpus = &statics;
  CHECK_THROWS_AS(Trainer(m, t.corpus, both, needs_neg), std::invalid_argument);

  std::vector<std::string> other_text = {"zzz yyy"};
  Corpus other_lines = encode_corpus(other_text, Vocabulary({"zzz", "yyy"}), Split::train);
  NGramModel other_anti = NGramModel::fit(other_lines, 2);
  NegativeSource bad_fp;
  bad_fp.anti_model = &other_anti;
  CHECK_THROWS_AS(Trainer(m, t.corpus, bad_fp, needs_neg), std::invalid_argument);

  NegativeSource empty_static;
  Corpus no_neg;
  no_neg.vocab_fingerprint = t.corpus.vocab_fingerprint;
  empty_static.static_corpus = &no_neg;
  CHECK_THROWS_AS(Trainer(m, t.corpus, empty_static, needs_neg), std::invalid_argument);
}
