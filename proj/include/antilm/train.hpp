#pragma once

// SGD training loop. the positive corpus is split into batch_size contiguous
// lane shards; recurrent state streams through each lane across sentence
// boundaries (reset at the top of every epoch), while every negative sentence
// starts from a fresh zero state. each step's objective is
//
//   (positive NLL + unlikelihood term) / (positive tokens in the step)
//
// with gradients clipped to a global norm before the update. sentences are
// visited in document order; there is no shuffling, so a seed pins the run.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "antilm/corpus.hpp"
#include "antilm/loss.hpp"
#include "antilm/lstm.hpp"
#include "antilm/ngram.hpp"
#include "antilm/rng.hpp"

namespace antilm {

// when alpha > 0 exactly one member must be set: an anti-model for on-the-fly
// sampled batches, or a pre-materialized static corpus consumed round-robin
struct NegativeSource {
  const NGramModel* anti_model = nullptr;
  const Corpus* static_corpus = nullptr;

  bool empty() const { return anti_model == nullptr && static_corpus == nullptr; }
};

struct EpochStats {
  int epoch = 0;  // 0-based
  double learning_rate = 0.0;
  double train_ppl = 0.0;
  double mean_negative_loss = 0.0;  // per negative token, alpha-weighted
  std::int64_t pos_sentences = 0;
  std::int64_t neg_sentences = 0;
  std::int64_t pos_tokens = 0;
  std::int64_t neg_tokens = 0;
};

inline double epoch_learning_rate(const TrainConfig& cfg, int epoch) {
  int decays = std::max(0, epoch + 1 - cfg.lr_hold_epochs);
  return cfg.learning_rate * std::pow(cfg.lr_decay, decays);
}

class Trainer {
 public:
  Trainer(LstmLm& model, const Corpus& positive, NegativeSource source, TrainConfig cfg)
      : model_(model), positive_(positive), source_(source), cfg_(cfg) {
    cfg_.validate();
    if (positive.sentences.empty()) throw std::invalid_argument("positive corpus is empty");
    if (positive.vocab_fingerprint != model.vocab_fingerprint)
      throw std::invalid_argument("corpus and model vocabularies differ");
    if (cfg_.alpha > 0.0) {
      if (source_.empty()) throw std::invalid_argument("alpha > 0 requires a negative source");
      if (source_.anti_model && source_.static_corpus)
        throw std::invalid_argument("choose one negative source, not both");
      if (source_.anti_model &&
          source_.anti_model->vocab_fingerprint() != model.vocab_fingerprint)
        throw std::invalid_argument("anti-model vocabulary differs from model");
      if (source_.static_corpus && source_.static_corpus->sentences.empty())
        throw std::invalid_argument("static negative corpus is empty");
    }
  }

  int epoch() const { return epoch_; }

  EpochStats train_epoch() {
    const double lr = epoch_learning_rate(cfg_, epoch_);
    const bool use_negatives = cfg_.alpha > 0.0;
    const std::int64_t n = static_cast<std::int64_t>(positive_.sentences.size());
    const int lanes = static_cast<int>(std::min<std::int64_t>(cfg_.batch_size, n));
    const std::int64_t shard = (n + lanes - 1) / lanes;  // sentences per lane

    EpochStats stats;
    stats.epoch = epoch_;
    stats.learning_rate = lr;
    double pos_loss_sum = 0.0, neg_loss_sum = 0.0;

    LstmState state = zero_state(model_, lanes);

    for (std::int64_t s = 0; s < shard; ++s) {
      // gather this step's sentence per lane; exhausted lanes sit out
      std::vector<const Sentence*> pos_sents;
      std::vector<int> lane_of;
      std::vector<std::int64_t> global_idx;
      for (int lane = 0; lane < lanes; ++lane) {
        std::int64_t idx = static_cast<std::int64_t>(lane) * shard + s;
        std::int64_t lane_end = std::min<std::int64_t>((static_cast<std::int64_t>(lane) + 1) * shard, n);
        if (idx < lane_end) {
          pos_sents.push_back(&positive_.sentences[static_cast<std::size_t>(idx)]);
          lane_of.push_back(lane);
          global_idx.push_back(idx);
        }
      }
      if (pos_sents.empty()) break;

      std::vector<Sentence> neg_sents;
      if (use_negatives) {
        if (source_.anti_model) {
          std::vector<const Sentence*> prev;
          for (std::int64_t idx : global_idx)
            prev.push_back(idx > 0 ? &positive_.sentences[static_cast<std::size_t>(idx - 1)] : nullptr);
          neg_sents = negative_batch(*source_.anti_model, prev, model_.rng, cfg_.max_negative_len);
        } else {
          for (std::size_t k = 0; k < pos_sents.size(); ++k) {
            neg_sents.push_back(source_.static_corpus->sentences[static_cast<std::size_t>(
                static_neg_cursor_ % static_cast<std::int64_t>(source_.static_corpus->sentences.size()))]);
            ++static_neg_cursor_;
          }
        }
      }

      LmGradients grads = LmGradients::zeros_like(model_);
      std::int64_t batch_pos_tokens = 0;

      // positive lanes: carry state, write gradients segment by segment
      {
        std::vector<std::vector<double>> losses;
        int max_len = 0;
        for (const Sentence* ps : pos_sents) {
          losses.emplace_back(ps->ids.size(), 0.0);
          max_len = std::max(max_len, static_cast<int>(ps->ids.size()));
          batch_pos_tokens += static_cast<std::int64_t>(ps->ids.size());
        }
        LstmState step_state = gather_lanes(state, lane_of);
        std::vector<StepCache> cache;
        for (int t0 = 0; t0 < max_len; t0 += cfg_.bptt_len) {
          SegmentPlan plan = make_segment_plan(pos_sents, t0, t0 + cfg_.bptt_len);
          if (plan.steps == 0) break;
          LstmState next;
          forward_segment(model_, plan, step_state, next, losses, &cache,
                          model_.cfg.dropout_keep < 1.0 ? &model_.rng : nullptr);
          std::vector<Eigen::RowVectorXd> scales(plan.mask.begin(), plan.mask.end());
          backward_segment(model_, plan, cache, scales, grads);
          step_state = std::move(next);
        }
        scatter_lanes(state, step_state, lane_of);
        for (const auto& ls : losses)
          for (double v : ls) pos_loss_sum += v;
        stats.pos_tokens += batch_pos_tokens;
        stats.pos_sentences += static_cast<std::int64_t>(pos_sents.size());
      }

      // negative lanes: fresh state, unlikelihood outer derivative as scale
      if (use_negatives && !neg_sents.empty()) {
        std::vector<const Sentence*> nptrs;
        std::vector<std::vector<double>> losses;
        int max_len = 0;
        for (const Sentence& ns : neg_sents) {
          nptrs.push_back(&ns);
          losses.emplace_back(ns.ids.size(), 0.0);
          max_len = std::max(max_len, static_cast<int>(ns.ids.size()));
          stats.neg_tokens += static_cast<std::int64_t>(ns.ids.size());
        }
        LstmState nstate = zero_state(model_, static_cast<int>(nptrs.size()));
        std::vector<StepCache> cache;
        for (int t0 = 0; t0 < max_len; t0 += cfg_.bptt_len) {
          SegmentPlan plan = make_segment_plan(nptrs, t0, t0 + cfg_.bptt_len);
          if (plan.steps == 0) break;
          LstmState next;
          forward_segment(model_, plan, nstate, next, losses, &cache,
                          model_.cfg.dropout_keep < 1.0 ? &model_.rng : nullptr);
          std::vector<Eigen::RowVectorXd> scales(plan.mask.begin(), plan.mask.end());
          for (int t = 0; t < plan.steps; ++t)
            for (int b = 0; b < plan.batch; ++b)
              if (scales[static_cast<std::size_t>(t)](b) != 0.0)
                scales[static_cast<std::size_t>(t)](b) = negative_token_dloss(
                    losses[static_cast<std::size_t>(b)][static_cast<std::size_t>(t0 + t)],
                    cfg_.alpha, cfg_.unlikelihood_floor);
          backward_segment(model_, plan, cache, scales, grads);
          nstate = std::move(next);
        }
        for (const auto& ls : losses)
          neg_loss_sum += negative_loss(ls, cfg_.alpha, cfg_.unlikelihood_floor);
        stats.neg_sentences += static_cast<std::int64_t>(neg_sents.size());
      }

      // per-positive-token objective scaling, then global-norm clip, then step
      grads.check_finite();
      grads.scale(1.0 / static_cast<double>(batch_pos_tokens));
      double norm = grads.global_norm();
      if (norm > cfg_.grad_clip_norm) grads.scale(cfg_.grad_clip_norm / norm);

      auto mt = model_.named_tensors();
      auto gt = grads.named_tensors();
      for (std::size_t i = 0; i < mt.size(); ++i) *mt[i].second -= lr * *gt[i].second;
      ++model_.step_count;
    }

    stats.train_ppl = std::exp(pos_loss_sum / static_cast<double>(stats.pos_tokens));
    stats.mean_negative_loss =
        stats.neg_tokens > 0 ? neg_loss_sum / static_cast<double>(stats.neg_tokens) : 0.0;
    ++epoch_;
    return stats;
  }

 private:
  // lanes present this step <-> columns of the persistent state
  static LstmState gather_lanes(const LstmState& full, const std::vector<int>& lane_of) {
    LstmState out;
    for (std::size_t l = 0; l < full.h.size(); ++l) {
      Eigen::MatrixXd h(full.h[l].rows(), static_cast<Eigen::Index>(lane_of.size()));
      Eigen::MatrixXd c(full.c[l].rows(), static_cast<Eigen::Index>(lane_of.size()));
      for (std::size_t k = 0; k < lane_of.size(); ++k) {
        h.col(static_cast<Eigen::Index>(k)) = full.h[l].col(lane_of[k]);
        c.col(static_cast<Eigen::Index>(k)) = full.c[l].col(lane_of[k]);
      }
      out.h.push_back(std::move(h));
      out.c.push_back(std::move(c));
    }
    return out;
  }

  static void scatter_lanes(LstmState& full, const LstmState& got, const std::vector<int>& lane_of) {
    for (std::size_t l = 0; l < full.h.size(); ++l)
      for (std::size_t k = 0; k < lane_of.size(); ++k) {
        full.h[l].col(lane_of[k]) = got.h[l].col(static_cast<Eigen::Index>(k));
        full.c[l].col(lane_of[k]) = got.c[l].col(static_cast<Eigen::Index>(k));
      }
  }

  LstmLm& model_;
  const Corpus& positive_;
  NegativeSource source_;
  TrainConfig cfg_;
  int epoch_ = 0;
  std::int64_t static_neg_cursor_ = 0;
};

// central-difference gradient audit over every parameter. the analytic
// gradient may be overridden by a test fixture (the corrupted-gradient
// negative control). relative error uses an absolute floor of 1 so that
// near-zero gradient pairs compare absolutely:
//   err = |analytic - numeric| / max(1, |analytic| + |numeric|)
inline double finite_difference_check(const LstmLm& model, std::span<const Sentence* const> pos,
                                      std::span<const Sentence* const> neg, const TrainConfig& cfg,
                                      double step,
                                      const LmGradients* analytic_override = nullptr) {
  if (!(step > 0.0)) throw std::invalid_argument("perturbation step must be positive");
  cfg.validate();

  LmGradients analytic =
      analytic_override ? *analytic_override : gradients(model, pos, neg, cfg);

  LstmLm probe = model;  // perturbed copy
  auto loss_at = [&]() {
    double total = 0.0;
    BatchResult pr = forward_batch(probe, pos);
    for (const auto& ls : pr.losses) total += positive_loss(ls);
    if (cfg.alpha > 0.0 && !neg.empty()) {
      BatchResult nr = forward_batch(probe, neg);
      for (const auto& ls : nr.losses)
        total += negative_loss(ls, cfg.alpha, cfg.unlikelihood_floor);
    }
    return total;
  };

  double worst = 0.0;
  auto pt = probe.named_tensors();
  auto at = analytic.named_tensors();
  for (std::size_t ti = 0; ti < pt.size(); ++ti) {
    Eigen::MatrixXd& tensor = *pt[ti].second;
    const Eigen::MatrixXd& grad = *at[ti].second;
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      double saved = tensor.data()[i];
      tensor.data()[i] = saved + step;
      double up = loss_at();
      tensor.data()[i] = saved - step;
      double down = loss_at();
      tensor.data()[i] = saved;
      double numeric = (up - down) / (2.0 * step);
      double a = grad.data()[i];
      double err = std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace antilm
