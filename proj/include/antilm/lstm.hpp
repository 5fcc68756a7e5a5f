#pragma once

// from-scratch LSTM language model in double precision with exact
// backpropagation through time. sentences are processed as batch lanes; a
// per-step 0/1 mask freezes the recurrent state of lanes whose sentence has
// already ended, so batched results equal one-at-a-time results bit for bit
// in exact arithmetic.
//
// input convention: to predict sentence ids [w1..wL] (wL is the end
// boundary), the inputs are [<s>, w1, .., w(L-1)]; an initial recurrent state
// may carry context from earlier sentences in the stream.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "antilm/corpus.hpp"
#include "antilm/loss.hpp"
#include "antilm/rng.hpp"
#include "antilm/vocab.hpp"

namespace antilm {

struct LmConfig {
  int embedding_dim = 64;
  int hidden_units = 64;  // 200/650/1500 at replication scale; 64 at desk scale
  int num_layers = 1;
  bool tie_embeddings = false;
  double dropout_keep = 1.0;

  void validate() const {
    if (embedding_dim < 1 || hidden_units < 1 || num_layers < 1)
      throw std::invalid_argument("model dimensions must be >= 1");
    if (!(dropout_keep > 0.0 && dropout_keep <= 1.0))
      throw std::invalid_argument("dropout_keep must be in (0, 1]");
    if (tie_embeddings && embedding_dim != hidden_units)
      throw std::invalid_argument("tied embeddings require embedding_dim == hidden_units");
  }
};

struct TrainConfig {
  double alpha = 0.0;
  double learning_rate = 1.0;
  double lr_decay = 0.5;       // multiplicative, applied per epoch after the hold
  int lr_hold_epochs = 10;     // epochs at the base rate before decay starts
  double grad_clip_norm = 5.0; // global norm across all tensors
  int epochs = 20;
  int batch_size = 16;
  int bptt_len = 35;
  double unlikelihood_floor = 1e-6;
  int max_negative_len = 200;  // cap for on-the-fly sampled sentences

  void validate() const {
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("lr_decay must be in (0, 1]");
    if (lr_hold_epochs < 0) throw std::invalid_argument("lr_hold_epochs must be >= 0");
    if (!(grad_clip_norm > 0.0)) throw std::invalid_argument("grad_clip_norm must be > 0");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (bptt_len < 1) throw std::invalid_argument("bptt_len must be >= 1");
    if (!(unlikelihood_floor > 0.0 && unlikelihood_floor < 0.5))
      throw std::invalid_argument("unlikelihood floor must be in (0, 0.5)");
    if (max_negative_len < 1) throw std::invalid_argument("max_negative_len must be >= 1");
  }
};

using TokenLosses = std::vector<double>;

namespace detail {
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace detail

class LstmLm {
 public:
  LmConfig cfg;
  std::int32_t vocab_size = 0;
  std::uint64_t vocab_fingerprint = 0;

  Eigen::MatrixXd embedding;               // V x E
  std::vector<Eigen::MatrixXd> gate_w;     // per layer: 4H x (D_l + H), gate row order i,f,g,o
  std::vector<Eigen::MatrixXd> gate_b;     // per layer: 4H x 1
  Eigen::MatrixXd out_w;                   // H x V; 0x0 when tied (embedding doubles as output)
  Eigen::MatrixXd out_b;                   // V x 1

  std::uint64_t rng_seed = 0;              // seed init_model was called with
  std::int64_t step_count = 0;             // SGD updates applied so far
  RngStream rng;                           // training-time stream (dropout etc.)

  int input_dim(int layer) const { return layer == 0 ? cfg.embedding_dim : cfg.hidden_units; }

  // every trainable tensor, in a fixed, documented order
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> named_tensors() {
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> out;
    out.emplace_back("embedding", &embedding);
    for (int l = 0; l < cfg.num_layers; ++l) {
      out.emplace_back("lstm" + std::to_string(l) + "_w", &gate_w[static_cast<std::size_t>(l)]);
      out.emplace_back("lstm" + std::to_string(l) + "_b", &gate_b[static_cast<std::size_t>(l)]);
    }
    if (!cfg.tie_embeddings) out.emplace_back("out_w", &out_w);
    out.emplace_back("out_b", &out_b);
    return out;
  }
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> named_tensors() const {
    auto mut = const_cast<LstmLm*>(this)->named_tensors();
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out;
    out.reserve(mut.size());
    for (auto& [n, p] : mut) out.emplace_back(n, p);
    return out;
  }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (auto& [name, t] : named_tensors()) n += t->size();
    return n;
  }
};

// all tensors drawn uniformly from [-0.05, 0.05]; fill order (tensor by
// tensor, column-major within each) is fixed so a seed pins every weight
inline LstmLm init_model(const LmConfig& cfg, std::int32_t vocab_size,
                         std::uint64_t vocab_fingerprint, std::uint64_t seed) {
  cfg.validate();
  if (vocab_size < 3) throw std::invalid_argument("vocab too small");
  LstmLm m;
  m.cfg = cfg;
  m.vocab_size = vocab_size;
  m.vocab_fingerprint = vocab_fingerprint;
  m.rng_seed = seed;
  m.rng = RngStream::derive(seed, 0x1574);

  const int H = cfg.hidden_units;
  m.embedding.resize(vocab_size, cfg.embedding_dim);
  for (int l = 0; l < cfg.num_layers; ++l) {
    m.gate_w.emplace_back(4 * H, m.input_dim(l) + H);
    m.gate_b.emplace_back(4 * H, 1);
  }
  if (!cfg.tie_embeddings) m.out_w.resize(H, vocab_size);
  m.out_b.resize(vocab_size, 1);

  for (auto& [name, t] : m.named_tensors()) {
    double* p = t->data();
    for (Eigen::Index i = 0; i < t->size(); ++i) p[i] = m.rng.next_range(-0.05, 0.05);
  }
  return m;
}

struct LmGradients {
  Eigen::MatrixXd embedding;
  std::vector<Eigen::MatrixXd> gate_w, gate_b;
  Eigen::MatrixXd out_w, out_b;
  bool tied = false;
  int num_layers = 0;

  static LmGradients zeros_like(const LstmLm& m) {
    LmGradients g;
    g.tied = m.cfg.tie_embeddings;
    g.num_layers = m.cfg.num_layers;
    g.embedding = Eigen::MatrixXd::Zero(m.embedding.rows(), m.embedding.cols());
    for (int l = 0; l < m.cfg.num_layers; ++l) {
      auto lu = static_cast<std::size_t>(l);
      g.gate_w.push_back(Eigen::MatrixXd::Zero(m.gate_w[lu].rows(), m.gate_w[lu].cols()));
      g.gate_b.push_back(Eigen::MatrixXd::Zero(m.gate_b[lu].rows(), m.gate_b[lu].cols()));
    }
    if (!g.tied) g.out_w = Eigen::MatrixXd::Zero(m.out_w.rows(), m.out_w.cols());
    g.out_b = Eigen::MatrixXd::Zero(m.out_b.rows(), m.out_b.cols());
    return g;
  }

  std::vector<std::pair<std::string, Eigen::MatrixXd*>> named_tensors() {
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> out;
    out.emplace_back("embedding", &embedding);
    for (int l = 0; l < num_layers; ++l) {
      out.emplace_back("lstm" + std::to_string(l) + "_w", &gate_w[static_cast<std::size_t>(l)]);
      out.emplace_back("lstm" + std::to_string(l) + "_b", &gate_b[static_cast<std::size_t>(l)]);
    }
    if (!tied) out.emplace_back("out_w", &out_w);
    out.emplace_back("out_b", &out_b);
    return out;
  }

  void add(const LmGradients& other) {
    auto a = named_tensors();
    auto b = const_cast<LmGradients&>(other).named_tensors();
    for (std::size_t i = 0; i < a.size(); ++i) *a[i].second += *b[i].second;
  }

  void scale(double s) {
    for (auto& [name, t] : named_tensors()) *t *= s;
  }

  double global_norm() {
    double sq = 0.0;
    for (auto& [name, t] : named_tensors()) sq += t->squaredNorm();
    return std::sqrt(sq);
  }

  // non-finite entries indicate a diverged or buggy step; name the tensor
  void check_finite() {
    for (auto& [name, t] : named_tensors())
      if (!t->allFinite()) throw std::runtime_error("non-finite gradient in " + name);
  }
};

struct LstmState {
  std::vector<Eigen::MatrixXd> h, c;  // per layer, H x B
};

inline LstmState zero_state(const LstmLm& m, int batch) {
  LstmState s;
  for (int l = 0; l < m.cfg.num_layers; ++l) {
    s.h.push_back(Eigen::MatrixXd::Zero(m.cfg.hidden_units, batch));
    s.c.push_back(Eigen::MatrixXd::Zero(m.cfg.hidden_units, batch));
  }
  return s;
}

// one truncation window [t0, t1) over a batch of sentences. lane b is live at
// step t iff t < len(sentence b); dead lanes carry state through unchanged.
struct SegmentPlan {
  int batch = 0;
  int steps = 0;
  int seg_begin = 0;
  std::vector<std::vector<std::int32_t>> inputs;   // [step][lane]
  std::vector<std::vector<std::int32_t>> targets;  // [step][lane]
  std::vector<Eigen::RowVectorXd> mask;            // [step], 1 x batch
};

inline SegmentPlan make_segment_plan(std::span<const Sentence* const> sents, int t0, int t1) {
  SegmentPlan plan;
  plan.batch = static_cast<int>(sents.size());
  plan.seg_begin = t0;
  int steps = 0;
  for (const Sentence* s : sents)
    steps = std::max(steps, std::min(t1, static_cast<int>(s->ids.size())) - t0);
  plan.steps = std::max(steps, 0);
  for (int t = 0; t < plan.steps; ++t) {
    int pos = t0 + t;
    std::vector<std::int32_t> in(static_cast<std::size_t>(plan.batch), kEndId);
    std::vector<std::int32_t> tg(static_cast<std::size_t>(plan.batch), kEndId);
    Eigen::RowVectorXd mk = Eigen::RowVectorXd::Zero(plan.batch);
    for (int b = 0; b < plan.batch; ++b) {
      const auto& ids = sents[static_cast<std::size_t>(b)]->ids;
      if (pos < static_cast<int>(ids.size())) {
        in[static_cast<std::size_t>(b)] = pos == 0 ? kStartId : ids[static_cast<std::size_t>(pos - 1)];
        tg[static_cast<std::size_t>(b)] = ids[static_cast<std::size_t>(pos)];
        mk(b) = 1.0;
      }
    }
    plan.inputs.push_back(std::move(in));
    plan.targets.push_back(std::move(tg));
    plan.mask.push_back(std::move(mk));
  }
  return plan;
}

struct StepCache {
  std::vector<Eigen::MatrixXd> zin;            // per layer: (D+H) x B, [dropped input; h_prev]
  std::vector<Eigen::MatrixXd> gi, gf, gg, go; // per layer: H x B post-nonlinearity
  std::vector<Eigen::MatrixXd> c_raw, tanh_c;  // per layer: H x B, pre-blend
  std::vector<Eigen::MatrixXd> c_prev;         // per layer: H x B
  Eigen::MatrixXd top;                         // H x B (post dropout)
  Eigen::MatrixXd probs;                       // V x B (zero columns for dead lanes)
  std::vector<Eigen::MatrixXd> drop_in;        // per layer input mask, empty when inactive
  Eigen::MatrixXd drop_top;                    // empty when inactive
};

// forward over one segment. losses[b] must be presized to sentence b's
// length; entries [t0, ..) covered by this segment are written. when cache is
// non-null every step's intermediates are recorded for backward_segment.
// dropout_rng non-null enables inverted dropout on non-recurrent connections.
inline void forward_segment(const LstmLm& m, const SegmentPlan& plan, const LstmState& state_in,
                            LstmState& state_out, std::vector<std::vector<double>>& losses,
                            std::vector<StepCache>* cache, RngStream* dropout_rng) {
  const int H = m.cfg.hidden_units;
  const int B = plan.batch;
  const int L = m.cfg.num_layers;
  const bool drop_active = dropout_rng != nullptr && m.cfg.dropout_keep < 1.0;
  const double keep = m.cfg.dropout_keep;

  state_out = state_in;
  if (cache) {
    cache->clear();
    cache->reserve(static_cast<std::size_t>(plan.steps));
  }

  auto draw_mask = [&](int rows, int cols) {
    Eigen::MatrixXd mk(rows, cols);
    for (int cc = 0; cc < cols; ++cc)
      for (int rr = 0; rr < rows; ++rr)
        mk(rr, cc) = dropout_rng->next_unit() < keep ? 1.0 / keep : 0.0;
    return mk;
  };

  for (int t = 0; t < plan.steps; ++t) {
    StepCache step;
    const Eigen::RowVectorXd& mk = plan.mask[static_cast<std::size_t>(t)];

    // embed inputs
    Eigen::MatrixXd x(m.cfg.embedding_dim, B);
    for (int b = 0; b < B; ++b)
      x.col(b) = m.embedding.row(plan.inputs[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)])
                     .transpose();

    Eigen::MatrixXd layer_in = x;
    for (int l = 0; l < L; ++l) {
      auto lu = static_cast<std::size_t>(l);
      const int D = m.input_dim(l);
      Eigen::MatrixXd dropped = layer_in;
      if (drop_active) {
        Eigen::MatrixXd dm = draw_mask(D, B);
        dropped = dropped.cwiseProduct(dm);
        step.drop_in.push_back(std::move(dm));
      }
      Eigen::MatrixXd zin(D + H, B);
      zin.topRows(D) = dropped;
      zin.bottomRows(H) = state_out.h[lu];

      Eigen::MatrixXd pre = m.gate_w[lu] * zin;
      pre.colwise() += m.gate_b[lu].col(0);

      Eigen::MatrixXd gi = pre.topRows(H).unaryExpr([](double v) { return detail::sigmoid(v); });
      Eigen::MatrixXd gf = pre.middleRows(H, H).unaryExpr([](double v) { return detail::sigmoid(v); });
      Eigen::MatrixXd gg = pre.middleRows(2 * H, H).unaryExpr([](double v) { return std::tanh(v); });
      Eigen::MatrixXd go = pre.middleRows(3 * H, H).unaryExpr([](double v) { return detail::sigmoid(v); });

      Eigen::MatrixXd c_raw = gf.cwiseProduct(state_out.c[lu]) + gi.cwiseProduct(gg);
      Eigen::MatrixXd tanh_c = c_raw.unaryExpr([](double v) { return std::tanh(v); });
      Eigen::MatrixXd h_raw = go.cwiseProduct(tanh_c);

      // freeze state in dead lanes
      Eigen::ArrayXXd live = mk.replicate(H, 1).array();
      Eigen::MatrixXd c_next = (c_raw.array() * live + state_out.c[lu].array() * (1.0 - live)).matrix();
      Eigen::MatrixXd h_next = (h_raw.array() * live + state_out.h[lu].array() * (1.0 - live)).matrix();

      if (cache) {
        step.zin.push_back(std::move(zin));
        step.gi.push_back(std::move(gi));
        step.gf.push_back(std::move(gf));
        step.gg.push_back(std::move(gg));
        step.go.push_back(std::move(go));
        step.c_raw.push_back(std::move(c_raw));
        step.tanh_c.push_back(std::move(tanh_c));
        step.c_prev.push_back(state_out.c[lu]);
      }
      state_out.c[lu] = std::move(c_next);
      state_out.h[lu] = std::move(h_next);
      if (l + 1 < L) layer_in = state_out.h[lu];
    }

    // dead lanes hold stale h; mask keeps them out of losses and gradients
    Eigen::MatrixXd top = state_out.h[static_cast<std::size_t>(L - 1)];
    if (drop_active) {
      step.drop_top = draw_mask(H, B);
      top = top.cwiseProduct(step.drop_top);
    }

    Eigen::MatrixXd logits;
    if (m.cfg.tie_embeddings)
      logits = m.embedding * top;
    else
      logits = m.out_w.transpose() * top;
    logits.colwise() += m.out_b.col(0);

    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(m.vocab_size, B);
    for (int b = 0; b < B; ++b) {
      if (mk(b) == 0.0) continue;
      Eigen::VectorXd z = logits.col(b);
      double mx = z.maxCoeff();
      double lse = mx + std::log((z.array() - mx).exp().sum());
      std::int32_t target = plan.targets[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)];
      losses[static_cast<std::size_t>(b)][static_cast<std::size_t>(plan.seg_begin + t)] =
          lse - z(target);
      probs.col(b) = (z.array() - lse).exp();
    }

    if (cache) {
      step.top = std::move(top);
      step.probs = std::move(probs);
      cache->push_back(std::move(step));
    }
  }
}

// accumulates d(sum_t sum_b scale[t](b) * loss[t](b)) / d(theta) into grads.
// scales must be zero wherever the plan mask is zero. gradient flow into the
// segment's initial state is dropped (the truncation boundary).
inline void backward_segment(const LstmLm& m, const SegmentPlan& plan,
                             const std::vector<StepCache>& cache,
                             const std::vector<Eigen::RowVectorXd>& scales, LmGradients& grads) {
  const int H = m.cfg.hidden_units;
  const int B = plan.batch;
  const int L = m.cfg.num_layers;
  const bool drop_active = !cache.empty() && !cache.front().drop_in.empty();

  std::vector<Eigen::MatrixXd> dh_rec(static_cast<std::size_t>(L)), dc_rec(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    dh_rec[static_cast<std::size_t>(l)] = Eigen::MatrixXd::Zero(H, B);
    dc_rec[static_cast<std::size_t>(l)] = Eigen::MatrixXd::Zero(H, B);
  }

  for (int t = plan.steps - 1; t >= 0; --t) {
    const StepCache& step = cache[static_cast<std::size_t>(t)];
    const Eigen::RowVectorXd& mk = plan.mask[static_cast<std::size_t>(t)];
    const Eigen::RowVectorXd& sc = scales[static_cast<std::size_t>(t)];

    // d logits: scale * (softmax - onehot(target)); dead lanes have zero
    // scale and zero probs columns, so their contribution vanishes
    Eigen::MatrixXd dlogits = step.probs;
    for (int b = 0; b < B; ++b) {
      if (sc(b) != 0.0)
        dlogits(plan.targets[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)], b) -= 1.0;
      dlogits.col(b) *= sc(b);
    }

    Eigen::MatrixXd dtop;
    if (m.cfg.tie_embeddings) {
      grads.embedding += dlogits * step.top.transpose();
      dtop = m.embedding.transpose() * dlogits;
    } else {
      grads.out_w += step.top * dlogits.transpose();
      dtop = m.out_w * dlogits;
    }
    grads.out_b.col(0) += dlogits.rowwise().sum();
    if (drop_active) dtop = dtop.cwiseProduct(step.drop_top);

    Eigen::MatrixXd dfrom_above = dtop;  // gradient w.r.t. layer l's blended h output
    for (int l = L - 1; l >= 0; --l) {
      auto lu = static_cast<std::size_t>(l);
      const int D = m.input_dim(l);
      Eigen::ArrayXXd live = mk.replicate(H, 1).array();

      Eigen::MatrixXd dh_total = dfrom_above + dh_rec[lu];
      Eigen::MatrixXd dc_total = dc_rec[lu];

      // undo the dead-lane blend
      Eigen::MatrixXd dh_new = (dh_total.array() * live).matrix();
      Eigen::MatrixXd dh_passthru = (dh_total.array() * (1.0 - live)).matrix();
      Eigen::MatrixXd dc_new = (dc_total.array() * live).matrix();
      Eigen::MatrixXd dc_passthru = (dc_total.array() * (1.0 - live)).matrix();

      Eigen::MatrixXd dgo = dh_new.cwiseProduct(step.tanh_c[lu]);
      Eigen::MatrixXd dc_raw =
          dh_new.cwiseProduct(step.go[lu])
              .cwiseProduct((1.0 - step.tanh_c[lu].array().square()).matrix()) +
          dc_new;

      Eigen::MatrixXd dgi = dc_raw.cwiseProduct(step.gg[lu]);
      Eigen::MatrixXd dgf = dc_raw.cwiseProduct(step.c_prev[lu]);
      Eigen::MatrixXd dgg = dc_raw.cwiseProduct(step.gi[lu]);

      Eigen::MatrixXd dpre(4 * H, B);
      dpre.topRows(H) = dgi.cwiseProduct(step.gi[lu])
                            .cwiseProduct((1.0 - step.gi[lu].array()).matrix());
      dpre.middleRows(H, H) = dgf.cwiseProduct(step.gf[lu])
                                  .cwiseProduct((1.0 - step.gf[lu].array()).matrix());
      dpre.middleRows(2 * H, H) = dgg.cwiseProduct((1.0 - step.gg[lu].array().square()).matrix());
      dpre.middleRows(3 * H, H) = dgo.cwiseProduct(step.go[lu])
                                      .cwiseProduct((1.0 - step.go[lu].array()).matrix());

      grads.gate_w[lu] += dpre * step.zin[lu].transpose();
      grads.gate_b[lu].col(0) += dpre.rowwise().sum();

      Eigen::MatrixXd dz = m.gate_w[lu].transpose() * dpre;
      dh_rec[lu] = dh_passthru + dz.bottomRows(H);
      dc_rec[lu] = dc_passthru + dc_raw.cwiseProduct(step.gf[lu]);

      Eigen::MatrixXd din = dz.topRows(D);
      if (drop_active) din = din.cwiseProduct(step.drop_in[lu]);
      if (l > 0) {
        dfrom_above = std::move(din);
      } else {
        for (int b = 0; b < B; ++b)
          grads.embedding.row(plan.inputs[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)]) +=
              din.col(b).transpose();
      }
    }
  }
}

// plain forward pass over whole sentences (no dropout, no cache); losses for
// sentence b land in result.losses[b], one entry per predicted token
struct BatchResult {
  std::vector<std::vector<double>> losses;
  LstmState final_state;
};

inline BatchResult forward_batch(const LstmLm& m, std::span<const Sentence* const> sents,
                                 const LstmState* initial_state = nullptr) {
  BatchResult result;
  if (sents.empty()) {
    result.final_state = initial_state ? *initial_state : zero_state(m, 0);
    return result;
  }
  int max_len = 0;
  for (const Sentence* s : sents) {
    result.losses.emplace_back(s->ids.size(), 0.0);
    max_len = std::max(max_len, static_cast<int>(s->ids.size()));
  }
  SegmentPlan plan = make_segment_plan(sents, 0, max_len);
  LstmState init = initial_state ? *initial_state : zero_state(m, static_cast<int>(sents.size()));
  forward_segment(m, plan, init, result.final_state, result.losses, nullptr, nullptr);
  return result;
}

inline std::pair<TokenLosses, LstmState> forward_token_losses(const LstmLm& m, const Sentence& sent,
                                                              const LstmState& initial_state) {
  const Sentence* p = &sent;
  BatchResult r = forward_batch(m, std::span<const Sentence* const>(&p, 1), &initial_state);
  return {std::move(r.losses[0]), std::move(r.final_state)};
}

// exact gradients of combined_loss over the given batches: positive lanes
// contribute plain NLL, negative lanes the clamped unlikelihood term. both
// batches start from zero state; BPTT is truncated at cfg.bptt_len, which is
// exact whenever bptt_len covers the longest sentence.
inline LmGradients gradients(const LstmLm& m, std::span<const Sentence* const> pos,
                             std::span<const Sentence* const> neg, const TrainConfig& cfg) {
  cfg.validate();
  LmGradients grads = LmGradients::zeros_like(m);

  auto run_lanes = [&](std::span<const Sentence* const> sents, bool is_negative) {
    if (sents.empty()) return;
    int max_len = 0;
    std::vector<std::vector<double>> losses;
    for (const Sentence* s : sents) {
      losses.emplace_back(s->ids.size(), 0.0);
      max_len = std::max(max_len, static_cast<int>(s->ids.size()));
    }
    LstmState state = zero_state(m, static_cast<int>(sents.size()));
    std::vector<StepCache> cache;
    for (int t0 = 0; t0 < max_len; t0 += cfg.bptt_len) {
      SegmentPlan plan = make_segment_plan(sents, t0, t0 + cfg.bptt_len);
      if (plan.steps == 0) break;
      LstmState next;
      forward_segment(m, plan, state, next, losses, &cache, nullptr);
      std::vector<Eigen::RowVectorXd> scales(plan.mask.begin(), plan.mask.end());
      if (is_negative) {
        for (int t = 0; t < plan.steps; ++t)
          for (int b = 0; b < plan.batch; ++b)
            if (scales[static_cast<std::size_t>(t)](b) != 0.0)
              scales[static_cast<std::size_t>(t)](b) = negative_token_dloss(
                  losses[static_cast<std::size_t>(b)][static_cast<std::size_t>(t0 + t)], cfg.alpha,
                  cfg.unlikelihood_floor);
      }
      backward_segment(m, plan, cache, scales, grads);
      state = std::move(next);
    }
  };

  run_lanes(pos, false);
  if (cfg.alpha > 0.0) run_lanes(neg, true);
  grads.check_finite();
  return grads;
}

}  // namespace antilm
