#pragma once

// flat key = value experiment config with '#' comments. unknown keys are
// errors so typos cannot silently fall back to defaults; the resolved config
// (defaults expanded) is echoed into every run directory.

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "antilm/lstm.hpp"
#include "antilm/ngram.hpp"
#include "antilm/util.hpp"

namespace antilm {

struct ExperimentConfig {
  // data
  std::string train_path;
  std::string dev_path;
  std::string test_path;       // optional
  std::string agreement_path;  // optional
  std::string output_dir;
  int min_count = 1;

  // anti-model
  int ngram_order = 3;
  int max_gen_len = 200;
  NegativeDevMode negative_dev_mode = NegativeDevMode::per_sentence_seeded;

  // sweep
  std::vector<double> alpha_sweep = {0, 1, 2, 4, 8};

  // model
  int embedding_dim = 64;
  int hidden_units = 64;
  int num_layers = 1;
  bool tie_embeddings = false;
  double dropout_keep = 1.0;

  // optimization
  double learning_rate = 1.0;
  double lr_decay = 0.5;
  int lr_hold_epochs = 10;
  double grad_clip_norm = 5.0;
  int epochs = 20;
  int batch_size = 16;
  int bptt_len = 35;
  double unlikelihood_floor = 1e-6;

  // bookkeeping
  std::uint64_t master_seed = 12345;
  bool include_oov_verbs = false;
  bool record_wall_seconds = true;  // off => wall_seconds column is 0.000 and reruns are byte-identical

  LmConfig lm_config() const {
    LmConfig c;
    c.embedding_dim = embedding_dim;
    c.hidden_units = hidden_units;
    c.num_layers = num_layers;
    c.tie_embeddings = tie_embeddings;
    c.dropout_keep = dropout_keep;
    return c;
  }

  TrainConfig train_config(double alpha) const {
    TrainConfig c;
    c.alpha = alpha;
    c.learning_rate = learning_rate;
    c.lr_decay = lr_decay;
    c.lr_hold_epochs = lr_hold_epochs;
    c.grad_clip_norm = grad_clip_norm;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.bptt_len = bptt_len;
    c.unlikelihood_floor = unlikelihood_floor;
    c.max_negative_len = max_gen_len;
    return c;
  }

  void validate() const {
    if (train_path.empty()) throw std::runtime_error("config: train_path is required");
    if (dev_path.empty()) throw std::runtime_error("config: dev_path is required");
    if (output_dir.empty()) throw std::runtime_error("config: output_dir is required");
    if (min_count < 1) throw std::runtime_error("config: min_count must be >= 1");
    if (ngram_order < 1 || ngram_order > kMaxNgramOrder)
      throw std::runtime_error("config: ngram_order out of range");
    if (max_gen_len < 1) throw std::runtime_error("config: max_gen_len must be >= 1");
    if (alpha_sweep.empty()) throw std::runtime_error("config: alpha_sweep must be nonempty");
    for (double a : alpha_sweep)
      if (!(a >= 0.0)) throw std::runtime_error("config: every alpha must be >= 0");
    lm_config().validate();
    train_config(alpha_sweep.front()).validate();
  }
};

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": '" + v + "'");
}

inline ExperimentConfig parse_experiment_config(const std::vector<std::string>& lines) {
  ExperimentConfig cfg;
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(i + 1) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (++seen[key] > 1) throw std::runtime_error("config: duplicate key " + key);

    if (key == "train_path") cfg.train_path = value;
    else if (key == "dev_path") cfg.dev_path = value;
    else if (key == "test_path") cfg.test_path = value;
    else if (key == "agreement_path") cfg.agreement_path = value;
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "min_count") cfg.min_count = static_cast<int>(parse_int(value, key));
    else if (key == "ngram_order") cfg.ngram_order = static_cast<int>(parse_int(value, key));
    else if (key == "max_gen_len") cfg.max_gen_len = static_cast<int>(parse_int(value, key));
    else if (key == "negative_dev_mode") cfg.negative_dev_mode = negative_dev_mode_from_string(value);
    else if (key == "alpha_sweep") {
      cfg.alpha_sweep.clear();
      for (auto& part : split_on(value, ',')) cfg.alpha_sweep.push_back(parse_double(trim(part), key));
    } else if (key == "embedding_dim") cfg.embedding_dim = static_cast<int>(parse_int(value, key));
    else if (key == "hidden_units") cfg.hidden_units = static_cast<int>(parse_int(value, key));
    else if (key == "num_layers") cfg.num_layers = static_cast<int>(parse_int(value, key));
    else if (key == "tie_embeddings") cfg.tie_embeddings = parse_bool(value, key);
    else if (key == "dropout_keep") cfg.dropout_keep = parse_double(value, key);
    else if (key == "learning_rate") cfg.learning_rate = parse_double(value, key);
    else if (key == "lr_decay") cfg.lr_decay = parse_double(value, key);
    else if (key == "lr_hold_epochs") cfg.lr_hold_epochs = static_cast<int>(parse_int(value, key));
    else if (key == "grad_clip_norm") cfg.grad_clip_norm = parse_double(value, key);
    else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(value, key));
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(value, key));
    else if (key == "bptt_len") cfg.bptt_len = static_cast<int>(parse_int(value, key));
    else if (key == "unlikelihood_floor") cfg.unlikelihood_floor = parse_double(value, key);
    else if (key == "master_seed") cfg.master_seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "include_oov_verbs") cfg.include_oov_verbs = parse_bool(value, key);
    else if (key == "record_wall_seconds") cfg.record_wall_seconds = parse_bool(value, key);
    else throw std::runtime_error("config: unknown key " + key);
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_lines(path));
}

// canonical echo: every key explicit, fixed order, parseable by the loader
inline std::string render_experiment_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "train_path = " << c.train_path << "\n";
  out << "dev_path = " << c.dev_path << "\n";
  out << "test_path = " << c.test_path << "\n";
  out << "agreement_path = " << c.agreement_path << "\n";
  out << "output_dir = " << c.output_dir << "\n";
  out << "min_count = " << c.min_count << "\n";
  out << "ngram_order = " << c.ngram_order << "\n";
  out << "max_gen_len = " << c.max_gen_len << "\n";
  out << "negative_dev_mode = " << to_string(c.negative_dev_mode) << "\n";
  out << "alpha_sweep = ";
  for (std::size_t i = 0; i < c.alpha_sweep.size(); ++i)
    out << (i ? "," : "") << format_compact(c.alpha_sweep[i]);
  out << "\n";
  out << "embedding_dim = " << c.embedding_dim << "\n";
  out << "hidden_units = " << c.hidden_units << "\n";
  out << "num_layers = " << c.num_layers << "\n";
  out << "tie_embeddings = " << (c.tie_embeddings ? "true" : "false") << "\n";
  out << "dropout_keep = " << format_compact(c.dropout_keep) << "\n";
  out << "learning_rate = " << format_compact(c.learning_rate) << "\n";
  out << "lr_decay = " << format_compact(c.lr_decay) << "\n";
  out << "lr_hold_epochs = " << c.lr_hold_epochs << "\n";
  out << "grad_clip_norm = " << format_compact(c.grad_clip_norm) << "\n";
  out << "epochs = " << c.epochs << "\n";
  out << "batch_size = " << c.batch_size << "\n";
  out << "bptt_len = " << c.bptt_len << "\n";
  out << "unlikelihood_floor = " << format_compact(c.unlikelihood_floor) << "\n";
  out << "master_seed = " << c.master_seed << "\n";
  out << "include_oov_verbs = " << (c.include_oov_verbs ? "true" : "false") << "\n";
  out << "record_wall_seconds = " << (c.record_wall_seconds ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace antilm
