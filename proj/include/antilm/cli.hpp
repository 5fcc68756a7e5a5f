#pragma once

// command line front end. subcommands map one-to-one onto library
// operations; flags mirror the experiment config keys. exit codes: 0 ok,
// 1 usage error, 2 runtime failure. ANTILM_OUTPUT_ROOT supplies a default
// output directory when neither flag nor config names one.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "antilm/checkpoint.hpp"
#include "antilm/corpus.hpp"
#include "antilm/eval.hpp"
#include "antilm/exp_config.hpp"
#include "antilm/ngram.hpp"
#include "antilm/pipeline.hpp"
#include "antilm/report.hpp"
#include "antilm/train.hpp"
#include "antilm/util.hpp"
#include "antilm/vocab.hpp"

namespace antilm {

namespace clidetail {

inline std::string env_output_root() {
  const char* v = std::getenv("ANTILM_OUTPUT_ROOT");
  return v ? std::string(v) : std::string();
}

inline void cmd_fit_ngram(const std::string& input, const std::string& out, int order,
                          int min_count) {
  auto lines = read_lines(input);
  Vocabulary vocab = build_vocabulary(lines, min_count);
  std::size_t skipped = 0;
  Corpus corpus = encode_corpus(lines, vocab, Split::train, &skipped);
  if (skipped) std::cerr << "warning: skipped " << skipped << " empty lines in " << input << "\n";
  NGramModel model = NGramModel::fit(corpus, order);
  save_ngram(model, vocab, out);
  std::size_t contexts = 0;
  for (const auto& t : model.tables()) contexts += t.size();
  std::cout << "fit order-" << order << " ngram on " << corpus.sentences.size() << " sentences, "
            << contexts << " contexts, vocab " << vocab.size() << " -> " << out << "\n";
}

inline void cmd_gen_negative(const std::string& model_path, const std::string& input,
                             const std::string& out, std::uint64_t seed, int max_len,
                             const std::string& mode) {
  LoadedNgram loaded = load_ngram(model_path);
  auto lines = read_lines(input);
  std::size_t skipped = 0;
  Corpus positive = encode_corpus(lines, loaded.vocab, Split::dev, &skipped);
  if (skipped) std::cerr << "warning: skipped " << skipped << " empty lines in " << input << "\n";
  RngStream rng = RngStream::derive(seed, 0x9e6d);
  Corpus negative = generate_negative_corpus(loaded.model, positive, rng, max_len,
                                             negative_dev_mode_from_string(mode));
  write_text(out, corpus_to_text(negative, loaded.vocab));
  std::cout << "generated " << negative.sentences.size() << " negative sentences -> " << out << "\n";
}

inline void cmd_train(const std::string& config_path, double alpha, bool alpha_given,
                      const std::string& out_ckpt, const std::string& metrics_out) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (cfg.output_dir.empty()) cfg.output_dir = env_output_root();
  if (cfg.output_dir.empty()) cfg.output_dir = ".";  // train writes no run directory itself
  cfg.validate();
  double run_alpha = alpha_given ? alpha : cfg.alpha_sweep.front();

  auto train_lines = read_lines(cfg.train_path);
  auto dev_lines = read_lines(cfg.dev_path);
  Vocabulary vocab = build_vocabulary(train_lines, cfg.min_count);
  Corpus train = encode_corpus(train_lines, vocab, Split::train);
  Corpus dev = encode_corpus(dev_lines, vocab, Split::dev);
  NGramModel train_ngram = NGramModel::fit(train, cfg.ngram_order);
  NGramModel dev_ngram = NGramModel::fit(dev, cfg.ngram_order);
  RngStream neg_rng = RngStream::derive(cfg.master_seed, 0x9e6d);
  Corpus neg_dev =
      generate_negative_corpus(dev_ngram, dev, neg_rng, cfg.max_gen_len, cfg.negative_dev_mode);

  LstmLm model = init_model(cfg.lm_config(), vocab.size(), vocab.fingerprint(), cfg.master_seed);
  NegativeSource source;
  source.anti_model = &train_ngram;
  Trainer trainer(model, train, source, cfg.train_config(run_alpha));
  std::string run_id = run_id_for_alpha(run_alpha);
  std::vector<MetricRecord> records;
  for (int e = 0; e < cfg.epochs; ++e) {
    EpochStats stats = trainer.train_epoch();
    LstmScorer scorer(model);
    MetricRecord r;
    r.run_id = run_id;
    r.alpha = run_alpha;
    r.epoch = e + 1;
    r.train_ppl = stats.train_ppl;
    r.dev_ppl_pos = perplexity(scorer, dev).perplexity;
    r.dev_ppl_neg = perplexity(scorer, neg_dev).perplexity;
    r.mean_negative_loss = stats.mean_negative_loss;
    records.push_back(r);
    std::cout << format_metric_row(r) << "\n";
  }
  save_checkpoint(model, vocab, out_ckpt);
  if (!metrics_out.empty()) write_text(metrics_out, metrics_csv(records));
  std::cout << "checkpoint -> " << out_ckpt << "\n";
}

inline void cmd_eval_ppl(const std::string& model_path, const std::string& data_path,
                         const std::string& negative_path) {
  LoadedCheckpoint ck = load_checkpoint(model_path);
  std::size_t skipped = 0;
  Corpus data = encode_corpus(read_lines(data_path), ck.vocab, Split::dev, &skipped);
  LstmScorer scorer(ck.model);
  PerplexityReport pos = perplexity(scorer, data);
  std::cout << "split=data tokens=" << pos.token_count << " mean_nll="
            << format_double(pos.mean_nll, 6) << " ppl=" << format_double(pos.perplexity, 6) << "\n";
  if (!negative_path.empty()) {
    Corpus neg = encode_corpus(read_lines(negative_path), ck.vocab, Split::negative_dev, &skipped);
    PerplexityReport nr = perplexity(scorer, neg);
    std::cout << "split=negative tokens=" << nr.token_count << " mean_nll="
              << format_double(nr.mean_nll, 6) << " ppl=" << format_double(nr.perplexity, 6) << "\n";
    std::cout << "gap=" << format_double(nr.perplexity - pos.perplexity, 6) << "\n";
  }
}

inline void cmd_eval_agreement(const std::string& model_path, const std::string& data_path,
                               bool include_oov, const std::string& out_csv,
                               const std::string& out_json) {
  LoadedCheckpoint ck = load_checkpoint(model_path);
  AgreementLoadResult ag = load_agreement_data(data_path, ck.vocab);
  for (const auto& r : ag.rejected) std::cerr << "warning: " << r << "\n";
  LstmScorer scorer(ck.model);
  AgreementReport rep = agreement_error_rates(scorer, ag.instances, include_oov);
  std::string csv = agreement_report_csv(rep);
  std::cout << csv;
  if (rep.skipped_oov)
    std::cerr << "note: skipped " << rep.skipped_oov << " instances with out-of-vocabulary verbs\n";
  if (!out_csv.empty()) write_text(out_csv, csv);
  if (!out_json.empty()) write_text(out_json, agreement_report_json(rep));
}

inline void cmd_run_all(const std::string& config_path, const std::string& output_override) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (!output_override.empty()) cfg.output_dir = output_override;
  if (cfg.output_dir.empty()) cfg.output_dir = env_output_root();
  PipelineOutcome outcome = run_pipeline(cfg);
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& r : outcome.runs)
    std::cout << r.run_id << ": dev_ppl_pos=" << format_double(r.final_dev_ppl_pos, 6)
              << " dev_ppl_neg=" << format_double(r.final_dev_ppl_neg, 6)
              << " gap=" << format_double(r.final_dev_ppl_neg - r.final_dev_ppl_pos, 6) << "\n";
  std::cout << "manifest: " << outcome.output_dir << "/manifest.json\n";
}

inline void cmd_report(const std::string& output_dir_flag) {
  std::string dir = !output_dir_flag.empty() ? output_dir_flag : env_output_root();
  if (dir.empty()) throw std::runtime_error("report: no output directory given (flag or ANTILM_OUTPUT_ROOT)");
  auto warnings = emit_report(dir);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "report written under " << dir << "/report\n";
}

}  // namespace clidetail

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"anti-modeling toolkit: fit flawed n-gram anti-models, sample negative data, "
               "train LSTM language models with an unlikelihood term, and evaluate them"};
  app.require_subcommand(1);

  // fit-ngram
  std::string fn_input, fn_out;
  int fn_order = 3, fn_min_count = 1;
  auto* fit = app.add_subcommand("fit-ngram", "fit an unsmoothed MLE n-gram to a text corpus");
  fit->add_option("--input", fn_input, "training text, one sentence per line")->required();
  fit->add_option("--out", fn_out, "output model file")->required();
  fit->add_option("--order", fn_order, "n-gram order (1-8)");
  fit->add_option("--min-count", fn_min_count, "minimum token frequency for the vocabulary");
  fit->callback([&] { clidetail::cmd_fit_ngram(fn_input, fn_out, fn_order, fn_min_count); });

  // gen-negative
  std::string gn_model, gn_input, gn_out, gn_mode = "per_sentence_seeded";
  std::uint64_t gn_seed = 12345;
  int gn_max_len = kDefaultMaxGenLen;
  auto* gen = app.add_subcommand("gen-negative", "sample a negative corpus from an anti-model");
  gen->add_option("--model", gn_model, "fitted n-gram model file")->required();
  gen->add_option("--input", gn_input, "positive text supplying seeding contexts")->required();
  gen->add_option("--out", gn_out, "output text file")->required();
  gen->add_option("--seed", gn_seed, "rng seed");
  gen->add_option("--max-len", gn_max_len, "sentence length cap");
  gen->add_option("--mode", gn_mode, "per_sentence_seeded | single_pass");
  gen->callback(
      [&] { clidetail::cmd_gen_negative(gn_model, gn_input, gn_out, gn_seed, gn_max_len, gn_mode); });

  // train
  std::string tr_config, tr_out, tr_metrics;
  double tr_alpha = 0.0;
  auto* train = app.add_subcommand("train", "train one model from an experiment config");
  train->add_option("--config", tr_config, "experiment config file")->required();
  auto* alpha_opt = train->add_option("--alpha", tr_alpha, "negative-term weight (default: first sweep value)");
  train->add_option("--out", tr_out, "checkpoint output path")->required();
  train->add_option("--metrics", tr_metrics, "optional per-epoch metrics csv");
  train->callback([&] {
    clidetail::cmd_train(tr_config, tr_alpha, alpha_opt->count() > 0, tr_out, tr_metrics);
  });

  // eval-ppl
  std::string ep_model, ep_data, ep_negative;
  auto* evalppl = app.add_subcommand("eval-ppl", "perplexity of a checkpoint on text (and gap)");
  evalppl->add_option("--model", ep_model, "checkpoint file")->required();
  evalppl->add_option("--data", ep_data, "positive text")->required();
  evalppl->add_option("--negative", ep_negative, "negative text for the gap");
  evalppl->callback([&] { clidetail::cmd_eval_ppl(ep_model, ep_data, ep_negative); });

  // eval-agreement
  std::string ea_model, ea_data, ea_out, ea_json;
  bool ea_oov = false;
  auto* evalag = app.add_subcommand("eval-agreement", "subject-verb agreement error rates");
  evalag->add_option("--model", ea_model, "checkpoint file")->required();
  evalag->add_option("--data", ea_data, "agreement TSV")->required();
  evalag->add_flag("--include-oov", ea_oov, "score instances whose verb is out of vocabulary");
  evalag->add_option("--out", ea_out, "write the CSV report here too");
  evalag->add_option("--json", ea_json, "write the JSON report here too");
  evalag->callback([&] { clidetail::cmd_eval_agreement(ea_model, ea_data, ea_oov, ea_out, ea_json); });

  // run-all
  std::string ra_config, ra_outdir;
  auto* runall = app.add_subcommand("run-all", "full pipeline: anti-models, negative dev, sweep, report");
  runall->add_option("--config", ra_config, "experiment config file")->required();
  runall->add_option("--output-dir", ra_outdir, "override the config output_dir");
  runall->callback([&] { clidetail::cmd_run_all(ra_config, ra_outdir); });

  // report
  std::string rp_dir;
  auto* report = app.add_subcommand("report", "regenerate report files from a run directory");
  report->add_option("--output-dir", rp_dir, "pipeline output directory");
  report->callback([&] { clidetail::cmd_report(rp_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help or error text
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

inline int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("antilm");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace antilm
