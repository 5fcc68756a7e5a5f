#pragma once

// end-to-end experiment driver: fit the train-split anti-model, fit the
// dev-split anti-model and materialize the static negative dev corpus, train
// one LSTM per alpha in the sweep with on-the-fly negative batches, evaluate,
// and emit metrics, reports and a hashed manifest. any stage failure writes a
// FAILED manifest naming the stage before the error propagates.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "antilm/checkpoint.hpp"
#include "antilm/corpus.hpp"
#include "antilm/eval.hpp"
#include "antilm/exp_config.hpp"
#include "antilm/lstm.hpp"
#include "antilm/ngram.hpp"
#include "antilm/report.hpp"
#include "antilm/svg.hpp"
#include "antilm/train.hpp"
#include "antilm/util.hpp"
#include "antilm/vocab.hpp"

namespace antilm {

struct RunSummary {
  std::string run_id;
  double alpha = 0.0;
  std::string metrics_rel;
  std::string checkpoint_rel;
  std::string agreement_csv_rel;   // empty when no agreement data
  std::string agreement_json_rel;
  double final_dev_ppl_pos = 0.0;
  double final_dev_ppl_neg = 0.0;
  bool has_agreement = false;
  AgreementTableRow table_row;
};

struct PipelineOutcome {
  std::string output_dir;
  std::vector<RunSummary> runs;
  std::vector<MetricRecord> metrics;
  std::vector<std::string> warnings;
};

namespace pipedetail {

struct ArtifactWriter {
  std::filesystem::path root;
  // relative path -> (bytes, hash); insertion order kept for the manifest
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::uint64_t, std::string>> entries;
  std::vector<std::string> warnings;

  void write(const std::string& rel, std::string_view content) {
    std::filesystem::path full = root / rel;
    std::filesystem::create_directories(full.parent_path());
    write_text(full.string(), content);
    if (!entries.count(rel)) order.push_back(rel);
    entries[rel] = {content.size(), hex64(fnv1a64(content))};
  }

  void warn(const std::string& msg) { warnings.push_back(msg); }
};

inline nlohmann::json manifest_json(const std::string& status, const std::string& failed_stage,
                                    const std::string& error, const std::vector<RunSummary>& runs,
                                    const ArtifactWriter& art) {
  nlohmann::json m;
  m["format"] = "antilm-manifest";
  m["version"] = 1;
  m["status"] = status;
  if (!failed_stage.empty()) m["failed_stage"] = failed_stage;
  if (!error.empty()) m["error"] = error;
  m["hash_algo"] = "fnv1a64";
  m["runs"] = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json jr;
    jr["run_id"] = r.run_id;
    jr["alpha"] = r.alpha;
    jr["metrics_csv"] = r.metrics_rel;
    jr["checkpoint"] = r.checkpoint_rel;
    if (r.has_agreement) {
      jr["agreement_csv"] = r.agreement_csv_rel;
      jr["agreement_json"] = r.agreement_json_rel;
    }
    jr["final_dev_ppl_pos"] = r.final_dev_ppl_pos;
    jr["final_dev_ppl_neg"] = r.final_dev_ppl_neg;
    jr["perplexity_gap"] = r.final_dev_ppl_neg - r.final_dev_ppl_pos;
    m["runs"].push_back(jr);
  }
  m["files"] = nlohmann::json::array();
  std::vector<std::string> sorted(art.order);
  std::sort(sorted.begin(), sorted.end());
  for (const auto& rel : sorted) {
    const auto& [bytes, hash] = art.entries.at(rel);
    m["files"].push_back({{"path", rel}, {"bytes", bytes}, {"fnv1a64", hash}});
  }
  m["warnings"] = art.warnings;
  return m;
}

inline void write_manifest(ArtifactWriter& art, const std::string& status,
                           const std::string& failed_stage, const std::string& error,
                           const std::vector<RunSummary>& runs) {
  nlohmann::json m = manifest_json(status, failed_stage, error, runs, art);
  std::filesystem::create_directories(art.root);
  write_text((art.root / "manifest.json").string(), m.dump(2) + "\n");
}

// report files from in-memory run data; used by the live pipeline and by the
// standalone report command after it has re-read runs from disk
inline void build_report_files(ArtifactWriter& art, const std::vector<RunSummary>& runs,
                               const std::vector<MetricRecord>& metrics) {
  // epoch curves, one series per run
  auto curve = [&](auto pick, const char* fname, const char* title, const char* ylabel) {
    std::vector<PlotSeries> series;
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& run : runs) {
      PlotSeries s;
      s.label = run.run_id;
      for (const auto& r : metrics)
        if (r.run_id == run.run_id) {
          double v = pick(r);
          s.points.emplace_back(static_cast<double>(r.epoch), v);
          if (first) { lo = hi = v; first = false; }
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      if (!s.points.empty()) series.push_back(std::move(s));
    }
    bool log_y = lo > 0.0 && hi / lo > 50.0;
    art.write(std::string("report/") + fname,
              line_chart_svg(title, "epoch", ylabel, series, log_y));
  };
  curve([](const MetricRecord& r) { return r.train_ppl; }, "train_ppl.svg",
        "training perplexity", "train ppl");
  curve([](const MetricRecord& r) { return r.dev_ppl_pos; }, "dev_ppl_pos.svg",
        "positive dev perplexity", "dev ppl");
  curve([](const MetricRecord& r) { return r.dev_ppl_neg; }, "dev_ppl_neg.svg",
        "negative dev perplexity", "negative dev ppl");

  // final positive vs negative perplexity per run
  std::string scatter_csv = "run_id,final_dev_ppl_pos,final_dev_ppl_neg\n";
  std::vector<PlotPoint> pts;
  double nlo = 0.0, nhi = 0.0;
  bool first = true;
  for (const auto& run : runs) {
    scatter_csv += run.run_id + "," + format_double(run.final_dev_ppl_pos, 6) + "," +
                   format_double(run.final_dev_ppl_neg, 6) + "\n";
    pts.push_back({run.run_id, run.final_dev_ppl_pos, run.final_dev_ppl_neg});
    if (first) { nlo = nhi = run.final_dev_ppl_neg; first = false; }
    nlo = std::min(nlo, run.final_dev_ppl_neg);
    nhi = std::max(nhi, run.final_dev_ppl_neg);
  }
  art.write("report/scatter.csv", scatter_csv);
  art.write("report/scatter.svg",
            scatter_svg("final dev perplexity by run", "positive dev ppl", "negative dev ppl", pts,
                        nlo > 0.0 && nhi / nlo > 50.0));

  // agreement comparison with a delta row between the first and last runs
  // that carry agreement results
  std::vector<AgreementTableRow> rows;
  for (const auto& run : runs)
    if (run.has_agreement) rows.push_back(run.table_row);
  if (!rows.empty()) {
    std::string from = rows.size() >= 2 ? rows.front().run_id : "";
    std::string to = rows.size() >= 2 ? rows.back().run_id : "";
    art.write("report/agreement_table.csv", agreement_table_csv(rows, from, to));
  }
}

}  // namespace pipedetail

inline PipelineOutcome run_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  pipedetail::ArtifactWriter art;
  art.root = cfg.output_dir;
  std::vector<RunSummary> runs;
  PipelineOutcome outcome;
  outcome.output_dir = cfg.output_dir;
  std::string stage = "setup";

  try {
    std::filesystem::create_directories(art.root);
    art.write("config_resolved.cfg", render_experiment_config(cfg));

    stage = "load_corpora";
    auto train_lines = read_lines(cfg.train_path);
    auto dev_lines = read_lines(cfg.dev_path);
    Vocabulary vocab = build_vocabulary(train_lines, cfg.min_count);
    std::size_t skipped = 0;
    Corpus train = encode_corpus(train_lines, vocab, Split::train, &skipped);
    if (skipped) art.warn("train: skipped " + std::to_string(skipped) + " empty lines");
    Corpus dev = encode_corpus(dev_lines, vocab, Split::dev, &skipped);
    if (skipped) art.warn("dev: skipped " + std::to_string(skipped) + " empty lines");
    if (!cfg.test_path.empty()) {
      // held-out split is loaded for vocabulary sanity even though the
      // pipeline reports dev numbers only
      Corpus test = encode_corpus(read_lines(cfg.test_path), vocab, Split::test, &skipped);
      if (skipped) art.warn("test: skipped " + std::to_string(skipped) + " empty lines");
    }
    std::string vocab_txt;
    for (const auto& t : vocab.tokens()) vocab_txt += t + "\n";
    art.write("vocab.txt", vocab_txt);

    std::vector<AgreementInstance> agreement;
    if (!cfg.agreement_path.empty()) {
      AgreementLoadResult ag = load_agreement_data(cfg.agreement_path, vocab);
      agreement = std::move(ag.instances);
      if (!ag.rejected.empty()) {
        art.warn("agreement: rejected " + std::to_string(ag.rejected.size()) + " rows");
        for (std::size_t i = 0; i < std::min<std::size_t>(ag.rejected.size(), 5); ++i)
          art.warn("agreement: " + ag.rejected[i]);
      }
    }

    stage = "fit_train_ngram";
    NGramModel train_ngram = NGramModel::fit(train, cfg.ngram_order);
    art.write("ngram_train.model", serialize_ngram(train_ngram, vocab));

    stage = "fit_dev_ngram";
    NGramModel dev_ngram = NGramModel::fit(dev, cfg.ngram_order);
    art.write("ngram_dev.model", serialize_ngram(dev_ngram, vocab));

    stage = "generate_negative_dev";
    RngStream neg_dev_rng = RngStream::derive(cfg.master_seed, 0x9e6d);
    Corpus neg_dev = generate_negative_corpus(dev_ngram, dev, neg_dev_rng, cfg.max_gen_len,
                                              cfg.negative_dev_mode);
    art.write("negative_dev.txt", corpus_to_text(neg_dev, vocab));

    for (double alpha : cfg.alpha_sweep) {
      std::string run_id = run_id_for_alpha(alpha);
      std::string run_dir = "runs/" + run_id + "/";
      stage = "train_" + run_id;

      LstmLm model = init_model(cfg.lm_config(), vocab.size(), vocab.fingerprint(), cfg.master_seed);
      NegativeSource source;
      source.anti_model = &train_ngram;
      Trainer trainer(model, train, source, cfg.train_config(alpha));

      std::vector<MetricRecord> run_metrics;
      for (int e = 0; e < cfg.epochs; ++e) {
        auto t0 = std::chrono::steady_clock::now();
        EpochStats stats = trainer.train_epoch();
        LstmScorer scorer(model);
        PerplexityReport dp = perplexity(scorer, dev);
        PerplexityReport dn = perplexity(scorer, neg_dev);
        auto t1 = std::chrono::steady_clock::now();

        MetricRecord r;
        r.run_id = run_id;
        r.alpha = alpha;
        r.epoch = e + 1;
        r.train_ppl = stats.train_ppl;
        r.dev_ppl_pos = dp.perplexity;
        r.dev_ppl_neg = dn.perplexity;
        r.mean_negative_loss = stats.mean_negative_loss;
        r.wall_seconds = cfg.record_wall_seconds
                             ? std::chrono::duration<double>(t1 - t0).count()
                             : 0.0;
        run_metrics.push_back(r);
        outcome.metrics.push_back(r);
      }
      art.write(run_dir + "metrics.csv", metrics_csv(run_metrics));

      stage = "evaluate_" + run_id;
      RunSummary rs;
      rs.run_id = run_id;
      rs.alpha = alpha;
      rs.metrics_rel = run_dir + "metrics.csv";
      rs.checkpoint_rel = run_dir + "checkpoint.bin";
      art.write(rs.checkpoint_rel, serialize_checkpoint(model, vocab));
      if (!run_metrics.empty()) {
        rs.final_dev_ppl_pos = run_metrics.back().dev_ppl_pos;
        rs.final_dev_ppl_neg = run_metrics.back().dev_ppl_neg;
      } else {
        LstmScorer scorer(model);
        rs.final_dev_ppl_pos = perplexity(scorer, dev).perplexity;
        rs.final_dev_ppl_neg = perplexity(scorer, neg_dev).perplexity;
      }
      if (!agreement.empty()) {
        LstmScorer scorer(model);
        AgreementReport ar = agreement_error_rates(scorer, agreement, cfg.include_oov_verbs);
        rs.has_agreement = true;
        rs.agreement_csv_rel = run_dir + "agreement.csv";
        rs.agreement_json_rel = run_dir + "agreement.json";
        rs.table_row = table_row_from_report(run_id, ar);
        art.write(rs.agreement_csv_rel, agreement_report_csv(ar));
        art.write(rs.agreement_json_rel, agreement_report_json(ar));
      }
      runs.push_back(std::move(rs));
    }

    stage = "report";
    std::string all_csv = metrics_csv(outcome.metrics);
    art.write("metrics_all.csv", all_csv);
    pipedetail::build_report_files(art, runs, outcome.metrics);

    stage = "manifest";
    pipedetail::write_manifest(art, "complete", "", "", runs);
  } catch (const std::exception& e) {
    pipedetail::write_manifest(art, "failed", stage, e.what(), runs);
    throw std::runtime_error("pipeline failed at stage '" + stage + "': " + e.what());
  }

  outcome.runs = runs;
  outcome.warnings = art.warnings;
  return outcome;
}

// regenerate report/* for an existing output directory from its manifest;
// missing per-run files downgrade to warnings and the report covers the rest
inline std::vector<std::string> emit_report(const std::string& output_dir) {
  namespace fs = std::filesystem;
  fs::path root = output_dir;
  fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path))
    throw std::runtime_error("no manifest.json under " + output_dir);
  nlohmann::json m = nlohmann::json::parse(read_text(manifest_path.string()));

  pipedetail::ArtifactWriter art;
  art.root = root;
  // keep existing manifest entries; report writes replace their own
  for (const auto& f : m.value("files", nlohmann::json::array())) {
    std::string rel = f.at("path").get<std::string>();
    art.order.push_back(rel);
    art.entries[rel] = {f.at("bytes").get<std::uint64_t>(), f.at("fnv1a64").get<std::string>()};
  }
  for (const auto& w : m.value("warnings", nlohmann::json::array()))
    art.warnings.push_back(w.get<std::string>());

  std::vector<RunSummary> runs;
  std::vector<MetricRecord> metrics;
  for (const auto& jr : m.value("runs", nlohmann::json::array())) {
    RunSummary rs;
    rs.run_id = jr.at("run_id").get<std::string>();
    rs.alpha = jr.at("alpha").get<double>();
    rs.metrics_rel = jr.at("metrics_csv").get<std::string>();
    rs.checkpoint_rel = jr.value("checkpoint", "");
    rs.final_dev_ppl_pos = jr.value("final_dev_ppl_pos", 0.0);
    rs.final_dev_ppl_neg = jr.value("final_dev_ppl_neg", 0.0);
    fs::path mcsv = root / rs.metrics_rel;
    if (!fs::exists(mcsv)) {
      art.warn("report: metrics missing for run " + rs.run_id + "; skipped");
      continue;
    }
    for (auto& r : parse_metrics_csv(read_lines(mcsv.string()))) metrics.push_back(r);
    if (jr.contains("agreement_csv")) {
      rs.agreement_csv_rel = jr.at("agreement_csv").get<std::string>();
      fs::path acsv = root / rs.agreement_csv_rel;
      if (fs::exists(acsv)) {
        // per-run agreement files carry raw rates; convert to table percents
        auto lines = read_lines(acsv.string());
        AgreementTableRow row;
        row.run_id = rs.run_id;
        row.rates_percent.assign(kAgreementTableColumns, 0.0);
        for (std::size_t i = 1; i < lines.size(); ++i) {
          auto f = split_on(lines[i], ',');
          if (f.size() != 4) continue;
          if (f[0] == "6+") continue;
          int b = static_cast<int>(parse_int(f[0], "bucket"));
          if (b >= 0 && b < kAgreementTableColumns)
            row.rates_percent[static_cast<std::size_t>(b)] = parse_double(f[3], "rate") * 100.0;
        }
        rs.has_agreement = true;
        rs.table_row = std::move(row);
      } else {
        art.warn("report: agreement results missing for run " + rs.run_id);
      }
    }
    runs.push_back(std::move(rs));
  }

  pipedetail::build_report_files(art, runs, metrics);
  std::string status = m.value("status", "complete");
  pipedetail::write_manifest(art, status, m.value("failed_stage", ""), m.value("error", ""), runs);
  return art.warnings;
}

}  // namespace antilm
