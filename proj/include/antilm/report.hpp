#pragma once

// metric records, their CSV encoding, and the run-comparison tables. run ids
// follow the sweep convention: "nll" for alpha = 0, "nll-neg-<alpha>"
// otherwise. the agreement comparison table carries percent error rates at
// one decimal and a delta row (second run minus first) computed from the
// rounded values, matching how such tables are normally presented.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "antilm/eval.hpp"
#include "antilm/util.hpp"

namespace antilm {

inline constexpr const char* kMetricsCsvHeader =
    "run_id,alpha,epoch,train_ppl,dev_ppl_pos,dev_ppl_neg,mean_negative_loss,wall_seconds";

struct MetricRecord {
  std::string run_id;
  double alpha = 0.0;
  int epoch = 0;  // 1-based in the CSV
  double train_ppl = 0.0;
  double dev_ppl_pos = 0.0;
  double dev_ppl_neg = 0.0;
  double mean_negative_loss = 0.0;
  double wall_seconds = 0.0;
};

inline std::string run_id_for_alpha(double alpha) {
  return alpha == 0.0 ? "nll" : "nll-neg-" + format_compact(alpha);
}

inline std::string format_metric_row(const MetricRecord& r) {
  std::ostringstream out;
  out << r.run_id << "," << format_compact(r.alpha) << "," << r.epoch << ","
      << format_double(r.train_ppl, 6) << "," << format_double(r.dev_ppl_pos, 6) << ","
      << format_double(r.dev_ppl_neg, 6) << "," << format_double(r.mean_negative_loss, 6) << ","
      << format_double(r.wall_seconds, 3);
  return out.str();
}

inline std::string metrics_csv(const std::vector<MetricRecord>& records) {
  std::string out{kMetricsCsvHeader};
  out += "\n";
  for (const auto& r : records) {
    out += format_metric_row(r);
    out += "\n";
  }
  return out;
}

inline std::vector<MetricRecord> parse_metrics_csv(const std::vector<std::string>& lines) {
  if (lines.empty() || lines[0] != kMetricsCsvHeader)
    throw std::runtime_error("metrics csv: missing or wrong header");
  std::vector<MetricRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto f = split_on(lines[i], ',');
    if (f.size() != 8) throw std::runtime_error("metrics csv: bad row " + std::to_string(i + 1));
    MetricRecord r;
    r.run_id = f[0];
    r.alpha = parse_double(f[1], "alpha");
    r.epoch = static_cast<int>(parse_int(f[2], "epoch"));
    r.train_ppl = parse_double(f[3], "train_ppl");
    r.dev_ppl_pos = parse_double(f[4], "dev_ppl_pos");
    r.dev_ppl_neg = parse_double(f[5], "dev_ppl_neg");
    r.mean_negative_loss = parse_double(f[6], "mean_negative_loss");
    r.wall_seconds = parse_double(f[7], "wall_seconds");
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// agreement comparison table: attr=0..5 columns, percent error rates

struct AgreementTableRow {
  std::string run_id;
  std::vector<double> rates_percent;  // one per attractor column, already in percent
};

inline constexpr int kAgreementTableColumns = 6;  // attr = 0..5

inline double round1(double v) { return std::round(v * 10.0) / 10.0; }

// delta between two presented rows, computed on the one-decimal values the
// table itself shows so the delta row is consistent with the printed rates
inline std::vector<double> delta_row(const std::vector<double>& from,
                                     const std::vector<double>& to) {
  if (from.size() != to.size()) throw std::invalid_argument("delta rows differ in width");
  std::vector<double> d;
  d.reserve(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) d.push_back(round1(to[i]) - round1(from[i]));
  return d;
}

inline std::string format_rate1(double v) {
  std::string s = format_double(v, 1);
  return s == "-0.0" ? "0.0" : s;
}

inline AgreementTableRow table_row_from_report(const std::string& run_id,
                                               const AgreementReport& rep) {
  AgreementTableRow row;
  row.run_id = run_id;
  for (int b = 0; b < kAgreementTableColumns; ++b)
    row.rates_percent.push_back(rep.buckets[static_cast<std::size_t>(b)].error_rate * 100.0);
  return row;
}

// rows as given plus, when delta_from/delta_to name present rows, a final
// "delta" row = rates(delta_to) - rates(delta_from) per column
inline std::string agreement_table_csv(const std::vector<AgreementTableRow>& rows,
                                       const std::string& delta_from = "",
                                       const std::string& delta_to = "") {
  std::ostringstream out;
  out << "run_id";
  for (int b = 0; b < kAgreementTableColumns; ++b) out << ",attr" << b;
  out << "\n";
  const AgreementTableRow* from = nullptr;
  const AgreementTableRow* to = nullptr;
  for (const auto& row : rows) {
    if (static_cast<int>(row.rates_percent.size()) != kAgreementTableColumns)
      throw std::invalid_argument("agreement table row has wrong width");
    out << row.run_id;
    for (double v : row.rates_percent) out << "," << format_rate1(v);
    out << "\n";
    if (row.run_id == delta_from) from = &row;
    if (row.run_id == delta_to) to = &row;
  }
  if (from && to && from != to) {
    out << "delta";
    for (double v : delta_row(from->rates_percent, to->rates_percent)) out << "," << format_rate1(v);
    out << "\n";
  }
  return out.str();
}

inline std::vector<AgreementTableRow> parse_agreement_table_csv(
    const std::vector<std::string>& lines) {
  if (lines.empty()) throw std::runtime_error("agreement table csv: empty");
  std::vector<AgreementTableRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto f = split_on(lines[i], ',');
    if (static_cast<int>(f.size()) != kAgreementTableColumns + 1)
      throw std::runtime_error("agreement table csv: bad row " + std::to_string(i + 1));
    AgreementTableRow row;
    row.run_id = f[0];
    for (int b = 1; b <= kAgreementTableColumns; ++b)
      row.rates_percent.push_back(parse_double(f[static_cast<std::size_t>(b)], "rate"));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace antilm
