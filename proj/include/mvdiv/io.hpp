#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvdiv/two_sample.hpp"

// File formats: delimited text for observations and ROC curves, JSON for
// Gaussian summaries and structured results. Numbers are written with
// shortest round-trip formatting, so write -> read is exact.
namespace mvdiv {

struct DatasetCsv {
  std::string path;
  bool has_header = false;
  // 0-based index of a label column; rows are grouped by its value.
  std::optional<Index> class_column;
  char delimiter = ',';
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto issp = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
  };
  while (!s.empty() && issp(s.front())) s.remove_prefix(1);
  while (!s.empty() && issp(s.back())) s.remove_suffix(1);
  return s;
}

// Splits delimiter-separated text into records of fields. Quoted fields may
// contain the delimiter, doubled quotes and newlines (RFC 4180 style);
// carriage returns outside quotes are stripped.
inline std::vector<std::vector<std::string>> parse_delimited(
    std::string_view text, char delimiter) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any_in_record = false;
  const auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
  };
  const auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
    any_in_record = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        any_in_record = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        if (c == delimiter) {
          end_field();
          any_in_record = true;
        } else {
          field += c;
          any_in_record = true;
        }
    }
  }
  if (in_quotes)
    throw ParseError("unterminated quoted field at end of input",
                     static_cast<long>(records.size()) + 1, 0);
  if (any_in_record || !field.empty() || !record.empty()) end_record();
  return records;
}

inline bool blank_record(const std::vector<std::string>& record) {
  return record.size() == 1 && trim(record[0]).empty();
}

inline double parse_field_double(std::string_view raw, long row, long col) {
  const std::string_view s = trim(raw);
  if (s.empty())
    throw ParseError("empty numeric field", row, col);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    std::ostringstream os;
    os << "cannot parse '" << std::string(s) << "' as a number";
    throw ParseError(os.str(), row, col);
  }
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "non-finite value '" << std::string(s) << "'";
    throw ParseError(os.str(), row, col);
  }
  return value;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path, 0, 0);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace detail

// Loads a delimited dataset and groups rows by the label column (all rows
// under the empty label when no column is given). Groups keep first-
// appearance order. Row/column numbers in errors are 1-based file positions.
inline std::vector<std::pair<std::string, Sampled>> load_csv(
    const DatasetCsv& config) {
  const std::string text = detail::read_text_file(config.path);
  const auto records = detail::parse_delimited(text, config.delimiter);

  std::vector<std::string> labels;
  std::vector<std::vector<std::vector<double>>> groups;
  std::size_t arity = 0;
  long arity_row = 0;
  bool header_skipped = !config.has_header;

  for (std::size_t rec = 0; rec < records.size(); ++rec) {
    const auto& record = records[rec];
    const long row = static_cast<long>(rec) + 1;
    if (detail::blank_record(record)) continue;
    if (arity == 0) {
      arity = record.size();
      arity_row = row;
      if (config.class_column &&
          (*config.class_column < 0 ||
           *config.class_column >= static_cast<Index>(arity))) {
        std::ostringstream os;
        os << "class column " << *config.class_column
           << " out of range for " << arity << " columns";
        throw ParameterError(os.str());
      }
      if (arity - (config.class_column ? 1 : 0) < 1)
        throw ParseError("no numeric columns in file", row, 1);
    } else if (record.size() != arity) {
      std::ostringstream os;
      os << "row has " << record.size() << " fields, expected " << arity
         << " (as in row " << arity_row << ")";
      throw InconsistentArityError(os.str(), row,
                                   static_cast<long>(record.size()));
    }
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }

    std::string label;
    std::vector<double> values;
    values.reserve(arity);
    for (std::size_t c = 0; c < record.size(); ++c) {
      if (config.class_column &&
          static_cast<Index>(c) == *config.class_column) {
        label = std::string(detail::trim(record[c]));
      } else {
        values.push_back(detail::parse_field_double(
            record[c], row, static_cast<long>(c) + 1));
      }
    }

    std::size_t g = 0;
    for (; g < labels.size(); ++g)
      if (labels[g] == label) break;
    if (g == labels.size()) {
      labels.push_back(label);
      groups.emplace_back();
    }
    groups[g].push_back(std::move(values));
  }

  if (labels.empty())
    throw EmptyInputError("no data rows in file: " + config.path);

  std::vector<std::pair<std::string, Sampled>> out;
  out.reserve(labels.size());
  for (std::size_t g = 0; g < labels.size(); ++g) {
    const auto& rows = groups[g];
    Matrixd data(static_cast<Index>(rows.size()),
                 static_cast<Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        data(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    out.emplace_back(labels[g], Sampled(std::move(data)));
  }
  return out;
}

// Loads a plain (label-free) dataset as one sample.
inline Sampled load_sample_csv(const DatasetCsv& config) {
  DatasetCsv plain = config;
  plain.class_column.reset();
  return std::move(load_csv(plain).front().second);
}

// ---------------------------------------------------------------------------
// Gaussian summaries as JSON: {"mean": [...], "cov": [[...], ...]}.

inline GaussianSummaryd summary_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("mean") || !j.contains("cov"))
    throw ParseError(
        "summary JSON must be an object with 'mean' and 'cov' fields");
  const auto& jm = j.at("mean");
  const auto& jc = j.at("cov");
  if (!jm.is_array() || jm.empty())
    throw ParseError("'mean' must be a non-empty array of numbers");
  if (!jc.is_array() || jc.size() != jm.size())
    throw ParseError("'cov' must be an array of rows, one per mean entry");
  const Index d = static_cast<Index>(jm.size());
  Vectord mean(d);
  Matrixd cov(d, d);
  for (Index i = 0; i < d; ++i) {
    const auto& entry = jm.at(static_cast<std::size_t>(i));
    if (!entry.is_number())
      throw ParseError("'mean' entries must be numbers", 0,
                       static_cast<long>(i) + 1);
    mean(i) = entry.get<double>();
    const auto& row = jc.at(static_cast<std::size_t>(i));
    if (!row.is_array() || row.size() != jm.size())
      throw ParseError("'cov' rows must all have the same length as 'mean'",
                       static_cast<long>(i) + 1, 0);
    for (Index k = 0; k < d; ++k) {
      const auto& cell = row.at(static_cast<std::size_t>(k));
      if (!cell.is_number())
        throw ParseError("'cov' entries must be numbers",
                         static_cast<long>(i) + 1, static_cast<long>(k) + 1);
      cov(i, k) = cell.get<double>();
    }
  }
  return GaussianSummaryd(std::move(mean), SymMatrixd(std::move(cov)));
}

inline nlohmann::json summary_to_json(const GaussianSummaryd& summary) {
  nlohmann::json j;
  j["mean"] = std::vector<double>(
      summary.mean.data(), summary.mean.data() + summary.mean.size());
  auto rows = nlohmann::json::array();
  const Matrixd& cov = summary.cov.mat();
  for (Index i = 0; i < cov.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(cov.cols()));
    for (Index k = 0; k < cov.cols(); ++k)
      row[static_cast<std::size_t>(k)] = cov(i, k);
    rows.push_back(row);
  }
  j["cov"] = std::move(rows);
  return j;
}

inline GaussianSummaryd read_summary_json(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return summary_from_json(j);
}

inline void write_summary_json(const std::string& path,
                               const GaussianSummaryd& summary) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << summary_to_json(summary).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Number formatting and ROC curves.

inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

inline void write_roc_csv(std::ostream& os, const RocCurve& curve) {
  os << "threshold,fpr,tpr\n";
  for (const auto& point : curve.points)
    os << format_double(point.threshold) << ',' << format_double(point.fpr)
       << ',' << format_double(point.tpr) << '\n';
}

inline void write_roc_csv(const std::string& path, const RocCurve& curve) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  write_roc_csv(out, curve);
}

// ---------------------------------------------------------------------------
// Result serialization. Non-finite numbers become JSON null when dumped.

inline nlohmann::json distance_spec_json(const DistanceSpec& spec) {
  nlohmann::json j;
  j["family"] = family_name(spec.family());
  if (family_has_parameter(spec.family()))
    j["parameter"] = spec.parameter();
  else
    j["parameter"] = nullptr;
  j["label"] = spec.describe();
  return j;
}

inline nlohmann::json param_table_json(const std::vector<ParamAuc>& table) {
  auto rows = nlohmann::json::array();
  for (const auto& row : table) {
    nlohmann::json r;
    r["param"] = row.param;
    r["feasible"] = row.feasible;
    if (row.feasible)
      r["auc"] = row.auc;
    else
      r["auc"] = nullptr;
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json selection_json(const SelectionResult& selection) {
  nlohmann::json j;
  j["best_param"] = selection.best_param;
  j["table"] = param_table_json(selection.table);
  return j;
}

inline nlohmann::json test_result_json(const TestResult& result,
                                       const DistanceSpec& spec) {
  nlohmann::json j;
  j["distance"] = distance_spec_json(spec);
  j["statistic"] = result.statistic;
  j["tau"] = result.tau;
  j["reject"] = result.reject;
  j["n_effective"] = result.n_effective;
  j["m_effective"] = result.m_effective;
  j["dropped_pairs"] = result.dropped_pairs;
  j["total_pairs"] = result.total_pairs;
  if (result.selected_param) j["selected_param"] = *result.selected_param;
  if (result.auc_by_param)
    j["auc_by_param"] = param_table_json(*result.auc_by_param);
  return j;
}

inline nlohmann::json sim_rows_json(const std::vector<SimRow>& rows) {
  auto out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json r;
    r["distance"] = distance_spec_json(row.spec);
    r["auc"] = row.auc;
    r["fp_rate"] = row.fp_rate;
    r["tp_rate"] = row.tp_rate;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mvdiv
