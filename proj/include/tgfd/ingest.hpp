// Copyright 2026 The tgfd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/** @file ingest.hpp Turn trace/metric/log/injection tables into labeled windows.
 *
 * Inputs are delimiter-separated tables; which column holds which field is
 * given by a JSON column map, so no particular capture layout is hard coded.
 *
 * Time is cut into fixed-width bins starting at the earliest timestamp in
 * the capture. Per bin:
 *   - a call edge (parent service -> child service) is emitted for every
 *     child span whose parent span belongs to another service,
 *   - metric channels are averaged per service, missing values carry the
 *     previous bin forward (0 before the first observation),
 *   - the special channel "log_count" counts log lines per service.
 * Consecutive bins are then grouped into windows (length/stride), channels
 * are z-scored with statistics from the training windows only, and windows
 * are labeled from the injection intervals they overlap.
 */

#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tgfd/error.hpp"
#include "tgfd/graphseq.hpp"

namespace tgfd {

// ---------------------------------------------------------------------------
// Tables

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
};

/// One record per line; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_record(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline Table parse_table(std::istream& in, char delim = ',') {
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (first) {
      t.header = split_record(line, delim);
      first = false;
    } else {
      t.rows.push_back(split_record(line, delim));
    }
  }
  return t;
}

inline Table read_table(const std::string& path, char delim = ',') {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_table(in, delim);
}

// ---------------------------------------------------------------------------
// Timestamps

/// Seconds since the epoch. Accepts plain numbers (scaled by `numeric_scale`,
/// e.g. 1e-3 for milliseconds) or "YYYY-MM-DD[ T]HH:MM:SS[.fff|,fff][Z]" as UTC.
inline std::optional<double> parse_timestamp(const std::string& raw, double numeric_scale = 1.0) {
  const auto b = raw.find_first_not_of(" \t");
  if (b == std::string::npos) return std::nullopt;
  const auto e = raw.find_last_not_of(" \t");
  const std::string s = raw.substr(b, e - b + 1);

  double num = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), num);
  if (ec == std::errc() && ptr == s.data() + s.size()) {
    if (!std::isfinite(num)) return std::nullopt;
    return num * numeric_scale;
  }

  int y, mo, d, h, mi;
  double sec;
  char sep;
  std::string tail = s;
  std::replace(tail.begin(), tail.end(), ',', '.');
  if (!tail.empty() && tail.back() == 'Z') tail.pop_back();
  int consumed = 0;
  if (std::sscanf(tail.c_str(), "%4d-%2d-%2d%c%2d:%2d:%lf%n", &y, &mo, &d, &sep, &h, &mi, &sec, &consumed) != 7 ||
      static_cast<std::size_t>(consumed) != tail.size() || (sep != ' ' && sep != 'T')) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(mo)),
                                        std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec >= 61) return std::nullopt;
  const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + sec;
}

// ---------------------------------------------------------------------------
// Records

struct SpanRecord {
  double timestamp = 0;
  std::string service;
  std::string trace_id;
  std::string span_id;
  std::string parent_span_id;  // empty for a root span
  bool failed = false;
};

struct MetricRecord {
  double timestamp = 0;
  std::string service;
  std::string metric;
  double value = 0;
};

struct LogRecord {
  double timestamp = 0;
  std::string service;
};

struct InjectionRecord {
  double start = 0;
  double end = 0;
  std::string target_service;
  std::size_t fault_class = 0;
};

/// Rows dropped while parsing, by reason.
struct SkipReport {
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> reasons;

  void add(const std::string& why) {
    ++skipped;
    ++reasons[why];
  }
};

template <class T>
struct Parsed {
  std::vector<T> records;
  SkipReport report;
};

struct SpanColumns {
  std::string timestamp = "timestamp";
  std::string service = "service";
  std::string trace_id = "trace_id";
  std::string span_id = "span_id";
  std::string parent_span_id = "parent_span_id";
  /// Optional status column; a row is a failure when its value is in failure_values.
  std::string status;
  std::vector<std::string> failure_values = {"error", "ERROR", "failure", "false", "500"};
  double timestamp_scale = 1.0;
};

struct MetricColumns {
  std::string timestamp = "timestamp";
  std::string service = "service";
  std::string metric = "metric";
  std::string value = "value";
  double timestamp_scale = 1.0;
};

struct LogColumns {
  std::string timestamp = "timestamp";
  std::string service = "service";
  double timestamp_scale = 1.0;
};

struct InjectionColumns {
  std::string start = "start";
  std::string end = "end";
  std::string service = "service";
  std::string fault_class = "class";
  double timestamp_scale = 1.0;
};

namespace ingest_detail {

inline std::size_t require(const Table& t, const std::string& col, const char* what) {
  auto c = t.column(col);
  if (!c) throw ValidationError(std::string(what) + ": mapped column '" + col + "' not in table header");
  return *c;
}

inline const std::string* cell(const std::vector<std::string>& row, std::size_t c) {
  return c < row.size() ? &row[c] : nullptr;
}

}  // namespace ingest_detail

inline Parsed<SpanRecord> parse_spans(const Table& t, const SpanColumns& cols) {
  using namespace ingest_detail;
  const std::size_t c_ts = require(t, cols.timestamp, "spans");
  const std::size_t c_svc = require(t, cols.service, "spans");
  const std::size_t c_trace = require(t, cols.trace_id, "spans");
  const std::size_t c_span = require(t, cols.span_id, "spans");
  const std::size_t c_parent = require(t, cols.parent_span_id, "spans");
  const std::optional<std::size_t> c_status =
      cols.status.empty() ? std::nullopt : std::optional<std::size_t>(require(t, cols.status, "spans"));

  Parsed<SpanRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& row : t.rows) {
    const std::string *ts = cell(row, c_ts), *svc = cell(row, c_svc), *trace = cell(row, c_trace),
                      *span = cell(row, c_span);
    if (!ts || !svc || !trace || !span) {
      out.report.add("short row");
      continue;
    }
    const auto when = parse_timestamp(*ts, cols.timestamp_scale);
    if (!when) {
      out.report.add("bad timestamp");
      continue;
    }
    if (svc->empty() || span->empty()) {
      out.report.add("missing service or span id");
      continue;
    }
    if (!seen.insert({*trace, *span}).second) {
      out.report.add("duplicate span id");
      continue;
    }
    SpanRecord r;
    r.timestamp = *when;
    r.service = *svc;
    r.trace_id = *trace;
    r.span_id = *span;
    if (const std::string* p = cell(row, c_parent)) r.parent_span_id = *p;
    if (c_status) {
      const std::string* st = cell(row, *c_status);
      r.failed = st && std::find(cols.failure_values.begin(), cols.failure_values.end(), *st) != cols.failure_values.end();
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

inline Parsed<MetricRecord> parse_metrics(const Table& t, const MetricColumns& cols) {
  using namespace ingest_detail;
  const std::size_t c_ts = require(t, cols.timestamp, "metrics");
  const std::size_t c_svc = require(t, cols.service, "metrics");
  const std::size_t c_metric = require(t, cols.metric, "metrics");
  const std::size_t c_val = require(t, cols.value, "metrics");
  Parsed<MetricRecord> out;
  for (const auto& row : t.rows) {
    const std::string *ts = cell(row, c_ts), *svc = cell(row, c_svc), *name = cell(row, c_metric),
                      *val = cell(row, c_val);
    if (!ts || !svc || !name || !val) {
      out.report.add("short row");
      continue;
    }
    const auto when = parse_timestamp(*ts, cols.timestamp_scale);
    if (!when) {
      out.report.add("bad timestamp");
      continue;
    }
    double v = 0;
    const auto [ptr, ec] = std::from_chars(val->data(), val->data() + val->size(), v);
    if (ec != std::errc() || ptr != val->data() + val->size() || !std::isfinite(v)) {
      out.report.add("bad value");
      continue;
    }
    out.records.push_back(MetricRecord{*when, *svc, *name, v});
  }
  return out;
}

inline Parsed<LogRecord> parse_logs(const Table& t, const LogColumns& cols) {
  using namespace ingest_detail;
  const std::size_t c_ts = require(t, cols.timestamp, "logs");
  const std::size_t c_svc = require(t, cols.service, "logs");
  Parsed<LogRecord> out;
  for (const auto& row : t.rows) {
    const std::string *ts = cell(row, c_ts), *svc = cell(row, c_svc);
    if (!ts || !svc) {
      out.report.add("short row");
      continue;
    }
    const auto when = parse_timestamp(*ts, cols.timestamp_scale);
    if (!when) {
      out.report.add("bad timestamp");
      continue;
    }
    out.records.push_back(LogRecord{*when, *svc});
  }
  return out;
}

/// fault_class cells may hold a class name from `class_names` or an index.
inline Parsed<InjectionRecord> parse_injections(const Table& t, const InjectionColumns& cols,
                                                const std::vector<std::string>& class_names) {
  using namespace ingest_detail;
  const std::size_t c_start = require(t, cols.start, "injections");
  const std::size_t c_end = require(t, cols.end, "injections");
  const std::size_t c_svc = require(t, cols.service, "injections");
  const std::size_t c_cls = require(t, cols.fault_class, "injections");
  Parsed<InjectionRecord> out;
  for (const auto& row : t.rows) {
    const std::string *s = cell(row, c_start), *e = cell(row, c_end), *svc = cell(row, c_svc), *cls = cell(row, c_cls);
    if (!s || !e || !svc || !cls) {
      out.report.add("short row");
      continue;
    }
    const auto start = parse_timestamp(*s, cols.timestamp_scale);
    const auto end = parse_timestamp(*e, cols.timestamp_scale);
    if (!start || !end) {
      out.report.add("bad timestamp");
      continue;
    }
    if (*start > *end) {
      out.report.add("start after end");
      continue;
    }
    std::size_t label = 0;
    auto named = std::find(class_names.begin(), class_names.end(), *cls);
    if (named != class_names.end()) {
      label = static_cast<std::size_t>(named - class_names.begin());
    } else {
      const auto [ptr, ec] = std::from_chars(cls->data(), cls->data() + cls->size(), label);
      if (ec != std::errc() || ptr != cls->data() + cls->size() || (!class_names.empty() && label >= class_names.size())) {
        out.report.add("unknown fault class");
        continue;
      }
    }
    out.records.push_back(InjectionRecord{*start, *end, *svc, label});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Service index and binning

/// Services numbered by first appearance.
class ServiceIndex {
 public:
  std::size_t add(const std::string& name) {
    auto [it, inserted] = index_.emplace(name, names_.size());
    if (inserted) names_.push_back(name);
    return it->second;
  }
  std::optional<std::size_t> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> names_;
};

struct TimeBins {
  double origin = 0;
  double width = 1;

  std::size_t bin_of(double t) const {
    const double b = std::floor((t - origin) / width);
    return b <= 0 ? 0 : static_cast<std::size_t>(b);
  }
};

struct BinnedEdges {
  std::map<std::size_t, std::set<Edge>> per_bin;
  std::size_t orphans = 0;
  std::size_t intra_service = 0;
};

inline BinnedEdges bin_edges(const std::vector<SpanRecord>& spans, const TimeBins& bins, ServiceIndex& services) {
  if (!(bins.width > 0)) throw ValidationError("bin_edges: bin width must be > 0");
  std::map<std::pair<std::string, std::string>, const SpanRecord*> by_id;
  for (const SpanRecord& s : spans) by_id.emplace(std::make_pair(s.trace_id, s.span_id), &s);
  BinnedEdges out;
  for (const SpanRecord& child : spans) {
    if (child.parent_span_id.empty()) continue;
    auto it = by_id.find({child.trace_id, child.parent_span_id});
    if (it == by_id.end()) {
      ++out.orphans;
      continue;
    }
    const SpanRecord& parent = *it->second;
    if (parent.service == child.service) {
      ++out.intra_service;
      continue;
    }
    const std::size_t caller = services.add(parent.service);
    const std::size_t callee = services.add(child.service);
    out.per_bin[bins.bin_of(child.timestamp)].insert(Edge{caller, callee});
  }
  return out;
}

inline constexpr const char* kLogCountChannel = "log_count";

/// values[(b * num_services + s) * channels + k].
struct FeatureGrid {
  std::size_t num_bins = 0;
  std::size_t num_services = 0;
  std::vector<std::string> channels;
  std::vector<double> values;

  double& at(std::size_t b, std::size_t s, std::size_t k) { return values[(b * num_services + s) * channels.size() + k]; }
  double at(std::size_t b, std::size_t s, std::size_t k) const {
    return values[(b * num_services + s) * channels.size() + k];
  }
};

inline FeatureGrid build_features(const std::vector<MetricRecord>& metrics, const std::vector<LogRecord>& logs,
                                  const TimeBins& bins, std::size_t num_bins, const std::vector<std::string>& channels,
                                  const ServiceIndex& services) {
  std::set<std::string> known;
  for (const MetricRecord& m : metrics) known.insert(m.metric);
  std::map<std::string, std::size_t> channel_of;
  for (std::size_t k = 0; k < channels.size(); ++k) {
    if (channels[k] != kLogCountChannel && !known.count(channels[k])) {
      throw ValidationError("unknown channel '" + channels[k] + "'");
    }
    channel_of[channels[k]] = k;
  }
  const std::size_t ns = services.size(), nk = channels.size();
  FeatureGrid g{num_bins, ns, channels, std::vector<double>(num_bins * ns * nk, 0.0)};

  std::vector<double> sum(num_bins * ns * nk, 0.0);
  std::vector<std::size_t> count(num_bins * ns * nk, 0);
  for (const MetricRecord& m : metrics) {
    auto k = channel_of.find(m.metric);
    auto s = services.find(m.service);
    const std::size_t b = bins.bin_of(m.timestamp);
    if (k == channel_of.end() || !s || b >= num_bins) continue;
    const std::size_t idx = (b * ns + *s) * nk + k->second;
    sum[idx] += m.value;
    ++count[idx];
  }
  auto log_k = channel_of.find(kLogCountChannel);
  std::vector<double> log_counts(num_bins * ns, 0.0);
  for (const LogRecord& l : logs) {
    auto s = services.find(l.service);
    const std::size_t b = bins.bin_of(l.timestamp);
    if (s && b < num_bins) log_counts[b * ns + *s] += 1.0;
  }

  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t k = 0; k < nk; ++k) {
      const bool is_log = log_k != channel_of.end() && k == log_k->second;
      double last = 0.0;
      for (std::size_t b = 0; b < num_bins; ++b) {
        const std::size_t idx = (b * ns + s) * nk + k;
        if (is_log) {
          g.values[idx] = log_counts[b * ns + s];
        } else {
          if (count[idx]) last = sum[idx] / static_cast<double>(count[idx]);
          g.values[idx] = last;
        }
      }
    }
  }
  return g;
}

/// Per-channel z-score statistics.
struct NormStats {
  std::vector<std::string> channels;
  std::vector<double> mean;
  std::vector<double> variance;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Population mean/variance per channel over bins [b0, b1) and all services.
inline NormStats fit_norm_stats(const FeatureGrid& g, std::size_t b0, std::size_t b1) {
  const std::size_t nk = g.channels.size();
  NormStats st{g.channels, std::vector<double>(nk, 0.0), std::vector<double>(nk, 0.0)};
  b1 = std::min(b1, g.num_bins);
  const double n = static_cast<double>((b1 > b0 ? b1 - b0 : 0) * g.num_services);
  if (n == 0) return st;
  for (std::size_t k = 0; k < nk; ++k) {
    double s = 0.0;
    for (std::size_t b = b0; b < b1; ++b) {
      for (std::size_t v = 0; v < g.num_services; ++v) s += g.at(b, v, k);
    }
    const double mu = s / n;
    double ss = 0.0;
    for (std::size_t b = b0; b < b1; ++b) {
      for (std::size_t v = 0; v < g.num_services; ++v) ss += (g.at(b, v, k) - mu) * (g.at(b, v, k) - mu);
    }
    st.mean[k] = mu;
    st.variance[k] = ss / n;
  }
  return st;
}

/// Zero variance divides by 1.
inline void apply_norm_stats(FeatureGrid& g, const NormStats& st) {
  if (st.channels != g.channels) throw ValidationError("normalization stats were fitted on different channels");
  for (std::size_t b = 0; b < g.num_bins; ++b) {
    for (std::size_t v = 0; v < g.num_services; ++v) {
      for (std::size_t k = 0; k < g.channels.size(); ++k) {
        const double sd = st.variance[k] > 0 ? std::sqrt(st.variance[k]) : 1.0;
        g.at(b, v, k) = (g.at(b, v, k) - st.mean[k]) / sd;
      }
    }
  }
}

inline nlohmann::ordered_json to_json(const NormStats& st) {
  nlohmann::ordered_json j;
  j["channels"] = st.channels;
  j["mean"] = st.mean;
  j["variance"] = st.variance;
  return j;
}

inline NormStats norm_stats_from_json(const nlohmann::json& j) {
  NormStats st;
  try {
    st.channels = j.at("channels").get<std::vector<std::string>>();
    st.mean = j.at("mean").get<std::vector<double>>();
    st.variance = j.at("variance").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("normalization stats: ") + e.what());
  }
  if (st.mean.size() != st.channels.size() || st.variance.size() != st.channels.size()) {
    throw ValidationError("normalization stats: length mismatch");
  }
  return st;
}

// ---------------------------------------------------------------------------
// Windows and labels

/// A window plus the absolute time range [start, end) it covers.
struct TimedWindow {
  GraphWindow window;
  double start = 0;
  double end = 0;
  std::size_t first_bin = 0;
};

inline std::vector<TimedWindow> make_windows(const FeatureGrid& g, const BinnedEdges& edges, const TimeBins& bins,
                                             std::size_t length, std::size_t stride,
                                             const std::vector<std::string>& names, const std::string& id_prefix = "win") {
  if (length < 1 || stride < 1) throw ValidationError("window length and stride must be >= 1");
  std::vector<TimedWindow> out;
  for (std::size_t b0 = 0; b0 + length <= g.num_bins; b0 += stride) {
    TimedWindow tw;
    GraphWindow& w = tw.window;
    w.id = id_prefix + "-" + std::to_string(b0);
    w.num_nodes = g.num_services;
    w.num_steps = length;
    w.feat_dim = g.channels.size();
    w.node_names = names;
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t v = 0; v < g.num_services; ++v) {
        for (std::size_t k = 0; k < w.feat_dim; ++k) w.features.push_back(g.at(b0 + t, v, k));
      }
      auto it = edges.per_bin.find(b0 + t);
      w.edges.emplace_back();
      if (it != edges.per_bin.end()) w.edges.back().assign(it->second.begin(), it->second.end());
    }
    tw.first_bin = b0;
    tw.start = bins.origin + static_cast<double>(b0) * bins.width;
    tw.end = bins.origin + static_cast<double>(b0 + length) * bins.width;
    out.push_back(std::move(tw));
  }
  return out;
}

struct LabelReport {
  std::vector<std::string> dropped_ambiguous;
};

/// Overlap duration is summed per class; the largest wins, ties go to the
/// class whose overlapping injection starts first, and a tie on that too
/// drops the window. No overlap means class 0.
inline std::vector<TimedWindow> label_windows(std::vector<TimedWindow> windows,
                                              const std::vector<InjectionRecord>& injections, LabelReport* report = nullptr) {
  std::vector<TimedWindow> out;
  for (TimedWindow& tw : windows) {
    std::map<std::size_t, std::pair<double, double>> by_class;  // class -> (duration, earliest start)
    for (const InjectionRecord& inj : injections) {
      const double lo = std::max(inj.start, tw.start);
      const double hi = std::min(inj.end, tw.end);
      // Closed injection interval against half-open window; a zero-length
      // injection inside the window still counts.
      const bool touches = inj.start < tw.end && inj.end >= tw.start;
      if (!touches) continue;
      auto [it, fresh] = by_class.emplace(inj.fault_class, std::make_pair(0.0, inj.start));
      it->second.first += std::max(0.0, hi - lo);
      if (!fresh) it->second.second = std::min(it->second.second, inj.start);
    }
    if (by_class.empty()) {
      tw.window.label = 0;
      out.push_back(std::move(tw));
      continue;
    }
    auto best = by_class.begin();
    bool ambiguous = false;
    for (auto it = std::next(by_class.begin()); it != by_class.end(); ++it) {
      const auto& [dur, start] = it->second;
      const auto& [bdur, bstart] = best->second;
      if (dur > bdur || (dur == bdur && start < bstart)) {
        best = it;
        ambiguous = false;
      } else if (dur == bdur && start == bstart) {
        ambiguous = true;
      }
    }
    if (ambiguous) {
      if (report) report->dropped_ambiguous.push_back(tw.window.id);
      continue;
    }
    tw.window.label = best->first;
    out.push_back(std::move(tw));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Column map and full pipeline

struct ColumnMap {
  char delimiter = ',';
  SpanColumns spans;
  MetricColumns metrics;
  LogColumns logs;
  InjectionColumns injections;
  std::vector<std::string> channels;
  std::vector<std::string> class_names;
};

inline ColumnMap column_map_from_json(const nlohmann::json& j) {
  ColumnMap m;
  try {
    const std::string delim = j.value("delimiter", std::string(","));
    if (delim.size() != 1 && delim != "\\t") throw ValidationError("column map: delimiter must be one character");
    m.delimiter = delim == "\\t" ? '\t' : delim[0];
    const double scale = j.value("timestamp_scale", 1.0);
    m.spans.timestamp_scale = m.metrics.timestamp_scale = m.logs.timestamp_scale = m.injections.timestamp_scale = scale;
    if (j.contains("spans")) {
      const auto& s = j["spans"];
      m.spans.timestamp = s.value("timestamp", m.spans.timestamp);
      m.spans.service = s.value("service", m.spans.service);
      m.spans.trace_id = s.value("trace_id", m.spans.trace_id);
      m.spans.span_id = s.value("span_id", m.spans.span_id);
      m.spans.parent_span_id = s.value("parent_span_id", m.spans.parent_span_id);
      m.spans.status = s.value("status", m.spans.status);
      m.spans.failure_values = s.value("failure_values", m.spans.failure_values);
    }
    if (j.contains("metrics")) {
      const auto& s = j["metrics"];
      m.metrics.timestamp = s.value("timestamp", m.metrics.timestamp);
      m.metrics.service = s.value("service", m.metrics.service);
      m.metrics.metric = s.value("metric", m.metrics.metric);
      m.metrics.value = s.value("value", m.metrics.value);
    }
    if (j.contains("logs")) {
      const auto& s = j["logs"];
      m.logs.timestamp = s.value("timestamp", m.logs.timestamp);
      m.logs.service = s.value("service", m.logs.service);
    }
    if (j.contains("injections")) {
      const auto& s = j["injections"];
      m.injections.start = s.value("start", m.injections.start);
      m.injections.end = s.value("end", m.injections.end);
      m.injections.service = s.value("service", m.injections.service);
      m.injections.fault_class = s.value("class", m.injections.fault_class);
    }
    m.channels = j.at("channels").get<std::vector<std::string>>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("column map: ") + e.what());
  }
  if (m.channels.empty()) throw ValidationError("column map: at least one channel is required");
  if (m.class_names.size() < 2) throw ValidationError("column map: at least two class names are required");
  return m;
}

struct IngestInputs {
  Table spans;
  std::vector<Table> metrics;
  std::vector<Table> logs;
  std::optional<Table> injections;
};

struct IngestOptions {
  double bin_width = 60.0;
  std::size_t window_length = 8;
  std::size_t stride = 4;
  /// Leading fraction of windows (in time order) used to fit normalization.
  double train_fraction = 0.8;
  /// Use these statistics instead of fitting new ones.
  std::optional<NormStats> stats;
};

struct IngestResult {
  std::vector<GraphWindow> train;
  std::vector<GraphWindow> test;
  DatasetManifest manifest;
  NormStats stats;
  std::vector<std::string> services;
  SkipReport span_skips, metric_skips, log_skips, injection_skips;
  std::size_t orphan_spans = 0;
  LabelReport labels;
};

inline IngestResult ingest(const IngestInputs& in, const ColumnMap& map, const IngestOptions& opt) {
  if (!(opt.bin_width > 0)) throw ValidationError("bin width must be > 0");
  if (!(opt.train_fraction > 0 && opt.train_fraction <= 1)) throw ValidationError("train fraction must be in (0, 1]");
  IngestResult res;
  auto spans = parse_spans(in.spans, map.spans);
  res.span_skips = spans.report;
  std::vector<MetricRecord> metrics;
  for (const Table& t : in.metrics) {
    auto p = parse_metrics(t, map.metrics);
    metrics.insert(metrics.end(), p.records.begin(), p.records.end());
    res.metric_skips.skipped += p.report.skipped;
    for (const auto& [k, v] : p.report.reasons) res.metric_skips.reasons[k] += v;
  }
  std::vector<LogRecord> logs;
  for (const Table& t : in.logs) {
    auto p = parse_logs(t, map.logs);
    logs.insert(logs.end(), p.records.begin(), p.records.end());
    res.log_skips.skipped += p.report.skipped;
    for (const auto& [k, v] : p.report.reasons) res.log_skips.reasons[k] += v;
  }
  std::vector<InjectionRecord> injections;
  if (in.injections) {
    auto p = parse_injections(*in.injections, map.injections, map.class_names);
    injections = std::move(p.records);
    res.injection_skips = p.report;
  }

  ServiceIndex services;
  double t_min = std::numeric_limits<double>::infinity(), t_max = -t_min;
  auto seen_time = [&](double t) {
    t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
  };
  for (const SpanRecord& s : spans.records) {
    services.add(s.service);
    seen_time(s.timestamp);
  }
  for (const MetricRecord& m : metrics) {
    services.add(m.service);
    seen_time(m.timestamp);
  }
  for (const LogRecord& l : logs) {
    services.add(l.service);
    seen_time(l.timestamp);
  }
  for (const InjectionRecord& i : injections) services.add(i.target_service);
  if (!std::isfinite(t_min)) throw ValidationError("ingest: no timestamped records");
  if (services.size() == 0) throw ValidationError("ingest: no services found");

  const TimeBins bins{t_min, opt.bin_width};
  const std::size_t num_bins = bins.bin_of(t_max) + 1;
  BinnedEdges edges = bin_edges(spans.records, bins, services);
  res.orphan_spans = edges.orphans;
  FeatureGrid grid = build_features(metrics, logs, bins, num_bins, map.channels, services);

  auto windows = make_windows(grid, edges, bins, opt.window_length, opt.stride, services.names());
  const std::size_t n_train = static_cast<std::size_t>(std::ceil(opt.train_fraction * static_cast<double>(windows.size())));
  if (opt.stats) {
    res.stats = *opt.stats;
  } else {
    const std::size_t end_bin = n_train ? windows[n_train - 1].first_bin + opt.window_length : 0;
    res.stats = fit_norm_stats(grid, 0, end_bin);
  }
  apply_norm_stats(grid, res.stats);
  windows = make_windows(grid, edges, bins, opt.window_length, opt.stride, services.names());

  std::vector<TimedWindow> train_w(windows.begin(), windows.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<TimedWindow> test_w(windows.begin() + static_cast<std::ptrdiff_t>(n_train), windows.end());
  for (TimedWindow& tw : label_windows(std::move(train_w), injections, &res.labels)) res.train.push_back(std::move(tw.window));
  for (TimedWindow& tw : label_windows(std::move(test_w), injections, &res.labels)) res.test.push_back(std::move(tw.window));

  res.manifest.num_classes = map.class_names.size();
  res.manifest.class_names = map.class_names;
  res.manifest.feat_names = map.channels;
  res.services = services.names();
  for (const auto* set : {&res.train, &res.test}) {
    for (const GraphWindow& w : *set) validate(w, res.manifest.num_classes);
  }
  return res;
}

}  // namespace tgfd
