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

/** @file metrics.hpp Multiclass classification metrics.
 *
 * Confusion rows are true classes, columns are predictions. Per-class
 * scores with a zero denominator are 0. Multiclass MCC is the R_K
 * statistic; it reduces to the usual binary MCC for two classes. AUC is
 * one-vs-rest with midranks for ties, averaged over classes that have both
 * positive and negative samples.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgfd/error.hpp"

namespace tgfd {

class Confusion {
 public:
  Confusion() = default;
  explicit Confusion(std::size_t num_classes) : c_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const noexcept { return c_; }
  std::size_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * c_ + pred]; }
  std::size_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * c_ + pred]; }

  std::size_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }
  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t k = 0; k < c_; ++k) s += at(k, k);
    return s;
  }
  std::size_t row_sum(std::size_t k) const {
    std::size_t s = 0;
    for (std::size_t l = 0; l < c_; ++l) s += at(k, l);
    return s;
  }
  std::size_t col_sum(std::size_t k) const {
    std::size_t s = 0;
    for (std::size_t l = 0; l < c_; ++l) s += at(l, k);
    return s;
  }

  friend bool operator==(const Confusion&, const Confusion&) = default;

 private:
  std::size_t c_ = 0;
  std::vector<std::size_t> counts_;
};

inline Confusion confusion(std::span<const std::size_t> truth, std::span<const std::size_t> pred,
                           std::size_t num_classes) {
  if (truth.size() != pred.size()) {
    throw ValidationError("confusion: " + std::to_string(truth.size()) + " labels vs " +
                          std::to_string(pred.size()) + " predictions");
  }
  Confusion cm(num_classes);
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (truth[n] >= num_classes || pred[n] >= num_classes) {
      throw ValidationError("confusion: label out of range at sample " + std::to_string(n));
    }
    ++cm.at(truth[n], pred[n]);
  }
  return cm;
}

inline double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

enum class Averaging { kMacro, kMicro, kWeighted };

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;

  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

struct PrfResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassScores> per_class;
};

inline std::vector<ClassScores> per_class_scores(const Confusion& cm) {
  std::vector<ClassScores> out(cm.num_classes());
  for (std::size_t k = 0; k < cm.num_classes(); ++k) {
    const double tp = static_cast<double>(cm.at(k, k));
    const double predicted = static_cast<double>(cm.col_sum(k));
    const double actual = static_cast<double>(cm.row_sum(k));
    ClassScores& s = out[k];
    s.precision = safe_div(tp, predicted);
    s.recall = safe_div(tp, actual);
    s.f1 = safe_div(2.0 * s.precision * s.recall, s.precision + s.recall);
    s.support = cm.row_sum(k);
  }
  return out;
}

inline PrfResult prf1(const Confusion& cm, Averaging avg) {
  PrfResult r;
  r.per_class = per_class_scores(cm);
  const std::size_t c = cm.num_classes();
  switch (avg) {
    case Averaging::kMacro: {
      for (const ClassScores& s : r.per_class) {
        r.precision += s.precision;
        r.recall += s.recall;
        r.f1 += s.f1;
      }
      const double inv = c ? 1.0 / static_cast<double>(c) : 0.0;
      r.precision *= inv;
      r.recall *= inv;
      r.f1 *= inv;
      break;
    }
    case Averaging::kMicro: {
      // Pooled: total FP == total FN == total - trace for single-label data.
      const double tp = static_cast<double>(cm.trace());
      const double total = static_cast<double>(cm.total());
      // precision == recall, so their harmonic mean is the same value; assign it
      // directly so micro-F1 equals accuracy bit for bit.
      r.precision = safe_div(tp, total);
      r.recall = r.precision;
      r.f1 = r.precision;
      break;
    }
    case Averaging::kWeighted: {
      const double total = static_cast<double>(cm.total());
      for (const ClassScores& s : r.per_class) {
        const double w = safe_div(static_cast<double>(s.support), total);
        r.precision += w * s.precision;
        r.recall += w * s.recall;
        r.f1 += w * s.f1;
      }
      break;
    }
  }
  return r;
}

/// R_K in covariance form: (c s - sum_k t_k p_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2)),
/// t_k true counts, p_k predicted counts, c correct, s total. Zero denominator gives 0.
inline double mcc(const Confusion& cm) {
  const double s = static_cast<double>(cm.total());
  const double c = static_cast<double>(cm.trace());
  double tp_sum = 0.0, pp = 0.0, tt = 0.0;
  for (std::size_t k = 0; k < cm.num_classes(); ++k) {
    const double t = static_cast<double>(cm.row_sum(k));
    const double p = static_cast<double>(cm.col_sum(k));
    tp_sum += t * p;
    pp += p * p;
    tt += t * t;
  }
  const double den = std::sqrt((s * s - pp) * (s * s - tt));
  if (den == 0.0) return 0.0;
  return std::clamp((c * s - tp_sum) / den, -1.0, 1.0);
}

struct AucResult {
  /// Macro mean over classes with a defined AUC; nullopt when none is defined.
  std::optional<double> macro;
  /// nullopt for classes without both positive and negative samples.
  std::vector<std::optional<double>> per_class;
};

/// Mann-Whitney AUC of `scores` for the samples flagged positive, midranks on ties.
inline std::optional<double> rank_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (bool b : positive) n_pos += b ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) {
      if (positive[order[k]]) pos_rank_sum += midrank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

/// probs is row-major N x C; each row must sum to 1 within 1e-6.
inline AucResult auc_ovr(std::span<const std::size_t> truth, std::span<const double> probs, std::size_t num_classes) {
  const std::size_t n = truth.size();
  if (probs.size() != n * num_classes) throw ValidationError("auc_ovr: score matrix is not N x C");
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) s += probs[r * num_classes + c];
    if (std::abs(s - 1.0) > 1e-6) throw ValidationError("auc_ovr: row " + std::to_string(r) + " does not sum to 1");
    if (truth[r] >= num_classes) throw ValidationError("auc_ovr: label out of range at sample " + std::to_string(r));
  }
  AucResult res;
  res.per_class.resize(num_classes);
  std::vector<double> col(n);
  std::vector<bool> pos(n);
  double total = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      col[r] = probs[r * num_classes + c];
      pos[r] = truth[r] == c;
    }
    res.per_class[c] = rank_auc(col, pos);
    if (res.per_class[c]) {
      total += *res.per_class[c];
      ++defined;
    }
  }
  if (defined) res.macro = total / static_cast<double>(defined);
  return res;
}

struct ClassReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::optional<double> auc_roc;

  friend bool operator==(const ClassReport&, const ClassReport&) = default;
};

/// Precision and recall are macro averages; f1 is support-weighted, and
/// macro_f1 / micro_f1 are reported separately.
struct MetricReport {
  Confusion confusion;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc_roc;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double mcc = 0.0;
  std::vector<ClassReport> per_class;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

inline std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

/// Full report from labels and an N x C probability matrix; predictions are row argmax.
inline MetricReport evaluate_predictions(std::span<const std::size_t> truth, std::span<const double> probs,
                                         std::size_t num_classes) {
  const std::size_t n = truth.size();
  if (probs.size() != n * num_classes) throw ValidationError("evaluate_predictions: score matrix is not N x C");
  std::vector<std::size_t> pred(n);
  for (std::size_t r = 0; r < n; ++r) pred[r] = argmax(probs.subspan(r * num_classes, num_classes));

  MetricReport rep;
  rep.confusion = confusion(truth, pred, num_classes);
  const auto macro = prf1(rep.confusion, Averaging::kMacro);
  const auto micro = prf1(rep.confusion, Averaging::kMicro);
  const auto weighted = prf1(rep.confusion, Averaging::kWeighted);
  rep.accuracy = safe_div(static_cast<double>(rep.confusion.trace()), static_cast<double>(n));
  rep.precision = macro.precision;
  rep.recall = macro.recall;
  rep.f1 = weighted.f1;
  rep.macro_f1 = macro.f1;
  rep.micro_f1 = micro.f1;
  rep.mcc = mcc(rep.confusion);
  AucResult auc = n ? auc_ovr(truth, probs, num_classes) : AucResult{std::nullopt, std::vector<std::optional<double>>(num_classes)};
  rep.auc_roc = auc.macro;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const ClassScores& s = macro.per_class[c];
    rep.per_class.push_back(ClassReport{s.precision, s.recall, s.f1, s.support, auc.per_class[c]});
  }
  return rep;
}

inline nlohmann::ordered_json to_json(const MetricReport& r, const std::vector<std::string>& class_names = {}) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["auc_roc"] = opt(r.auc_roc);
  j["macro_f1"] = r.macro_f1;
  j["micro_f1"] = r.micro_f1;
  j["mcc"] = r.mcc;
  nlohmann::ordered_json pc;
  auto classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const ClassReport& cr = r.per_class[c];
    nlohmann::ordered_json e;
    e["class"] = c < class_names.size() ? class_names[c] : std::to_string(c);
    e["precision"] = cr.precision;
    e["recall"] = cr.recall;
    e["f1"] = cr.f1;
    e["support"] = cr.support;
    e["auc_roc"] = opt(cr.auc_roc);
    classes.push_back(std::move(e));
  }
  pc["classes"] = std::move(classes);
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < r.confusion.num_classes(); ++a) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t b = 0; b < r.confusion.num_classes(); ++b) row.push_back(r.confusion.at(a, b));
    rows.push_back(std::move(row));
  }
  pc["confusion"] = std::move(rows);
  j["per_class"] = std::move(pc);
  return j;
}

/// One header row and one value row, columns in the order
/// Accuracy Precision Recall F1 AUC-ROC Macro-F1 Micro-F1 MCC.
inline std::string format_table(const MetricReport& r) {
  char buf[256];
  std::string out = "Accuracy  Precision  Recall  F1      AUC-ROC  Macro-F1  Micro-F1  MCC\n";
  const double auc = r.auc_roc.value_or(std::nan(""));
  std::snprintf(buf, sizeof buf, "%-9.4f %-10.4f %-7.4f %-7.4f %-8.4f %-9.4f %-9.4f %.4f\n", r.accuracy, r.precision,
                r.recall, r.f1, auc, r.macro_f1, r.micro_f1, r.mcc);
  return out + buf;
}

}  // namespace tgfd
