// Copyright 2026 The hpgseg Authors.
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

#include "hpgseg/eval.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "hpgseg/format.hpp"
#include "hpgseg/point_set.hpp"

namespace hpgseg {

namespace {

std::vector<std::size_t> confidence_order(std::span<const Prediction> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });
  return order;
}

struct RankedHit {
  double confidence;
  std::size_t scene;
  std::size_t rank;
  bool hit;
};

}  // namespace

std::vector<Match> match_predictions(std::span<const Prediction> preds,
                                     std::span<const GroundTruthInstance> gts,
                                     double iou_threshold) {
  std::vector<bool> taken(gts.size(), false);
  std::vector<Match> out;
  out.reserve(preds.size());
  for (std::size_t p : confidence_order(preds)) {
    Match m{p, std::nullopt, 0.0};
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].semantic_class != preds[p].semantic_class) continue;
      const double iou = set_iou(preds[p].point_indices, gts[g].point_indices);
      if (iou > best_iou || (iou == best_iou && gts[g].id < gts[*best].id)) {
        best = g;
        best_iou = iou;
      }
    }
    if (best && best_iou >= iou_threshold) {
      taken[*best] = true;
      m.gt_id = gts[*best].id;
      m.iou = best_iou;
    }
    out.push_back(m);
  }
  return out;
}

double average_precision(const std::vector<bool>& ranked_hits, std::size_t num_gt) {
  if (num_gt == 0) return ranked_hits.empty() ? 1.0 : 0.0;
  const std::size_t n = ranked_hits.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (ranked_hits[k]) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(num_gt);
  }
  // Envelope: precision at rank k becomes the best precision at any rank >= k.
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (recall[k] > prev_recall) {
      ap += (recall[k] - prev_recall) * precision[k];
      prev_recall = recall[k];
    }
  }
  return ap;
}

std::vector<double> ap_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back(0.5 + 0.05 * k);
  return t;
}

EvalReport evaluate(std::span<const Prediction> preds, std::span<const GroundTruthInstance> gts,
                    const std::set<int>& classes) {
  const SceneInstances scene{{preds.begin(), preds.end()}, {gts.begin(), gts.end()}};
  return evaluate_batch(std::span<const SceneInstances>(&scene, 1), classes);
}

EvalReport evaluate_batch(std::span<const SceneInstances> scenes, const std::set<int>& classes) {
  const std::vector<double> thresholds = ap_thresholds();
  EvalReport report;
  for (int cls : classes) {
    std::vector<std::vector<Prediction>> preds(scenes.size());
    std::vector<std::vector<GroundTruthInstance>> gts(scenes.size());
    ClassMetrics m;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      for (const Prediction& p : scenes[s].predictions)
        if (p.semantic_class == cls) preds[s].push_back(p);
      for (const GroundTruthInstance& g : scenes[s].ground_truth)
        if (g.semantic_class == cls) gts[s].push_back(g);
      m.num_pred += preds[s].size();
      m.num_gt += gts[s].size();
    }
    if (m.num_pred == 0 && m.num_gt == 0) continue;

    auto ap_at = [&](double t, std::size_t* true_positives) {
      std::vector<RankedHit> hits;
      for (std::size_t s = 0; s < scenes.size(); ++s) {
        const auto matches = match_predictions(preds[s], gts[s], t);
        for (std::size_t r = 0; r < matches.size(); ++r)
          hits.push_back(
              {preds[s][matches[r].prediction].confidence, s, r, matches[r].gt_id.has_value()});
      }
      std::sort(hits.begin(), hits.end(), [](const RankedHit& a, const RankedHit& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return std::tie(a.scene, a.rank) < std::tie(b.scene, b.rank);
      });
      std::vector<bool> ranked(hits.size());
      std::size_t tp = 0;
      for (std::size_t k = 0; k < hits.size(); ++k) {
        ranked[k] = hits[k].hit;
        tp += hits[k].hit ? 1 : 0;
      }
      if (true_positives) *true_positives = tp;
      return average_precision(ranked, m.num_gt);
    };

    std::vector<double> aps;
    for (double t : thresholds) {
      std::size_t tp = 0;
      aps.push_back(ap_at(t, &tp));
      if (t == 0.5) {
        m.ap50 = aps.back();
        m.precision50 = m.num_pred ? static_cast<double>(tp) / m.num_pred : 0.0;
        m.recall50 = m.num_gt ? static_cast<double>(tp) / m.num_gt : 0.0;
      }
    }
    // ap50 plus the mean deviation from it; never exceeds ap50.
    double deviation = 0.0;
    for (double ap : aps) deviation += ap - m.ap50;
    m.ap = m.ap50 + deviation / static_cast<double>(aps.size());
    m.ap25 = ap_at(0.25, nullptr);
    report.per_class.emplace(cls, m);
  }

  if (report.per_class.empty()) {
    report.ap = report.ap50 = report.ap25 = report.mprec50 = report.mrec50 = 1.0;
    return report;
  }
  for (const auto& [cls, m] : report.per_class) {
    report.ap += m.ap;
    report.ap50 += m.ap50;
    report.ap25 += m.ap25;
    report.mprec50 += m.precision50;
    report.mrec50 += m.recall50;
  }
  const double n = static_cast<double>(report.per_class.size());
  report.ap /= n;
  report.ap50 /= n;
  report.ap25 /= n;
  report.mprec50 /= n;
  report.mrec50 /= n;
  constexpr double kSlack = 1e-12;
  if (report.ap > report.ap50 + kSlack || report.ap50 > report.ap25 + kSlack)
    throw InvariantError("evaluation produced ap > ap50 or ap50 > ap25");
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, m] : report.per_class)
    per_class[std::to_string(cls)] = {{"ap", m.ap},
                                      {"ap50", m.ap50},
                                      {"ap25", m.ap25},
                                      {"precision50", m.precision50},
                                      {"recall50", m.recall50},
                                      {"num_gt", m.num_gt},
                                      {"num_pred", m.num_pred}};
  return {{"ap", report.ap},           {"ap50", report.ap50},     {"ap25", report.ap25},
          {"mprec50", report.mprec50}, {"mrec50", report.mrec50}, {"per_class", per_class}};
}

std::string per_class_csv(const EvalReport& report) {
  std::string out = "class,ap,ap50,ap25,precision50,recall50,num_gt,num_pred\n";
  for (const auto& [cls, m] : report.per_class) {
    out += std::to_string(cls);
    for (double v : {m.ap, m.ap50, m.ap25, m.precision50, m.recall50}) {
      out += ',';
      append_double(out, v);
    }
    out += ',' + std::to_string(m.num_gt) + ',' + std::to_string(m.num_pred) + '\n';
  }
  return out;
}

}  // namespace hpgseg
