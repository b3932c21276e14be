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

#include <random>

#include "doctest.h"
#include "generators.hpp"
#include "hpgseg/cloud.hpp"
#include "hpgseg/eval.hpp"
#include "oracles.hpp"

using namespace hpgseg;

TEST_CASE("hand-computed average precision") {
  CHECK(std::abs(average_precision({true, false, true}, 2) - 5.0 / 6.0) < 1e-12);
  CHECK(average_precision({true, true}, 2) == 1.0);
  CHECK(average_precision({false, true}, 1) == 0.5);
  CHECK(average_precision({}, 3) == 0.0);
  CHECK(average_precision({}, 0) == 1.0);
  CHECK(average_precision({false}, 0) == 0.0);
  CHECK(std::abs(average_precision({false, true, false, true}, 4) - (0.25 * 0.5 + 0.25 * 0.5)) <
        1e-12);
}

TEST_CASE("thresholds") {
  const auto t = ap_thresholds();
  REQUIRE(t.size() == 10);
  CHECK(t.front() == 0.5);
  CHECK(std::abs(t.back() - 0.95) < 1e-12);
}

TEST_CASE("perfect and empty predictions") {
  Points3d pos = Points3d::Zero(10, 3);
  const std::vector<GroundTruthInstance> gts{make_gt_instance(0, 0, {0, 1, 2}, pos),
                                             make_gt_instance(1, 1, {5, 6}, pos)};
  std::vector<Prediction> perfect{{{0, 1, 2}, 0, 0.9}, {{5, 6}, 1, 0.8}};
  const EvalReport r = evaluate(perfect, gts, {0, 1});
  CHECK(r.ap == 1.0);
  CHECK(r.ap50 == 1.0);
  CHECK(r.ap25 == 1.0);
  CHECK(r.mprec50 == 1.0);
  CHECK(r.mrec50 == 1.0);
  const EvalReport z = evaluate({}, gts, {0, 1});
  CHECK(z.ap == 0.0);
  CHECK(z.ap50 == 0.0);
  CHECK(z.ap25 == 0.0);
  const EvalReport nothing = evaluate({}, {}, {0, 1});
  CHECK(nothing.ap == 1.0);
  CHECK(nothing.per_class.empty());
  const EvalReport absent = evaluate(perfect, gts, {0, 1, 7});
  CHECK(absent.per_class.size() == 2);
  CHECK(absent.ap == 1.0);
}

TEST_CASE("matching is greedy by confidence with lowest-id ties") {
  Points3d pos = Points3d::Zero(10, 3);
  const std::vector<GroundTruthInstance> gts{make_gt_instance(4, 0, {0, 1}, pos),
                                             make_gt_instance(2, 0, {2, 3}, pos)};
  const std::vector<Prediction> preds{{{1, 2}, 0, 0.4}, {{0, 1, 2, 3}, 0, 0.9}};
  const auto m = match_predictions(preds, gts, 0.25);
  REQUIRE(m.size() == 2);
  CHECK(m[0].prediction == 1);
  CHECK(m[0].gt_id == 2);
  CHECK(m[0].iou == 0.5);
  CHECK(m[1].prediction == 0);
  CHECK(m[1].gt_id == 4);
  CHECK(match_predictions(preds, gts, 0.6)[0].gt_id == std::nullopt);
}

TEST_CASE("evaluation equals the independent reference on random scenes") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 300; ++t) {
    const int classes = 1 + t % 3;
    std::vector<SceneInstances> scenes;
    const int num_scenes = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < num_scenes; ++s) {
      SceneInstances sc;
      sc.ground_truth = gen::disjoint_gts(rng, 60, classes);
      sc.predictions = gen::noisy_predictions(rng, sc.ground_truth, 60, classes);
      scenes.push_back(sc);
    }
    std::set<int> cls;
    for (int c = 0; c < classes; ++c) cls.insert(c);
    const EvalReport r = evaluate_batch(scenes, cls);
    const auto ref = oracle::evaluate(scenes, cls);
    REQUIRE(r.per_class.size() == ref.size());
    for (const auto& [c, m] : r.per_class) {
      CHECK(std::abs(m.ap - ref.at(c).ap) < 1e-12);
      CHECK(std::abs(m.ap50 - ref.at(c).ap50) < 1e-12);
      CHECK(std::abs(m.ap25 - ref.at(c).ap25) < 1e-12);
    }
    CHECK(r.ap <= r.ap50);
    CHECK(r.ap50 <= r.ap25);
  }
}

TEST_CASE("order invariance and duplicate suppression properties") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 100; ++t) {
    const auto gts = gen::disjoint_gts(rng, 50, 2);
    auto preds = gen::noisy_predictions(rng, gts, 50, 2);
    for (std::size_t i = 0; i < preds.size(); ++i)
      preds[i].confidence = 0.01 + 0.9 * static_cast<double>(i) / (preds.size() + 1.0);
    const EvalReport a = evaluate(preds, gts, {0, 1});
    auto shuffled = preds;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const EvalReport b = evaluate(shuffled, gts, {0, 1});
    CHECK(a.ap == b.ap);
    CHECK(a.ap50 == b.ap50);
    CHECK(a.ap25 == b.ap25);
    const auto matches = match_predictions(preds, gts, 0.5);
    for (const auto& m : matches) {
      if (!m.gt_id) continue;
      auto dup = preds;
      Prediction copy = preds[m.prediction];
      copy.confidence = 0.001;
      dup.push_back(copy);
      const EvalReport d = evaluate(dup, gts, {0, 1});
      CHECK(d.ap50 <= a.ap50 + 1e-12);
      break;
    }
  }
}

TEST_CASE("report serialization") {
  Points3d pos = Points3d::Zero(4, 3);
  const std::vector<GroundTruthInstance> gts{make_gt_instance(0, 3, {0, 1}, pos)};
  const std::vector<Prediction> preds{{{0, 1}, 3, 0.9}};
  const EvalReport r = evaluate(preds, gts, {3});
  const auto j = to_json(r);
  CHECK(j["ap50"] == 1.0);
  CHECK(j["per_class"]["3"]["num_gt"] == 1);
  CHECK(per_class_csv(r) ==
        "class,ap,ap50,ap25,precision50,recall50,num_gt,num_pred\n"
        "3,1,1,1,1,1,1,1\n");
}
