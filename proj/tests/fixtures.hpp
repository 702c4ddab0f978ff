// Copyright 2026 The kgaug Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Six-entity ranking fixture with hand-listed scores.
#pragma once

#include <vector>

#include "kgaug/embedding.hpp"
#include "kgaug/evaluator.hpp"

namespace kgaug::testing {

// One-dimensional RESCAL with R = [1]: score(h, t) = e_h * e_t, so the scores
// for head 0 are the embedding values themselves.
//   entity  0     1     2     3     4     5
//   e       1.0   0.9   0.5   0.95  0.2   0.9
struct MetricFixture {
  EmbeddingModel<double> model = EmbeddingModel<double>::rescal(6, 1, 1);
  std::vector<Triplet> train;
  std::vector<Triplet> test;
  // Filtered pessimistic ranks of `test`, worked out by hand:
  //   (0,r,2): 0, 1, 5 above; 3 and 4 filtered       -> 4
  //   (0,r,3): 0 above; 2 and 4 filtered              -> 2
  //   (0,r,4): 0, 1, 5 above; 2 and 3 filtered        -> 4
  //   (1,r,5): 0 and 3 above, 1 ties (0.81 = 0.81)    -> 4
  //   (5,r,0): nothing above; 1 filtered by train     -> 1
  std::vector<std::int64_t> ranks{4, 2, 4, 4, 1};
  double mrr = (0.25 + 0.5 + 0.25 + 0.25 + 1.0) / 5.0;
  double hits1 = 0.2, hits3 = 0.4, hits10 = 1.0;

  MetricFixture() {
    model.params().entity << 1.0, 0.9, 0.5, 0.95, 0.2, 0.9;
    model.params().relation << 1.0;
    const auto r = relation(0);
    train = {{entity(5), r, entity(1)}};
    test = {{entity(0), r, entity(2)},
            {entity(0), r, entity(3)},
            {entity(0), r, entity(4)},
            {entity(1), r, entity(5)},
            {entity(5), r, entity(0)}};
  }
};

}  // namespace kgaug::testing
