// Copyright 2026 The Scalpel Authors
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

#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "scalpel/rng.hpp"
#include "scalpel/thread_pool.hpp"

using namespace scalpel;

TEST_CASE("pcg32 reference sequence") {
  // First outputs of the canonical pcg32 demo seeding (42, 54).
  Pcg32 rng(42u, 54u);
  CHECK(rng.next_u32() == 0xa15c02b7u);
  CHECK(rng.next_u32() == 0x7b47f409u);
  CHECK(rng.next_u32() == 0xba1d3330u);
}

TEST_CASE("streams are reproducible and distinct") {
  Pcg32 a = make_stream(7, 0);
  Pcg32 b = make_stream(7, 0);
  Pcg32 c = make_stream(7, 1);
  bool all_equal = true, any_equal_cross = false;
  for (int i = 0; i < 64; ++i) {
    uint32_t va = a.next_u32();
    all_equal = all_equal && va == b.next_u32();
    any_equal_cross = any_equal_cross || va == c.next_u32();
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_cross);
}

TEST_CASE("uniform and normal moments") {
  Pcg32 rng = make_stream(123, 9);
  const int n = 200000;
  double usum = 0.0, nsum = 0.0, nsq = 0.0;
  for (int i = 0; i < n; ++i) {
    usum += rng.uniform(0.0, 1.0);
    double z = rng.normal();
    nsum += z;
    nsq += z * z;
  }
  CHECK(usum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(nsum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(nsq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("parallel_for covers every index exactly once") {
  ThreadPool pool(4);
  std::vector<int> hits(10001, 0);
  pool.parallel_for(10001, 64, [&](int64_t b, int64_t e) {
    for (int64_t i = b; i < e; ++i) hits[i] += 1;
  });
  CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 10001);
  CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
  CHECK(*std::max_element(hits.begin(), hits.end()) == 1);
}

TEST_CASE("chunk boundaries do not depend on worker count") {
  auto run = [](int workers) {
    ThreadPool pool(workers);
    std::vector<std::pair<int64_t, int64_t>> chunks(7);
    pool.parallel_for(700, 100, [&](int64_t b, int64_t e) { chunks[b / 100] = {b, e}; });
    return chunks;
  };
  CHECK(run(1) == run(3));
  CHECK(run(2) == run(8));
}

TEST_CASE("pool survives repeated jobs") {
  ThreadPool pool(3);
  for (int round = 0; round < 200; ++round) {
    std::vector<int64_t> out(97, -1);
    pool.parallel_for(97, 8, [&](int64_t b, int64_t e) {
      for (int64_t i = b; i < e; ++i) out[i] = i;
    });
    for (int64_t i = 0; i < 97; ++i) REQUIRE(out[i] == i);
  }
}
