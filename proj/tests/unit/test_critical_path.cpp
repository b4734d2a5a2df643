// Copyright 2026 The pcdf-serving Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <vector>

#include "doctest.h"
#include "pcdf/critical_path.hpp"
#include "pcdf/pipeline.hpp"

using namespace pcdf;

TEST_CASE("chain sums its stages") {
    const std::vector<Nanos> d{5, 10, 3};
    const std::vector<DependencyEdge> e{{0, 1}, {1, 2}};
    CHECK(critical_path_latency(d, e) == 18);
}

TEST_CASE("parallel branches join at a sink") {
    const std::vector<Nanos> d{7, 5, 2};
    const std::vector<DependencyEdge> e{{0, 2}, {1, 2}};
    CHECK(critical_path_latency(d, e) == 9);
}

TEST_CASE("degenerate graphs") {
    CHECK(critical_path_latency(std::vector<Nanos>{}, std::vector<DependencyEdge>{}) == 0);
    CHECK(critical_path_latency(std::vector<Nanos>{4, 11}, std::vector<DependencyEdge>{}) == 11);
}

TEST_CASE("cycles and dangling edges are rejected") {
    const std::vector<Nanos> d{1, 1, 1};
    const std::vector<DependencyEdge> cycle{{0, 1}, {1, 2}, {2, 0}};
    CHECK_THROWS_AS(critical_path_latency(d, cycle), ConfigError);
    const std::vector<DependencyEdge> self{{1, 1}};
    CHECK_THROWS_AS(critical_path_latency(d, self), ConfigError);
    const std::vector<DependencyEdge> dangling{{0, 7}};
    CHECK_THROWS_AS(critical_path_latency(d, dangling), ConfigError);
}

TEST_CASE("stage graph reports the longest path") {
    StageGraph g;
    const auto a = g.add("a", 7);
    const auto b = g.add("b", 5);
    const auto sink = g.add("sink", 2);
    g.depends(sink, a);
    g.depends(sink, b);
    CHECK(g.critical_path_latency() == 9);
    CHECK(g.critical_path() == std::vector<std::size_t>{a, sink});
    CHECK_THROWS_AS(g.add("neg", -1), ConfigError);
}

namespace {

pipeline::PipelineConfig overlap_config(Nanos pre_model) {
    using simnet::LatencyDist;
    pipeline::PipelineConfig c;
    c.retrieval_delay = LatencyDist::fixed(20 * kMilli);
    c.pre_rank_delay = LatencyDist::fixed(10 * kMilli);
    c.pre_model_delay = LatencyDist::fixed(pre_model);
    c.mid_model_delay = LatencyDist::fixed(8 * kMilli);
    c.post_model_delay = LatencyDist::fixed(2 * kMilli);
    for (auto* ch : {&c.pre_model_channel, &c.cache_channel, &c.mid_model_channel,
                     &c.post_model_channel}) {
        ch->latency = LatencyDist::fixed(0);
    }
    return c;
}

}  // namespace

TEST_CASE("PCDF graph: pre-model hidden under its cover") {
    const auto g = pipeline::pcdf_stage_graph(overlap_config(25 * kMilli), {});
    CHECK(g.critical_path_latency() == 40 * kMilli);
}

TEST_CASE("PCDF graph: pre-model longer than its cover") {
    const auto g = pipeline::pcdf_stage_graph(overlap_config(45 * kMilli), {});
    CHECK(g.critical_path_latency() == 55 * kMilli);
}

TEST_CASE("baseline graph is the serialized sum") {
    const auto g = pipeline::baseline_stage_graph(overlap_config(25 * kMilli), {});
    CHECK(g.critical_path_latency() == 65 * kMilli);
}

TEST_CASE("hop costs and split fan-out") {
    auto c = overlap_config(25 * kMilli);
    c.mid_model_channel.latency = simnet::LatencyDist::fixed(kMilli);
    c.split_count = 4;
    const auto g = pipeline::pcdf_stage_graph(c, {});
    // Sub-requests run side by side, so one mid hop is on the path.
    CHECK(g.critical_path_latency() == 41 * kMilli);
}
