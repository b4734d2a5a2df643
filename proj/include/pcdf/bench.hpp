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

#ifndef PCDF_BENCH_HPP
#define PCDF_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcdf/cache.hpp"
#include "pcdf/core.hpp"
#include "pcdf/pipeline.hpp"
#include "pcdf/simnet.hpp"

namespace pcdf::bench {

enum class Arrival : std::uint8_t { Sequential, ClosedLoop };

struct Workload {
    std::size_t num_requests = 200;
    std::vector<std::size_t> seq_lens{128, 256, 512, 1024};
    std::size_t short_len = 50;
    Arrival arrival = Arrival::Sequential;
    std::size_t concurrency = 16;  // ClosedLoop only
    std::uint64_t seed = 1;

    void validate() const;
};

/// Request `index` of the stream for sequence length `seq_len`. The short
/// sequence is the most recent prefix of the long one's generator, so for
/// seq_len >= short_len it equals the first short_len long behaviors.
Request make_request(const Workload& workload, std::size_t index, std::size_t seq_len);

std::vector<Request> generate_requests(const Workload& workload, std::size_t seq_len);

struct LatencySummary {
    double mean = 0.0;
    Nanos p50 = 0;
    Nanos p90 = 0;
    Nanos p99 = 0;
};

/// Nearest-rank percentile of ascending samples: index ceil(p/100 * n) - 1.
/// Throws ConfigError on empty input or p outside (0, 100].
Nanos percentile_nearest_rank(std::span<const Nanos> sorted, double p);

/// Sorts a copy; all zero for empty input.
LatencySummary summarize(std::vector<Nanos> samples);

Nanos median(std::vector<Nanos> samples);

struct CellReport {
    pipeline::Mode mode = pipeline::Mode::Pcdf;
    std::size_t seq_len = 0;
    std::size_t count = 0;
    std::size_t failures = 0;
    LatencySummary end_to_end;
    LatencySummary rank_stage;
    std::map<std::string, Nanos> stage_p50;  // stage name or "hop:<channel>"
    std::vector<simnet::PoolUtilization> utilization;
    cache::CacheStats cache;
    std::size_t waited_for_pre_model = 0;
    std::size_t computed_inline = 0;
    Nanos wall_ns = 0;
    Nanos latency_budget = 0;
    bool within_budget = false;  // rank-stage p99 <= latency_budget
};

struct LatencyReport {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string timestamp;
    std::vector<CellReport> cells;
};

/// Serves every request of one sequence length through a fresh deployment.
CellReport run_cell(const pipeline::PipelineConfig& config, const Workload& workload, std::size_t seq_len,
                    const pipeline::ServeHooks& hooks = {});

/// Every seq_len of the workload, in config.mode.
LatencyReport run_experiment(const pipeline::PipelineConfig& config, const Workload& workload);

/// Every (mode, seq_len) pair, modes outermost.
LatencyReport run_sweep(const pipeline::PipelineConfig& config, const Workload& workload,
                        std::span<const pipeline::Mode> modes);

struct Divergence {
    std::uint64_t request_id = 0;
    std::size_t seq_len = 0;
    std::string path;  // e.g. "pcdf k=4"
    std::optional<ItemId> item_id;
    std::string detail;
    Request request;
};

struct EquivalenceResult {
    bool passed = true;
    std::size_t requests_checked = 0;
    std::optional<Divergence> divergence;
};

/// Sequence lengths verify cycles through: 0, 1, then the workload's.
std::vector<std::size_t> verify_seq_lens(const Workload& workload);

/// The config verify actually serves with: injected delays, hop latencies
/// and failure probabilities zeroed. The math is untouched.
pipeline::PipelineConfig timing_free(pipeline::PipelineConfig config);

/// Checks monolithic, baseline and pcdf at k = 1 and 4 agree bit for bit on
/// every request. `pcdf_hooks` is installed on the pcdf deployments only.
EquivalenceResult verify_equivalence(const pipeline::PipelineConfig& config, const Workload& workload,
                                     const pipeline::ServeHooks& pcdf_hooks = {});

/// First difference between two lists, described; nullopt when identical.
std::optional<std::pair<std::optional<ItemId>, std::string>> first_difference(const RankedList& expected,
                                                                              const RankedList& actual);

struct CalibrationPoint {
    std::size_t seq_len = 0;
    Nanos pre_forward_p50 = 0;
    Nanos required_ns = 0;  // pre-model hop + span + cache hop
    Nanos cover_ns = 0;     // retrieval + pre-rank
    bool covered = false;
};

/// Times pre_forward directly per workload seq_len (median of `reps`).
std::vector<CalibrationPoint> calibrate(const pipeline::PipelineConfig& config, const Workload& workload,
                                        std::size_t reps = 9);

/// Median pre_forward wall time for one length, timed outside the pipeline.
Nanos time_pre_forward(const model::ModelParams& params, const Workload& workload, std::size_t seq_len,
                       std::size_t reps);

}  // namespace pcdf::bench

#endif  // PCDF_BENCH_HPP
