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

#ifndef PCDF_PIPELINE_HPP
#define PCDF_PIPELINE_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcdf/cache.hpp"
#include "pcdf/core.hpp"
#include "pcdf/critical_path.hpp"
#include "pcdf/model.hpp"
#include "pcdf/simnet.hpp"

// Request orchestration.
//
// Baseline runs retrieval -> pre-rank -> (pre, mid, post) strictly in order.
// Pcdf starts the pre-model at arrival, in parallel with retrieval and
// pre-rank, parks its output in the TTL cache, and fetches it once pre-rank
// completes. Both paths feed the same model math, so rankings agree bit for
// bit; only where the pre-model time lands on the critical path differs.

namespace pcdf::pipeline {

enum class Mode : std::uint8_t { Baseline, Pcdf };
enum class MissPolicy : std::uint8_t { Wait, ComputeInline };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(MissPolicy p) noexcept;

/// Channel names wired by Server.
inline constexpr const char* kIoPool = "io";
inline constexpr const char* kComputePool = "compute";
inline constexpr const char* kPreModelChannel = "pre_model";
inline constexpr const char* kCacheChannel = "cache";
inline constexpr const char* kMidModelChannel = "mid_model";
inline constexpr const char* kPostModelChannel = "post_model";

/// Salt for organic-result ids: the ASCII bytes of "organic".
inline constexpr std::uint64_t kOrganicSalt = 0x6F7267616E6963ULL;

struct PipelineConfig {
    Mode mode = Mode::Pcdf;

    simnet::LatencyDist retrieval_delay = simnet::LatencyDist::fixed(40'000'000);
    simnet::LatencyDist pre_rank_delay = simnet::LatencyDist::fixed(20'000'000);
    // Extra time held on the compute pool by each model stage, on top of the
    // real math. Zero by default; used to stub stage spans.
    simnet::LatencyDist pre_model_delay = simnet::LatencyDist::fixed(0);
    simnet::LatencyDist mid_model_delay = simnet::LatencyDist::fixed(0);
    simnet::LatencyDist post_model_delay = simnet::LatencyDist::fixed(0);
    std::uint64_t delay_seed = 0xD1A7;

    std::size_t candidates_per_request = 300;
    std::size_t organics_per_request = 10;
    std::size_t split_count = 1;

    Nanos cache_ttl = 60'000'000'000;
    cache::KeyKind cache_key = cache::KeyKind::SessionId;
    MissPolicy miss_policy = MissPolicy::Wait;
    Nanos request_deadline = 200'000'000;

    Nanos jitter_budget = 5'000'000;
    Nanos latency_budget = 60'000'000;

    model::ModelParams model;

    int io_capacity = 8;
    int compute_capacity = 4;
    simnet::ChannelConfig pre_model_channel{kPreModelChannel, kIoPool, kComputePool,
                                            simnet::LatencyDist::fixed(500'000), 0.0, 0xC4A1};
    simnet::ChannelConfig cache_channel{kCacheChannel, kIoPool, kIoPool,
                                        simnet::LatencyDist::fixed(500'000), 0.0, 0xC4A2};
    simnet::ChannelConfig mid_model_channel{kMidModelChannel, kIoPool, kComputePool,
                                            simnet::LatencyDist::fixed(500'000), 0.0, 0xC4A3};
    simnet::ChannelConfig post_model_channel{kPostModelChannel, kIoPool, kComputePool,
                                             simnet::LatencyDist::fixed(500'000), 0.0, 0xC4A4};

    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

enum class Stage : std::uint8_t {
    Retrieval,
    PreRank,
    PreModel,
    CachePut,
    CacheGet,
    MidModel,
    PostModel,
};
inline constexpr std::size_t kStageCount = 7;

std::string_view to_string(Stage s) noexcept;

struct Span {
    Nanos start = 0;
    Nanos end = 0;

    Nanos length() const noexcept { return end - start; }
};

struct HopRecord {
    std::string channel;
    Span span;
    bool failed = false;
};

/// Timestamps of one request's stages and hops. Model stage spans cover
/// the time held on the compute pool; mid_model spans every sub-request.
struct StageTrace {
    Nanos arrival = 0;
    std::array<std::optional<Span>, kStageCount> stages{};
    std::vector<HopRecord> hops;
    Nanos rank_start = 0;  // pre-rank completion
    Nanos rank_end = 0;    // ranked list ready
    bool cache_hit = false;
    bool waited_for_pre_model = false;
    bool computed_inline = false;

    const std::optional<Span>& stage(Stage s) const { return stages[static_cast<std::size_t>(s)]; }
    Nanos stage_ns(Stage s) const;

    Nanos end_to_end_ns() const noexcept;
    Nanos rank_stage_ns() const noexcept { return rank_end - rank_start; }
};

enum class FailureKind : std::uint8_t { Rpc, Deadline };

struct RequestFailure {
    FailureKind kind = FailureKind::Rpc;
    std::string detail;
};

struct ServeResult {
    RankedList ranked;
    StageTrace trace;
    std::optional<RequestFailure> failure;

    bool ok() const noexcept { return !failure.has_value(); }
};

struct RetrievalResult {
    std::vector<Candidate> candidates;
    std::vector<OrganicItem> organics;
};

/// Deterministic candidate and organic ids for a request, no delay.
RetrievalResult generate_candidates(const Request& request, const PipelineConfig& config);

/// Sleeps for the sampled retrieval delay, then generates candidates.
RetrievalResult retrieve(const Request& request, const PipelineConfig& config);

/// Keeps the ceil(n/2) candidates with the smallest mix64(item_id), in that
/// order. Throws ConfigError on empty input.
std::vector<Candidate> pre_rank_filter(std::span<const Candidate> candidates);

/// Sleeps for the sampled pre-rank delay, then filters.
std::vector<Candidate> pre_rank(std::span<const Candidate> candidates, const Request& request,
                                const PipelineConfig& config);

/// Contiguous order-preserving chunks; the first n mod k get one extra.
/// Throws ConfigError when k == 0.
std::vector<std::vector<Candidate>> split_candidates(std::span<const Candidate> candidates, std::size_t k);

/// Concatenates sub-request results in index order.
std::vector<ScoredLogit> merge_scored(const std::vector<std::vector<ScoredLogit>>& sub_results);

/// Deterministic per-request sample of a stage delay.
Nanos sample_delay(const simnet::LatencyDist& dist, std::uint64_t seed, std::uint64_t request_id, Stage stage);

/// Test seams. after_merge sees the merged logits before fusion.
struct ServeHooks {
    std::function<void(std::vector<ScoredLogit>&)> after_merge;
};

/// One serving deployment: the fabric, the pre-model cache, and the shared
/// model parameters. serve() is reentrant.
class Server {
public:
    explicit Server(PipelineConfig config, ServeHooks hooks = {});

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Dispatches on config().mode.
    ServeResult serve(const Request& request);
    ServeResult serve_baseline(const Request& request);
    ServeResult serve_pcdf(const Request& request);

    const PipelineConfig& config() const noexcept { return config_; }
    simnet::Fabric& fabric() noexcept { return fabric_; }
    cache::TtlCache& cache() noexcept { return cache_; }

private:
    class Recorder;

    std::optional<RequestFailure> rank_stage(const Request& request, std::span<const Candidate> survivors,
                                             std::span<const OrganicItem> organics, const UserRepr& user,
                                             Recorder& rec, RankedList& out);
    simnet::RpcResult<UserRepr> call_pre_model(const Request& request, Recorder& rec);
    cache::CacheKey cache_key_for(const Request& request) const noexcept;

    PipelineConfig config_;
    ServeHooks hooks_;
    simnet::Fabric fabric_;
    cache::TtlCache cache_;
};

/// Nominal stage durations for building predicted critical paths.
struct StageEstimates {
    Nanos pre_model = 0;
    Nanos mid_model = 0;
    Nanos post_model = 0;
    Nanos cache_op = 0;
};

/// Serialized request DAG with the config's mean delays and hop latencies.
StageGraph baseline_stage_graph(const PipelineConfig& config, const StageEstimates& est);

/// PCDF request DAG: the pre-model branch and the retrieval branch both
/// feed the successful cache fetch.
StageGraph pcdf_stage_graph(const PipelineConfig& config, const StageEstimates& est);

}  // namespace pcdf::pipeline

#endif  // PCDF_PIPELINE_HPP
