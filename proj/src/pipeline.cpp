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

#include "pcdf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <utility>

#include "pcdf/clock.hpp"

namespace pcdf::pipeline {

std::string_view to_string(Mode m) noexcept { return m == Mode::Baseline ? "baseline" : "pcdf"; }

std::string_view to_string(MissPolicy p) noexcept {
    return p == MissPolicy::Wait ? "wait" : "compute_inline";
}

std::string_view to_string(Stage s) noexcept {
    switch (s) {
        case Stage::Retrieval: return "retrieval";
        case Stage::PreRank: return "pre_rank";
        case Stage::PreModel: return "pre_model";
        case Stage::CachePut: return "cache_put";
        case Stage::CacheGet: return "cache_get";
        case Stage::MidModel: return "mid_model";
        case Stage::PostModel: return "post_model";
    }
    return "unknown";
}

void PipelineConfig::validate() const {
    for (const auto* d : {&retrieval_delay, &pre_rank_delay, &pre_model_delay, &mid_model_delay,
                          &post_model_delay}) {
        d->validate();
    }
    if (candidates_per_request < 1) {
        throw ConfigError("candidates_per_request must be >= 1");
    }
    if (split_count < 1) {
        throw ConfigError("split_count must be >= 1");
    }
    if (cache_ttl <= 0) {
        throw ConfigError("cache_ttl must be positive");
    }
    if (request_deadline <= 0) {
        throw ConfigError("request_deadline must be positive");
    }
    if (jitter_budget < 0 || latency_budget <= 0) {
        throw ConfigError("jitter_budget must be >= 0 and latency_budget positive");
    }
    if (io_capacity < 1 || compute_capacity < 1) {
        throw ConfigError("pool capacities must be >= 1");
    }
    model.validate();
    for (const auto* c : {&pre_model_channel, &cache_channel, &mid_model_channel, &post_model_channel}) {
        c->validate();
    }
}

Nanos StageTrace::stage_ns(Stage s) const {
    const auto& span = stage(s);
    return span ? span->length() : 0;
}

Nanos StageTrace::end_to_end_ns() const noexcept {
    Nanos lo = arrival;
    Nanos hi = std::max(arrival, rank_end);
    for (const auto& s : stages) {
        if (s) {
            lo = std::min(lo, s->start);
            hi = std::max(hi, s->end);
        }
    }
    for (const auto& h : hops) {
        lo = std::min(lo, h.span.start);
        hi = std::max(hi, h.span.end);
    }
    return hi - lo;
}

Nanos sample_delay(const simnet::LatencyDist& dist, std::uint64_t seed, std::uint64_t request_id, Stage stage) {
    const std::uint64_t counter = request_id * kStageCount + static_cast<std::uint64_t>(stage);
    return dist.sample(mix64(seed ^ mix64(counter)));
}

RetrievalResult generate_candidates(const Request& request, const PipelineConfig& config) {
    RetrievalResult out;
    out.candidates.reserve(config.candidates_per_request);
    for (std::size_t i = 0; i < config.candidates_per_request; ++i) {
        const ItemId id = mix64(request.request_id ^ mix64(i));
        out.candidates.push_back({id, 1000.0 + static_cast<double>(id % 1000)});
    }
    out.organics.reserve(config.organics_per_request);
    for (std::size_t j = 0; j < config.organics_per_request; ++j) {
        out.organics.push_back({mix64(request.request_id + kOrganicSalt + j)});
    }
    return out;
}

RetrievalResult retrieve(const Request& request, const PipelineConfig& config) {
    sleep_ns(sample_delay(config.retrieval_delay, config.delay_seed, request.request_id, Stage::Retrieval));
    return generate_candidates(request, config);
}

std::vector<Candidate> pre_rank_filter(std::span<const Candidate> candidates) {
    if (candidates.empty()) {
        throw ConfigError("pre_rank needs at least one candidate");
    }
    std::vector<Candidate> sorted(candidates.begin(), candidates.end());
    std::sort(sorted.begin(), sorted.end(), [](const Candidate& a, const Candidate& b) {
        const auto ka = mix64(a.item_id);
        const auto kb = mix64(b.item_id);
        return ka != kb ? ka < kb : a.item_id < b.item_id;
    });
    sorted.resize((sorted.size() + 1) / 2);
    return sorted;
}

std::vector<Candidate> pre_rank(std::span<const Candidate> candidates, const Request& request,
                                const PipelineConfig& config) {
    sleep_ns(sample_delay(config.pre_rank_delay, config.delay_seed, request.request_id, Stage::PreRank));
    return pre_rank_filter(candidates);
}

std::vector<std::vector<Candidate>> split_candidates(std::span<const Candidate> candidates, std::size_t k) {
    if (k == 0) {
        throw ConfigError("split count must be >= 1");
    }
    const std::size_t n = candidates.size();
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::vector<std::vector<Candidate>> chunks(k);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        chunks[i].assign(candidates.begin() + static_cast<std::ptrdiff_t>(offset),
                         candidates.begin() + static_cast<std::ptrdiff_t>(offset + len));
        offset += len;
    }
    return chunks;
}

std::vector<ScoredLogit> merge_scored(const std::vector<std::vector<ScoredLogit>>& sub_results) {
    std::size_t total = 0;
    for (const auto& r : sub_results) {
        total += r.size();
    }
    std::vector<ScoredLogit> merged;
    merged.reserve(total);
    for (const auto& r : sub_results) {
        merged.insert(merged.end(), r.begin(), r.end());
    }
    return merged;
}

// Collects spans from whichever thread finishes a stage.
class Server::Recorder {
public:
    explicit Recorder(Nanos arrival) { trace_.arrival = arrival; }

    void set(Stage s, Span span) {
        std::lock_guard lock(mu_);
        trace_.stages[static_cast<std::size_t>(s)] = span;
    }

    // Union with any span already recorded for the stage.
    void widen(Stage s, Span span) {
        std::lock_guard lock(mu_);
        auto& slot = trace_.stages[static_cast<std::size_t>(s)];
        if (slot) {
            slot->start = std::min(slot->start, span.start);
            slot->end = std::max(slot->end, span.end);
        } else {
            slot = span;
        }
    }

    void hop(const std::string& channel, Span span, bool failed) {
        std::lock_guard lock(mu_);
        trace_.hops.push_back({channel, span, failed});
    }

    template <typename F>
    void edit(F&& f) {
        std::lock_guard lock(mu_);
        f(trace_);
    }

    StageTrace take() {
        std::lock_guard lock(mu_);
        return std::move(trace_);
    }

private:
    std::mutex mu_;
    StageTrace trace_;
};

namespace {

// Runs `task` through `channel` and records the hop: from the call until the
// task starts on the destination pool, or until the failure is reported.
template <typename F>
auto traced_call(simnet::RpcChannel& channel, const std::string& name, F&& task,
                 std::function<void(const std::string&, Span, bool)> record) {
    const Nanos hop_start = now_ns();
    Nanos task_start = -1;
    auto result = channel.call([&] {
        task_start = now_ns();
        return task();
    });
    const Nanos hop_end = result.ok() ? task_start : now_ns();
    record(name, {hop_start, hop_end}, !result.ok());
    return result;
}

std::string describe(const simnet::RpcFailure& f) {
    return "rpc failure on channel '" + f.channel + "' (call #" + std::to_string(f.sequence) + ")";
}

}  // namespace

Server::Server(PipelineConfig config, ServeHooks hooks) : config_(std::move(config)), hooks_(std::move(hooks)) {
    config_.validate();
    fabric_.add_pool(kIoPool, simnet::PoolKind::Io, config_.io_capacity);
    fabric_.add_pool(kComputePool, simnet::PoolKind::Compute, config_.compute_capacity);
    fabric_.add_channel(config_.pre_model_channel);
    fabric_.add_channel(config_.cache_channel);
    fabric_.add_channel(config_.mid_model_channel);
    fabric_.add_channel(config_.post_model_channel);
}

cache::CacheKey Server::cache_key_for(const Request& request) const noexcept {
    return {config_.cache_key,
            config_.cache_key == cache::KeyKind::UserId ? request.user_id : request.session_id};
}

ServeResult Server::serve(const Request& request) {
    return config_.mode == Mode::Baseline ? serve_baseline(request) : serve_pcdf(request);
}

simnet::RpcResult<UserRepr> Server::call_pre_model(const Request& request, Recorder& rec) {
    auto& channel = fabric_.channel(config_.pre_model_channel.name);
    const Nanos extra =
        sample_delay(config_.pre_model_delay, config_.delay_seed, request.request_id, Stage::PreModel);
    return traced_call(
        channel, channel.config().name,
        [&] {
            const Nanos start = now_ns();
            sleep_ns(extra);
            UserRepr user = model::pre_forward(config_.model, request.long_behaviors);
            user.source_request = request.request_id;
            user.produced_at = now_ns();
            rec.widen(Stage::PreModel, {start, user.produced_at});
            return user;
        },
        [&rec](const std::string& c, Span s, bool f) { rec.hop(c, s, f); });
}

std::optional<RequestFailure> Server::rank_stage(const Request& request, std::span<const Candidate> survivors,
                                                 std::span<const OrganicItem> organics, const UserRepr& user,
                                                 Recorder& rec, RankedList& out) {
    auto hop = [&rec](const std::string& c, Span s, bool f) { rec.hop(c, s, f); };
    auto& mid_channel = fabric_.channel(config_.mid_model_channel.name);
    const Nanos mid_extra =
        sample_delay(config_.mid_model_delay, config_.delay_seed, request.request_id, Stage::MidModel);

    const auto chunks = split_candidates(survivors, config_.split_count);
    std::vector<std::vector<ScoredLogit>> results(chunks.size());
    std::vector<std::optional<simnet::RpcFailure>> failures(chunks.size());

    auto score_chunk = [&](std::size_t i) {
        if (chunks[i].empty()) {
            return;
        }
        auto r = traced_call(
            mid_channel, mid_channel.config().name,
            [&] {
                const Nanos start = now_ns();
                sleep_ns(mid_extra);
                auto scored = model::mid_forward_batch(config_.model, user, request, chunks[i]);
                rec.widen(Stage::MidModel, {start, now_ns()});
                return scored;
            },
            hop);
        if (r.ok()) {
            results[i] = std::move(r).value();
        } else {
            failures[i] = r.failure();
        }
    };

    std::vector<std::future<void>> pending;
    for (std::size_t i = 1; i < chunks.size(); ++i) {
        if (!chunks[i].empty()) {
            pending.push_back(std::async(std::launch::async, score_chunk, i));
        }
    }
    score_chunk(0);
    for (auto& f : pending) {
        f.get();
    }
    for (const auto& f : failures) {
        if (f) {
            return RequestFailure{FailureKind::Rpc, describe(*f)};
        }
    }

    auto merged = merge_scored(results);
    if (hooks_.after_merge) {
        hooks_.after_merge(merged);
    }

    auto& post_channel = fabric_.channel(config_.post_model_channel.name);
    const Nanos post_extra =
        sample_delay(config_.post_model_delay, config_.delay_seed, request.request_id, Stage::PostModel);
    auto ranked = traced_call(
        post_channel, post_channel.config().name,
        [&] {
            const Nanos start = now_ns();
            sleep_ns(post_extra);
            auto list = model::post_forward(config_.model, merged, organics);
            rec.set(Stage::PostModel, {start, now_ns()});
            return list;
        },
        hop);
    if (!ranked.ok()) {
        return RequestFailure{FailureKind::Rpc, describe(ranked.failure())};
    }
    out = std::move(ranked).value();
    return std::nullopt;
}

ServeResult Server::serve_baseline(const Request& request) {
    validate(request);
    Recorder rec(now_ns());
    auto& io = fabric_.pool(kIoPool);

    const auto retrieved = io.run([&] {
        const Nanos start = now_ns();
        auto r = retrieve(request, config_);
        rec.set(Stage::Retrieval, {start, now_ns()});
        return r;
    });
    const auto survivors = io.run([&] {
        const Nanos start = now_ns();
        auto s = pre_rank(retrieved.candidates, request, config_);
        rec.set(Stage::PreRank, {start, now_ns()});
        return s;
    });
    rec.edit([](StageTrace& t) { t.rank_start = now_ns(); });

    ServeResult result;
    auto user = call_pre_model(request, rec);
    if (!user.ok()) {
        result.failure = RequestFailure{FailureKind::Rpc, describe(user.failure())};
    } else {
        result.failure = rank_stage(request, survivors, retrieved.organics, user.value(), rec, result.ranked);
    }
    rec.edit([](StageTrace& t) { t.rank_end = now_ns(); });
    result.trace = rec.take();
    return result;
}

ServeResult Server::serve_pcdf(const Request& request) {
    validate(request);
    const Nanos arrival = now_ns();
    Recorder rec(arrival);
    auto& io = fabric_.pool(kIoPool);
    auto& cache_channel = fabric_.channel(config_.cache_channel.name);
    const auto key = cache_key_for(request);
    auto hop = [&rec](const std::string& c, Span s, bool f) { rec.hop(c, s, f); };

    // Branch A: pre-model, then park the result in the cache.
    std::promise<bool> parked;
    auto parked_future = parked.get_future();
    auto branch_a = std::async(std::launch::async, [&] {
        bool ok = false;
        try {
            auto user = call_pre_model(request, rec);
            if (user.ok()) {
                auto put = traced_call(
                    cache_channel, cache_channel.config().name,
                    [&] {
                        const Nanos start = now_ns();
                        cache_.put(key, user.value(), config_.cache_ttl, start);
                        rec.set(Stage::CachePut, {start, now_ns()});
                        return true;
                    },
                    hop);
                ok = put.ok();
            }
        } catch (...) {
            parked.set_value(false);
            throw;
        }
        parked.set_value(ok);
    });

    // Branch B: retrieval and pre-rank.
    const auto retrieved = io.run([&] {
        const Nanos start = now_ns();
        auto r = retrieve(request, config_);
        rec.set(Stage::Retrieval, {start, now_ns()});
        return r;
    });
    const auto survivors = io.run([&] {
        const Nanos start = now_ns();
        auto s = pre_rank(retrieved.candidates, request, config_);
        rec.set(Stage::PreRank, {start, now_ns()});
        return s;
    });
    rec.edit([](StageTrace& t) { t.rank_start = now_ns(); });

    auto fetch = [&] {
        return traced_call(
            cache_channel, cache_channel.config().name,
            [&] {
                const Nanos start = now_ns();
                auto v = cache_.get(key, start);
                // An entry left by another request under the same key is not ours.
                if (v && v->source_request != request.request_id) {
                    v.reset();
                }
                rec.widen(Stage::CacheGet, {start, now_ns()});
                return v;
            },
            hop);
    };

    ServeResult result;
    auto finish = [&]() -> ServeResult {
        rec.edit([](StageTrace& t) { t.rank_end = now_ns(); });
        branch_a.get();
        result.trace = rec.take();
        return std::move(result);
    };

    std::optional<UserRepr> user;
    auto first = fetch();
    if (!first.ok()) {
        result.failure = RequestFailure{FailureKind::Rpc, describe(first.failure())};
        return finish();
    }
    user = std::move(first).value();
    rec.edit([&](StageTrace& t) { t.cache_hit = user.has_value(); });

    if (!user && config_.miss_policy == MissPolicy::Wait) {
        rec.edit([](StageTrace& t) { t.waited_for_pre_model = true; });
        const auto deadline = std::chrono::steady_clock::time_point(
            std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                std::chrono::nanoseconds(arrival + config_.request_deadline)));
        if (parked_future.wait_until(deadline) == std::future_status::timeout) {
            result.failure = RequestFailure{FailureKind::Deadline, "pre-model result missed the request deadline"};
            return finish();
        }
        if (parked_future.get()) {
            auto second = fetch();
            if (!second.ok()) {
                result.failure = RequestFailure{FailureKind::Rpc, describe(second.failure())};
                return finish();
            }
            user = std::move(second).value();
        }
    }
    if (!user) {
        rec.edit([](StageTrace& t) { t.computed_inline = true; });
        auto computed = call_pre_model(request, rec);
        if (!computed.ok()) {
            result.failure = RequestFailure{FailureKind::Rpc, describe(computed.failure())};
            return finish();
        }
        user = std::move(computed).value();
    }

    result.failure = rank_stage(request, survivors, retrieved.organics, *user, rec, result.ranked);
    return finish();
}

StageGraph baseline_stage_graph(const PipelineConfig& config, const StageEstimates& est) {
    StageGraph g;
    const auto retrieval = g.add("retrieval", config.retrieval_delay.mean());
    const auto pre_rank = g.add("pre_rank", config.pre_rank_delay.mean());
    const auto pre_hop = g.add("hop:pre_model", config.pre_model_channel.latency.mean());
    const auto pre = g.add("pre_model", config.pre_model_delay.mean() + est.pre_model);
    const auto post_hop = g.add("hop:post_model", config.post_model_channel.latency.mean());
    const auto post = g.add("post_model", config.post_model_delay.mean() + est.post_model);
    g.depends(pre_rank, retrieval);
    g.depends(pre_hop, pre_rank);
    g.depends(pre, pre_hop);
    const std::size_t fanout =
        std::min(config.split_count, (config.candidates_per_request + 1) / 2);
    for (std::size_t i = 0; i < fanout; ++i) {
        const auto mid_hop = g.add("hop:mid_model[" + std::to_string(i) + "]",
                                   config.mid_model_channel.latency.mean());
        const auto mid = g.add("mid_model[" + std::to_string(i) + "]",
                               config.mid_model_delay.mean() + est.mid_model);
        g.depends(mid_hop, pre);
        g.depends(mid, mid_hop);
        g.depends(post_hop, mid);
    }
    g.depends(post, post_hop);
    return g;
}

StageGraph pcdf_stage_graph(const PipelineConfig& config, const StageEstimates& est) {
    StageGraph g;
    const Nanos cache_hop = config.cache_channel.latency.mean();
    // Branch A.
    const auto pre_hop = g.add("hop:pre_model", config.pre_model_channel.latency.mean());
    const auto pre = g.add("pre_model", config.pre_model_delay.mean() + est.pre_model);
    const auto put_hop = g.add("hop:cache_put", cache_hop);
    const auto put = g.add("cache_put", est.cache_op);
    g.depends(pre, pre_hop);
    g.depends(put_hop, pre);
    g.depends(put, put_hop);
    // Branch B.
    const auto retrieval = g.add("retrieval", config.retrieval_delay.mean());
    const auto pre_rank = g.add("pre_rank", config.pre_rank_delay.mean());
    g.depends(pre_rank, retrieval);
    // The fetch that returns the representation starts after both branches.
    const auto get_hop = g.add("hop:cache_get", cache_hop);
    const auto get = g.add("cache_get", est.cache_op);
    g.depends(get_hop, pre_rank);
    g.depends(get_hop, put);
    g.depends(get, get_hop);

    const auto post_hop = g.add("hop:post_model", config.post_model_channel.latency.mean());
    const auto post = g.add("post_model", config.post_model_delay.mean() + est.post_model);
    const std::size_t fanout =
        std::min(config.split_count, (config.candidates_per_request + 1) / 2);
    for (std::size_t i = 0; i < fanout; ++i) {
        const auto mid_hop = g.add("hop:mid_model[" + std::to_string(i) + "]",
                                   config.mid_model_channel.latency.mean());
        const auto mid = g.add("mid_model[" + std::to_string(i) + "]",
                               config.mid_model_delay.mean() + est.mid_model);
        g.depends(mid_hop, get);
        g.depends(mid, mid_hop);
        g.depends(post_hop, mid);
    }
    g.depends(post, post_hop);
    return g;
}

}  // namespace pcdf::pipeline
