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

#include "pcdf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numeric>
#include <thread>

#include "pcdf/clock.hpp"
#include "pcdf/config.hpp"
#include "pcdf/model.hpp"

namespace pcdf::bench {

using pipeline::Mode;
using pipeline::PipelineConfig;
using pipeline::Server;
using pipeline::ServeResult;
using pipeline::Stage;

void Workload::validate() const {
    if (num_requests < 1) {
        throw ConfigError("workload.requests must be >= 1");
    }
    if (seq_lens.empty()) {
        throw ConfigError("workload.seq_lens must not be empty");
    }
    for (auto t : seq_lens) {
        if (t > kMaxLongBehaviors) {
            throw ConfigError("sequence length " + std::to_string(t) + " exceeds " +
                              std::to_string(kMaxLongBehaviors));
        }
    }
    if (short_len > kMaxShortBehaviors) {
        throw ConfigError("workload.short_len exceeds " + std::to_string(kMaxShortBehaviors));
    }
    if (concurrency < 1) {
        throw ConfigError("workload.concurrency must be >= 1");
    }
}

Request make_request(const Workload& workload, std::size_t index, std::size_t seq_len) {
    Request r;
    r.request_id = index;
    r.user_id = mix64(workload.seed + index);
    r.session_id = mix64(r.user_id);
    r.long_behaviors.reserve(seq_len);
    for (std::size_t j = 0; j < seq_len; ++j) {
        r.long_behaviors.push_back(mix64(r.user_id ^ mix64(j)));
    }
    r.short_behaviors.reserve(workload.short_len);
    for (std::size_t j = 0; j < workload.short_len; ++j) {
        r.short_behaviors.push_back(mix64(r.user_id ^ mix64(j)));
    }
    r.context_id = mix64(workload.seed ^ index);
    return r;
}

std::vector<Request> generate_requests(const Workload& workload, std::size_t seq_len) {
    std::vector<Request> out;
    out.reserve(workload.num_requests);
    for (std::size_t i = 0; i < workload.num_requests; ++i) {
        out.push_back(make_request(workload, i, seq_len));
    }
    return out;
}

Nanos percentile_nearest_rank(std::span<const Nanos> sorted, double p) {
    if (sorted.empty()) {
        throw ConfigError("percentile of an empty sample");
    }
    if (!(p > 0.0 && p <= 100.0)) {
        throw ConfigError("percentile must lie in (0, 100]");
    }
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

LatencySummary summarize(std::vector<Nanos> samples) {
    LatencySummary s;
    if (samples.empty()) {
        return s;
    }
    std::sort(samples.begin(), samples.end());
    double total = 0.0;
    for (Nanos v : samples) {
        total += static_cast<double>(v);
    }
    s.mean = total / static_cast<double>(samples.size());
    s.p50 = percentile_nearest_rank(samples, 50.0);
    s.p90 = percentile_nearest_rank(samples, 90.0);
    s.p99 = percentile_nearest_rank(samples, 99.0);
    return s;
}

Nanos median(std::vector<Nanos> samples) {
    if (samples.empty()) {
        return 0;
    }
    std::sort(samples.begin(), samples.end());
    return percentile_nearest_rank(samples, 50.0);
}

namespace {

std::vector<ServeResult> serve_all(Server& server, const std::vector<Request>& requests, const Workload& workload) {
    std::vector<ServeResult> results(requests.size());
    if (workload.arrival == Arrival::Sequential) {
        for (std::size_t i = 0; i < requests.size(); ++i) {
            results[i] = server.serve(requests[i]);
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    const std::size_t workers = std::min(workload.concurrency, requests.size());
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
                results[i] = server.serve(requests[i]);
            }
        });
    }
    pool.clear();
    return results;
}

std::string timestamp_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

CellReport run_cell(const PipelineConfig& config, const Workload& workload, std::size_t seq_len,
                    const pipeline::ServeHooks& hooks) {
    workload.validate();
    Server server(config, hooks);
    const auto requests = generate_requests(workload, seq_len);

    const Nanos started = now_ns();
    const auto results = serve_all(server, requests, workload);
    const Nanos wall = std::max<Nanos>(now_ns() - started, 1);

    CellReport cell;
    cell.mode = config.mode;
    cell.seq_len = seq_len;
    cell.count = results.size();
    cell.wall_ns = wall;
    cell.latency_budget = config.latency_budget;

    std::vector<Nanos> e2e;
    std::vector<Nanos> rank;
    std::map<std::string, std::vector<Nanos>> spans;
    for (const auto& r : results) {
        if (!r.ok()) {
            ++cell.failures;
            continue;
        }
        e2e.push_back(r.trace.end_to_end_ns());
        rank.push_back(r.trace.rank_stage_ns());
        for (std::size_t s = 0; s < pipeline::kStageCount; ++s) {
            if (const auto& span = r.trace.stages[s]) {
                spans[std::string(pipeline::to_string(static_cast<Stage>(s)))].push_back(span->length());
            }
        }
        std::map<std::string, Nanos> hop_total;
        for (const auto& h : r.trace.hops) {
            hop_total["hop:" + h.channel] += h.span.length();
        }
        for (const auto& [k, v] : hop_total) {
            spans[k].push_back(v);
        }
        cell.waited_for_pre_model += r.trace.waited_for_pre_model ? 1 : 0;
        cell.computed_inline += r.trace.computed_inline ? 1 : 0;
    }
    cell.end_to_end = summarize(e2e);
    cell.rank_stage = summarize(rank);
    for (auto& [k, v] : spans) {
        cell.stage_p50[k] = median(std::move(v));
    }
    cell.utilization = server.fabric().utilization(wall).pools;
    cell.cache = server.cache().stats();
    cell.within_budget = !rank.empty() && cell.rank_stage.p99 <= config.latency_budget;
    return cell;
}

LatencyReport run_experiment(const PipelineConfig& config, const Workload& workload) {
    const Mode mode = config.mode;
    return run_sweep(config, workload, std::span<const Mode>(&mode, 1));
}

LatencyReport run_sweep(const PipelineConfig& config, const Workload& workload, std::span<const Mode> modes) {
    config.validate();
    workload.validate();
    LatencyReport report;
    report.config_hash = config::config_hash({config, workload});
    report.seed = workload.seed;
    report.timestamp = timestamp_utc();
    for (const Mode m : modes) {
        PipelineConfig c = config;
        c.mode = m;
        for (const std::size_t t : workload.seq_lens) {
            report.cells.push_back(run_cell(c, workload, t));
        }
    }
    return report;
}

std::vector<std::size_t> verify_seq_lens(const Workload& workload) {
    std::vector<std::size_t> lens{0, 1};
    for (auto t : workload.seq_lens) {
        if (std::find(lens.begin(), lens.end(), t) == lens.end()) {
            lens.push_back(t);
        }
    }
    return lens;
}

PipelineConfig timing_free(PipelineConfig config) {
    const auto zero = simnet::LatencyDist::fixed(0);
    config.retrieval_delay = zero;
    config.pre_rank_delay = zero;
    config.pre_model_delay = zero;
    config.mid_model_delay = zero;
    config.post_model_delay = zero;
    for (auto* c : {&config.pre_model_channel, &config.cache_channel, &config.mid_model_channel,
                    &config.post_model_channel}) {
        c->latency = zero;
        c->failure_prob = 0.0;
    }
    return config;
}

std::optional<std::pair<std::optional<ItemId>, std::string>> first_difference(const RankedList& expected,
                                                                              const RankedList& actual) {
    if (bit_identical(expected, actual)) {
        return std::nullopt;
    }
    std::map<ItemId, const ScoredCandidate*> by_id;
    for (const auto& e : actual.entries) {
        by_id[e.item_id] = &e;
    }
    auto bits = [](double x) { return bits_hex(x); };
    for (const auto& e : expected.entries) {
        const auto it = by_id.find(e.item_id);
        if (it == by_id.end()) {
            return std::pair{std::optional<ItemId>(e.item_id), std::string("item missing from output")};
        }
        const auto& a = *it->second;
        if (bits(e.logit) != bits(a.logit) || bits(e.ctr) != bits(a.ctr) || bits(e.final_score) != bits(a.final_score)) {
            return std::pair{std::optional<ItemId>(e.item_id),
                             "logit " + bits(e.logit) + " vs " + bits(a.logit) + ", final " + bits(e.final_score) +
                                 " vs " + bits(a.final_score)};
        }
    }
    if (expected.size() != actual.size()) {
        return std::pair{std::optional<ItemId>{}, "list sizes differ: " + std::to_string(expected.size()) + " vs " +
                                                      std::to_string(actual.size())};
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (expected.entries[i].item_id != actual.entries[i].item_id) {
            return std::pair{std::optional<ItemId>(expected.entries[i].item_id),
                             "order differs at position " + std::to_string(i)};
        }
    }
    return std::pair{std::optional<ItemId>{}, std::string("lists differ")};
}

EquivalenceResult verify_equivalence(const PipelineConfig& config, const Workload& workload,
                                     const pipeline::ServeHooks& pcdf_hooks) {
    workload.validate();
    const PipelineConfig base = timing_free(config);

    struct Path {
        std::string name;
        std::unique_ptr<Server> server;
    };
    std::vector<Path> paths;
    for (const Mode m : {Mode::Baseline, Mode::Pcdf}) {
        for (const std::size_t k : {std::size_t{1}, std::size_t{4}}) {
            PipelineConfig c = base;
            c.mode = m;
            c.split_count = k;
            const auto hooks = m == Mode::Pcdf ? pcdf_hooks : pipeline::ServeHooks{};
            paths.push_back({std::string(pipeline::to_string(m)) + " k=" + std::to_string(k),
                             std::make_unique<Server>(c, hooks)});
        }
    }

    EquivalenceResult result;
    const auto lens = verify_seq_lens(workload);
    for (std::size_t i = 0; i < workload.num_requests; ++i) {
        const std::size_t t = lens[i % lens.size()];
        const Request request = make_request(workload, i, t);
        const auto retrieved = pipeline::generate_candidates(request, base);
        const auto survivors = pipeline::pre_rank_filter(retrieved.candidates);
        const RankedList expected = model::monolithic_forward(base.model, request, survivors, retrieved.organics);

        for (auto& path : paths) {
            const auto served = path.server->serve(request);
            std::optional<std::pair<std::optional<ItemId>, std::string>> diff;
            if (!served.ok()) {
                diff = std::pair{std::optional<ItemId>{}, "request failed: " + served.failure->detail};
            } else {
                diff = first_difference(expected, served.ranked);
            }
            if (diff) {
                result.passed = false;
                result.divergence = Divergence{request.request_id, t, path.name, diff->first, diff->second, request};
                result.requests_checked = i + 1;
                return result;
            }
        }
        result.requests_checked = i + 1;
    }
    return result;
}

Nanos time_pre_forward(const model::ModelParams& params, const Workload& workload, std::size_t seq_len,
                       std::size_t reps) {
    const Request request = make_request(workload, 0, seq_len);
    std::vector<Nanos> spans;
    spans.reserve(reps);
    for (std::size_t r = 0; r < std::max<std::size_t>(reps, 1); ++r) {
        const Nanos start = now_ns();
        const auto user = model::pre_forward(params, request.long_behaviors);
        spans.push_back(now_ns() - start);
        if (user.vector.size() != params.dim) {
            throw ConfigError("pre_forward returned a vector of the wrong length");
        }
    }
    return median(std::move(spans));
}

std::vector<CalibrationPoint> calibrate(const PipelineConfig& config, const Workload& workload, std::size_t reps) {
    config.validate();
    workload.validate();
    std::vector<CalibrationPoint> points;
    const Nanos cover = config.retrieval_delay.mean() + config.pre_rank_delay.mean();
    for (const std::size_t t : workload.seq_lens) {
        CalibrationPoint p;
        p.seq_len = t;
        p.pre_forward_p50 = time_pre_forward(config.model, workload, t, reps);
        p.required_ns = config.pre_model_channel.latency.mean() + config.pre_model_delay.mean() +
                        p.pre_forward_p50 + config.cache_channel.latency.mean();
        p.cover_ns = cover;
        p.covered = p.required_ns <= cover;
        points.push_back(p);
    }
    return points;
}

}  // namespace pcdf::bench
