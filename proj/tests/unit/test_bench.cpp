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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pcdf/bench.hpp"
#include "pcdf/config.hpp"
#include "pcdf/report.hpp"

using namespace pcdf;
using namespace pcdf::bench;
using pipeline::Mode;
using simnet::LatencyDist;

namespace {

pipeline::PipelineConfig quick_pipeline() {
    pipeline::PipelineConfig c;
    c.retrieval_delay = LatencyDist::fixed(kMilli);
    c.pre_rank_delay = LatencyDist::fixed(kMilli);
    c.candidates_per_request = 30;
    c.model.dim = 8;
    for (auto* ch : {&c.pre_model_channel, &c.cache_channel, &c.mid_model_channel,
                     &c.post_model_channel}) {
        ch->latency = LatencyDist::fixed(100 * kMicro);
    }
    return c;
}

Workload quick_workload(std::size_t n) {
    Workload w;
    w.num_requests = n;
    w.seq_lens = {8, 32};
    w.short_len = 5;
    return w;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("request generation") {
    Workload w;
    const auto reqs = generate_requests(w, 128);
    REQUIRE(reqs.size() == 200);
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        const auto& r = reqs[i];
        CHECK(r.request_id == i);
        CHECK(r.long_behaviors.size() == 128);
        CHECK(r.short_behaviors.size() == 50);
        CHECK(std::equal(r.short_behaviors.begin(), r.short_behaviors.end(), r.long_behaviors.begin()));
        CHECK(r.session_id == mix64(r.user_id));
    }
    // Same user and prefix across lengths; only the tail grows.
    const auto longer = make_request(w, 5, 512);
    CHECK(longer.user_id == reqs[5].user_id);
    CHECK(std::equal(reqs[5].long_behaviors.begin(), reqs[5].long_behaviors.end(), longer.long_behaviors.begin()));
    CHECK(make_request(w, 3, 0).long_behaviors.empty());
    CHECK(make_request(w, 3, 2).short_behaviors.size() == 50);
    w.seq_lens = {5000};
    CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("nearest-rank percentiles") {
    const std::vector<Nanos> ten{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(percentile_nearest_rank(ten, 50) == 5);
    CHECK(percentile_nearest_rank(ten, 90) == 9);
    CHECK(percentile_nearest_rank(ten, 99) == 10);
    CHECK(percentile_nearest_rank(ten, 100) == 10);
    CHECK(percentile_nearest_rank(ten, 1) == 1);
    CHECK_THROWS_AS(percentile_nearest_rank(std::vector<Nanos>{}, 50), ConfigError);
    CHECK_THROWS_AS(percentile_nearest_rank(ten, 0), ConfigError);
    CHECK_THROWS_AS(percentile_nearest_rank(ten, 101), ConfigError);

    std::mt19937_64 rng(5);
    for (int round = 0; round < 300; ++round) {
        const std::size_t n = 1 + rng() % 200;
        std::vector<Nanos> v(n);
        for (auto& x : v) {
            x = static_cast<Nanos>(rng() % 1000);
        }
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        for (double p : {50.0, 90.0, 99.0, 33.3}) {
            // Brute force: smallest sample with at least p% of samples <= it.
            Nanos brute = sorted.back();
            for (Nanos cand : sorted) {
                const auto at_most = std::count_if(v.begin(), v.end(), [cand](Nanos x) { return x <= cand; });
                if (static_cast<double>(at_most) * 100.0 >= p * static_cast<double>(n)) {
                    brute = cand;
                    break;
                }
            }
            CHECK(percentile_nearest_rank(sorted, p) == brute);
        }
        const auto s = summarize(v);
        CHECK(s.p50 <= s.p90);
        CHECK(s.p90 <= s.p99);
    }
    CHECK(summarize({}).p99 == 0);
}

TEST_CASE("run_cell smoke") {
    const auto c = quick_pipeline();
    const auto cell = run_cell(c, quick_workload(10), 32);
    CHECK(cell.count == 10);
    CHECK(cell.failures == 0);
    CHECK(cell.end_to_end.p50 >= cell.rank_stage.p50);
    CHECK(cell.end_to_end.p50 <= cell.end_to_end.p99);
    CHECK(cell.stage_p50.count("retrieval") == 1);
    CHECK(cell.stage_p50.count("hop:cache") == 1);
    CHECK(cell.cache.insertions == 10);
    CHECK(cell.wall_ns > 0);
    for (const auto& u : cell.utilization) {
        CHECK(u.utilization >= 0.0);
        CHECK(u.utilization <= 1.0);
    }
}

TEST_CASE("closed-loop arrival") {
    auto w = quick_workload(40);
    w.arrival = Arrival::ClosedLoop;
    w.concurrency = 6;
    const auto cell = run_cell(quick_pipeline(), w, 8);
    CHECK(cell.count == 40);
    CHECK(cell.failures == 0);
    for (const auto& u : cell.utilization) {
        CHECK(u.peak_occupancy <= u.capacity);
        CHECK(u.busy_ns <= u.capacity * u.wall_ns);
    }
}

TEST_CASE("certain failure fails every request") {
    auto c = quick_pipeline();
    c.mid_model_channel.failure_prob = 1.0;
    const auto cell = run_cell(c, quick_workload(8), 8);
    CHECK(cell.count == 8);
    CHECK(cell.failures == 8);
}

TEST_CASE("sweep covers modes then lengths") {
    const std::vector<Mode> modes{Mode::Baseline, Mode::Pcdf};
    const auto r = run_sweep(quick_pipeline(), quick_workload(3), modes);
    REQUIRE(r.cells.size() == 4);
    CHECK(r.cells[0].mode == Mode::Baseline);
    CHECK(r.cells[1].seq_len == 32);
    CHECK(r.cells[2].mode == Mode::Pcdf);
}

TEST_CASE("equivalence verification") {
    const auto c = quick_pipeline();
    auto w = quick_workload(30);
    CHECK(verify_seq_lens(w) == std::vector<std::size_t>{0, 1, 8, 32});
    const auto ok = verify_equivalence(c, w);
    CHECK(ok.passed);
    CHECK(ok.requests_checked == 30);

    const auto free = timing_free(c);
    CHECK(free.retrieval_delay.hi == 0);
    CHECK(free.mid_model_channel.latency.hi == 0);

    // One logit nudged by one ulp must be caught and named.
    ItemId nudged = 0;
    pipeline::ServeHooks hooks;
    hooks.after_merge = [&nudged](std::vector<ScoredLogit>& logits) {
        if (!logits.empty()) {
            auto& victim = logits[logits.size() / 2];
            victim.logit = std::nextafter(victim.logit, INFINITY);
            nudged = victim.item_id;
        }
    };
    const auto bad = verify_equivalence(c, w, hooks);
    CHECK_FALSE(bad.passed);
    REQUIRE(bad.divergence);
    REQUIRE(bad.divergence->item_id);
    CHECK(*bad.divergence->item_id == nudged);
    CHECK(bad.divergence->path.find("pcdf") != std::string::npos);
}

TEST_CASE("first_difference") {
    RankedList a;
    a.entries = {{1, 0.5, 0.6, 0.7}, {2, 0.1, 0.2, 0.3}};
    auto b = a;
    CHECK_FALSE(first_difference(a, b));
    b.entries[1].final_score = std::nextafter(0.3, 1.0);
    const auto d = first_difference(a, b);
    REQUIRE(d);
    CHECK(d->first == std::optional<ItemId>(2));
    b.entries.pop_back();
    CHECK(first_difference(a, b));
}

TEST_CASE("CSV output") {
    LatencyReport empty;
    const auto header_only = report::to_csv(empty);
    CHECK(header_only == std::string(report::kCsvHeader) + "\n");

    LatencyReport one;
    CellReport c;
    c.mode = Mode::Baseline;
    c.seq_len = 256;
    c.count = 200;
    c.failures = 1;
    c.end_to_end = {1.5, 100, 150, 200};
    c.rank_stage = {1.0, 10, 15, 20};
    one.cells.push_back(c);
    const auto csv = report::to_csv(one);
    CHECK(count_lines(csv) == 2);
    CHECK(csv.find("baseline,256,200,1,100,200,10,20\n") != std::string::npos);
}

TEST_CASE("JSON round trip") {
    const auto c = quick_pipeline();
    auto r = run_experiment(c, quick_workload(4));
    r.config_hash = "0123456789abcdef";
    r.seed = 99;
    r.timestamp = "2026-10-15T00:00:00Z";
    const auto doc = report::to_json(r);
    CHECK(doc.contains("meta"));
    CHECK(doc.at("results").size() == 2);
    const auto back = report::from_json(nlohmann::json::parse(doc.dump()));
    CHECK(report::to_json(back) == doc);
    CHECK(back.cells[1].end_to_end.mean == r.cells[1].end_to_end.mean);

    const auto path = std::filesystem::temp_directory_path() / "pcdf_report_test.json";
    report::emit_report(r, report::Format::Json, path);
    std::ifstream in(path);
    CHECK(report::to_json(report::from_json(nlohmann::json::parse(in))) == doc);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(report::emit_report(r, report::Format::Csv, "/nonexistent/dir/x.csv"), std::runtime_error);
    CHECK(report::parse_format("csv") == report::Format::Csv);
    CHECK_THROWS(report::parse_format("xml"));
}

TEST_CASE("config parsing") {
    const auto parsed = config::parse(
        "# comment\n"
        "mode = baseline\n"
        "retrieval_delay = 20ms\n"
        "pre_rank_delay = uniform(5ms, 15ms)\n"
        "channel.mid_model.failure_prob = 0.01\n"
        "split_count = 4\n"
        "workload.seq_lens = 128, 512\n"
        "model.kernel = reference\n");
    CHECK(parsed.pipeline.mode == Mode::Baseline);
    CHECK(parsed.pipeline.retrieval_delay == LatencyDist::fixed(20 * kMilli));
    CHECK(parsed.pipeline.pre_rank_delay == LatencyDist::uniform(5 * kMilli, 15 * kMilli));
    CHECK(parsed.pipeline.mid_model_channel.failure_prob == 0.01);
    CHECK(parsed.pipeline.split_count == 4);
    CHECK(parsed.workload.seq_lens == std::vector<std::size_t>{128, 512});
    CHECK(parsed.pipeline.model.kernel == model::AttentionKernel::Reference);

    CHECK_THROWS_AS(config::parse("no_such_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(config::parse("split_count = 2\nsplit_count = 3\n"), ConfigError);
    CHECK_THROWS_AS(config::parse("split_count\n"), ConfigError);
    CHECK_THROWS_AS(config::parse("retrieval_delay = 20\n"), ConfigError);
    CHECK_THROWS_AS(config::parse("split_count = 0\n"), ConfigError);

    CHECK(config::parse_duration("0") == 0);
    CHECK(config::parse_duration("1500us") == 1'500'000);
    CHECK(config::parse_duration("2s") == 2 * kSecond);
    CHECK(config::format_duration(20 * kMilli) == "20ms");

    const auto text = config::to_text(parsed);
    const auto again = config::parse(text);
    CHECK(config::to_text(again) == text);
    CHECK(config::config_hash(again) == config::config_hash(parsed));
    CHECK(config::config_hash(parsed).size() == 16);
    CHECK(config::config_hash(parsed) != config::config_hash(config::ExperimentConfig{}));
    CHECK(config::known_keys().size() == static_cast<std::size_t>(count_lines(config::to_text({}))));
}
