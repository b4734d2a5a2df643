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

#include "pcdf/report.hpp"

#include <fstream>
#include <stdexcept>

#include "pcdf/config.hpp"

namespace pcdf::report {

using nlohmann::json;

namespace {

json summary_json(const bench::LatencySummary& s) {
    return {{"mean", s.mean}, {"p50", s.p50}, {"p90", s.p90}, {"p99", s.p99}};
}

bench::LatencySummary summary_from(const json& j) {
    bench::LatencySummary s;
    s.mean = j.at("mean").get<double>();
    s.p50 = j.at("p50").get<Nanos>();
    s.p90 = j.at("p90").get<Nanos>();
    s.p99 = j.at("p99").get<Nanos>();
    return s;
}

const char* kind_name(simnet::PoolKind k) { return k == simnet::PoolKind::Io ? "io" : "compute"; }

}  // namespace

Format parse_format(const std::string& text) {
    if (text == "json") {
        return Format::Json;
    }
    if (text == "csv") {
        return Format::Csv;
    }
    throw ConfigError("format must be json or csv, got '" + text + "'");
}

json to_json(const bench::LatencyReport& report) {
    json results = json::array();
    for (const auto& c : report.cells) {
        json util = json::object();
        for (const auto& u : c.utilization) {
            util[u.name] = {{"kind", kind_name(u.kind)},
                            {"capacity", u.capacity},
                            {"busy_ns", u.busy_ns},
                            {"wall_ns", u.wall_ns},
                            {"utilization", u.utilization},
                            {"peak_occupancy", u.peak_occupancy}};
        }
        results.push_back({{"mode", std::string(pipeline::to_string(c.mode))},
                           {"seq_len", c.seq_len},
                           {"count", c.count},
                           {"failures", c.failures},
                           {"end_to_end", summary_json(c.end_to_end)},
                           {"rank_stage", summary_json(c.rank_stage)},
                           {"stages", c.stage_p50},
                           {"utilization", util},
                           {"cache",
                            {{"hits", c.cache.hits},
                             {"misses", c.cache.misses},
                             {"expirations", c.cache.expirations},
                             {"insertions", c.cache.insertions}}},
                           {"waited_for_pre_model", c.waited_for_pre_model},
                           {"computed_inline", c.computed_inline},
                           {"wall_ns", c.wall_ns},
                           {"latency_budget_ns", c.latency_budget},
                           {"within_latency_budget", c.within_budget}});
    }
    return {{"meta", {{"config_hash", report.config_hash}, {"seed", report.seed}, {"timestamp", report.timestamp}}},
            {"results", results}};
}

bench::LatencyReport from_json(const json& doc) {
    bench::LatencyReport r;
    const auto& meta = doc.at("meta");
    r.config_hash = meta.at("config_hash").get<std::string>();
    r.seed = meta.at("seed").get<std::uint64_t>();
    r.timestamp = meta.at("timestamp").get<std::string>();
    for (const auto& j : doc.at("results")) {
        bench::CellReport c;
        c.mode = config::parse_mode(j.at("mode").get<std::string>());
        c.seq_len = j.at("seq_len").get<std::size_t>();
        c.count = j.at("count").get<std::size_t>();
        c.failures = j.at("failures").get<std::size_t>();
        c.end_to_end = summary_from(j.at("end_to_end"));
        c.rank_stage = summary_from(j.at("rank_stage"));
        c.stage_p50 = j.at("stages").get<std::map<std::string, Nanos>>();
        for (const auto& [name, u] : j.at("utilization").items()) {
            simnet::PoolUtilization p;
            p.name = name;
            p.kind = u.at("kind").get<std::string>() == "io" ? simnet::PoolKind::Io : simnet::PoolKind::Compute;
            p.capacity = u.at("capacity").get<int>();
            p.busy_ns = u.at("busy_ns").get<Nanos>();
            p.wall_ns = u.at("wall_ns").get<Nanos>();
            p.utilization = u.at("utilization").get<double>();
            p.peak_occupancy = u.at("peak_occupancy").get<int>();
            c.utilization.push_back(p);
        }
        const auto& cache = j.at("cache");
        c.cache.hits = cache.at("hits").get<std::uint64_t>();
        c.cache.misses = cache.at("misses").get<std::uint64_t>();
        c.cache.expirations = cache.at("expirations").get<std::uint64_t>();
        c.cache.insertions = cache.at("insertions").get<std::uint64_t>();
        c.waited_for_pre_model = j.at("waited_for_pre_model").get<std::size_t>();
        c.computed_inline = j.at("computed_inline").get<std::size_t>();
        c.wall_ns = j.at("wall_ns").get<Nanos>();
        c.latency_budget = j.at("latency_budget_ns").get<Nanos>();
        c.within_budget = j.at("within_latency_budget").get<bool>();
        r.cells.push_back(std::move(c));
    }
    return r;
}

std::string to_csv(const bench::LatencyReport& report) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& c : report.cells) {
        out += std::string(pipeline::to_string(c.mode)) + ',' + std::to_string(c.seq_len) + ',' +
               std::to_string(c.count) + ',' + std::to_string(c.failures) + ',' + std::to_string(c.end_to_end.p50) +
               ',' + std::to_string(c.end_to_end.p99) + ',' + std::to_string(c.rank_stage.p50) + ',' +
               std::to_string(c.rank_stage.p99) + '\n';
    }
    return out;
}

void emit_report(const bench::LatencyReport& report, Format format, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open report file " + path.string() + " for writing");
    }
    if (format == Format::Json) {
        out << to_json(report).dump(2) << '\n';
    } else {
        out << to_csv(report);
    }
    out.flush();
    if (!out) {
        throw std::runtime_error("failed writing report file " + path.string());
    }
}

}  // namespace pcdf::report
