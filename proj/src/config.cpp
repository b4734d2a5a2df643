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

#include "pcdf/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace pcdf::config {

namespace {

using pipeline::PipelineConfig;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::uint64_t parse_u64(std::string_view text) {
    text = trim(text);
    int base = 10;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        base = 16;
        text.remove_prefix(2);
    }
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, base);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError("expected an unsigned integer, got '" + std::string(text) + "'");
    }
    return v;
}

double parse_double(std::string_view text) {
    text = trim(text);
    const std::string s(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) {
        throw ConfigError("expected a finite number, got '" + s + "'");
    }
    return v;
}

std::string format_double(double v) {
    char buf[32];
    // Shortest form that round-trips through stod.
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
    std::vector<std::size_t> out;
    std::string_view rest = trim(text);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = trim(rest.substr(0, comma));
        out.push_back(static_cast<std::size_t>(parse_u64(item)));
        if (comma == std::string_view::npos) {
            break;
        }
        rest = rest.substr(comma + 1);
    }
    return out;
}

std::string join(const std::vector<std::size_t>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += std::to_string(xs[i]);
    }
    return out;
}

struct Field {
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Member>
Field latency_field(Member member) {
    return {[member](ExperimentConfig& c, std::string_view v) { c.pipeline.*member = parse_latency(v); },
            [member](const ExperimentConfig& c) { return format_latency(c.pipeline.*member); }};
}

template <typename Member>
Field duration_field(Member member) {
    return {[member](ExperimentConfig& c, std::string_view v) { c.pipeline.*member = parse_duration(v); },
            [member](const ExperimentConfig& c) { return format_duration(c.pipeline.*member); }};
}

template <typename Get>
Field size_field(Get ref) {
    return {[ref](ExperimentConfig& c, std::string_view v) { ref(c) = static_cast<std::size_t>(parse_u64(v)); },
            [ref](const ExperimentConfig& c) { return std::to_string(ref(c)); }};
}

template <typename Get>
Field seed_field(Get ref) {
    return {[ref](ExperimentConfig& c, std::string_view v) { ref(c) = parse_u64(v); },
            [ref](const ExperimentConfig& c) { return hex(ref(c)); }};
}

template <typename Get>
Field int_field(Get ref) {
    return {[ref](ExperimentConfig& c, std::string_view v) {
                const auto n = parse_u64(v);
                if (n > 1'000'000) {
                    throw ConfigError("value out of range: " + std::string(v));
                }
                ref(c) = static_cast<int>(n);
            },
            [ref](const ExperimentConfig& c) { return std::to_string(ref(c)); }};
}

void add_channel_fields(std::map<std::string, Field>& f, const std::string& name,
                        simnet::ChannelConfig PipelineConfig::*member) {
    const std::string p = "channel." + name + ".";
    f[p + "latency"] = {[member](ExperimentConfig& c, std::string_view v) { (c.pipeline.*member).latency = parse_latency(v); },
                        [member](const ExperimentConfig& c) { return format_latency((c.pipeline.*member).latency); }};
    f[p + "failure_prob"] = {
        [member](ExperimentConfig& c, std::string_view v) { (c.pipeline.*member).failure_prob = parse_double(v); },
        [member](const ExperimentConfig& c) { return format_double((c.pipeline.*member).failure_prob); }};
    f[p + "seed"] = {[member](ExperimentConfig& c, std::string_view v) { (c.pipeline.*member).seed = parse_u64(v); },
                     [member](const ExperimentConfig& c) { return hex((c.pipeline.*member).seed); }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> f;
        f["mode"] = {[](ExperimentConfig& c, std::string_view v) { c.pipeline.mode = parse_mode(v); },
                     [](const ExperimentConfig& c) { return std::string(pipeline::to_string(c.pipeline.mode)); }};
        f["retrieval_delay"] = latency_field(&PipelineConfig::retrieval_delay);
        f["pre_rank_delay"] = latency_field(&PipelineConfig::pre_rank_delay);
        f["pre_model_delay"] = latency_field(&PipelineConfig::pre_model_delay);
        f["mid_model_delay"] = latency_field(&PipelineConfig::mid_model_delay);
        f["post_model_delay"] = latency_field(&PipelineConfig::post_model_delay);
        f["delay_seed"] = seed_field([](auto& c) -> auto& { return c.pipeline.delay_seed; });
        f["candidates_per_request"] =
            size_field([](auto& c) -> auto& { return c.pipeline.candidates_per_request; });
        f["organics_per_request"] =
            size_field([](auto& c) -> auto& { return c.pipeline.organics_per_request; });
        f["split_count"] = size_field([](auto& c) -> auto& { return c.pipeline.split_count; });
        f["cache_ttl"] = duration_field(&PipelineConfig::cache_ttl);
        f["cache_key"] = {[](ExperimentConfig& c, std::string_view v) {
                              const auto s = lower(trim(v));
                              if (s == "session") {
                                  c.pipeline.cache_key = cache::KeyKind::SessionId;
                              } else if (s == "user") {
                                  c.pipeline.cache_key = cache::KeyKind::UserId;
                              } else {
                                  throw ConfigError("cache_key must be session or user");
                              }
                          },
                          [](const ExperimentConfig& c) {
                              return std::string(c.pipeline.cache_key == cache::KeyKind::UserId ? "user" : "session");
                          }};
        f["miss_policy"] = {[](ExperimentConfig& c, std::string_view v) {
                                const auto s = lower(trim(v));
                                if (s == "wait") {
                                    c.pipeline.miss_policy = pipeline::MissPolicy::Wait;
                                } else if (s == "compute_inline") {
                                    c.pipeline.miss_policy = pipeline::MissPolicy::ComputeInline;
                                } else {
                                    throw ConfigError("miss_policy must be wait or compute_inline");
                                }
                            },
                            [](const ExperimentConfig& c) { return std::string(pipeline::to_string(c.pipeline.miss_policy)); }};
        f["request_deadline"] = duration_field(&PipelineConfig::request_deadline);
        f["jitter_budget"] = duration_field(&PipelineConfig::jitter_budget);
        f["latency_budget"] = duration_field(&PipelineConfig::latency_budget);

        f["model.dim"] = size_field([](auto& c) -> auto& { return c.pipeline.model.dim; });
        f["model.item_seed"] = seed_field([](auto& c) -> auto& { return c.pipeline.model.item_seed; });
        f["model.user_seed"] = seed_field([](auto& c) -> auto& { return c.pipeline.model.user_seed; });
        f["model.ctx_seed"] = seed_field([](auto& c) -> auto& { return c.pipeline.model.ctx_seed; });
        f["model.query_seed"] = seed_field([](auto& c) -> auto& { return c.pipeline.model.query_seed; });
        f["model.beta"] = {[](ExperimentConfig& c, std::string_view v) { c.pipeline.model.beta = parse_double(v); },
                           [](const ExperimentConfig& c) { return format_double(c.pipeline.model.beta); }};
        f["model.kernel"] = {[](ExperimentConfig& c, std::string_view v) {
                                 const auto s = lower(trim(v));
                                 if (s == "parallel") {
                                     c.pipeline.model.kernel = model::AttentionKernel::Parallel;
                                 } else if (s == "reference") {
                                     c.pipeline.model.kernel = model::AttentionKernel::Reference;
                                 } else {
                                     throw ConfigError("model.kernel must be parallel or reference");
                                 }
                             },
                             [](const ExperimentConfig& c) {
                                 return std::string(c.pipeline.model.kernel == model::AttentionKernel::Parallel
                                                        ? "parallel"
                                                        : "reference");
                             }};

        f["pool.io.capacity"] = int_field([](auto& c) -> auto& { return c.pipeline.io_capacity; });
        f["pool.compute.capacity"] = int_field([](auto& c) -> auto& { return c.pipeline.compute_capacity; });
        add_channel_fields(f, pipeline::kPreModelChannel, &PipelineConfig::pre_model_channel);
        add_channel_fields(f, pipeline::kCacheChannel, &PipelineConfig::cache_channel);
        add_channel_fields(f, pipeline::kMidModelChannel, &PipelineConfig::mid_model_channel);
        add_channel_fields(f, pipeline::kPostModelChannel, &PipelineConfig::post_model_channel);

        f["workload.requests"] = size_field([](auto& c) -> auto& { return c.workload.num_requests; });
        f["workload.seq_lens"] = {[](ExperimentConfig& c, std::string_view v) { c.workload.seq_lens = parse_size_list(v); },
                                  [](const ExperimentConfig& c) { return join(c.workload.seq_lens); }};
        f["workload.short_len"] = size_field([](auto& c) -> auto& { return c.workload.short_len; });
        f["workload.arrival"] = {[](ExperimentConfig& c, std::string_view v) {
                                     const auto s = lower(trim(v));
                                     if (s == "sequential") {
                                         c.workload.arrival = bench::Arrival::Sequential;
                                     } else if (s == "closed_loop") {
                                         c.workload.arrival = bench::Arrival::ClosedLoop;
                                     } else {
                                         throw ConfigError("workload.arrival must be sequential or closed_loop");
                                     }
                                 },
                                 [](const ExperimentConfig& c) {
                                     return std::string(c.workload.arrival == bench::Arrival::Sequential ? "sequential"
                                                                                                       : "closed_loop");
                                 }};
        f["workload.concurrency"] =
            size_field([](auto& c) -> auto& { return c.workload.concurrency; });
        f["workload.seed"] = seed_field([](auto& c) -> auto& { return c.workload.seed; });
        return f;
    }();
    return table;
}

}  // namespace

pipeline::Mode parse_mode(std::string_view text) {
    const auto s = lower(trim(text));
    if (s == "baseline") {
        return pipeline::Mode::Baseline;
    }
    if (s == "pcdf") {
        return pipeline::Mode::Pcdf;
    }
    throw ConfigError("mode must be baseline or pcdf, got '" + std::string(text) + "'");
}

Nanos parse_duration(std::string_view text) {
    text = trim(text);
    std::size_t split = 0;
    while (split < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[split])) || text[split] == '.')) {
        ++split;
    }
    if (split == 0) {
        throw ConfigError("expected a duration, got '" + std::string(text) + "'");
    }
    const double value = parse_double(text.substr(0, split));
    const auto unit = lower(trim(text.substr(split)));
    double scale = 0.0;
    if (unit == "ns" || (unit.empty() && value == 0.0)) {
        scale = 1.0;
    } else if (unit == "us") {
        scale = 1e3;
    } else if (unit == "ms") {
        scale = 1e6;
    } else if (unit == "s") {
        scale = 1e9;
    } else {
        throw ConfigError("duration '" + std::string(text) + "' needs a unit (ns, us, ms, s)");
    }
    return static_cast<Nanos>(std::llround(value * scale));
}

std::string format_duration(Nanos ns) {
    if (ns == 0) {
        return "0ns";
    }
    if (ns % 1'000'000'000 == 0) {
        return std::to_string(ns / 1'000'000'000) + "s";
    }
    if (ns % 1'000'000 == 0) {
        return std::to_string(ns / 1'000'000) + "ms";
    }
    if (ns % 1'000 == 0) {
        return std::to_string(ns / 1'000) + "us";
    }
    return std::to_string(ns) + "ns";
}

simnet::LatencyDist parse_latency(std::string_view text) {
    text = trim(text);
    const auto l = lower(text);
    if (l.rfind("uniform(", 0) == 0) {
        if (l.back() != ')') {
            throw ConfigError("malformed uniform(lo, hi): '" + std::string(text) + "'");
        }
        const auto inner = text.substr(8, text.size() - 9);
        const auto comma = inner.find(',');
        if (comma == std::string_view::npos) {
            throw ConfigError("malformed uniform(lo, hi): '" + std::string(text) + "'");
        }
        auto d = simnet::LatencyDist::uniform(parse_duration(inner.substr(0, comma)),
                                              parse_duration(inner.substr(comma + 1)));
        d.validate();
        return d;
    }
    return simnet::LatencyDist::fixed(parse_duration(text));
}

std::string format_latency(const simnet::LatencyDist& dist) {
    if (dist.is_fixed()) {
        return format_duration(dist.lo);
    }
    return "uniform(" + format_duration(dist.lo) + ", " + format_duration(dist.hi) + ")";
}

ExperimentConfig parse(std::string_view text) {
    ExperimentConfig config;
    const auto& table = fields();
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        const auto it = table.find(key);
        if (it == table.end()) {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' given twice");
        }
        try {
            it->second.set(config, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + " (" + key + "): " + e.what());
        }
    }
    config.pipeline.validate();
    config.workload.validate();
    return config;
}

ExperimentConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string to_text(const ExperimentConfig& config) {
    std::string out;
    for (const auto& [key, field] : fields()) {
        out += key + " = " + field.get(config) + "\n";
    }
    return out;
}

std::vector<std::string> known_keys() {
    std::vector<std::string> keys;
    for (const auto& [key, _] : fields()) {
        keys.push_back(key);
    }
    return keys;
}

std::string config_hash(const ExperimentConfig& config) {
    // FNV-1a, finalized with mix64.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : to_text(config)) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(mix64(h)));
    return buf;
}

}  // namespace pcdf::config
