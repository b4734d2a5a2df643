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

#ifndef PCDF_CONFIG_HPP
#define PCDF_CONFIG_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pcdf/bench.hpp"
#include "pcdf/pipeline.hpp"

// Flat key/value configuration:
//
//   # comment
//   retrieval_delay = 20ms
//   channel.mid_model.failure_prob = 0.01
//   workload.seq_lens = 128,256,512,1024
//
// Durations take ns/us/ms/s suffixes or uniform(lo, hi). Every key has a
// default; unknown or repeated keys are errors.

namespace pcdf::config {

struct ExperimentConfig {
    pipeline::PipelineConfig pipeline;
    bench::Workload workload;
};

ExperimentConfig parse(std::string_view text);
ExperimentConfig load(const std::filesystem::path& path);

/// Every key with its current value, sorted; parse(to_text(c)) == c.
std::string to_text(const ExperimentConfig& config);

std::vector<std::string> known_keys();

/// Stable 64-bit digest of to_text(), as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

Nanos parse_duration(std::string_view text);
simnet::LatencyDist parse_latency(std::string_view text);
std::string format_duration(Nanos ns);
std::string format_latency(const simnet::LatencyDist& dist);

pipeline::Mode parse_mode(std::string_view text);

}  // namespace pcdf::config

#endif  // PCDF_CONFIG_HPP
