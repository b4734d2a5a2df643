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

#ifndef PCDF_REPORT_HPP
#define PCDF_REPORT_HPP

#include <filesystem>
#include <string>

#include "json.hpp"

#include "pcdf/bench.hpp"

namespace pcdf::report {

enum class Format { Json, Csv };

Format parse_format(const std::string& text);

nlohmann::json to_json(const bench::LatencyReport& report);
bench::LatencyReport from_json(const nlohmann::json& doc);

/// Header plus one row per (mode, seq_len); '\n' line endings.
std::string to_csv(const bench::LatencyReport& report);

inline constexpr const char* kCsvHeader =
    "mode,seq_len,count,failures,e2e_p50_ns,e2e_p99_ns,rank_p50_ns,rank_p99_ns";

/// Throws std::runtime_error naming the path on I/O failure.
void emit_report(const bench::LatencyReport& report, Format format, const std::filesystem::path& path);

}  // namespace pcdf::report

#endif  // PCDF_REPORT_HPP
