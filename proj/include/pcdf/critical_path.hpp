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

#ifndef PCDF_CRITICAL_PATH_HPP
#define PCDF_CRITICAL_PATH_HPP

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pcdf/core.hpp"

namespace pcdf {

/// happens-before edge: `first` must finish before `second` starts.
using DependencyEdge = std::pair<std::size_t, std::size_t>;

/// Longest node-weighted path through a DAG. Throws ConfigError when the
/// graph has a cycle or an edge names a missing node.
Nanos critical_path_latency(std::span<const Nanos> durations, std::span<const DependencyEdge> edges);

/// Named stage graph with the longest path recoverable for reporting.
class StageGraph {
public:
    std::size_t add(std::string name, Nanos duration);
    void depends(std::size_t after, std::size_t before) { edges_.emplace_back(before, after); }

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    Nanos duration(std::size_t i) const { return durations_.at(i); }

    Nanos critical_path_latency() const;
    /// Node indices along one longest path, source first.
    std::vector<std::size_t> critical_path() const;

private:
    std::vector<std::string> names_;
    std::vector<Nanos> durations_;
    std::vector<DependencyEdge> edges_;
};

}  // namespace pcdf

#endif  // PCDF_CRITICAL_PATH_HPP
