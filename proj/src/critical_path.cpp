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

#include "pcdf/critical_path.hpp"

#include <algorithm>
#include <queue>

namespace pcdf {

namespace {

struct LongestPath {
    std::vector<Nanos> finish;            // earliest finish per node
    std::vector<std::ptrdiff_t> parent;   // predecessor on the longest path, -1 at sources
};

LongestPath longest_path(std::span<const Nanos> durations, std::span<const DependencyEdge> edges) {
    const std::size_t n = durations.size();
    std::vector<std::vector<std::size_t>> succ(n);
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& [from, to] : edges) {
        if (from >= n || to >= n) {
            throw ConfigError("dependency edge references a missing stage");
        }
        succ[from].push_back(to);
        ++indegree[to];
    }

    LongestPath lp{std::vector<Nanos>(n, 0), std::vector<std::ptrdiff_t>(n, -1)};
    std::vector<Nanos> start(n, 0);
    std::queue<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) {
            ready.push(i);
        }
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const std::size_t u = ready.front();
        ready.pop();
        ++visited;
        lp.finish[u] = start[u] + durations[u];
        for (std::size_t v : succ[u]) {
            if (lp.parent[v] < 0 || lp.finish[u] > start[v]) {
                start[v] = lp.finish[u];
                lp.parent[v] = static_cast<std::ptrdiff_t>(u);
            }
            if (--indegree[v] == 0) {
                ready.push(v);
            }
        }
    }
    if (visited != n) {
        throw ConfigError("stage dependency graph has a cycle");
    }
    return lp;
}

}  // namespace

Nanos critical_path_latency(std::span<const Nanos> durations, std::span<const DependencyEdge> edges) {
    const auto lp = longest_path(durations, edges);
    Nanos best = 0;
    for (Nanos f : lp.finish) {
        best = std::max(best, f);
    }
    return best;
}

std::size_t StageGraph::add(std::string name, Nanos duration) {
    if (duration < 0) {
        throw ConfigError("stage '" + name + "' has negative duration");
    }
    names_.push_back(std::move(name));
    durations_.push_back(duration);
    return names_.size() - 1;
}

Nanos StageGraph::critical_path_latency() const { return pcdf::critical_path_latency(durations_, edges_); }

std::vector<std::size_t> StageGraph::critical_path() const {
    const auto lp = longest_path(durations_, edges_);
    if (lp.finish.empty()) {
        return {};
    }
    auto node = static_cast<std::ptrdiff_t>(
        std::max_element(lp.finish.begin(), lp.finish.end()) - lp.finish.begin());
    std::vector<std::size_t> path;
    while (node >= 0) {
        path.push_back(static_cast<std::size_t>(node));
        node = lp.parent[static_cast<std::size_t>(node)];
    }
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace pcdf
