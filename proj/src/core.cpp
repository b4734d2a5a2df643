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

#include "pcdf/core.hpp"

#include <bit>
#include <cstdio>
#include <unordered_set>

namespace pcdf {

void validate(const Request& request) {
    if (request.long_behaviors.size() > kMaxLongBehaviors) {
        throw ConfigError("long behavior sequence exceeds " +
                          std::to_string(kMaxLongBehaviors));
    }
    if (request.short_behaviors.size() > kMaxShortBehaviors) {
        throw ConfigError("short behavior sequence exceeds " +
                          std::to_string(kMaxShortBehaviors));
    }
}

bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) noexcept {
    if (a.final_score != b.final_score) {
        return a.final_score > b.final_score;
    }
    return a.item_id < b.item_id;
}

bool is_well_ordered(const RankedList& list) {
    std::unordered_set<ItemId> seen;
    seen.reserve(list.entries.size());
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        if (!seen.insert(list.entries[i].item_id).second) {
            return false;
        }
        if (i > 0 && !ranks_before(list.entries[i - 1], list.entries[i])) {
            return false;
        }
    }
    return true;
}

bool bit_identical(const RankedList& a, const RankedList& b) noexcept {
    if (a.entries.size() != b.entries.size()) {
        return false;
    }
    auto same = [](double x, double y) {
        return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
    };
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        const auto& x = a.entries[i];
        const auto& y = b.entries[i];
        if (x.item_id != y.item_id || !same(x.logit, y.logit) || !same(x.ctr, y.ctr) ||
            !same(x.final_score, y.final_score)) {
            return false;
        }
    }
    return true;
}

void embed_into(std::uint64_t seed, ItemId id, std::span<double> out) {
    if (out.empty()) {
        throw ConfigError("embedding dimension must be >= 1");
    }
    const std::uint64_t base = mix64(seed ^ mix64(id));
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double u = unit_interval(mix64(base + j));
        out[j] = 2.0 * u - 1.0;
    }
}

std::vector<double> embed(std::uint64_t seed, ItemId id, std::size_t dim) {
    if (dim == 0) {
        throw ConfigError("embedding dimension must be >= 1");
    }
    std::vector<double> out(dim);
    embed_into(seed, id, out);
    return out;
}

std::string bits_hex(double x) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx",
                  static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(x)));
    return buf;
}

}  // namespace pcdf
