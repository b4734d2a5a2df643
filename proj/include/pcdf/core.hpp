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

#ifndef PCDF_CORE_HPP
#define PCDF_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcdf {

using ItemId = std::uint64_t;

/// Nanoseconds. Used both for durations and for steady-clock timestamps.
using Nanos = std::int64_t;

/// Raised for invalid configuration or violated preconditions.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One front-end ranking request. Holds every target-independent input:
/// the user and context fingerprints plus the long and short behavior
/// sequences.
struct Request {
    std::uint64_t request_id = 0;
    std::uint64_t session_id = 0;
    std::uint64_t user_id = 0;
    std::vector<ItemId> long_behaviors;   // up to kMaxLongBehaviors
    std::vector<ItemId> short_behaviors;  // up to kMaxShortBehaviors
    std::uint64_t context_id = 0;
    Nanos arrival_time = 0;
};

inline constexpr std::size_t kMaxLongBehaviors = 4096;
inline constexpr std::size_t kMaxShortBehaviors = 64;

/// Throws ConfigError when a behavior sequence exceeds its bound.
void validate(const Request& request);

struct Candidate {
    ItemId item_id = 0;
    double bid = 0.0;  // milli-currency units
};

struct OrganicItem {
    ItemId item_id = 0;
};

/// Output of the pre-model: the pooled long-behavior representation.
struct UserRepr {
    std::vector<double> vector;
    Nanos produced_at = 0;
    std::uint64_t source_request = 0;
};

struct ScoredCandidate {
    ItemId item_id = 0;
    double logit = 0.0;
    double ctr = 0.0;
    double final_score = 0.0;
};

/// Per-candidate mid-model output carried between scoring and fusion.
struct ScoredLogit {
    ItemId item_id = 0;
    double logit = 0.0;
};

/// Candidates ordered by final_score descending, ties by ascending item_id.
struct RankedList {
    std::vector<ScoredCandidate> entries;

    bool empty() const noexcept { return entries.empty(); }
    std::size_t size() const noexcept { return entries.size(); }
};

/// True when `a` ranks strictly ahead of `b`.
bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b) noexcept;

/// Ordering and uniqueness check for a finished list.
bool is_well_ordered(const RankedList& list);

/// Bitwise equality on every numeric field; 0.0 and -0.0 differ.
bool bit_identical(const RankedList& a, const RankedList& b) noexcept;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Top 53 bits of a 64-bit word as a double in [0, 1).
constexpr double unit_interval(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1p-53;
}

/// Seed-derived stand-in for a learned embedding row; components in [-1, 1).
std::vector<double> embed(std::uint64_t seed, ItemId id, std::size_t dim);

/// Same as embed() but writes into caller storage of the desired length.
void embed_into(std::uint64_t seed, ItemId id, std::span<double> out);

/// Hex rendering of a double's bit pattern, for diagnostics.
std::string bits_hex(double x);

}  // namespace pcdf

#endif  // PCDF_CORE_HPP
