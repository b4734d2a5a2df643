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

#ifndef PCDF_CACHE_HPP
#define PCDF_CACHE_HPP

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <unordered_map>

#include "pcdf/core.hpp"

namespace pcdf::cache {

enum class KeyKind : std::uint8_t { UserId, SessionId };

struct CacheKey {
    KeyKind kind = KeyKind::SessionId;
    std::uint64_t id = 0;

    friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

struct CacheKeyHash {
    std::size_t operator()(const CacheKey& k) const noexcept {
        return static_cast<std::size_t>(mix64(k.id ^ (static_cast<std::uint64_t>(k.kind) << 63)));
    }
};

struct CacheEntry {
    CacheKey key;
    UserRepr value;
    Nanos inserted_at = 0;
    Nanos ttl = 0;

    /// Live iff now < inserted_at + ttl.
    bool live_at(Nanos now) const noexcept { return now - inserted_at < ttl; }
};

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t expirations = 0;
    std::uint64_t insertions = 0;
};

/// Thread-safe TTL store for pre-model results. Time is always passed in;
/// the cache never reads a clock. Capacity is unbounded; sweep() is the only
/// reclamation path besides expiry-on-read.
class TtlCache {
public:
    /// Throws ConfigError when ttl <= 0. Overwrites reset the expiry.
    void put(const CacheKey& key, UserRepr value, Nanos ttl, Nanos now);

    /// Expired entries found here count as a miss and an expiration.
    std::optional<UserRepr> get(const CacheKey& key, Nanos now);

    /// Removes every entry with now >= inserted_at + ttl.
    std::size_t sweep(Nanos now);

    CacheStats stats() const noexcept;
    std::size_t size() const;

private:
    static constexpr std::size_t kShards = 16;

    struct Shard {
        mutable std::mutex mu;
        std::unordered_map<CacheKey, CacheEntry, CacheKeyHash> entries;
    };

    Shard& shard_for(const CacheKey& key) noexcept {
        return shards_[CacheKeyHash{}(key) % kShards];
    }

    std::array<Shard, kShards> shards_;
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> misses_{0};
    std::atomic<std::uint64_t> expirations_{0};
    std::atomic<std::uint64_t> insertions_{0};
};

}  // namespace pcdf::cache

#endif  // PCDF_CACHE_HPP
