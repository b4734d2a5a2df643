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

#include "pcdf/cache.hpp"

namespace pcdf::cache {

void TtlCache::put(const CacheKey& key, UserRepr value, Nanos ttl, Nanos now) {
    if (ttl <= 0) {
        throw ConfigError("cache ttl must be positive");
    }
    auto& shard = shard_for(key);
    {
        std::lock_guard lock(shard.mu);
        shard.entries.insert_or_assign(key, CacheEntry{key, std::move(value), now, ttl});
    }
    insertions_.fetch_add(1, std::memory_order_relaxed);
}

std::optional<UserRepr> TtlCache::get(const CacheKey& key, Nanos now) {
    auto& shard = shard_for(key);
    std::unique_lock lock(shard.mu);
    const auto it = shard.entries.find(key);
    if (it == shard.entries.end()) {
        lock.unlock();
        misses_.fetch_add(1, std::memory_order_relaxed);
        return std::nullopt;
    }
    if (!it->second.live_at(now)) {
        shard.entries.erase(it);
        lock.unlock();
        expirations_.fetch_add(1, std::memory_order_relaxed);
        misses_.fetch_add(1, std::memory_order_relaxed);
        return std::nullopt;
    }
    UserRepr value = it->second.value;
    lock.unlock();
    hits_.fetch_add(1, std::memory_order_relaxed);
    return value;
}

std::size_t TtlCache::sweep(Nanos now) {
    std::size_t evicted = 0;
    for (auto& shard : shards_) {
        std::lock_guard lock(shard.mu);
        evicted += std::erase_if(shard.entries, [now](const auto& kv) { return !kv.second.live_at(now); });
    }
    return evicted;
}

CacheStats TtlCache::stats() const noexcept {
    return {hits_.load(), misses_.load(), expirations_.load(), insertions_.load()};
}

std::size_t TtlCache::size() const {
    std::size_t n = 0;
    for (const auto& shard : shards_) {
        std::lock_guard lock(shard.mu);
        n += shard.entries.size();
    }
    return n;
}

}  // namespace pcdf::cache
