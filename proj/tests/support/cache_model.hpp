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

// Random put/get/sweep schedules replayed against TtlCache and a plain map.

#ifndef PCDF_TESTS_CACHE_MODEL_HPP
#define PCDF_TESTS_CACHE_MODEL_HPP

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "pcdf/cache.hpp"

namespace pcdf::testing {

struct ScheduleOutcome {
    std::size_t operations = 0;
    std::size_t violations = 0;
    std::string first_violation;
};

/// Replays one schedule. Times are nondecreasing with occasional repeats;
/// TTLs are small so expiry boundaries are hit exactly.
inline ScheduleOutcome run_cache_schedule(std::uint64_t seed, std::size_t length = 64) {
    using cache::CacheKey;
    using cache::KeyKind;
    std::mt19937_64 rng(seed);
    cache::TtlCache sut;
    struct ModelEntry {
        std::uint64_t value;
        Nanos inserted_at;
        Nanos ttl;
    };
    std::map<std::pair<int, std::uint64_t>, ModelEntry> model;
    ScheduleOutcome out;
    Nanos now = static_cast<Nanos>(rng() % 100);
    std::uint64_t next_value = 1;

    auto fail = [&](const std::string& what) {
        if (out.violations++ == 0) {
            out.first_violation =
                "seed " + std::to_string(seed) + " op " + std::to_string(out.operations) + ": " + what;
        }
    };

    for (std::size_t op = 0; op < length; ++op, ++out.operations) {
        now += static_cast<Nanos>(rng() % 4);
        const int kind = static_cast<int>(rng() % 2);
        const CacheKey key{kind == 0 ? KeyKind::UserId : KeyKind::SessionId, rng() % 4};
        const auto model_key = std::make_pair(kind, key.id);
        const auto action = rng() % 10;
        if (action < 4) {
            const Nanos ttl = 1 + static_cast<Nanos>(rng() % 6);
            UserRepr value;
            value.source_request = next_value;
            sut.put(key, value, ttl, now);
            model[model_key] = {next_value, now, ttl};
            ++next_value;
        } else if (action < 9) {
            const auto got = sut.get(key, now);
            const auto it = model.find(model_key);
            const bool live = it != model.end() && now - it->second.inserted_at < it->second.ttl;
            if (live != got.has_value()) {
                fail(live ? "missing live entry" : "returned expired or absent entry");
            } else if (live && got->source_request != it->second.value) {
                fail("stale value after overwrite");
            }
            if (it != model.end() && !live) {
                model.erase(it);
            }
        } else {
            sut.sweep(now);
            if (sut.sweep(now) != 0) {
                fail("second sweep removed entries");
            }
            std::erase_if(model, [now](const auto& kv) {
                return now - kv.second.inserted_at >= kv.second.ttl;
            });
            if (sut.size() != model.size()) {
                fail("size after sweep");
            }
        }
    }
    return out;
}

}  // namespace pcdf::testing

#endif  // PCDF_TESTS_CACHE_MODEL_HPP
