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

#ifndef PCDF_CLOCK_HPP
#define PCDF_CLOCK_HPP

#include <chrono>
#include <thread>

#include "pcdf/core.hpp"

namespace pcdf {

inline Nanos now_ns() noexcept {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

/// Sleeps against an absolute deadline so short sleeps do not drift.
inline void sleep_ns(Nanos duration) {
    if (duration <= 0) {
        return;
    }
    std::this_thread::sleep_until(std::chrono::steady_clock::now() + std::chrono::nanoseconds(duration));
}

inline constexpr Nanos kMicro = 1'000;
inline constexpr Nanos kMilli = 1'000'000;
inline constexpr Nanos kSecond = 1'000'000'000;

}  // namespace pcdf

#endif  // PCDF_CLOCK_HPP
