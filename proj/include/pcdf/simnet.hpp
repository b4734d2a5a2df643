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

#ifndef PCDF_SIMNET_HPP
#define PCDF_SIMNET_HPP

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "pcdf/clock.hpp"
#include "pcdf/core.hpp"

// Simulated serving fabric. Node pools are capacity-limited executors (Io
// pools stand for CPU nodes, Compute pools for GPU nodes); channels are RPC
// hops between pools with a latency distribution and an independent
// per-call failure probability.

namespace pcdf::simnet {

enum class PoolKind : std::uint8_t { Io, Compute };

/// Fixed or uniform[lo, hi] duration in nanoseconds.
struct LatencyDist {
    Nanos lo = 0;
    Nanos hi = 0;

    static LatencyDist fixed(Nanos v) noexcept { return {v, v}; }
    static LatencyDist uniform(Nanos lo, Nanos hi) noexcept { return {lo, hi}; }

    bool is_fixed() const noexcept { return lo == hi; }
    Nanos mean() const noexcept { return lo + (hi - lo) / 2; }

    /// Maps 64 random bits onto [lo, hi].
    Nanos sample(std::uint64_t bits) const noexcept;

    /// Throws ConfigError when lo < 0 or lo > hi.
    void validate() const;

    friend bool operator==(const LatencyDist&, const LatencyDist&) = default;
};

class NodePool {
public:
    NodePool(std::string name, PoolKind kind, int capacity);

    NodePool(const NodePool&) = delete;
    NodePool& operator=(const NodePool&) = delete;

    /// Occupies one slot for `duration`, blocking while the pool is full.
    void acquire(Nanos duration);

    /// Runs `task` while holding one slot; its wall time counts as busy.
    template <typename F>
    std::invoke_result_t<F> run(F&& task) {
        Slot slot(*this);
        return std::forward<F>(task)();
    }

    const std::string& name() const noexcept { return name_; }
    PoolKind kind() const noexcept { return kind_; }
    int capacity() const noexcept { return capacity_; }
    Nanos busy_ns() const noexcept { return busy_ns_.load(); }
    int occupancy() const;
    int peak_occupancy() const;
    std::uint64_t completed() const noexcept { return completed_.load(); }

private:
    class Slot {
    public:
        explicit Slot(NodePool& pool);
        ~Slot();
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        NodePool& pool_;
        Nanos started_;
    };

    void enter();
    void leave(Nanos busy);

    std::string name_;
    PoolKind kind_;
    int capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    int in_use_ = 0;
    int peak_ = 0;
    std::atomic<Nanos> busy_ns_{0};
    std::atomic<std::uint64_t> completed_{0};
};

struct ChannelConfig {
    std::string name;
    std::string from;
    std::string to;
    LatencyDist latency = LatencyDist::fixed(500 * kMicro);
    double failure_prob = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// A failed hop. Carries enough to reproduce the draw.
struct RpcFailure {
    std::string channel;
    std::uint64_t sequence = 0;
};

template <typename T>
class RpcResult {
public:
    RpcResult(T value) : v_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
    RpcResult(RpcFailure f) : v_(std::move(f)) {}  // NOLINT(google-explicit-constructor)

    bool ok() const noexcept { return v_.index() == 0; }
    explicit operator bool() const noexcept { return ok(); }

    T& value() & { return std::get<0>(v_); }
    T&& value() && { return std::get<0>(std::move(v_)); }
    const T& value() const& { return std::get<0>(v_); }
    const RpcFailure& failure() const { return std::get<1>(v_); }

private:
    std::variant<T, RpcFailure> v_;
};

/// One call's random draws, derived from (seed, sequence) alone.
struct CallDraw {
    std::uint64_t sequence = 0;
    bool fails = false;
    Nanos latency = 0;
};

CallDraw draw_for(const ChannelConfig& config, std::uint64_t sequence) noexcept;

class RpcChannel {
public:
    RpcChannel(ChannelConfig config, NodePool& destination);

    RpcChannel(const RpcChannel&) = delete;
    RpcChannel& operator=(const RpcChannel&) = delete;

    /// Pays the latency sample, then either fails without running `task` or
    /// runs it on the destination pool.
    template <typename F>
    RpcResult<std::invoke_result_t<F>> call(F&& task) {
        const CallDraw draw = next_draw();
        sleep_ns(draw.latency);
        if (draw.fails) {
            failures_.fetch_add(1, std::memory_order_relaxed);
            return RpcFailure{config_.name, draw.sequence};
        }
        return destination_.run(std::forward<F>(task));
    }

    /// Draws for the next sequence number without sleeping. Exposed so the
    /// failure stream can be inspected without timing.
    CallDraw next_draw() noexcept;

    const ChannelConfig& config() const noexcept { return config_; }
    NodePool& destination() noexcept { return destination_; }
    std::uint64_t calls() const noexcept { return sequence_.load(); }
    std::uint64_t failures() const noexcept { return failures_.load(); }

private:
    ChannelConfig config_;
    NodePool& destination_;
    std::atomic<std::uint64_t> sequence_{0};
    std::atomic<std::uint64_t> failures_{0};
};

struct PoolUtilization {
    std::string name;
    PoolKind kind = PoolKind::Io;
    int capacity = 1;
    Nanos busy_ns = 0;
    Nanos wall_ns = 0;
    double utilization = 0.0;  // busy / (capacity * wall)
    int peak_occupancy = 0;
};

struct UtilizationReport {
    std::vector<PoolUtilization> pools;
};

/// Throws ConfigError when wall_ns <= 0.
UtilizationReport utilization_report(const std::vector<const NodePool*>& pools, Nanos wall_ns);

/// Named pools and channels for one serving deployment.
class Fabric {
public:
    NodePool& add_pool(std::string name, PoolKind kind, int capacity);
    /// Throws ConfigError if either endpoint is not a registered pool.
    RpcChannel& add_channel(ChannelConfig config);

    NodePool& pool(const std::string& name);
    RpcChannel& channel(const std::string& name);

    std::vector<const NodePool*> pools() const;
    UtilizationReport utilization(Nanos wall_ns) const;

private:
    std::map<std::string, std::unique_ptr<NodePool>> pools_;
    std::map<std::string, std::unique_ptr<RpcChannel>> channels_;
};

}  // namespace pcdf::simnet

#endif  // PCDF_SIMNET_HPP
