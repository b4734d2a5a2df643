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

#include "pcdf/simnet.hpp"

#include <cmath>

namespace pcdf::simnet {

Nanos LatencyDist::sample(std::uint64_t bits) const noexcept {
    if (lo >= hi) {
        return lo;
    }
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    const auto offset = static_cast<std::uint64_t>(unit_interval(bits) * static_cast<double>(span));
    return lo + static_cast<Nanos>(offset < span ? offset : span - 1);
}

void LatencyDist::validate() const {
    if (lo < 0 || lo > hi) {
        throw ConfigError("latency distribution needs 0 <= lo <= hi");
    }
}

NodePool::NodePool(std::string name, PoolKind kind, int capacity)
    : name_(std::move(name)), kind_(kind), capacity_(capacity) {
    if (capacity < 1) {
        throw ConfigError("pool '" + name_ + "' capacity must be >= 1");
    }
}

void NodePool::enter() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return in_use_ < capacity_; });
    ++in_use_;
    if (in_use_ > peak_) {
        peak_ = in_use_;
    }
}

void NodePool::leave(Nanos busy) {
    busy_ns_.fetch_add(busy, std::memory_order_relaxed);
    completed_.fetch_add(1, std::memory_order_relaxed);
    {
        std::lock_guard lock(mu_);
        --in_use_;
    }
    cv_.notify_one();
}

NodePool::Slot::Slot(NodePool& pool) : pool_(pool) {
    pool_.enter();
    started_ = now_ns();
}

NodePool::Slot::~Slot() { pool_.leave(now_ns() - started_); }

void NodePool::acquire(Nanos duration) {
    run([duration] { sleep_ns(duration); });
}

int NodePool::occupancy() const {
    std::lock_guard lock(mu_);
    return in_use_;
}

int NodePool::peak_occupancy() const {
    std::lock_guard lock(mu_);
    return peak_;
}

void ChannelConfig::validate() const {
    latency.validate();
    if (!(failure_prob >= 0.0 && failure_prob <= 1.0)) {
        throw ConfigError("channel '" + name + "' failure_prob must lie in [0, 1]");
    }
}

CallDraw draw_for(const ChannelConfig& config, std::uint64_t sequence) noexcept {
    CallDraw d;
    d.sequence = sequence;
    const double u = unit_interval(mix64(config.seed ^ mix64(2 * sequence)));
    d.fails = u < config.failure_prob;
    d.latency = config.latency.sample(mix64(config.seed ^ mix64(2 * sequence + 1)));
    return d;
}

RpcChannel::RpcChannel(ChannelConfig config, NodePool& destination)
    : config_(std::move(config)), destination_(destination) {
    config_.validate();
}

CallDraw RpcChannel::next_draw() noexcept {
    return draw_for(config_, sequence_.fetch_add(1, std::memory_order_relaxed));
}

UtilizationReport utilization_report(const std::vector<const NodePool*>& pools, Nanos wall_ns) {
    if (wall_ns <= 0) {
        throw ConfigError("utilization window must be positive");
    }
    UtilizationReport report;
    for (const NodePool* p : pools) {
        PoolUtilization u;
        u.name = p->name();
        u.kind = p->kind();
        u.capacity = p->capacity();
        u.busy_ns = p->busy_ns();
        u.wall_ns = wall_ns;
        u.utilization = static_cast<double>(u.busy_ns) /
                        (static_cast<double>(u.capacity) * static_cast<double>(wall_ns));
        u.peak_occupancy = p->peak_occupancy();
        report.pools.push_back(std::move(u));
    }
    return report;
}

NodePool& Fabric::add_pool(std::string name, PoolKind kind, int capacity) {
    auto pool = std::make_unique<NodePool>(name, kind, capacity);
    auto& ref = *pool;
    pools_.insert_or_assign(std::move(name), std::move(pool));
    return ref;
}

RpcChannel& Fabric::add_channel(ChannelConfig config) {
    if (!pools_.contains(config.from)) {
        throw ConfigError("channel '" + config.name + "' references unknown pool '" + config.from + "'");
    }
    NodePool& to = pool(config.to);
    auto name = config.name;
    auto channel = std::make_unique<RpcChannel>(std::move(config), to);
    auto& ref = *channel;
    channels_.insert_or_assign(std::move(name), std::move(channel));
    return ref;
}

NodePool& Fabric::pool(const std::string& name) {
    const auto it = pools_.find(name);
    if (it == pools_.end()) {
        throw ConfigError("unknown pool '" + name + "'");
    }
    return *it->second;
}

RpcChannel& Fabric::channel(const std::string& name) {
    const auto it = channels_.find(name);
    if (it == channels_.end()) {
        throw ConfigError("unknown channel '" + name + "'");
    }
    return *it->second;
}

std::vector<const NodePool*> Fabric::pools() const {
    std::vector<const NodePool*> out;
    for (const auto& [_, p] : pools_) {
        out.push_back(p.get());
    }
    return out;
}

UtilizationReport Fabric::utilization(Nanos wall_ns) const { return utilization_report(pools(), wall_ns); }

}  // namespace pcdf::simnet
