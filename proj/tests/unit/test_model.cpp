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

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "pcdf/kernels.hpp"
#include "pcdf/model.hpp"

using namespace pcdf;
using namespace pcdf::model;
using testing::bits_of;
using testing::hex_u64;

namespace {

ModelParams small_params() {
    ModelParams p;
    p.dim = 4;
    return p;
}

Request sample_request(std::size_t long_len, std::size_t short_len, std::uint64_t salt = 0) {
    Request r;
    r.request_id = 9 + salt;
    r.user_id = 1234 + salt;
    r.session_id = mix64(r.user_id);
    r.context_id = 777 + salt;
    for (std::size_t i = 0; i < long_len; ++i) {
        r.long_behaviors.push_back(mix64(i + 100 * salt));
    }
    for (std::size_t i = 0; i < short_len; ++i) {
        r.short_behaviors.push_back(mix64(i + 5000));
    }
    return r;
}

std::vector<Candidate> candidates(std::size_t n, std::uint64_t salt = 0) {
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({mix64(i ^ (salt << 20)), 1000.0});
    }
    return out;
}

}  // namespace

TEST_CASE("params validation") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    p.dim = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.dim = 4;
    p.beta = std::nan("");
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("pre_forward") {
    const auto p = small_params();
    SUBCASE("empty sequence gives the zero vector") {
        const auto u = pre_forward(p, {});
        REQUIRE(u.vector.size() == 4);
        for (double x : u.vector) {
            CHECK(bits_of(x) == 0);
        }
    }
    SUBCASE("a single behavior passes its embedding through") {
        const std::vector<ItemId> one{42};
        const auto u = pre_forward(p, one);
        const auto e = embed(p.item_seed, 42, 4);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(bits_of(u.vector[j]) == bits_of(e[j]));
        }
    }
    SUBCASE("[3, 9, 27] matches the reference") {
        const std::vector<ItemId> seq{3, 9, 27};
        const auto& want = testing::oracle().at("pre_3_9_27");
        for (auto kernel : {AttentionKernel::Reference, AttentionKernel::Parallel}) {
            auto q = p;
            q.kernel = kernel;
            const auto u = pre_forward(q, seq);
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(bits_of(u.vector[j]) == hex_u64(want[j]));
            }
        }
    }
}

TEST_CASE("pre_forward ignores everything but the long sequence") {
    ModelParams p;
    const auto a = sample_request(64, 10, 0);
    auto b = a;
    b.context_id = 999999;
    b.short_behaviors.clear();
    b.request_id = 77;
    const auto ua = pre_forward(p, a.long_behaviors);
    const auto ub = pre_forward(p, b.long_behaviors);
    for (std::size_t j = 0; j < p.dim; ++j) {
        CHECK(bits_of(ua.vector[j]) == bits_of(ub.vector[j]));
    }
}

TEST_CASE("reference and parallel kernels agree through pre_forward") {
    for (std::size_t t : {0u, 1u, 5u, 128u, 300u}) {
        ModelParams ref;
        ref.kernel = AttentionKernel::Reference;
        ModelParams par;
        const auto r = sample_request(t, 0, t);
        const auto a = pre_forward(ref, r.long_behaviors);
        const auto b = pre_forward(par, r.long_behaviors);
        for (std::size_t j = 0; j < ref.dim; ++j) {
            CHECK(bits_of(a.vector[j]) == bits_of(b.vector[j]));
        }
    }
}

TEST_CASE("mid_forward") {
    const auto p = small_params();
    SUBCASE("zero inputs give logit 0 and ctr 0.5") {
        const std::vector<double> zero(4, 0.0);
        const MidContext ctx(p, zero, {}, zero, zero);
        const auto out = ctx.score(11);
        CHECK(out.logit == 0.0);
        CHECK(out.ctr == 0.5);
    }
    SUBCASE("reference values for S=[5,6], candidate 11") {
        const auto& want = testing::oracle().at("mid_s56_c11");
        Request r;
        r.user_id = want.at("user_id").get<std::uint64_t>();
        r.context_id = want.at("context_id").get<std::uint64_t>();
        r.short_behaviors = {5, 6};
        const auto u = pre_forward(p, want.at("long").get<std::vector<ItemId>>());
        const auto out = mid_forward(p, u, r, {11, 0.0});
        CHECK(bits_of(out.logit) == hex_u64(want.at("logit")));
        CHECK(bits_of(out.ctr) == hex_u64(want.at("ctr")));
    }
    SUBCASE("scoring is pure") {
        const auto r = sample_request(8, 3);
        const auto u = pre_forward(p, r.long_behaviors);
        const auto a = mid_forward(p, u, r, {55, 0.0});
        const auto b = mid_forward(p, u, r, {55, 0.0});
        CHECK(bits_of(a.logit) == bits_of(b.logit));
        CHECK(bits_of(a.ctr) == bits_of(b.ctr));
        CHECK(a.ctr == kernels::sigmoid(a.logit));
    }
    SUBCASE("dimension mismatch") {
        const auto r = sample_request(2, 0);
        UserRepr wrong;
        wrong.vector.assign(5, 0.0);
        CHECK_THROWS_AS(mid_forward(p, wrong, r, {1, 0.0}), ConfigError);
    }
}

TEST_CASE("mid_forward_batch matches per-candidate scoring") {
    ModelParams p;
    const auto r = sample_request(40, 50);
    const auto u = pre_forward(p, r.long_behaviors);
    const auto cands = candidates(150);
    const auto batch = mid_forward_batch(p, u, r, cands);
    REQUIRE(batch.size() == cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
        CHECK(batch[i].item_id == cands[i].item_id);
        CHECK(bits_of(batch[i].logit) == bits_of(mid_forward(p, u, r, cands[i]).logit));
    }
}

TEST_CASE("post_forward") {
    const auto p = small_params();
    const auto r = sample_request(6, 2);
    const auto u = pre_forward(p, r.long_behaviors);
    const auto cands = candidates(20);
    std::vector<ScoredLogit> scored;
    for (const auto& c : cands) {
        scored.push_back({c.item_id, mid_forward(p, u, r, c).logit});
    }

    SUBCASE("no organics: final score is the ctr") {
        const auto list = post_forward(p, scored, {});
        CHECK(is_well_ordered(list));
        for (const auto& e : list.entries) {
            CHECK(bits_of(e.final_score) == bits_of(e.ctr));
        }
    }
    SUBCASE("beta = 0 ranks by logit whatever the organics") {
        auto q = p;
        q.beta = 0.0;
        const std::vector<OrganicItem> organics{{1}, {2}, {3}};
        const auto list = post_forward(q, scored, organics);
        for (std::size_t i = 1; i < list.size(); ++i) {
            CHECK(list.entries[i - 1].logit >= list.entries[i].logit);
        }
    }
    SUBCASE("two candidates, one organic: reference ranking") {
        const auto x = testing::instance_from(testing::oracle().at("post_two_one"));
        CHECK(testing::check_instance(x, AttentionKernel::Parallel).empty());
    }
    SUBCASE("duplicate item ids are rejected") {
        auto dup = scored;
        dup.push_back(dup.front());
        CHECK_THROWS_AS(post_forward(p, dup, {}), ConfigError);
    }
    SUBCASE("ordering invariant over random logits") {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> dist(0.0, 3.0);
        for (int round = 0; round < 200; ++round) {
            std::vector<ScoredLogit> s;
            const auto n = rng() % 30;
            for (std::size_t i = 0; i < n; ++i) {
                // Repeated logits force tie-breaks on item id.
                s.push_back({rng(), std::round(dist(rng))});
            }
            std::vector<OrganicItem> organics;
            if (round % 2 == 0) {
                organics.push_back({rng()});
            }
            CHECK(is_well_ordered(post_forward(p, s, organics)));
        }
    }
}

TEST_CASE("externality raises the final score monotonically") {
    auto p = small_params();
    p.beta = 1.5;
    const double logit = 0.3;
    double prev = -1.0;
    for (double ext : {-1.0, -0.5, 0.0, 0.25, 0.5, 1.0}) {
        const double f = kernels::sigmoid(logit + p.beta * ext);
        CHECK(f > prev);
        prev = f;
    }
    // And through post_forward: the candidate more similar to the organic wins.
    const std::vector<OrganicItem> organics{{500}};
    const std::vector<ScoredLogit> scored{{500, 0.0}, {501, 0.0}};
    const auto list = post_forward(p, scored, organics);
    CHECK(externality(p, 500, organics) > externality(p, 501, organics));
    CHECK(list.entries.front().item_id == 500);
}

TEST_CASE("monolithic_forward is the composition of the three stages") {
    ModelParams p;
    for (std::uint64_t salt = 0; salt < 5; ++salt) {
        const auto r = sample_request(10 * salt, salt * 3, salt);
        const auto cands = candidates(25, salt);
        const std::vector<OrganicItem> organics{{salt}, {salt + 1}};
        const auto u = pre_forward(p, r.long_behaviors);
        std::vector<ScoredLogit> scored;
        for (const auto& c : cands) {
            scored.push_back({c.item_id, mid_forward(p, u, r, c).logit});
        }
        const auto manual = post_forward(p, scored, organics);
        CHECK(bit_identical(manual, monolithic_forward(p, r, cands, organics)));
    }
    CHECK(monolithic_forward(p, sample_request(3, 1), {}, {}).empty());
}

TEST_CASE("random small instances match the reference bit for bit") {
    const auto instances = testing::oracle_instances();
    REQUIRE(instances.size() == 50);
    for (std::size_t i = 0; i < instances.size(); ++i) {
        for (auto kernel : {AttentionKernel::Reference, AttentionKernel::Parallel}) {
            const auto mismatch = testing::check_instance(instances[i], kernel);
            CHECK_MESSAGE(mismatch.empty(), "instance " << i << ": " << mismatch);
        }
    }
}
