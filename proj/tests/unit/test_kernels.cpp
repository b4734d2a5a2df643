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

#include <cmath>
#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "pcdf/kernels.hpp"

using namespace pcdf;
using namespace pcdf::kernels;

namespace {

Matrix random_embeddings(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        embed_into(seed, i * 7919, m.row(i));
    }
    return m;
}

}  // namespace

TEST_CASE("softmax properties") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-40.0, 40.0);
    for (std::size_t n : {1u, 2u, 17u, 1000u, 4096u}) {
        std::vector<double> xs(n);
        for (auto& x : xs) {
            x = dist(rng);
        }
        softmax_inplace(xs);
        double sum = 0.0;
        for (double x : xs) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(std::fabs(sum - 1.0) <= std::ldexp(1.0, -46));
    }
    std::vector<double> same(8, 3.25);
    softmax_inplace(same);
    for (double x : same) {
        CHECK(x == 0.125);
    }
    std::vector<double> one{123.0};
    softmax_inplace(one);
    CHECK(one[0] == 1.0);
}

TEST_CASE("softmax is stable for large inputs") {
    std::vector<double> xs{1000.0, 999.0, -1000.0};
    softmax_inplace(xs);
    CHECK(std::isfinite(xs[0]));
    CHECK(xs[0] > xs[1]);
    CHECK(xs[2] == 0.0);
}

TEST_CASE("dot accumulates left to right") {
    // (1e16 + 1) - 1e16 loses the 1 only if added in index order.
    const std::vector<double> a{1e16, 1.0, -1e16};
    const std::vector<double> ones{1.0, 1.0, 1.0};
    CHECK(dot(a, ones) == 0.0);
}

TEST_CASE("parallel self-attention equals the serial reference bit for bit") {
    for (std::size_t n : {1u, 2u, 3u, 31u, 255u, 256u, 300u, 700u}) {
        for (std::size_t d : {1u, 4u, 32u}) {
            const auto e = random_embeddings(n, d, n * 31 + d);
            const auto ref = self_attention_reference(e);
            const auto par = self_attention_parallel(e);
            REQUIRE(ref.rows() == par.rows());
            bool same = true;
            for (std::size_t i = 0; i < n && same; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    same = same && testing::bits_of(ref.row(i)[j]) == testing::bits_of(par.row(i)[j]);
                }
            }
            CHECK_MESSAGE(same, "n=" << n << " d=" << d);
        }
    }
}

TEST_CASE("single row attends only to itself") {
    const auto e = random_embeddings(1, 8, 99);
    const auto h = self_attention_parallel(e);
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(h.row(0)[j] == e.row(0)[j]);
    }
}

TEST_CASE("max_threads is positive") { CHECK(max_threads() >= 1); }
