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

#include "pcdf/kernels.hpp"

namespace pcdf::kernels {

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        s += a[j] * b[j];
    }
    return s;
}

void softmax_inplace(std::span<double> xs) noexcept {
    if (xs.empty()) {
        return;
    }
    double m = xs[0];
    for (std::size_t k = 1; k < xs.size(); ++k) {
        if (xs[k] > m) {
            m = xs[k];
        }
    }
    double z = 0.0;
    for (double& x : xs) {
        x = std::exp(x - m);
        z += x;
    }
    for (double& x : xs) {
        x = x / z;
    }
}

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

void weighted_sum(std::span<const double> weights, const Matrix& rows, std::span<double> out) noexcept {
    for (double& v : out) {
        v = 0.0;
    }
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double w = weights[k];
        const auto r = rows.row(k);
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += w * r[j];
        }
    }
}

Matrix self_attention_reference(const Matrix& embeddings) {
    const std::size_t n = embeddings.rows();
    const std::size_t d = embeddings.cols();
    const double scale = std::sqrt(static_cast<double>(d));
    Matrix hidden(n, d);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            scores[k] = dot(embeddings.row(i), embeddings.row(k)) / scale;
        }
        softmax_inplace(scores);
        weighted_sum(scores, embeddings, hidden.row(i));
    }
    return hidden;
}

std::vector<double> attention_pool(std::span<const double> query, const Matrix& hidden) {
    const double scale = std::sqrt(static_cast<double>(hidden.cols()));
    std::vector<double> weights(hidden.rows());
    for (std::size_t i = 0; i < hidden.rows(); ++i) {
        weights[i] = dot(query, hidden.row(i)) / scale;
    }
    softmax_inplace(weights);
    std::vector<double> pooled(hidden.cols());
    weighted_sum(weights, hidden, pooled);
    return pooled;
}

}  // namespace pcdf::kernels
