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

#ifdef _OPENMP
#include <omp.h>
#endif

// Wider vectors change nothing numerically: each lane performs the same
// unfused multiply and add as the scalar loop.
#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
#define PCDF_VECTOR_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define PCDF_VECTOR_CLONES
#endif

namespace pcdf::kernels {

namespace {

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) {
            t.data()[j * m.rows() + i] = r[j];
        }
    }
    return t;
}

// One output row. scores[k] sees the terms a[0]*E_k[0], a[1]*E_k[1], ... in
// that order, exactly as dot() would.
PCDF_VECTOR_CLONES void attend_row(const Matrix& embeddings, const Matrix& keys_t, std::size_t i, double scale,
                std::span<double> scores, std::span<double> out) {
    const std::size_t n = embeddings.rows();
    const std::size_t d = embeddings.cols();
    const double* a = embeddings.row(i).data();
    double* __restrict s = scores.data();
    for (std::size_t k = 0; k < n; ++k) {
        s[k] = 0.0;
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double aj = a[j];
        const double* __restrict col = keys_t.data() + j * n;
        for (std::size_t k = 0; k < n; ++k) {
            s[k] += aj * col[k];
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        s[k] = s[k] / scale;
    }
    softmax_inplace(scores);

    double* __restrict h = out.data();
    for (std::size_t j = 0; j < d; ++j) {
        h[j] = 0.0;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double w = s[k];
        const double* __restrict e = embeddings.data() + k * d;
        for (std::size_t j = 0; j < d; ++j) {
            h[j] += w * e[j];
        }
    }
}

}  // namespace

Matrix self_attention_parallel(const Matrix& embeddings) {
    const std::size_t n = embeddings.rows();
    const std::size_t d = embeddings.cols();
    const double scale = std::sqrt(static_cast<double>(d));
    const Matrix keys_t = transpose(embeddings);
    Matrix hidden(n, d);

#pragma omp parallel if (n >= kParallelRowThreshold)
    {
        std::vector<double> scores(n);
#pragma omp for schedule(static)
        for (std::size_t i = 0; i < n; ++i) {
            attend_row(embeddings, keys_t, i, scale, scores, hidden.row(i));
        }
    }
    return hidden;
}

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace pcdf::kernels
