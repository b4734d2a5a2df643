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

#ifndef PCDF_KERNELS_HPP
#define PCDF_KERNELS_HPP

#include <cstddef>
#include <span>
#include <vector>

// Numeric kernels behind the ranking model.
//
// Every reduction runs in ascending index order, left to right, starting
// from 0.0, and the build disables floating-point contraction. Under those
// rules two kernels that visit the same terms in the same per-output order
// agree bit for bit regardless of how the outer loops are arranged or
// distributed across threads.

namespace pcdf::kernels {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;

/// Max-subtracted softmax, in place. Empty input is a no-op.
void softmax_inplace(std::span<double> xs) noexcept;

double sigmoid(double x) noexcept;

/// out = sum_k weights[k] * rows.row(k), accumulated in k order.
void weighted_sum(std::span<const double> weights, const Matrix& rows, std::span<double> out) noexcept;

/// Single-head self-attention with identity projections:
/// H_i = sum_k softmax_k(E_i . E_k / sqrt(d)) E_k.
/// Straight-line serial form; kept as the reference for the parallel kernel.
Matrix self_attention_reference(const Matrix& embeddings);

/// Same result as self_attention_reference, bit for bit. Scores are
/// accumulated across a transposed copy so the inner loop runs over keys,
/// and rows are distributed across OpenMP threads for long sequences.
Matrix self_attention_parallel(const Matrix& embeddings);

/// Attention pooling: u = sum_i softmax_i(q . H_i / sqrt(d)) H_i.
std::vector<double> attention_pool(std::span<const double> query, const Matrix& hidden);

/// Number of OpenMP threads a parallel region would use; 1 without OpenMP.
int max_threads() noexcept;

/// Rows below this count stay on the calling thread.
inline constexpr std::size_t kParallelRowThreshold = 256;

}  // namespace pcdf::kernels

#endif  // PCDF_KERNELS_HPP
