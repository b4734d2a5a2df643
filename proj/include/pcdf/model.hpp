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

#ifndef PCDF_MODEL_HPP
#define PCDF_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcdf/core.hpp"

// The ranking model, cut into three stages that together form one graph:
//
//   pre   long behaviors -> UserRepr            (target independent)
//   mid   UserRepr x request x candidate -> logit
//   post  logits x organic results -> RankedList
//
// Parameters are seed-derived embeddings, so a ModelParams value fully
// determines every output. One instance is shared read-only by all stages
// and threads.

namespace pcdf::model {

enum class AttentionKernel { Reference, Parallel };

struct ModelParams {
    std::size_t dim = 32;
    std::uint64_t item_seed = 0x5EED0001;
    std::uint64_t user_seed = 0x5EED0002;
    std::uint64_t ctx_seed = 0x5EED0003;
    std::uint64_t query_seed = 0x5EED0004;
    double beta = 1.0;  // externality weight
    AttentionKernel kernel = AttentionKernel::Parallel;

    /// Throws ConfigError on dim == 0 or non-finite beta.
    void validate() const;
};

/// Encodes the long behavior sequence. Empty input yields the zero vector.
/// Cost grows as T^2 * d.
UserRepr pre_forward(const ModelParams& params, std::span<const ItemId> long_behaviors);

struct MidOutput {
    double logit = 0.0;
    double ctr = 0.0;
};

/// Candidate-independent mid-model inputs for one request: the short
/// behavior embeddings and the user/context profile embeddings.
class MidContext {
public:
    MidContext(const ModelParams& params, const UserRepr& user, const Request& request);

    /// Scoring head with explicit profile vectors; lets tests substitute
    /// zero vectors for the user and context embeddings.
    MidContext(const ModelParams& params, std::vector<double> user_vector,
               std::vector<std::vector<double>> short_embeddings, std::vector<double> user_profile,
               std::vector<double> context_profile);

    MidOutput score(ItemId item_id) const;

private:
    const ModelParams* params_;
    std::vector<double> user_vector_;
    std::vector<std::vector<double>> short_embeddings_;
    std::vector<double> user_profile_;
    std::vector<double> context_profile_;
};

/// Scores one candidate. Throws ConfigError when u has the wrong length.
MidOutput mid_forward(const ModelParams& params, const UserRepr& user, const Request& request,
                      const Candidate& candidate);

/// Scores a batch, candidates distributed over OpenMP threads. Same values
/// as calling mid_forward per candidate.
std::vector<ScoredLogit> mid_forward_batch(const ModelParams& params, const UserRepr& user,
                                           const Request& request,
                                           std::span<const Candidate> candidates);

/// Fuses each logit with its best organic-result similarity and ranks.
/// Throws ConfigError on duplicate item ids.
RankedList post_forward(const ModelParams& params, std::span<const ScoredLogit> scored,
                        std::span<const OrganicItem> organics);

/// Externality term: max_j (e_t . o_j) / sqrt(d), 0 with no organics.
double externality(const ModelParams& params, ItemId item_id, std::span<const OrganicItem> organics);

/// pre -> mid -> post in one call with no intermediate hand-off.
RankedList monolithic_forward(const ModelParams& params, const Request& request,
                              std::span<const Candidate> candidates,
                              std::span<const OrganicItem> organics);

}  // namespace pcdf::model

#endif  // PCDF_MODEL_HPP
