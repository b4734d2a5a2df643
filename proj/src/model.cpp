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

#include "pcdf/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "pcdf/kernels.hpp"

namespace pcdf::model {

using kernels::dot;
using kernels::Matrix;
using kernels::sigmoid;

void ModelParams::validate() const {
    if (dim == 0) {
        throw ConfigError("model dim must be >= 1");
    }
    if (!std::isfinite(beta)) {
        throw ConfigError("model beta must be finite");
    }
}

UserRepr pre_forward(const ModelParams& params, std::span<const ItemId> long_behaviors) {
    const std::size_t d = params.dim;
    UserRepr out;
    if (long_behaviors.empty()) {
        out.vector.assign(d, 0.0);
        return out;
    }
    Matrix embeddings(long_behaviors.size(), d);
    for (std::size_t i = 0; i < long_behaviors.size(); ++i) {
        embed_into(params.item_seed, long_behaviors[i], embeddings.row(i));
    }
    const Matrix hidden = params.kernel == AttentionKernel::Parallel
                              ? kernels::self_attention_parallel(embeddings)
                              : kernels::self_attention_reference(embeddings);
    const auto query = embed(params.query_seed, 0, d);
    out.vector = kernels::attention_pool(query, hidden);
    return out;
}

MidContext::MidContext(const ModelParams& params, const UserRepr& user, const Request& request)
    : params_(&params), user_vector_(user.vector) {
    if (user.vector.size() != params.dim) {
        throw ConfigError("user representation has length " + std::to_string(user.vector.size()) +
                          ", model dim is " + std::to_string(params.dim));
    }
    short_embeddings_.reserve(request.short_behaviors.size());
    for (ItemId id : request.short_behaviors) {
        short_embeddings_.push_back(embed(params.item_seed, id, params.dim));
    }
    user_profile_ = embed(params.user_seed, request.user_id, params.dim);
    context_profile_ = embed(params.ctx_seed, request.context_id, params.dim);
}

MidContext::MidContext(const ModelParams& params, std::vector<double> user_vector,
                       std::vector<std::vector<double>> short_embeddings,
                       std::vector<double> user_profile, std::vector<double> context_profile)
    : params_(&params),
      user_vector_(std::move(user_vector)),
      short_embeddings_(std::move(short_embeddings)),
      user_profile_(std::move(user_profile)),
      context_profile_(std::move(context_profile)) {
    const std::size_t d = params.dim;
    auto check = [d](const std::vector<double>& v, const char* what) {
        if (v.size() != d) {
            throw ConfigError(std::string(what) + " length does not match model dim");
        }
    };
    check(user_vector_, "user representation");
    check(user_profile_, "user profile");
    check(context_profile_, "context profile");
    for (const auto& s : short_embeddings_) {
        check(s, "short behavior embedding");
    }
}

MidOutput MidContext::score(ItemId item_id) const {
    const std::size_t d = params_->dim;
    const double scale = std::sqrt(static_cast<double>(d));
    const auto target = embed(params_->item_seed, item_id, d);

    // Target attention over the short sequence.
    std::vector<double> interest(d, 0.0);
    if (!short_embeddings_.empty()) {
        std::vector<double> weights(short_embeddings_.size());
        for (std::size_t j = 0; j < short_embeddings_.size(); ++j) {
            weights[j] = dot(target, short_embeddings_[j]) / scale;
        }
        kernels::softmax_inplace(weights);
        for (std::size_t j = 0; j < short_embeddings_.size(); ++j) {
            const double w = weights[j];
            const auto& s = short_embeddings_[j];
            for (std::size_t c = 0; c < d; ++c) {
                interest[c] += w * s[c];
            }
        }
    }

    double acc = dot(user_vector_, target);
    acc += dot(interest, target);
    acc += dot(user_profile_, target);
    acc += dot(context_profile_, target);
    MidOutput out;
    out.logit = acc / scale;
    out.ctr = sigmoid(out.logit);
    return out;
}

MidOutput mid_forward(const ModelParams& params, const UserRepr& user, const Request& request,
                      const Candidate& candidate) {
    return MidContext(params, user, request).score(candidate.item_id);
}

std::vector<ScoredLogit> mid_forward_batch(const ModelParams& params, const UserRepr& user,
                                           const Request& request,
                                           std::span<const Candidate> candidates) {
    const MidContext ctx(params, user, request);
    std::vector<ScoredLogit> out(candidates.size());
    const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(static) if (n >= 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto id = candidates[static_cast<std::size_t>(i)].item_id;
        out[static_cast<std::size_t>(i)] = {id, ctx.score(id).logit};
    }
    return out;
}

double externality(const ModelParams& params, ItemId item_id, std::span<const OrganicItem> organics) {
    if (organics.empty()) {
        return 0.0;
    }
    const std::size_t d = params.dim;
    const double scale = std::sqrt(static_cast<double>(d));
    const auto target = embed(params.item_seed, item_id, d);
    std::vector<double> organic(d);
    double best = 0.0;
    for (std::size_t j = 0; j < organics.size(); ++j) {
        embed_into(params.item_seed, organics[j].item_id, organic);
        const double sim = dot(target, organic) / scale;
        if (j == 0 || sim > best) {
            best = sim;
        }
    }
    return best;
}

RankedList post_forward(const ModelParams& params, std::span<const ScoredLogit> scored,
                        std::span<const OrganicItem> organics) {
    std::unordered_set<ItemId> seen;
    seen.reserve(scored.size());
    for (const auto& s : scored) {
        if (!seen.insert(s.item_id).second) {
            throw ConfigError("duplicate item_id in scored list: " + std::to_string(s.item_id));
        }
    }

    const std::size_t d = params.dim;
    const double scale = std::sqrt(static_cast<double>(d));
    Matrix organic(organics.size(), d);
    for (std::size_t j = 0; j < organics.size(); ++j) {
        embed_into(params.item_seed, organics[j].item_id, organic.row(j));
    }

    RankedList list;
    list.entries.reserve(scored.size());
    std::vector<double> target(d);
    for (const auto& s : scored) {
        double ext = 0.0;
        if (!organics.empty()) {
            embed_into(params.item_seed, s.item_id, target);
            for (std::size_t j = 0; j < organics.size(); ++j) {
                const double sim = dot(target, organic.row(j)) / scale;
                if (j == 0 || sim > ext) {
                    ext = sim;
                }
            }
        }
        ScoredCandidate c;
        c.item_id = s.item_id;
        c.logit = s.logit;
        c.ctr = sigmoid(s.logit);
        c.final_score = sigmoid(s.logit + params.beta * ext);
        list.entries.push_back(c);
    }
    std::sort(list.entries.begin(), list.entries.end(), ranks_before);
    return list;
}

RankedList monolithic_forward(const ModelParams& params, const Request& request,
                              std::span<const Candidate> candidates,
                              std::span<const OrganicItem> organics) {
    const UserRepr user = pre_forward(params, request.long_behaviors);
    std::vector<ScoredLogit> scored;
    scored.reserve(candidates.size());
    const MidContext ctx(params, user, request);
    for (const auto& c : candidates) {
        scored.push_back({c.item_id, ctx.score(c.item_id).logit});
    }
    return post_forward(params, scored, organics);
}

}  // namespace pcdf::model
