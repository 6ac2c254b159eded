// Copyright 2026 The ipccp Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ipccp/detail/pipeline.hpp"

#include <cmath>

#include "ipccp/pooling.hpp"

namespace ipccp::detail {

std::vector<double> weighted_pair_sum(const Matrix& features, const SketchConfig& cfg,
                                      const Matrix& weights, ForwardRecord* rec) {
  SketchedMatrix psi1 = project_all(cfg, Projection::kFirst, features);
  SketchedMatrix psi2 = project_all(cfg, Projection::kSecond, features);
  SketchedMatrix mixed = psi1.times(weights);
  std::vector<double> out = pair_feature_sum(cfg, mixed, psi2);
  if (rec != nullptr) {
    rec->psi1.emplace(std::move(psi1));
    rec->psi2.emplace(std::move(psi2));
    rec->mixed.emplace(std::move(mixed));
  }
  return out;
}

std::vector<double> ipccp_forward(const LocalFeatureSet& x, const SketchConfig& cfg, int k,
                                  Preprocess preprocess, ForwardRecord* rec) {
  const LocalFeatureSet xp = apply_preprocess(x, preprocess);
  if (xp.dim() != cfg.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "preprocessed dimension " + std::to_string(xp.dim()) + " but sketch expects " +
                    std::to_string(cfg.input_dim()));
  }
  const SymmetricMatrix s = gram(xp);
  Matrix weights;
  if (rec == nullptr) {
    weights = sqrt_weights(s, k).weights;
  } else {
    // Same arithmetic as sqrt_weights, keeping every iterate.
    const SqrtWeights sw = sqrt_weights(s, k);
    const double tr = sw.trace0;
    rec->ns = ns_iterate_history(SymmetricMatrix(s.matrix() * (1.0 / tr)), k);
    rec->features = xp.matrix();
    rec->gram = s.matrix();
    rec->trace = tr;
    weights = sw.weights;
    rec->weights = weights;
  }
  return weighted_pair_sum(xp.matrix(), cfg, weights, rec);
}

}  // namespace ipccp::detail
