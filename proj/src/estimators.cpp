// Copyright 2026 The ratefill Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ratefill/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ratefill/error.hpp"
#include "ratefill/rng.hpp"

namespace ratefill {

PredictionMatrix clip_predictions(PredictionMatrix pred, double scale_min,
                                  double scale_max) {
  if (!(scale_min < scale_max)) {
    throw DegenerateScale("clip bounds must satisfy scale_min < scale_max");
  }
  for (double& v : pred.values) v = std::clamp(v, scale_min, scale_max);
  pred.clipped = true;
  return pred;
}

// --- mean -------------------------------------------------------------------

double MeanModel::predict(std::size_t item) const {
  const double m = item_means[item];
  return std::isnan(m) ? global_mean : m;
}

MeanModel fit_mean(const RatingsMatrix& train) {
  const std::size_t n_items = train.n_items();
  std::vector<double> sum(n_items, 0.0);
  std::vector<std::size_t> count(n_items, 0);
  double total = 0.0;
  std::size_t n_total = 0;
  for (std::size_t u = 0; u < train.n_users(); ++u) {
    for (std::size_t i = 0; i < n_items; ++i) {
      if (!train.observed(u, i)) continue;
      sum[i] += train.at(u, i);
      ++count[i];
      total += train.at(u, i);
      ++n_total;
    }
  }
  if (n_total == 0) throw EmptyTrainingSet("no observed ratings to fit");

  MeanModel model;
  model.n_users = train.n_users();
  model.global_mean = total / static_cast<double>(n_total);
  model.item_means.assign(n_items, std::nan(""));
  for (std::size_t i = 0; i < n_items; ++i) {
    if (count[i] > 0) model.item_means[i] = sum[i] / static_cast<double>(count[i]);
  }
  return model;
}

PredictionMatrix predict_mean(const MeanModel& model) {
  PredictionMatrix pred(model.n_users, model.item_means.size());
  for (std::size_t u = 0; u < pred.n_users; ++u) {
    for (std::size_t i = 0; i < pred.n_items; ++i) pred.at(u, i) = model.predict(i);
  }
  return pred;
}

// --- knn --------------------------------------------------------------------

KnnModel::KnnModel(KnnConfig config, SimilarityMatrix similarity,
                   RatingsMatrix train, MeanModel fallback)
    : config_(config),
      similarity_(std::move(similarity)),
      train_(std::move(train)),
      fallback_(std::move(fallback)),
      ranked_(train_.n_users()) {
  const std::size_t n = train_.n_users();
  for (std::size_t u = 0; u < n; ++u) {
    auto& ranked = ranked_[u];
    for (std::size_t v = 0; v < n; ++v) {
      if (v != u && similarity_.defined(u, v) && similarity_.raw(u, v) > 0.0) {
        ranked.push_back(v);
      }
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) {
                       return similarity_.raw(u, a) > similarity_.raw(u, b);
                     });
  }
}

std::vector<std::size_t> KnnModel::neighbors(std::size_t user,
                                             std::size_t item) const {
  std::vector<std::size_t> chosen;
  for (std::size_t v : ranked_[user]) {
    if (chosen.size() >= config_.k) break;
    if (train_.observed(v, item)) chosen.push_back(v);
  }
  return chosen;
}

KnnModel fit_knn(const RatingsMatrix& train, const KnnConfig& config) {
  if (config.k < 1) throw InvalidArgument("k must be at least 1");
  MeanModel fallback = fit_mean(train);
  SimilarityMatrix sim = compute_similarity(train, config.metric, config.min_overlap);
  return KnnModel(config, std::move(sim), train, std::move(fallback));
}

double predict_knn(const KnnModel& model, std::size_t user, std::size_t item) {
  double weighted = 0.0;
  double weight = 0.0;
  std::size_t used = 0;
  const auto& train = model.train();
  for (std::size_t v : model.ranked_candidates(user)) {
    if (used >= model.config().k) break;
    if (!train.observed(v, item)) continue;
    const double s = model.similarity().raw(user, v);
    weighted += train.at(v, item) * s;
    weight += s;
    ++used;
  }
  if (used == 0) return model.fallback().predict(item);
  return weighted / weight;
}

PredictionMatrix predict_knn(const KnnModel& model) {
  const auto& train = model.train();
  PredictionMatrix pred(train.n_users(), train.n_items());
  for (std::size_t u = 0; u < pred.n_users; ++u) {
    for (std::size_t i = 0; i < pred.n_items; ++i) {
      pred.at(u, i) = predict_knn(model, u, i);
    }
  }
  return pred;
}

// --- nnmf -------------------------------------------------------------------

double NnmfModel::interaction(std::size_t u, std::size_t i) const {
  double dot = 0.0;
  const double* p = user_factors.data() + u * factors;
  for (std::size_t f = 0; f < factors; ++f) dot += item_factors[f * n_items + i] * p[f];
  return dot;
}

double NnmfModel::predict(std::size_t u, std::size_t i) const {
  return mu + user_bias[u] + item_bias[i] + interaction(u, i) + shift;
}

std::size_t default_factors(const RatingsMatrix& train) {
  return std::min(train.n_users(), train.n_items());
}

double observed_rmse(const NnmfModel& model, const RatingsMatrix& matrix) {
  double sse = 0.0;
  std::size_t n = 0;
  for (const auto& [u, i] : matrix.observed_cells()) {
    const double e = matrix.at(u, i) - model.predict(u, i);
    sse += e * e;
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(sse / static_cast<double>(n));
}

namespace {

struct Observation {
  std::size_t user;
  std::size_t item;
  double rating;
};

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t label_key(const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Observations sorted by (user label, item label). Training walks this order
// rather than the row order, so reordering the rows of the input reorders
// the fitted parameters and changes nothing else.
std::vector<Observation> collect_observations(const RatingsMatrix& train) {
  std::vector<Observation> obs;
  obs.reserve(train.count_observed());
  for (const auto& [u, i] : train.observed_cells()) obs.push_back({u, i, train.at(u, i)});
  const auto& users = train.user_labels();
  const auto& items = train.item_labels();
  std::sort(obs.begin(), obs.end(), [&](const Observation& a, const Observation& b) {
    if (a.user != b.user) return users[a.user] < users[b.user];
    return items[a.item] < items[b.item];
  });
  return obs;
}

std::vector<std::size_t> label_order(const std::vector<std::string>& labels) {
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
  return order;
}

// Fills `f` consecutive entries per label from a stream keyed on the label.
// `stride` and `step` place entry k of row r at r * stride + k * step.
void init_factors(std::vector<double>& values, const std::vector<std::string>& labels,
                  std::size_t f, std::size_t stride, std::size_t step, std::uint64_t seed,
                  FactorInit init, double divisor) {
  for (std::size_t r = 0; r < labels.size(); ++r) {
    Rng rng(combine_seeds(seed, label_key(labels[r])));
    for (std::size_t k = 0; k < f; ++k) {
      values[r * stride + k * step] =
          init == FactorInit::kZeros ? 0.0 : std::abs(rng.normal()) / divisor;
    }
  }
}

}  // namespace

NnmfModel fit_nnmf_sgd(const RatingsMatrix& train, const NnmfSgdConfig& config) {
  if (!(config.gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (config.lambda_bi < 0.0 || config.lambda_bu < 0.0 || config.lambda_qi < 0.0 ||
      config.lambda_pu < 0.0) {
    throw InvalidArgument("regularization weights must be non-negative");
  }
  if (config.max_iters < 1) throw InvalidArgument("max_iters must be at least 1");

  const std::vector<Observation> obs = collect_observations(train);
  if (obs.empty()) throw EmptyTrainingSet("no observed ratings to fit");

  const std::size_t n_users = train.n_users();
  const std::size_t n_items = train.n_items();
  const std::size_t f = config.factors == 0 ? default_factors(train) : config.factors;
  if (f < 1) throw InvalidArgument("factor count must be at least 1");

  NnmfModel model;
  model.variant = NnmfVariant::kSgd;
  model.n_users = n_users;
  model.n_items = n_items;
  model.factors = f;
  model.sgd = config;
  model.sgd.factors = f;

  double total = 0.0;
  for (const auto& o : obs) total += o.rating;
  model.mu = total / static_cast<double>(obs.size());
  model.user_bias.assign(n_users, 0.0);
  model.item_bias.assign(n_items, 0.0);

  // Work on q stored item-major (row i = q_i) for contiguous access, then
  // transpose into the f x n_items layout at the end.
  std::vector<double> p(n_users * f);
  std::vector<double> q(n_items * f);
  {
    const double divisor = config.init_scaling == InitScaling::kByFactors
                               ? static_cast<double>(f)
                               : std::sqrt(static_cast<double>(f));
    init_factors(p, train.user_labels(), f, f, 1, combine_seeds(config.seed, 0x75ULL),
                 config.init, divisor);
    init_factors(q, train.item_labels(), f, f, 1, combine_seeds(config.seed, 0x69ULL),
                 config.init, divisor);
  }

  auto& bu = model.user_bias;
  auto& bi = model.item_bias;
  const double gamma = config.gamma;
  std::vector<double> q_snapshot(f);
  std::vector<Observation> order = obs;

  const auto pass_rmse = [&] {
    double sse = 0.0;
    for (const auto& o : obs) {
      const double* pu = p.data() + o.user * f;
      const double* qi = q.data() + o.item * f;
      double dot = 0.0;
      for (std::size_t k = 0; k < f; ++k) dot += qi[k] * pu[k];
      const double e = o.rating - (model.mu + bu[o.user] + bi[o.item] + dot);
      sse += e * e;
    }
    return std::sqrt(sse / static_cast<double>(obs.size()));
  };

  double previous = 0.0;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    // reshuffle from the fixed observation order so each pass depends only on
    // (seed, iteration)
    order = obs;
    Rng shuffle_rng(combine_seeds(config.seed, static_cast<std::uint64_t>(iter)));
    shuffle_rng.shuffle(std::span<Observation>(order));

    for (const auto& o : order) {
      double* pu = p.data() + o.user * f;
      double* qi = q.data() + o.item * f;
      double dot = 0.0;
      for (std::size_t k = 0; k < f; ++k) dot += qi[k] * pu[k];
      const double e = o.rating - (model.mu + bu[o.user] + bi[o.item] + dot);

      bi[o.item] += gamma * (e - config.lambda_bi * bi[o.item]);
      bu[o.user] += gamma * (e - config.lambda_bu * bu[o.user]);
      std::copy(qi, qi + f, q_snapshot.begin());
      for (std::size_t k = 0; k < f; ++k) {
        qi[k] += gamma * (e * pu[k] - config.lambda_qi * qi[k]);
      }
      for (std::size_t k = 0; k < f; ++k) {
        pu[k] += gamma * (e * q_snapshot[k] - config.lambda_pu * pu[k]);
      }
      if (config.clamp == ClampMode::kPerUpdate) {
        for (std::size_t k = 0; k < f; ++k) {
          if (qi[k] < 0.0) qi[k] = 0.0;
          if (pu[k] < 0.0) pu[k] = 0.0;
        }
      }
    }
    if (config.clamp == ClampMode::kPerIteration) {
      for (double& v : p) v = std::max(v, 0.0);
      for (double& v : q) v = std::max(v, 0.0);
    }

    const double rmse = pass_rmse();
    if (!std::isfinite(rmse)) throw DivergedError(iter, rmse);
    model.rmse_history.push_back(rmse);
    model.iterations_run = iter;
    model.final_rmse = rmse;
    if (iter > 1 && std::abs(previous - rmse) <= config.tol) {
      model.converged = true;
      break;
    }
    previous = rmse;
  }

  model.user_factors = std::move(p);
  model.item_factors.assign(f * n_items, 0.0);
  for (std::size_t i = 0; i < n_items; ++i) {
    for (std::size_t k = 0; k < f; ++k) model.item_factors[k * n_items + i] = q[i * f + k];
  }
  return model;
}

NnmfModel fit_nnmf_mult(const RatingsMatrix& train, const NnmfMultConfig& config) {
  if (config.max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  const std::size_t n_users = train.n_users();
  const std::size_t n_items = train.n_items();
  const std::size_t n_obs = train.count_observed();
  if (n_obs == 0) throw EmptyTrainingSet("no observed ratings to fit");
  const std::size_t f = config.factors == 0 ? default_factors(train) : config.factors;
  if (f < 1) throw InvalidArgument("factor count must be at least 1");

  NnmfModel model;
  model.variant = NnmfVariant::kMultiplicative;
  model.n_users = n_users;
  model.n_items = n_items;
  model.factors = f;
  model.mult = config;
  model.mult.factors = f;
  model.user_bias.assign(n_users, 0.0);
  model.item_bias.assign(n_items, 0.0);

  // Multiplicative updates need V >= 0; shift by the minimum when violated.
  double lowest = 0.0;
  for (const auto& [u, i] : train.observed_cells()) lowest = std::min(lowest, train.at(u, i));
  model.shift = lowest;

  std::vector<double> V(n_users * n_items, 0.0);
  std::vector<std::uint8_t> seen(n_users * n_items, 0);
  for (const auto& [u, i] : train.observed_cells()) {
    V[u * n_items + i] = train.at(u, i) - lowest;
    seen[u * n_items + i] = 1;
  }

  auto& W = model.user_factors;  // n_users x f
  auto& H = model.item_factors;  // f x n_items
  W.resize(n_users * f);
  H.resize(f * n_items);
  {
    // same |N(0,1)| / f draw as the SGD variant
    const double divisor = static_cast<double>(f);
    init_factors(W, train.user_labels(), f, f, 1, combine_seeds(config.seed, 0x75ULL),
                 FactorInit::kHalfNormal, divisor);
    init_factors(H, train.item_labels(), f, 1, n_items, combine_seeds(config.seed, 0x69ULL),
                 FactorInit::kHalfNormal, divisor);
  }

  const std::vector<std::size_t> users_in_order = label_order(train.user_labels());
  constexpr double kEps = 1e-12;
  std::vector<double> recon(n_users * n_items);
  std::vector<double> filled(n_users * n_items);
  std::vector<double> numer_h(f * n_items);
  std::vector<double> wtw(f * f);
  std::vector<double> numer_w(n_users * f);
  std::vector<double> hht(f * f);

  const auto reconstruct = [&] {
    std::fill(recon.begin(), recon.end(), 0.0);
    for (std::size_t u = 0; u < n_users; ++u) {
      for (std::size_t k = 0; k < f; ++k) {
        const double w = W[u * f + k];
        if (w == 0.0) continue;
        const double* h = H.data() + k * n_items;
        double* r = recon.data() + u * n_items;
        for (std::size_t i = 0; i < n_items; ++i) r[i] += w * h[i];
      }
    }
  };
  const auto observed_error = [&] {
    double sse = 0.0;
    for (std::size_t u : users_in_order) {
      for (std::size_t c = u * n_items; c < (u + 1) * n_items; ++c) {
        if (!seen[c]) continue;
        const double e = V[c] - recon[c];
        sse += e * e;
      }
    }
    return std::sqrt(sse / static_cast<double>(n_obs));
  };

  reconstruct();
  double previous = 0.0;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    for (std::size_t c = 0; c < V.size(); ++c) filled[c] = seen[c] ? V[c] : recon[c];

    // H <- H * (W^T X) / (W^T W H)
    std::fill(numer_h.begin(), numer_h.end(), 0.0);
    std::fill(wtw.begin(), wtw.end(), 0.0);
    for (std::size_t u : users_in_order) {
      const double* w = W.data() + u * f;
      const double* x = filled.data() + u * n_items;
      for (std::size_t k = 0; k < f; ++k) {
        double* nh = numer_h.data() + k * n_items;
        for (std::size_t i = 0; i < n_items; ++i) nh[i] += w[k] * x[i];
        for (std::size_t l = 0; l < f; ++l) wtw[k * f + l] += w[k] * w[l];
      }
    }
    for (std::size_t k = 0; k < f; ++k) {
      for (std::size_t i = 0; i < n_items; ++i) {
        double denom = 0.0;
        for (std::size_t l = 0; l < f; ++l) denom += wtw[k * f + l] * H[l * n_items + i];
        H[k * n_items + i] *= numer_h[k * n_items + i] / (denom + kEps);
      }
    }

    // W <- W * (X H^T) / (W H H^T)
    std::fill(numer_w.begin(), numer_w.end(), 0.0);
    std::fill(hht.begin(), hht.end(), 0.0);
    for (std::size_t k = 0; k < f; ++k) {
      const double* hk = H.data() + k * n_items;
      for (std::size_t l = 0; l < f; ++l) {
        const double* hl = H.data() + l * n_items;
        double s = 0.0;
        for (std::size_t i = 0; i < n_items; ++i) s += hk[i] * hl[i];
        hht[k * f + l] = s;
      }
      for (std::size_t u = 0; u < n_users; ++u) {
        const double* x = filled.data() + u * n_items;
        double s = 0.0;
        for (std::size_t i = 0; i < n_items; ++i) s += x[i] * hk[i];
        numer_w[u * f + k] = s;
      }
    }
    for (std::size_t u = 0; u < n_users; ++u) {
      for (std::size_t k = 0; k < f; ++k) {
        double denom = 0.0;
        for (std::size_t l = 0; l < f; ++l) denom += W[u * f + l] * hht[l * f + k];
        W[u * f + k] *= numer_w[u * f + k] / (denom + kEps);
      }
    }

    reconstruct();
    const double rmse = observed_error();
    if (!std::isfinite(rmse)) throw DivergedError(iter, rmse);
    model.rmse_history.push_back(rmse);
    model.iterations_run = iter;
    model.final_rmse = rmse;
    if (iter > 1 && std::abs(previous - rmse) <= config.tol) {
      model.converged = true;
      break;
    }
    previous = rmse;
  }
  return model;
}

PredictionMatrix predict_nnmf(const NnmfModel& model) {
  PredictionMatrix pred(model.n_users, model.n_items);
  for (std::size_t u = 0; u < model.n_users; ++u) {
    for (std::size_t i = 0; i < model.n_items; ++i) pred.at(u, i) = model.predict(u, i);
  }
  return pred;
}

// --- dispatch -----------------------------------------------------------------

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kMean:
      return "mean";
    case EstimatorKind::kKnn:
      return "knn";
    case EstimatorKind::kNnmfSgd:
      return "nnmf_sgd";
    case EstimatorKind::kNnmfMult:
      return "nnmf_mult";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "mean") return EstimatorKind::kMean;
  if (name == "knn") return EstimatorKind::kKnn;
  if (name == "nnmf_sgd") return EstimatorKind::kNnmfSgd;
  if (name == "nnmf_mult") return EstimatorKind::kNnmfMult;
  throw InvalidArgument("unknown estimator '" + std::string(name) +
                        "' (expected mean, knn, nnmf_sgd or nnmf_mult)");
}

PredictionMatrix fit_predict(const EstimatorConfig& config,
                             const RatingsMatrix& train,
                             std::uint64_t seed_offset) {
  const auto seeded = [&](std::uint64_t seed) {
    return seed_offset == 0 ? seed : combine_seeds(seed, seed_offset);
  };
  switch (config.kind) {
    case EstimatorKind::kMean:
      return predict_mean(fit_mean(train));
    case EstimatorKind::kKnn:
      return predict_knn(fit_knn(train, config.knn));
    case EstimatorKind::kNnmfSgd: {
      NnmfSgdConfig sgd = config.sgd;
      sgd.seed = seeded(sgd.seed);
      return predict_nnmf(fit_nnmf_sgd(train, sgd));
    }
    case EstimatorKind::kNnmfMult: {
      NnmfMultConfig mult = config.mult;
      mult.seed = seeded(mult.seed);
      return predict_nnmf(fit_nnmf_mult(train, mult));
    }
  }
  throw InvalidArgument("unhandled estimator kind");
}

}  // namespace ratefill
