#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coop/assignment.hpp"
#include "coop/scene.hpp"

namespace coop {

// Parameter containers are templated on the tensor type so the same layout
// holds plain matrices, gradients, and autodiff variables.

template <class T>
struct AttentionT {
  T query, key, value, output;  // d×d each, applied as x·W
};

/// Relative-position encoder: (Δx, Δy, Δz, ‖Δ‖) → d, one hidden GELU layer.
template <class T>
struct PositionEncoderT {
  T hidden_weight;  // 4×d
  T hidden_bias;    // 1×d
  T output_weight;  // d×d
  T output_bias;    // 1×d
};

template <class T>
struct FeedForwardT {
  T w1;  // d×4d
  T b1;  // 1×4d
  T w2;  // 4d×d
  T b2;  // 1×d
};

template <class T>
struct CaaLayerT {
  AttentionT<T> intra;
  PositionEncoderT<T> position;
  AttentionT<T> inter;
  FeedForwardT<T> ffn;
};

template <class T>
struct MatchabilityHeadT {
  T weight;  // d×1
  T bias;    // 1×1
};

template <class T>
struct CaaParamsT {
  int layers = 0;
  int dim = 0;
  int heads = 1;
  std::vector<CaaLayerT<T>> layer;
  MatchabilityHeadT<T> ego_head;
  MatchabilityHeadT<T> coop_head;
};

using CaaParams = CaaParamsT<Eigen::MatrixXd>;

/// Visits every tensor in declaration order (the serialisation order):
/// per layer intra q/k/v/o, position encoder, inter q/k/v/o, feed-forward;
/// then the ego and coop matchability heads. Extra parameter sets are
/// visited in lockstep: f(name, a_tensor, b_tensor, ...).
template <class F, class First, class... Rest>
void for_each_tensor(F&& f, First& first, Rest&... rest) {
  const auto attention = [&](const std::string& p, auto&& get) {
    f(p + ".query", get(first).query, get(rest).query...);
    f(p + ".key", get(first).key, get(rest).key...);
    f(p + ".value", get(first).value, get(rest).value...);
    f(p + ".output", get(first).output, get(rest).output...);
  };
  for (std::size_t l = 0; l < first.layer.size(); ++l) {
    const std::string p = "layer" + std::to_string(l);
    attention(p + ".intra", [l](auto& s) -> auto& { return s.layer[l].intra; });
    f(p + ".position.hidden_weight", first.layer[l].position.hidden_weight, rest.layer[l].position.hidden_weight...);
    f(p + ".position.hidden_bias", first.layer[l].position.hidden_bias, rest.layer[l].position.hidden_bias...);
    f(p + ".position.output_weight", first.layer[l].position.output_weight, rest.layer[l].position.output_weight...);
    f(p + ".position.output_bias", first.layer[l].position.output_bias, rest.layer[l].position.output_bias...);
    attention(p + ".inter", [l](auto& s) -> auto& { return s.layer[l].inter; });
    f(p + ".ffn.w1", first.layer[l].ffn.w1, rest.layer[l].ffn.w1...);
    f(p + ".ffn.b1", first.layer[l].ffn.b1, rest.layer[l].ffn.b1...);
    f(p + ".ffn.w2", first.layer[l].ffn.w2, rest.layer[l].ffn.w2...);
    f(p + ".ffn.b2", first.layer[l].ffn.b2, rest.layer[l].ffn.b2...);
  }
  f("ego_head.weight", first.ego_head.weight, rest.ego_head.weight...);
  f("ego_head.bias", first.ego_head.bias, rest.ego_head.bias...);
  f("coop_head.weight", first.coop_head.weight, rest.coop_head.weight...);
  f("coop_head.bias", first.coop_head.bias, rest.coop_head.bias...);
}

/// Glorot-uniform weights, zero biases, matchability bias +1.
CaaParams initialize_caa(int layers, int dim, int heads, std::uint64_t seed);

/// All-zero tensors with the shapes implied by (layers, dim, heads).
CaaParams zero_caa(int layers, int dim, int heads);

/// Throws DimensionMismatch on inconsistent shapes, InvalidArgument on
/// non-finite values or a head count that does not divide dim.
void validate(const CaaParams& params);

std::size_t parameter_count(const CaaParams& params);

struct CaaOptions {
  double temperature = 0.1;
  int sinkhorn_iters = 20;
  double tau = 0.4;
  double position_scale = 10.0;  // meters; relative offsets are divided by this
};

/// Matcher-facing view of one agent's queries.
struct QuerySet {
  Eigen::MatrixXd descriptors;  // n×d
  Eigen::MatrixXd positions;    // n×3
  Eigen::Index size() const { return descriptors.rows(); }
};

QuerySet make_query_set(std::span<const Query> queries);

struct RefinedDescriptors {
  Eigen::MatrixXd ego;
  std::vector<Eigen::MatrixXd> coop;
  Eigen::Index inter_pool_size = 0;  // tokens seen by each global attention block
};

/// L rounds of per-agent self-attention with a relative-position bias,
/// then global self-attention over every agent's queries (ego first) without
/// positions, then a feed-forward block; all residual.
RefinedDescriptors caa_refine(const CaaParams& params, const QuerySet& ego,
                              std::span<const QuerySet> coop, const CaaOptions& options = {});

struct PairScores {
  Eigen::MatrixXd affinity;          // refined coop · refined egoᵀ
  Eigen::MatrixXd assignment;        // Sinkhorn P
  Eigen::MatrixXd scores;            // σ_coop · σ_ego · P
  Eigen::VectorXd coop_matchability;
  Eigen::VectorXd ego_matchability;
};

std::vector<PairScores> caa_scores(const CaaParams& params, const QuerySet& ego,
                                   std::span<const QuerySet> coop, const CaaOptions& options = {});

/// One MatchResult per cooperative agent: mutual nearest neighbour on the
/// scaled scores with score ≥ options.tau.
std::vector<MatchResult> caa_match(const CaaParams& params, const QuerySet& ego,
                                   std::span<const QuerySet> coop, const CaaOptions& options = {});

struct TrainingExample {
  QuerySet ego;
  std::vector<QuerySet> coop;
  // Ground-truth (coop_index, ego_index) pairs per cooperative agent.
  std::vector<std::vector<std::pair<int, int>>> pairs;
};

/// Labels pairs wherever a coop and an ego query share a gt_object_id.
TrainingExample make_training_example(std::span<const Query> ego,
                                      std::span<const std::vector<Query>> coop_in_ego_frame);

/// Throws LabelInconsistency unless every pair list is injective and in range.
void check_labels(const TrainingExample& example);

struct LossWeights {
  double nll = 1.0;
  double bce = 1.0;
};

/// Weighted components; total = nll + bce.
struct LossBreakdown {
  double total = 0.0;
  double nll = 0.0;
  double bce = 0.0;
};

struct LossAndGradient {
  LossBreakdown loss;
  CaaParams gradient;
};

/// NLL of the ground-truth pairs under log(σ_u σ_x P(u, x)), averaged over
/// pairs, plus binary cross-entropy of every matchability against
/// "has a counterpart", averaged over queries.
LossAndGradient caa_loss(const CaaParams& params, const TrainingExample& example,
                         const CaaOptions& options = {}, const LossWeights& weights = {});

LossBreakdown caa_loss_value(const CaaParams& params, const TrainingExample& example,
                             const CaaOptions& options = {}, const LossWeights& weights = {});

double mean_loss(const CaaParams& params, std::span<const TrainingExample> dataset,
                 const CaaOptions& options = {}, const LossWeights& weights = {});

struct TrainingResult {
  CaaParams params;
  std::vector<double> loss_curve;  // loss of the example visited at each step, before its update
};

/// Plain SGD at a fixed learning rate; examples are visited in a fresh
/// seeded shuffle each epoch. Throws DivergenceDetected on a non-finite loss.
TrainingResult train_caa(CaaParams initial, std::span<const TrainingExample> dataset, int steps,
                         double learning_rate, std::uint64_t seed, const CaaOptions& options = {},
                         const LossWeights& weights = {});

// Binary layout: "COOPCAA1", int64 layers, dim, heads, then every tensor in
// declaration order as row-major little-endian float64.
void write_params(std::ostream& out, const CaaParams& params);
CaaParams read_params(std::istream& in);
void save_params(const std::filesystem::path& path, const CaaParams& params);
CaaParams load_params(const std::filesystem::path& path);

/// "step,loss" CSV.
void save_loss_curve(const std::filesystem::path& path, std::span<const double> curve);

}  // namespace coop
