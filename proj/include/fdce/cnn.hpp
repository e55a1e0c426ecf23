#pragma once

// Two-layer circular-convolution network on the spectral statistic
// c_hat = |Q X^H y|^2 / sigma^2:
//
//   w(c_hat) = a2 * psi(a1 * c_hat + b1) + b2,   h_hat = Q^H diag(w) Q X^H y
//
// where * is 2D circular convolution on the n_rx x n_tx grid and psi is a
// softmax over the whole grid or an elementwise ReLU.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fdce/channel_sim.hpp"
#include "fdce/mmse_grid.hpp"

namespace fdce {

enum class Activation { Softmax, Relu };

const char* to_string(Activation a) noexcept;
Activation parse_activation(const std::string& s);

struct CnnParams {
  Shape2D shape;
  Activation activation = Activation::Relu;
  RealVec a1, b1, a2, b2;

  bool operator==(const CnnParams&) const = default;
};

void validate(const CnnParams& p);

enum class InitMode { MlIdentity, Random };

const char* to_string(InitMode m) noexcept;
InitMode parse_init_mode(const std::string& s);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 20;
  /// Batches per epoch; the shuffled training set is cycled when it holds
  /// fewer than batches_per_epoch * batch_size samples.
  std::size_t batches_per_epoch = 450;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double snr_train_db = 5.0;
  /// Non-empty: every training observation draws its SNR from this list
  /// (one network shared across noise levels).
  std::vector<double> snr_mix_db;
  std::uint64_t seed = 1;
  InitMode init = InitMode::MlIdentity;
  double init_noise = 1e-3;
  /// Scale each parameter group's step by its initial magnitude, so a step
  /// moves a1 by the same relative amount at every SNR.
  bool scaled_steps = true;
};

void validate(const TrainConfig& cfg);

struct TrainMeta {
  std::string domain_tag = "dl";
  double snr_db = 0.0;
  std::size_t epochs = 0;
  double final_loss = 0.0;
  std::uint64_t seed = 0;
  RealVec loss_history;  // epoch means, not serialized
};

struct TrainedModel {
  CnnParams params;
  TrainMeta train_meta;
};

/// Starting parameters for a given noise level.
CnnParams init_params(const Shape2D& shape, Activation act, double sigma2, InitMode mode, double noise,
                      std::uint64_t seed);

/// Typical magnitude of a1, b1, a2, b2 at initialization.
std::array<double, 4> param_scales(const Shape2D& shape, Activation act, double sigma2);

/// Forward pass with cached kernel spectra; read-only and shareable.
class CnnModel {
 public:
  explicit CnnModel(CnnParams params);

  const CnnParams& params() const noexcept { return params_; }

  RealVec forward(std::span<const double> chat) const;
  ComplexVec estimate(std::span<const cplx> y, const EstimatorContext& ctx) const;

 private:
  CnnParams params_;
  CircConv2 conv_;
  ComplexVec a1_spec_;
  ComplexVec a2_spec_;
};

RealVec forward(std::span<const double> chat, const CnnParams& params);
ComplexVec estimate(std::span<const cplx> y, const CnnParams& params, const EstimatorContext& ctx);

struct TrainPair {
  ComplexVec y;
  ComplexVec h;
};

struct CnnGrads {
  RealVec a1, b1, a2, b2;
};

struct LossGrad {
  double loss = 0.0;
  CnnGrads grads;
};

/// Batch-mean of ||h - h_hat||^2 and its exact gradient.
LossGrad loss_and_grad(std::span<const TrainPair> batch, const CnnParams& params, const EstimatorContext& ctx);

/// Adam on freshly drawn observations of the training channels.
TrainedModel train(const Dataset& train_set, const EstimatorContext& ctx, const TrainConfig& cfg, Activation act);

/// Parameter file as JSON text; floats print in shortest round-trip form.
std::string params_to_json(const TrainedModel& model);
TrainedModel params_from_json(const std::string& text);
void save_params(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_params(const std::filesystem::path& path);

inline constexpr int kParamsFormatVersion = 1;

}  // namespace fdce
