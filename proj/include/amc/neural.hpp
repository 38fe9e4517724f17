#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "amc/buffer.hpp"
#include "amc/mcs_model.hpp"

namespace amc {

enum class HiddenActivation { relu, tanh };
enum class OutputActivation { sigmoid, identity };
enum class LossKind { logloss, mse };

struct ActivationSpec {
  HiddenActivation hidden = HiddenActivation::relu;
  OutputActivation output = OutputActivation::sigmoid;

  /// ReLU hidden layers, sigmoid head: ACK-probability classifier.
  static ActivationSpec classifier() { return {HiddenActivation::relu, OutputActivation::sigmoid}; }
  /// tanh hidden layers, identity head: reward regressor.
  static ActivationSpec regressor() { return {HiddenActivation::tanh, OutputActivation::identity}; }
  bool operator==(const ActivationSpec&) const = default;
};

/// Raised when a forward pass or loss produces a non-finite value.
class ModelDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kScalerMinStd = 1e-6;
inline constexpr double kProbabilityClamp = 1e-7;

/// Per-feature standardization (population std; near-constant columns keep
/// std = 1 so they scale to zero).
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;

  static Scaler identity(std::size_t features);
  void apply(std::span<const double> raw, std::span<double> out) const;
  double apply_one(std::size_t feature, double raw) const { return (raw - mean[feature]) / std[feature]; }
};

Scaler scaler_fit(std::span<const Sample> samples);
Scaler scaler_fit(const SampleBuffer& buffer);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

/// Multiply-accumulate counts, split by purpose.
struct FlopCounter {
  std::uint64_t training = 0;
  std::uint64_t inference = 0;
};

/// Fully connected network [F, H1, H2, 1] with bias on every layer. All
/// parameters live in one flat vector laid out layer by layer as the
/// row-major weight matrix (out x in) followed by the bias vector.
class MlpModel {
 public:
  MlpModel(std::vector<int> layer_sizes, ActivationSpec activation);
  MlpModel(std::vector<int> layer_sizes, ActivationSpec activation, std::mt19937_64& rng);

  /// Glorot-uniform weights, zero biases, fresh optimizer state.
  void reinitialize(std::mt19937_64& rng);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t input_size() const { return static_cast<std::size_t>(sizes_.front()); }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  const ActivationSpec& activation() const { return activation_; }

  /// Nodes P (all layers including input) and connections Q (weights only).
  std::size_t node_count() const;
  std::size_t connection_count() const;
  std::size_t parameter_count() const { return params_.size(); }
  /// Parameters plus optimizer moments plus scaler, in bytes.
  std::size_t memory_bytes() const;

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const;

  Scaler& scaler() { return scaler_; }
  const Scaler& scaler() const { return scaler_; }
  AdamState& adam() { return adam_; }
  const AdamState& adam() const { return adam_; }
  FlopCounter& flops() const { return flops_; }

  /// Forward pass on an already-scaled input. Throws ModelDivergence on a
  /// non-finite result.
  double forward(std::span<const double> scaled) const;
  /// Scales a raw feature vector, then runs forward().
  double predict(std::span<const double> raw) const;

  /// Outputs for every candidate mcs 1..k given the raw non-mcs prefix of
  /// the feature vector, evaluated as one batched pass. The shared part of
  /// the first layer is computed once.
  void predict_all_mcs(std::span<const double> raw_prefix, int k, std::span<double> out) const;

  using ConstMatrixMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
  ConstMatrixMap weights(std::size_t layer) const;
  ConstVectorMap bias(std::size_t layer) const;
  /// In-place hidden activation, or the head when `output_layer`.
  void apply_activation(Eigen::MatrixXd& z, bool output_layer) const;

  void save(std::ostream& os) const;
  static MlpModel load(std::istream& is);

 private:
  double hidden_act(double z) const;
  double output_act(double z) const;

  std::vector<int> sizes_;
  ActivationSpec activation_;
  std::vector<std::size_t> offsets_;
  // Aligned so Eigen kernels over the layer views take the same code path on every allocation.
  std::vector<double, Eigen::aligned_allocator<double>> params_;
  Scaler scaler_;
  AdamState adam_;
  mutable FlopCounter flops_;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Training target of a sample: the ACK bit for logloss, SE(mcs)*[ack] for mse.
double training_target(const Sample& sample, LossKind kind, const McsTable& table);

/// Mean loss over the batch and its gradient with respect to every parameter.
/// logloss requires a sigmoid head, mse an identity head.
LossGrad loss_and_grad(const MlpModel& model, std::span<const Sample> batch, LossKind kind,
                       const McsTable& table);
LossGrad loss_and_grad(const MlpModel& model, std::span<const Sample* const> batch, LossKind kind,
                       const McsTable& table);

namespace reference {

// Straight per-sample loops. Kept as the ground truth the batched kernels
// are tested against; not used on the simulation path.
void predict_all_mcs(const MlpModel& model, std::span<const double> raw_prefix, int k,
                     std::span<double> out);
LossGrad loss_and_grad(const MlpModel& model, std::span<const Sample* const> batch, LossKind kind,
                       const McsTable& table);

}  // namespace reference

void adam_step(MlpModel& model, std::span<const double> grad, const AdamConfig& config);

struct FitConfig {
  int steps = 10;
  int batch = 64;
  AdamConfig adam;
};

struct FitReport {
  std::vector<double> losses;
  int divergences = 0;
};

/// Refits the scaler on the buffer, then runs `steps` Adam steps on
/// with-replacement minibatches starting from the current weights. A
/// non-finite loss reinitializes the weights and counts a divergence.
FitReport fit(MlpModel& model, const SampleBuffer& buffer, LossKind kind, const McsTable& table,
              const FitConfig& config, std::mt19937_64& rng);

}  // namespace amc
