#include "amc/neural.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "amc/report.hpp"

namespace amc {
namespace {
using MatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
}  // namespace
}  // namespace amc

namespace amc {

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Per-layer pre-activations and activations of one forward pass.
struct Trace {
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> a;  // a[0] is the scaled input
};

}  // namespace

// ---------------------------------------------------------------------------
// Scaler

Scaler Scaler::identity(std::size_t features) {
  return Scaler{std::vector<double>(features, 0.0), std::vector<double>(features, 1.0)};
}

void Scaler::apply(std::span<const double> raw, std::span<double> out) const {
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - mean[i]) / std[i];
}

namespace {

template <typename It>
Scaler fit_columns(It first, It last, std::size_t count) {
  if (count < 2) throw std::invalid_argument("scaler_fit needs at least 2 samples");
  const std::size_t f = first->features.size();
  Scaler s{std::vector<double>(f, 0.0), std::vector<double>(f, 0.0)};
  const double n = static_cast<double>(count);
  for (It it = first; it != last; ++it)
    for (std::size_t i = 0; i < f; ++i) s.mean[i] += it->features[i];
  for (auto& m : s.mean) m /= n;
  for (It it = first; it != last; ++it)
    for (std::size_t i = 0; i < f; ++i) {
      const double d = it->features[i] - s.mean[i];
      s.std[i] += d * d;
    }
  for (auto& v : s.std) {
    v = std::sqrt(v / n);
    if (v < kScalerMinStd) v = 1.0;
  }
  return s;
}

}  // namespace

Scaler scaler_fit(std::span<const Sample> samples) {
  return fit_columns(samples.begin(), samples.end(), samples.size());
}

Scaler scaler_fit(const SampleBuffer& buffer) {
  return fit_columns(buffer.begin(), buffer.end(), buffer.size());
}

// ---------------------------------------------------------------------------
// MlpModel

MlpModel::MlpModel(std::vector<int> layer_sizes, ActivationSpec activation)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw std::invalid_argument("mlp needs at least input and output layers");
  if (sizes_.back() != 1) throw std::invalid_argument("mlp output layer must have width 1");
  for (int s : sizes_)
    if (s < 1) throw std::invalid_argument("mlp layer widths must be positive");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
  scaler_ = Scaler::identity(input_size());
  adam_.m.assign(total, 0.0);
  adam_.v.assign(total, 0.0);
}

MlpModel::MlpModel(std::vector<int> layer_sizes, ActivationSpec activation, std::mt19937_64& rng)
    : MlpModel(std::move(layer_sizes), activation) {
  reinitialize(rng);
}

void MlpModel::reinitialize(std::mt19937_64& rng) {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double a = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-a, a);
    double* w = params_.data() + offsets_[l];
    for (int i = 0; i < in * out; ++i) w[i] = dist(rng);
    std::fill_n(w + in * out, out, 0.0);
  }
  std::fill(adam_.m.begin(), adam_.m.end(), 0.0);
  std::fill(adam_.v.begin(), adam_.v.end(), 0.0);
  adam_.step = 0;
}

std::size_t MlpModel::node_count() const {
  std::size_t p = 0;
  for (int s : sizes_) p += static_cast<std::size_t>(s);
  return p;
}

std::size_t MlpModel::connection_count() const {
  std::size_t q = 0;
  for (std::size_t l = 0; l < layer_count(); ++l)
    q += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];
  return q;
}

std::size_t MlpModel::memory_bytes() const {
  return sizeof(double) * (3 * params_.size() + 2 * input_size());
}

std::size_t MlpModel::bias_offset(std::size_t layer) const {
  return offsets_[layer] + static_cast<std::size_t>(sizes_[layer]) * sizes_[layer + 1];
}

double MlpModel::hidden_act(double z) const {
  return activation_.hidden == HiddenActivation::relu ? std::max(0.0, z) : std::tanh(z);
}

double MlpModel::output_act(double z) const {
  return activation_.output == OutputActivation::sigmoid ? sigmoid(z) : z;
}

namespace {

// Forward pass recording the trace; returns the head output.
double forward_trace(const MlpModel& model, std::span<const double> x, Trace& trace,
                     double (*hidden)(double), double (*head)(double)) {
  const auto& sizes = model.layer_sizes();
  const std::size_t layers = model.layer_count();
  trace.z.resize(layers);
  trace.a.resize(layers + 1);
  trace.a[0].assign(x.begin(), x.end());
  const auto params = model.params();
  std::uint64_t macs = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double* w = params.data() + model.weight_offset(l);
    const double* b = params.data() + model.bias_offset(l);
    auto& z = trace.z[l];
    auto& a = trace.a[l + 1];
    z.resize(static_cast<std::size_t>(out));
    a.resize(static_cast<std::size_t>(out));
    const auto& prev = trace.a[l];
    for (int i = 0; i < out; ++i) {
      double acc = b[i];
      const double* row = w + static_cast<std::ptrdiff_t>(i) * in;
      for (int j = 0; j < in; ++j) acc += row[j] * prev[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(i)] = acc;
      a[static_cast<std::size_t>(i)] = (l + 1 == layers) ? head(acc) : hidden(acc);
    }
    macs += static_cast<std::uint64_t>(in) * out;
  }
  model.flops().training += macs;
  return trace.a[layers][0];
}

double relu(double z) { return std::max(0.0, z); }
double tanh_fn(double z) { return std::tanh(z); }
double identity_fn(double z) { return z; }

}  // namespace

double MlpModel::forward(std::span<const double> scaled) const {
  if (scaled.size() != input_size()) throw std::invalid_argument("mlp forward: wrong input width");
  std::vector<double> prev(scaled.begin(), scaled.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + static_cast<std::ptrdiff_t>(in) * out;
    next.assign(static_cast<std::size_t>(out), 0.0);
    for (int i = 0; i < out; ++i) {
      double acc = b[i];
      const double* row = w + static_cast<std::ptrdiff_t>(i) * in;
      for (int j = 0; j < in; ++j) acc += row[j] * prev[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = (l + 1 == layer_count()) ? output_act(acc) : hidden_act(acc);
    }
    flops_.inference += static_cast<std::uint64_t>(in) * out;
    prev.swap(next);
  }
  if (!std::isfinite(prev[0])) throw ModelDivergence("mlp forward produced a non-finite output");
  return prev[0];
}

double MlpModel::predict(std::span<const double> raw) const {
  std::vector<double> scaled(raw.size());
  scaler_.apply(raw, scaled);
  return forward(scaled);
}

void MlpModel::predict_all_mcs(std::span<const double> raw_prefix, int k,
                               std::span<double> out) const {
  const std::size_t f = input_size();
  if (raw_prefix.size() + 1 != f) throw std::invalid_argument("predict_all_mcs: wrong prefix width");
  const Eigen::Index h1 = sizes_[1];

  Eigen::VectorXd prefix(static_cast<Eigen::Index>(f - 1));
  for (std::size_t j = 0; j + 1 < f; ++j) prefix(static_cast<Eigen::Index>(j)) = scaler_.apply_one(j, raw_prefix[j]);
  Eigen::RowVectorXd xm(k);
  for (int m = 1; m <= k; ++m) xm(m - 1) = scaler_.apply_one(f - 1, static_cast<double>(m));

  const auto w1 = weights(0);
  const Eigen::VectorXd base = w1.leftCols(static_cast<Eigen::Index>(f - 1)) * prefix + bias(0);
  Eigen::MatrixXd act = (base.replicate(1, k) + w1.col(static_cast<Eigen::Index>(f - 1)) * xm);
  apply_activation(act, layer_count() == 1);
  flops_.inference += static_cast<std::uint64_t>(f - 1) * h1 + static_cast<std::uint64_t>(h1) * k;

  for (std::size_t l = 1; l < layer_count(); ++l) {
    Eigen::MatrixXd z = weights(l) * act;
    z.colwise() += bias(l);
    apply_activation(z, l + 1 == layer_count());
    act.swap(z);
    flops_.inference += static_cast<std::uint64_t>(sizes_[l]) * sizes_[l + 1] * k;
  }
  for (int m = 0; m < k; ++m) {
    if (!std::isfinite(act(0, m))) throw ModelDivergence("mlp forward produced a non-finite output");
    out[static_cast<std::size_t>(m)] = act(0, m);
  }
}

MlpModel::ConstMatrixMap MlpModel::weights(std::size_t layer) const {
  return ConstMatrixMap(params_.data() + offsets_[layer], sizes_[layer + 1], sizes_[layer]);
}

MlpModel::ConstVectorMap MlpModel::bias(std::size_t layer) const {
  return ConstVectorMap(params_.data() + bias_offset(layer), sizes_[layer + 1]);
}

void MlpModel::apply_activation(Eigen::MatrixXd& z, bool output_layer) const {
  if (output_layer) {
    if (activation_.output == OutputActivation::sigmoid)
      z = z.unaryExpr([](double t) { return sigmoid(t); });
  } else if (activation_.hidden == HiddenActivation::relu) {
    z = z.cwiseMax(0.0);
  } else {
    z = z.array().tanh().matrix();
  }
}

void reference::predict_all_mcs(const MlpModel& model, std::span<const double> raw_prefix, int k,
                                std::span<double> out) {
  std::vector<double> x(raw_prefix.begin(), raw_prefix.end());
  x.push_back(0.0);
  for (int m = 1; m <= k; ++m) {
    x.back() = static_cast<double>(m);
    out[static_cast<std::size_t>(m - 1)] = model.predict(x);
  }
}

void MlpModel::save(std::ostream& os) const {
  os << "mlp " << sizes_.size();
  for (int s : sizes_) os << ' ' << s;
  os << '\n';
  os << (activation_.hidden == HiddenActivation::relu ? "relu" : "tanh") << ' '
     << (activation_.output == OutputActivation::sigmoid ? "sigmoid" : "identity") << '\n';
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < in; ++j) os << (j ? " " : "") << format_exact(w[i * in + j]);
      os << '\n';
    }
    const double* b = w + in * out;
    for (int i = 0; i < out; ++i) os << (i ? " " : "") << format_exact(b[i]);
    os << '\n';
  }
  for (std::size_t i = 0; i < input_size(); ++i) os << (i ? " " : "") << format_exact(scaler_.mean[i]);
  os << '\n';
  for (std::size_t i = 0; i < input_size(); ++i) os << (i ? " " : "") << format_exact(scaler_.std[i]);
  os << '\n';
}

MlpModel MlpModel::load(std::istream& is) {
  std::string tag;
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "mlp" || count < 2)
    throw std::runtime_error("mlp snapshot: bad header");
  std::vector<int> sizes(count);
  for (auto& s : sizes)
    if (!(is >> s)) throw std::runtime_error("mlp snapshot: truncated layer sizes");
  std::string hidden, head;
  if (!(is >> hidden >> head)) throw std::runtime_error("mlp snapshot: missing activations");
  ActivationSpec spec;
  if (hidden == "relu") spec.hidden = HiddenActivation::relu;
  else if (hidden == "tanh") spec.hidden = HiddenActivation::tanh;
  else throw std::runtime_error("mlp snapshot: unknown hidden activation " + hidden);
  if (head == "sigmoid") spec.output = OutputActivation::sigmoid;
  else if (head == "identity") spec.output = OutputActivation::identity;
  else throw std::runtime_error("mlp snapshot: unknown output activation " + head);
  MlpModel model(std::move(sizes), spec);
  for (auto& p : model.params_)
    if (!(is >> p)) throw std::runtime_error("mlp snapshot: truncated parameters");
  for (auto& v : model.scaler_.mean)
    if (!(is >> v)) throw std::runtime_error("mlp snapshot: truncated scaler");
  for (auto& v : model.scaler_.std)
    if (!(is >> v)) throw std::runtime_error("mlp snapshot: truncated scaler");
  return model;
}

// ---------------------------------------------------------------------------
// Losses and optimizer

double training_target(const Sample& sample, LossKind kind, const McsTable& table) {
  if (kind == LossKind::logloss) return sample.ack ? 1.0 : 0.0;
  return sample.ack ? table.se(sample.mcs()) : 0.0;
}

namespace {

void check_batch(const MlpModel& model, std::size_t size, LossKind kind) {
  if (size == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  const bool sigmoid_head = model.activation().output == OutputActivation::sigmoid;
  if ((kind == LossKind::logloss) != sigmoid_head)
    throw std::invalid_argument("loss_and_grad: loss kind does not match the output head");
}

}  // namespace

LossGrad reference::loss_and_grad(const MlpModel& model, std::span<const Sample* const> batch,
                                  LossKind kind, const McsTable& table) {
  check_batch(model, batch.size(), kind);
  const bool sigmoid_head = model.activation().output == OutputActivation::sigmoid;

  const auto hidden_fn = model.activation().hidden == HiddenActivation::relu ? &relu : &tanh_fn;
  const auto head_fn = sigmoid_head ? &sigmoid : &identity_fn;
  const bool relu_hidden = model.activation().hidden == HiddenActivation::relu;
  const auto& sizes = model.layer_sizes();
  const std::size_t layers = model.layer_count();
  const auto params = model.params();
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  LossGrad out;
  out.grad.assign(model.parameter_count(), 0.0);
  Trace trace;
  std::vector<double> scaled(model.input_size());
  std::vector<double> delta;
  std::vector<double> prev_delta;
  std::uint64_t macs = 0;

  for (const Sample* sample : batch) {
    model.scaler().apply(sample->features, scaled);
    const double y = forward_trace(model, scaled, trace, hidden_fn, head_fn);
    const double target = training_target(*sample, kind, table);

    double dz = 0.0;
    if (kind == LossKind::logloss) {
      const double p = std::clamp(y, kProbabilityClamp, 1.0 - kProbabilityClamp);
      out.loss -= inv_n * (target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
      // d/dz of the clamped loss; zero where the clamp is active.
      if (y > kProbabilityClamp && y < 1.0 - kProbabilityClamp) dz = inv_n * (y - target);
    } else {
      const double r = y - target;
      out.loss += inv_n * r * r;
      dz = inv_n * 2.0 * r;
    }

    delta.assign(1, dz);
    for (std::size_t l = layers; l-- > 0;) {
      const int in = sizes[l];
      const int width = sizes[l + 1];
      double* gw = out.grad.data() + model.weight_offset(l);
      double* gb = out.grad.data() + model.bias_offset(l);
      const auto& a_in = trace.a[l];
      for (int i = 0; i < width; ++i) {
        const double d = delta[static_cast<std::size_t>(i)];
        gb[i] += d;
        double* row = gw + static_cast<std::ptrdiff_t>(i) * in;
        for (int j = 0; j < in; ++j) row[j] += d * a_in[static_cast<std::size_t>(j)];
      }
      macs += static_cast<std::uint64_t>(in) * width;
      if (l == 0) break;
      const double* w = params.data() + model.weight_offset(l);
      prev_delta.assign(static_cast<std::size_t>(in), 0.0);
      for (int i = 0; i < width; ++i) {
        const double d = delta[static_cast<std::size_t>(i)];
        const double* row = w + static_cast<std::ptrdiff_t>(i) * in;
        for (int j = 0; j < in; ++j) prev_delta[static_cast<std::size_t>(j)] += row[j] * d;
      }
      macs += static_cast<std::uint64_t>(in) * width;
      const auto& z = trace.z[l - 1];
      const auto& a = trace.a[l];
      for (int j = 0; j < in; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const double deriv = relu_hidden ? (z[js] > 0.0 ? 1.0 : 0.0) : 1.0 - a[js] * a[js];
        prev_delta[js] *= deriv;
      }
      delta.swap(prev_delta);
    }
  }
  model.flops().training += macs;
  return out;
}

LossGrad loss_and_grad(const MlpModel& model, std::span<const Sample* const> batch, LossKind kind,
                       const McsTable& table) {
  check_batch(model, batch.size(), kind);
  const std::size_t layers = model.layer_count();
  const auto& sizes = model.layer_sizes();
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto f = static_cast<Eigen::Index>(model.input_size());
  const double inv_n = 1.0 / static_cast<double>(n);

  // Column-per-sample activations.
  std::vector<Eigen::MatrixXd> acts(layers + 1);
  std::vector<Eigen::MatrixXd> pre(layers);
  acts[0].resize(f, n);
  Eigen::RowVectorXd target(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Sample& s = *batch[static_cast<std::size_t>(c)];
    for (Eigen::Index j = 0; j < f; ++j)
      acts[0](j, c) = model.scaler().apply_one(static_cast<std::size_t>(j), s.features[static_cast<std::size_t>(j)]);
    target(c) = training_target(s, kind, table);
  }
  std::uint64_t macs = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    pre[l] = model.weights(l) * acts[l];
    pre[l].colwise() += model.bias(l);
    acts[l + 1] = pre[l];
    model.apply_activation(acts[l + 1], l + 1 == layers);
    macs += static_cast<std::uint64_t>(sizes[l]) * sizes[l + 1] * static_cast<std::uint64_t>(n);
  }

  LossGrad out;
  out.grad.assign(model.parameter_count(), 0.0);
  const Eigen::RowVectorXd y = acts[layers].row(0);
  Eigen::MatrixXd delta(1, n);
  if (kind == LossKind::logloss) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double p = std::clamp(y(c), kProbabilityClamp, 1.0 - kProbabilityClamp);
      out.loss -= inv_n * (target(c) * std::log(p) + (1.0 - target(c)) * std::log(1.0 - p));
      const bool active = y(c) > kProbabilityClamp && y(c) < 1.0 - kProbabilityClamp;
      delta(0, c) = active ? inv_n * (y(c) - target(c)) : 0.0;
    }
  } else {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double r = y(c) - target(c);
      out.loss += inv_n * r * r;
      delta(0, c) = inv_n * 2.0 * r;
    }
  }

  const bool relu_hidden = model.activation().hidden == HiddenActivation::relu;
  for (std::size_t l = layers; l-- > 0;) {
    MatrixMap gw(out.grad.data() + model.weight_offset(l), sizes[l + 1], sizes[l]);
    VectorMap gb(out.grad.data() + model.bias_offset(l), sizes[l + 1]);
    gw.noalias() = delta * acts[l].transpose();
    // Plain loop: Eigen's rowwise sum changes summation order with the destination's alignment.
    for (Eigen::Index i = 0; i < delta.rows(); ++i) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < n; ++c) acc += delta(i, c);
      gb(i) = acc;
    }
    macs += static_cast<std::uint64_t>(sizes[l]) * sizes[l + 1] * static_cast<std::uint64_t>(n);
    if (l == 0) break;
    Eigen::MatrixXd back = model.weights(l).transpose() * delta;
    macs += static_cast<std::uint64_t>(sizes[l]) * sizes[l + 1] * static_cast<std::uint64_t>(n);
    if (relu_hidden) {
      back = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    } else {
      back = back.cwiseProduct((1.0 - acts[l].array().square()).matrix());
    }
    delta.swap(back);
  }
  model.flops().training += macs;
  return out;
}

LossGrad loss_and_grad(const MlpModel& model, std::span<const Sample> batch, LossKind kind,
                       const McsTable& table) {
  std::vector<const Sample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  return loss_and_grad(model, std::span<const Sample* const>(ptrs), kind, table);
}

void adam_step(MlpModel& model, std::span<const double> grad, const AdamConfig& config) {
  auto params = model.params();
  if (grad.size() != params.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
  auto& st = model.adam();
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = config.beta1 * st.m[i] + (1.0 - config.beta1) * grad[i];
    st.v[i] = config.beta2 * st.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double m_hat = st.m[i] / c1;
    const double v_hat = st.v[i] / c2;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

FitReport fit(MlpModel& model, const SampleBuffer& buffer, LossKind kind, const McsTable& table,
              const FitConfig& config, std::mt19937_64& rng) {
  if (buffer.empty()) throw std::invalid_argument("fit: empty buffer");
  FitReport report;
  if (buffer.size() >= 2) model.scaler() = scaler_fit(buffer);
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch), buffer.size());
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  std::vector<const Sample*> mb(batch);
  for (int step = 0; step < config.steps; ++step) {
    for (auto& p : mb) p = &buffer[pick(rng)];
    LossGrad lg = loss_and_grad(model, std::span<const Sample* const>(mb), kind, table);
    const bool finite = std::isfinite(lg.loss) &&
                        std::all_of(lg.grad.begin(), lg.grad.end(), [](double g) { return std::isfinite(g); });
    if (!finite) {
      model.reinitialize(rng);
      ++report.divergences;
      continue;
    }
    report.losses.push_back(lg.loss);
    adam_step(model, lg.grad, config.adam);
  }
  return report;
}

}  // namespace amc
