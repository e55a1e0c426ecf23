#include "fdce/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fdce/dataset_io.hpp"
#include "fdce/kernels.hpp"

namespace fdce {

const char* to_string(Activation a) noexcept { return a == Activation::Softmax ? "softmax" : "relu"; }

Activation parse_activation(const std::string& s) {
  if (s == "softmax") return Activation::Softmax;
  if (s == "relu") return Activation::Relu;
  fail(ErrorKind::Validation, "unknown activation '" + s + "' (expected relu|softmax)");
}

const char* to_string(InitMode m) noexcept { return m == InitMode::Random ? "random" : "ml-identity"; }

InitMode parse_init_mode(const std::string& s) {
  if (s == "ml-identity") return InitMode::MlIdentity;
  if (s == "random") return InitMode::Random;
  fail(ErrorKind::Validation, "unknown init mode '" + s + "' (expected ml-identity|random)");
}

void validate(const CnnParams& p) {
  validate(p.shape);
  const std::size_t n = p.shape.size();
  const std::pair<const char*, const RealVec*> fields[] = {{"a1", &p.a1}, {"b1", &p.b1}, {"a2", &p.a2}, {"b2", &p.b2}};
  for (const auto& [name, v] : fields) {
    if (v->size() != n) fail(ErrorKind::InvalidDimension, std::string("parameter ") + name + " has wrong length");
    if (!all_finite(*v)) fail(ErrorKind::Validation, std::string("parameter ") + name + " has non-finite entries");
  }
}

void validate(const TrainConfig& cfg) {
  std::string bad;
  if (cfg.epochs == 0) bad += " epochs";
  if (cfg.batch_size == 0) bad += " batch_size";
  if (cfg.batches_per_epoch == 0) bad += " batches_per_epoch";
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) bad += " learning_rate";
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) bad += " beta1";
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) bad += " beta2";
  if (!(cfg.epsilon > 0.0)) bad += " epsilon";
  if (!std::isfinite(cfg.snr_train_db)) bad += " snr_train_db";
  if (!(cfg.init_noise >= 0.0)) bad += " init_noise";
  if (!bad.empty()) fail(ErrorKind::Validation, "invalid training config fields:" + bad);
}

std::array<double, 4> param_scales(const Shape2D& shape, Activation act, double sigma2) {
  // c_hat is about 1 + 1/sigma^2 per coordinate; gains start near the global
  // shrinkage 1 / (1 + sigma^2).
  const double s1 = 1.0 / (1.0 + 1.0 / sigma2);
  const double s2 = (act == Activation::Softmax ? static_cast<double>(shape.size()) : 1.0) / (1.0 + sigma2);
  return {s1, 1.0, s2, 1.0};
}

CnnParams init_params(const Shape2D& shape, Activation act, double sigma2, InitMode mode, double noise,
                      std::uint64_t seed) {
  validate(shape);
  if (!(sigma2 > 0.0)) fail(ErrorKind::Validation, "initialization needs sigma^2 > 0");
  const std::size_t n = shape.size();
  const std::array<double, 4> scale = param_scales(shape, act, sigma2);
  const double s1 = scale[0], s2 = scale[2];

  CnnParams p;
  p.shape = shape;
  p.activation = act;
  p.a1.assign(n, 0.0);
  p.a2.assign(n, 0.0);
  p.b1.assign(n, 0.0);
  p.b2.assign(n, 0.0);
  Rng rng = Rng::derive(seed, Stream::Init);
  if (mode == InitMode::MlIdentity && act == Activation::Relu) {
    // w = s2 (1 - relu(1 - s1 c_hat)) = s2 min(1, s1 c_hat). The gain saturates
    // at the global shrinkage on strong coefficients instead of growing
    // without bound.
    p.a1[0] = -s1;
    p.a2[0] = -s2;
    std::fill(p.b1.begin(), p.b1.end(), 1.0);
    std::fill(p.b2.begin(), p.b2.end(), s2);
    for (std::size_t i = 0; i < n; ++i) p.a1[i] += noise * s1 * rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) p.a2[i] += noise * s2 * rng.uniform(-1.0, 1.0);
  } else if (mode == InitMode::MlIdentity) {
    // Temperature 1/N keeps the softmax near uniform on sparse spectra, so w
    // starts at the global shrinkage.
    p.a1[0] = s1 / static_cast<double>(n);
    p.a2[0] = s2;
    for (std::size_t i = 0; i < n; ++i) p.a1[i] += noise * s1 * rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) p.a2[i] += noise * s2 * rng.uniform(-1.0, 1.0);
  } else {
    const double r = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) p.a1[i] = s1 * r * rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) p.a2[i] = s2 * r * rng.uniform(-1.0, 1.0);
  }
  return p;
}

namespace {

RealVec activate(Activation act, const RealVec& z) {
  if (act == Activation::Softmax) return softmax(z);
  RealVec u(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) u[i] = z[i] > 0.0 ? z[i] : 0.0;
  return u;
}

// Spectral statistic t = Q X^H y together with c_hat.
struct Spectral {
  ComplexVec t;
  RealVec chat;
};

Spectral spectral(std::span<const cplx> y, const EstimatorContext& ctx) {
  if (!ctx.full_pilots()) fail(ErrorKind::UnsupportedConfiguration, "CNN estimator requires square (full) pilots");
  if (!(ctx.sigma2() > 0.0)) fail(ErrorKind::InvalidDimension, "CNN estimator requires sigma^2 > 0");
  Spectral s;
  s.t = ctx.apply_xh(y);
  ctx.dft2().apply(std::span<cplx>(s.t), Direction::Forward);
  s.chat.resize(s.t.size());
  kernels::abs2(s.t, 1.0 / ctx.sigma2(), s.chat);
  return s;
}

// One sample's contribution: t and s = Q h in the spectral domain.
struct SpectralPair {
  ComplexVec t;
  ComplexVec s;
  double sigma2 = 1.0;
};

class GradWorkspace {
 public:
  explicit GradWorkspace(const CnnParams& p) : p_(p), conv_(p.shape), a1_spec_(conv_.spectrum(p.a1)), a2_spec_(conv_.spectrum(p.a2)) {
    const std::size_t n = p.shape.size();
    g_.a1.assign(n, 0.0);
    g_.b1.assign(n, 0.0);
    g_.a2.assign(n, 0.0);
    g_.b2.assign(n, 0.0);
  }

  // Adds the gradient of ||w t - s||^2 and returns the loss.
  double accumulate(const SpectralPair& sp) {
    const std::size_t n = sp.t.size();
    RealVec chat(n);
    kernels::abs2(sp.t, 1.0 / sp.sigma2, chat);
    RealVec z = conv_.convolve(a1_spec_, chat);
    for (std::size_t i = 0; i < n; ++i) z[i] += p_.b1[i];
    const RealVec u = activate(p_.activation, z);
    RealVec w = conv_.convolve(a2_spec_, u);
    for (std::size_t i = 0; i < n; ++i) w[i] += p_.b2[i];

    double loss = 0.0;
    RealVec gw(n);
    for (std::size_t i = 0; i < n; ++i) {
      const cplx r = w[i] * sp.t[i] - sp.s[i];
      loss += std::norm(r);
      gw[i] = 2.0 * (std::conj(r) * sp.t[i]).real();
    }

    add(g_.b2, gw);
    add(g_.a2, conv_.correlate(conv_.spectrum(u), gw));
    RealVec gz = conv_.correlate(a2_spec_, gw);
    if (p_.activation == Activation::Softmax) {
      const double dot = std::inner_product(gz.begin(), gz.end(), u.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) gz[i] = u[i] * (gz[i] - dot);
    } else {
      for (std::size_t i = 0; i < n; ++i) gz[i] = z[i] > 0.0 ? gz[i] : 0.0;
    }
    add(g_.b1, gz);
    add(g_.a1, conv_.correlate(conv_.spectrum(chat), gz));
    return loss;
  }

  CnnGrads take(double scale) {
    for (RealVec* v : {&g_.a1, &g_.b1, &g_.a2, &g_.b2})
      for (auto& e : *v) e *= scale;
    return std::move(g_);
  }

 private:
  static void add(RealVec& acc, const RealVec& v) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }

  const CnnParams& p_;
  CircConv2 conv_;
  ComplexVec a1_spec_;
  ComplexVec a2_spec_;
  CnnGrads g_;
};

SpectralPair make_pair(std::span<const cplx> y, std::span<const cplx> h, const EstimatorContext& ctx) {
  if (h.size() != ctx.shape().size()) fail(ErrorKind::InvalidDimension, "training pair: channel length mismatch");
  Spectral sp = spectral(y, ctx);
  SpectralPair out;
  out.t = std::move(sp.t);
  out.s = ctx.dft2().apply(h, Direction::Forward);
  out.sigma2 = ctx.sigma2();
  return out;
}

}  // namespace

CnnModel::CnnModel(CnnParams params) : params_(std::move(params)), conv_(params_.shape) {
  validate(params_);
  a1_spec_ = conv_.spectrum(params_.a1);
  a2_spec_ = conv_.spectrum(params_.a2);
}

RealVec CnnModel::forward(std::span<const double> chat) const {
  if (chat.size() != params_.shape.size()) fail(ErrorKind::InvalidDimension, "forward: input length mismatch");
  RealVec z = conv_.convolve(a1_spec_, chat);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += params_.b1[i];
  RealVec w = conv_.convolve(a2_spec_, activate(params_.activation, z));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += params_.b2[i];
  return w;
}

ComplexVec CnnModel::estimate(std::span<const cplx> y, const EstimatorContext& ctx) const {
  if (!(ctx.shape() == params_.shape)) fail(ErrorKind::InvalidDimension, "model shape does not match estimator context");
  Spectral sp = spectral(y, ctx);
  const RealVec w = forward(sp.chat);
  kernels::scale_real(w, sp.t, sp.t);
  ctx.dft2().apply(std::span<cplx>(sp.t), Direction::Adjoint);
  return std::move(sp.t);
}

RealVec forward(std::span<const double> chat, const CnnParams& params) { return CnnModel(params).forward(chat); }

ComplexVec estimate(std::span<const cplx> y, const CnnParams& params, const EstimatorContext& ctx) {
  return CnnModel(params).estimate(y, ctx);
}

LossGrad loss_and_grad(std::span<const TrainPair> batch, const CnnParams& params, const EstimatorContext& ctx) {
  if (batch.empty()) fail(ErrorKind::DegenerateData, "loss_and_grad: empty batch");
  validate(params);
  if (!(ctx.shape() == params.shape)) fail(ErrorKind::InvalidDimension, "model shape does not match estimator context");
  GradWorkspace ws(params);
  double loss = 0.0;
  for (const auto& pair : batch) loss += ws.accumulate(make_pair(pair.y, pair.h, ctx));
  const double inv = 1.0 / static_cast<double>(batch.size());
  return {loss * inv, ws.take(inv)};
}

namespace {

struct Adam {
  Adam(std::size_t n, std::array<double, 4> scales) : m(4, RealVec(n, 0.0)), v(4, RealVec(n, 0.0)), scale(scales) {}

  void step(CnnParams& p, const CnnGrads& g, const TrainConfig& cfg) {
    ++t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    RealVec* params[] = {&p.a1, &p.b1, &p.a2, &p.b2};
    const RealVec* grads[] = {&g.a1, &g.b1, &g.a2, &g.b2};
    for (std::size_t k = 0; k < 4; ++k) {
      RealVec& x = *params[k];
      const RealVec& gr = *grads[k];
      const double lr = cfg.learning_rate * scale[k];
      for (std::size_t i = 0; i < x.size(); ++i) {
        m[k][i] = cfg.beta1 * m[k][i] + (1.0 - cfg.beta1) * gr[i];
        v[k][i] = cfg.beta2 * v[k][i] + (1.0 - cfg.beta2) * gr[i] * gr[i];
        x[i] -= lr * (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + cfg.epsilon);
      }
    }
  }

  std::vector<RealVec> m, v;
  std::array<double, 4> scale;
  std::size_t t = 0;
};

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch, std::uint64_t cycle) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = Rng::derive(seed, Stream::Shuffle, {epoch, cycle});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

}  // namespace

TrainedModel train(const Dataset& train_set, const EstimatorContext& ctx, const TrainConfig& cfg, Activation act) {
  validate(cfg);
  if (train_set.samples.empty()) fail(ErrorKind::DegenerateData, "training set is empty");
  if (!(train_set.shape == ctx.shape())) fail(ErrorKind::InvalidDimension, "training set shape does not match pilots");
  if (!ctx.full_pilots()) fail(ErrorKind::UnsupportedConfiguration, "CNN training requires square (full) pilots");

  const std::size_t n_data = train_set.samples.size();
  double init_snr = cfg.snr_train_db;
  if (!cfg.snr_mix_db.empty()) {
    RealVec sorted = cfg.snr_mix_db;
    std::sort(sorted.begin(), sorted.end());
    init_snr = sorted[sorted.size() / 2];
  }

  TrainedModel model;
  model.params = init_params(ctx.shape(), act, snr_to_sigma2(init_snr), cfg.init, cfg.init_noise, cfg.seed);
  model.train_meta.domain_tag = to_string(train_set.domain_tag);
  model.train_meta.snr_db = init_snr;
  model.train_meta.epochs = cfg.epochs;
  model.train_meta.seed = cfg.seed;

  std::array<double, 4> scales{1.0, 1.0, 1.0, 1.0};
  if (cfg.scaled_steps) scales = param_scales(ctx.shape(), act, snr_to_sigma2(init_snr));
  Adam adam(ctx.shape().size(), scales);
  const std::size_t epoch_len = cfg.batches_per_epoch * cfg.batch_size;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> perm;
    std::size_t perm_cycle = static_cast<std::size_t>(-1);
    double epoch_loss = 0.0;
    std::size_t pos = 0;
    while (pos < epoch_len) {
      GradWorkspace ws(model.params);
      double batch_loss = 0.0;
      const std::size_t start = pos;
      const std::size_t end = std::min(epoch_len, pos + cfg.batch_size);
      for (; pos < end; ++pos) {
        const std::size_t cycle = pos / n_data;
        if (cycle != perm_cycle) {
          perm = permutation(n_data, cfg.seed, epoch, cycle);
          perm_cycle = cycle;
        }
        const ChannelSample& sample = train_set.samples[perm[pos % n_data]];
        double sigma2 = snr_to_sigma2(cfg.snr_train_db);
        if (!cfg.snr_mix_db.empty()) {
          Rng pick = Rng::derive(cfg.seed, Stream::TrainSnr, {epoch, pos});
          sigma2 = snr_to_sigma2(cfg.snr_mix_db[pick.below(cfg.snr_mix_db.size())]);
        }
        const EstimatorContext c = ctx.with_sigma2(sigma2);
        Rng noise = Rng::derive(cfg.seed, Stream::TrainNoise, {epoch, pos});
        const ComplexVec y = c.observe(sample.h, noise);
        batch_loss += ws.accumulate(make_pair(y, sample.h, c));
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      if (!std::isfinite(batch_loss)) {
        fail(ErrorKind::TrainingDiverged, "non-finite loss in epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += batch_loss;
      adam.step(model.params, ws.take(inv), cfg);
    }
    const double mean = epoch_loss / static_cast<double>(epoch_len);
    if (!std::isfinite(mean) || !all_finite(model.params.a1) || !all_finite(model.params.a2) ||
        !all_finite(model.params.b1) || !all_finite(model.params.b2)) {
      fail(ErrorKind::TrainingDiverged, "non-finite state after epoch " + std::to_string(epoch + 1));
    }
    model.train_meta.loss_history.push_back(mean);
  }
  model.train_meta.final_loss = model.train_meta.loss_history.back();
  return model;
}

// ---------------------------------------------------------------------------
// Parameter files

using nlohmann::ordered_json;

std::string params_to_json(const TrainedModel& model) {
  validate(model.params);
  const CnnParams& p = model.params;
  ordered_json j;
  j["format_version"] = kParamsFormatVersion;
  j["n_rx"] = p.shape.n_rx;
  j["n_tx"] = p.shape.n_tx;
  j["activation"] = to_string(p.activation);
  j["a1"] = p.a1;
  j["b1"] = p.b1;
  j["a2"] = p.a2;
  j["b2"] = p.b2;
  const TrainMeta& m = model.train_meta;
  j["train_meta"] = {{"domain_tag", m.domain_tag},
                     {"snr_db", m.snr_db},
                     {"epochs", m.epochs},
                     {"final_loss", m.final_loss},
                     {"seed", m.seed}};
  return j.dump(1) + "\n";
}

namespace {

template <class T>
T field(const ordered_json& j, const char* name, const char* where = "params") {
  if (!j.is_object() || !j.contains(name)) fail(ErrorKind::Parse, std::string(where) + ": missing field '" + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::Parse, std::string(where) + ": field '" + name + "' has the wrong type");
  }
}

}  // namespace

TrainedModel params_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("params: malformed JSON: ") + e.what());
  }
  if (field<int>(j, "format_version") != kParamsFormatVersion) fail(ErrorKind::Parse, "params: unsupported format_version");
  TrainedModel m;
  CnnParams& p = m.params;
  p.shape.n_rx = field<std::size_t>(j, "n_rx");
  p.shape.n_tx = field<std::size_t>(j, "n_tx");
  if (p.shape.n_rx == 0 || p.shape.n_tx == 0) fail(ErrorKind::Parse, "params: field 'n_rx'/'n_tx' must be positive");
  try {
    p.activation = parse_activation(field<std::string>(j, "activation"));
  } catch (const Error& e) {
    fail(ErrorKind::Parse, std::string("params: field 'activation': ") + e.what());
  }
  const std::size_t n = p.shape.size();
  const std::pair<const char*, RealVec*> arrays[] = {{"a1", &p.a1}, {"b1", &p.b1}, {"a2", &p.a2}, {"b2", &p.b2}};
  for (const auto& [name, dst] : arrays) {
    *dst = field<RealVec>(j, name);
    if (dst->size() != n) {
      fail(ErrorKind::Parse, std::string("params: field '") + name + "' has " + std::to_string(dst->size()) +
                                 " values, expected n_rx*n_tx = " + std::to_string(n));
    }
    if (!all_finite(*dst)) fail(ErrorKind::Parse, std::string("params: field '") + name + "' has non-finite values");
  }
  const ordered_json meta = field<ordered_json>(j, "train_meta");
  m.train_meta.domain_tag = field<std::string>(meta, "domain_tag", "train_meta");
  m.train_meta.snr_db = field<double>(meta, "snr_db", "train_meta");
  m.train_meta.epochs = field<std::size_t>(meta, "epochs", "train_meta");
  m.train_meta.final_loss = field<double>(meta, "final_loss", "train_meta");
  m.train_meta.seed = field<std::uint64_t>(meta, "seed", "train_meta");
  return m;
}

void save_params(const TrainedModel& model, const std::filesystem::path& path) {
  write_text_file(path, params_to_json(model));
}

TrainedModel load_params(const std::filesystem::path& path) { return params_from_json(read_text_file(path)); }

}  // namespace fdce
