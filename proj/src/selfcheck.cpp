#include "fdce/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fdce/baselines.hpp"
#include "fdce/cnn.hpp"
#include "fdce/eval.hpp"
#include "fdce/kernels.hpp"
#include "fdce/mmse_grid.hpp"

namespace fdce {

namespace {

CheckResult check(const std::string& name, const std::function<std::string()>& body) {
  try {
    const std::string detail = body();
    return {name, detail.empty(), detail.empty() ? "ok" : detail};
  } catch (const std::exception& e) {
    return {name, false, e.what()};
  }
}

ComplexVec random_vec(std::size_t n, Rng& rng) {
  ComplexVec v(n);
  for (auto& e : v) e = rng.complex_normal();
  return v;
}

}  // namespace

std::vector<CheckResult> run_selfcheck() {
  std::vector<CheckResult> out;

  out.push_back(check("simd kernels match scalar reference", [] {
    const kernels::KernelTable& s = kernels::scalar_table();
    const kernels::KernelTable& a = kernels::active();
    Rng rng = Rng::derive(1, Stream::Test, {1});
    for (std::size_t n : {1u, 3u, 8u, 33u}) {
      const ComplexVec x = random_vec(n, rng), y = random_vec(n, rng);
      ComplexVec o1(n), o2(n);
      s.cmul(x.data(), y.data(), o1.data(), n);
      a.cmul(x.data(), y.data(), o2.data(), n);
      if (max_abs_diff(o1, o2) > 1e-13) return std::string("cmul differs");
      const cplx d1 = s.dot_conj(x.data(), y.data(), n), d2 = a.dot_conj(x.data(), y.data(), n);
      if (std::abs(d1 - d2) > 1e-12) return std::string("dot_conj differs");
    }
    return std::string();
  }));

  out.push_back(check("LS NMSE equals 1/SNR", [] {
    const Shape2D shape{4, 8};
    const Dataset d = generate_gaussian_dataset(shape, 2000, 11, SplitTag::Test);
    SweepSpec spec;
    spec.methods = {"ls"};
    spec.snr_grid = {-10, 0, 10, 20};
    spec.test = &d;
    const EvalReport r = snr_sweep(spec);
    const auto failures = self_check(r);
    return failures.empty() ? std::string() : failures.front();
  }));

  out.push_back(check("circulant gridded and structured estimators agree", [] {
    const Shape2D shape{4, 8};
    const EstimatorContext ctx(full_pilots(shape), snr_to_sigma2(5.0));
    const auto [dense, structured] = circulant_grid(shape, 8, ctx);
    Rng rng = Rng::derive(2, Stream::Test);
    for (int i = 0; i < 10; ++i) {
      const ComplexVec y = random_vec(shape.size(), rng);
      const double diff = max_abs_diff(gridded_estimate(y, dense, ctx), structured_estimate(y, structured, ctx));
      if (diff > 1e-9) return "max difference " + format_double(diff);
    }
    return std::string();
  }));

  out.push_back(check("softmax CNN represents the structured estimator", [] {
    const Shape2D shape{4, 8};
    const EstimatorContext ctx(full_pilots(shape), snr_to_sigma2(0.0));
    const auto bank = circulant_grid(shape, shape.size(), ctx).second;
    CnnParams p;
    p.shape = shape;
    p.activation = Activation::Softmax;
    const auto w0 = bank.column(0);
    p.a2.assign(w0.begin(), w0.end());
    p.a1 = circular_reverse(p.a2, shape);
    p.b1.assign(shape.size(), bank.b[0]);
    p.b2.assign(shape.size(), 0.0);
    const CnnModel model(p);
    Rng rng = Rng::derive(3, Stream::Test);
    for (int i = 0; i < 10; ++i) {
      const ComplexVec y = random_vec(shape.size(), rng);
      const double diff = max_abs_diff(model.estimate(y, ctx), structured_estimate(y, bank, ctx));
      if (diff > 1e-9) return "max difference " + format_double(diff);
    }
    return std::string();
  }));

  out.push_back(check("CNN gradients match finite differences", [] {
    const Shape2D shape{2, 4};
    const EstimatorContext ctx(full_pilots(shape), 0.5);
    Rng rng = Rng::derive(4, Stream::Test);
    for (Activation act : {Activation::Relu, Activation::Softmax}) {
      CnnParams p = init_params(shape, act, 0.5, InitMode::Random, 0.0, 5);
      for (auto& b : p.b1) b = rng.uniform(-0.5, 0.5);
      for (auto& b : p.b2) b = rng.uniform(-0.5, 0.5);
      std::vector<TrainPair> batch(3);
      for (auto& tp : batch) {
        tp.h = random_vec(shape.size(), rng);
        tp.y = ctx.observe(tp.h, rng);
      }
      const LossGrad lg = loss_and_grad(batch, p, ctx);
      double worst = 0.0, scale = 0.0;
      RealVec* params[] = {&p.a1, &p.b1, &p.a2, &p.b2};
      const RealVec* grads[] = {&lg.grads.a1, &lg.grads.b1, &lg.grads.a2, &lg.grads.b2};
      for (std::size_t k = 0; k < 4; ++k) {
        for (std::size_t i = 0; i < params[k]->size(); ++i) {
          const double keep = (*params[k])[i];
          (*params[k])[i] = keep + 1e-6;
          const double up = loss_and_grad(batch, p, ctx).loss;
          (*params[k])[i] = keep - 1e-6;
          const double down = loss_and_grad(batch, p, ctx).loss;
          (*params[k])[i] = keep;
          const double fd = (up - down) / 2e-6;
          worst = std::max(worst, std::abs(fd - (*grads[k])[i]));
          scale = std::max({scale, std::abs(fd), std::abs((*grads[k])[i])});
        }
      }
      if (worst > 1e-5 * scale) return std::string(to_string(act)) + " relative error " + format_double(worst / scale);
    }
    return std::string();
  }));

  out.push_back(check("parameter file round trip is bit exact", [] {
    TrainedModel m;
    m.params = init_params({4, 8}, Activation::Relu, 0.3, InitMode::Random, 0.0, 9);
    m.params.b1[3] = 1.0 / 3.0;
    const TrainedModel back = params_from_json(params_to_json(m));
    return back.params == m.params ? std::string() : std::string("parameters changed");
  }));

  out.push_back(check("boxplot statistics", [] {
    const RealVec a{1, 2, 3, 4, 100};
    const BoxplotStats b = boxplot_stats(a);
    if (b.q1 != 2 || b.median != 3 || b.q3 != 4 || b.whisker_high != 4 || b.outliers != RealVec{100}) {
      return std::string("wrong statistics for [1,2,3,4,100]");
    }
    const auto cdf = empirical_cdf(a);
    return cdf.back().second == 1.0 ? std::string() : std::string("CDF does not end at 1");
  }));
  return out;
}

}  // namespace fdce
