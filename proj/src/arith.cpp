#include "pdtkit/arith.hpp"

#include <cmath>
#include <numeric>

#include "pdtkit/errors.hpp"
#include "pdtkit/rng.hpp"

namespace pdtkit {

Dataset gen_dataset(std::size_t n, std::size_t d, double lo, double hi,
                    std::uint64_t seed) {
  if (n == 0) throw ConfigError("gen_dataset: need at least one sample");
  if (d < 2) throw ConfigError("gen_dataset: need at least two input coordinates");
  if (!(lo <= hi)) throw ConfigError("gen_dataset: inverted sampling range");
  Rng rng(seed);
  Dataset data;
  data.inputs = Matrix(n, d);
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) data.inputs(i, j) = rng.uniform(lo, hi);
    data.labels[i] = data.inputs(i, 0) + data.inputs(i, 1);
  }
  return data;
}

TrainOutput train(const TrainConfig& cfg, const Dataset& data) {
  if (data.size() == 0) throw ConfigError("train: empty dataset");
  if (data.labels.size() != data.inputs.rows())
    throw ShapeError("train: labels do not match inputs");
  if (cfg.batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (!(cfg.learning_rate > 0)) throw ConfigError("train: learning_rate must be positive");
  for (std::size_t h : cfg.hidden)
    if (h == 0) throw ConfigError("train: hidden widths must be positive");

  const std::size_t d = data.dim();
  Rng rng(cfg.seed);

  // d -> hidden... -> 1, ReLU everywhere except the identity read-out.
  Network net;
  net.input_dim = d;
  std::vector<std::size_t> dims{d};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(1);
  for (std::size_t li = 0; li + 1 < dims.size(); ++li) {
    Layer l;
    l.weights = Matrix(dims[li + 1], dims[li]);
    l.bias.assign(dims[li + 1], 0.0);
    l.act = li + 2 < dims.size() ? Activation::ReLU : Activation::Identity;
    const double bound = 1.0 / std::sqrt(double(dims[li]));
    for (std::size_t r = 0; r < l.weights.rows(); ++r)
      for (std::size_t c = 0; c < l.weights.cols(); ++c)
        l.weights(r, c) = rng.uniform(-bound, bound);
    for (std::size_t r = 0; r < l.bias.size(); ++r)
      l.bias[r] = rng.uniform(-bound, bound);
    net.layers.push_back(std::move(l));
  }
  net.validate();

  const std::size_t L = net.layers.size();
  std::vector<Matrix> dW(L), mW(L), vW(L);
  std::vector<Vec> db(L), mB(L), vB(L);
  for (std::size_t li = 0; li < L; ++li) {
    const Layer& l = net.layers[li];
    dW[li] = Matrix(l.out_dim(), l.in_dim());
    mW[li] = Matrix(l.out_dim(), l.in_dim());
    vW[li] = Matrix(l.out_dim(), l.in_dim());
    db[li].assign(l.out_dim(), 0.0);
    mB[li].assign(l.out_dim(), 0.0);
    vB[li].assign(l.out_dim(), 0.0);
  }

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  double b1t = 1.0, b2t = 1.0;

  auto adam_update = [&](double& w, double& m, double& v, double g) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g * g;
    const double mhat = m / (1.0 - b1t);
    const double vhat = v / (1.0 - b2t);
    w -= cfg.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
  };

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  TrainOutput out;
  Vec x(d), gpost, gpre, gprev;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double sq_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t m = std::min(cfg.batch_size, n - start);
      for (std::size_t li = 0; li < L; ++li) {
        dW[li].fill(0.0);
        std::fill(db[li].begin(), db[li].end(), 0.0);
      }
      for (std::size_t bi = 0; bi < m; ++bi) {
        const std::size_t row = order[start + bi];
        for (std::size_t j = 0; j < d; ++j) x[j] = data.inputs(row, j);
        const Trace tr = eval_trace(net, x);
        const double err = tr.post.back()[0] - data.labels[row];
        sq_sum += err * err;
        gpost.assign(1, 2.0 * err / double(m));
        for (std::size_t li = L; li-- > 0;) {
          const Layer& l = net.layers[li];
          gpre = gpost;
          if (l.act == Activation::ReLU)
            for (std::size_t r = 0; r < gpre.size(); ++r)
              if (tr.pre[li][r] <= 0) gpre[r] = 0.0;
          const Vec& prev = li == 0 ? x : tr.post[li - 1];
          for (std::size_t r = 0; r < l.out_dim(); ++r) {
            if (gpre[r] == 0.0) continue;
            for (std::size_t c = 0; c < l.in_dim(); ++c)
              dW[li](r, c) += gpre[r] * prev[c];
            db[li][r] += gpre[r];
          }
          if (li == 0) break;
          gprev.assign(l.in_dim(), 0.0);
          for (std::size_t r = 0; r < l.out_dim(); ++r)
            if (gpre[r] != 0.0)
              for (std::size_t c = 0; c < l.in_dim(); ++c)
                gprev[c] += l.weights(r, c) * gpre[r];
          gpost = gprev;
        }
      }
      b1t *= kBeta1;
      b2t *= kBeta2;
      for (std::size_t li = 0; li < L; ++li) {
        Layer& l = net.layers[li];
        for (std::size_t r = 0; r < l.out_dim(); ++r) {
          for (std::size_t c = 0; c < l.in_dim(); ++c)
            adam_update(l.weights(r, c), mW[li](r, c), vW[li](r, c), dW[li](r, c));
          adam_update(l.bias[r], mB[li][r], vB[li][r], db[li][r]);
        }
      }
    }
    const double mse = sq_sum / double(n);
    if (!std::isfinite(mse))
      throw TrainError("mean squared error became non-finite at epoch " +
                       std::to_string(epoch));
    out.epoch_loss.push_back(mse);
  }
  out.net = std::move(net);
  return out;
}

ErrorStats evaluate_errors_fn(const std::function<double(const Vec&)>& predict,
                              std::size_t d, double lo, double hi,
                              std::size_t n_samples, std::uint64_t seed,
                              std::string tag) {
  if (d < 2) throw ConfigError("evaluate_errors: need at least two input coordinates");
  if (n_samples == 0) throw ConfigError("evaluate_errors: need at least one sample");
  if (!(lo <= hi)) throw ConfigError("evaluate_errors: inverted sampling range");
  Rng rng(seed);
  ErrorStats stats;
  stats.tag = std::move(tag);
  Vec x(d);
  double sum = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t j = 0; j < d; ++j) x[j] = rng.uniform(lo, hi);
    const double err = std::fabs(predict(x) - (x[0] + x[1]));
    sum += err;
    if (err > stats.max_abs_error) stats.max_abs_error = err;
  }
  stats.count = n_samples;
  stats.mean_abs_error = sum / double(n_samples);
  return stats;
}

ErrorStats evaluate_errors(const Network& net, double lo, double hi,
                           std::size_t n_samples, std::uint64_t seed, std::string tag) {
  if (net.output_dim() != 1) throw ShapeError("evaluate_errors: network output must be scalar");
  return evaluate_errors_fn([&](const Vec& x) { return evaluate(net, x)[0]; },
                            net.input_dim, lo, hi, n_samples, seed, std::move(tag));
}

Vec ensemble_predict(const std::vector<Network>& nets, const Vec& x) {
  if (nets.empty()) throw ShapeError("ensemble_predict: empty ensemble");
  Vec acc = evaluate(nets[0], x);
  for (std::size_t m = 1; m < nets.size(); ++m) {
    const Vec y = evaluate(nets[m], x);
    if (y.size() != acc.size())
      throw ShapeError("ensemble_predict: members disagree on output dim");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += y[i];
  }
  for (double& v : acc) v /= double(nets.size());
  return acc;
}

}  // namespace pdtkit
