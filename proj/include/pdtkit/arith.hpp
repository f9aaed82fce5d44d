#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pdtkit/matrix.hpp"
#include "pdtkit/net.hpp"

namespace pdtkit {

// Regression data for the two-argument sum task: the label of a sample is
// x[0] + x[1] regardless of the remaining coordinates.
struct Dataset {
  Matrix inputs;  // n x d
  Vec labels;     // n
  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return inputs.cols(); }
};

Dataset gen_dataset(std::size_t n, std::size_t d, double lo, double hi,
                    std::uint64_t seed);

struct TrainConfig {
  std::vector<std::size_t> hidden = {10, 10, 10};
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct TrainOutput {
  Network net;
  Vec epoch_loss;  // mean squared error per epoch, in training order
};

// Trains a ReLU regressor with Adam on mean squared error. Deterministic
// for a fixed config: initialization and epoch shuffles come from one
// seeded stream. Throws TrainError naming the epoch if the loss stops
// being finite.
TrainOutput train(const TrainConfig& cfg, const Dataset& data);

struct ErrorStats {
  double max_abs_error = 0.0;
  double mean_abs_error = 0.0;
  std::size_t count = 0;
  std::string tag;
};

// Absolute error of a scalar predictor against x[0] + x[1] on uniform
// samples from [lo, hi]^d.
ErrorStats evaluate_errors_fn(const std::function<double(const Vec&)>& predict,
                              std::size_t d, double lo, double hi,
                              std::size_t n_samples, std::uint64_t seed,
                              std::string tag = "");
ErrorStats evaluate_errors(const Network& net, double lo, double hi,
                           std::size_t n_samples, std::uint64_t seed,
                           std::string tag = "");

// Coordinate-wise mean of the member outputs.
Vec ensemble_predict(const std::vector<Network>& nets, const Vec& x);

}  // namespace pdtkit
