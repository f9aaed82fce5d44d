#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdtkit/matrix.hpp"

namespace pdtkit {

enum class Activation { ReLU, Identity };

struct Layer {
  Matrix weights;  // out_dim x in_dim
  Vec bias;        // out_dim
  Activation act = Activation::ReLU;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
};

// Feed-forward network. Layers chain dimensionally and the final layer is
// affine (Identity); hidden layers may use either activation.
struct Network {
  std::size_t input_dim = 0;
  std::vector<Layer> layers;

  std::size_t output_dim() const { return layers.back().out_dim(); }
  std::size_t depth() const { return layers.size(); }

  void validate() const;
};

// Per-layer affine values and activation outputs of one forward pass.
// post.back() is the network output.
struct Trace {
  std::vector<Vec> pre;
  std::vector<Vec> post;
};

Vec evaluate(const Network& net, const Vec& x);
Trace eval_trace(const Network& net, const Vec& x);

// Total number of neurons governed by a ReLU.
std::size_t relu_count(const Network& net);

// Joint network over a shared input whose output is the concatenation of
// both outputs. Matching depths combine block-diagonally; a shorter
// network's output is carried forward, using the exact split
// v = relu(v) - relu(-v) wherever the carried value must cross a ReLU
// layer, so evaluation agrees with running the two networks separately.
Network concatenate(const Network& a, const Network& b);

// Text serialization. Round-trips weights bit-exactly (17 significant
// digits); '#' starts a comment, blank lines are skipped.
Network load_ffnt(std::istream& in);
Network load_ffnt_file(const std::string& path);
void save_ffnt(const Network& net, std::ostream& out);
void save_ffnt_file(const Network& net, const std::string& path);

}  // namespace pdtkit
