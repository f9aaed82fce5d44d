#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pdtkit/box.hpp"
#include "pdtkit/net.hpp"

namespace pdtkit {

// Sound per-neuron enclosures for one layer: pre is the affine value before
// activation, post the value after it.
struct LayerBounds {
  Vec pre_lo, pre_hi;
  Vec post_lo, post_hi;
};

struct NetworkBounds {
  std::vector<LayerBounds> layers;

  const Vec& output_lo() const { return layers.back().post_lo; }
  const Vec& output_hi() const { return layers.back().post_hi; }
};

// Per-layer, per-neuron phase fixing for ReLU neurons:
// +1 forces the active side, -1 the inactive side, 0 leaves it free.
// Entries for identity layers are ignored.
using PhaseMask = std::vector<std::vector<std::int8_t>>;

PhaseMask free_phases(const Network& net);

// Plain interval arithmetic, layer by layer. Every bound is widened
// outward by 1e-9 * max(1, |bound|) so downstream strict comparisons
// stay sound under rounding.
NetworkBounds interval_propagate(const Network& net, const Box& box);

// Interval propagation intersected with a backward linear relaxation:
// each layer's pre-activations are bounded by affine envelopes over the
// input box, substituting ReLU bounding lines (chord upper, adaptive
// 0/1-slope lower) back through every earlier layer. Never looser than
// interval_propagate.
NetworkBounds linear_relax(const Network& net, const Box& box);

// Shared engine with phase fixing. Returns nullopt when a forced phase
// contradicts the propagated interval, i.e. the branch region is empty.
std::optional<NetworkBounds> propagate_with_phases(const Network& net, const Box& box,
                                                   const PhaseMask& phases, bool relax);

}  // namespace pdtkit
