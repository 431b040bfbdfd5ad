#pragma once

// Smooth relaxation of the exact cost model: the ceiling function is
// replaced by a sum of generalized logistic steps so runtime and
// utilization become differentiable in the channel dimensions.

#include <vector>

#include "sacost/arch.hpp"
#include "sacost/dual.hpp"
#include "sacost/hw.hpp"

namespace sacost {

struct SmoothParams {
    double C = 0.2; // shape constants of the generalized logistic
    double B = 20.0;
    double v = 0.5;
    // Each step transition is centered slightly past its integer so the
    // logistic is fully off at the integer below and fully on by the middle
    // of the plateau above.
    double step_offset = 0.03;
    // Largest representable argument; 0 = derive from the evaluation
    // context (layer dims and channel upper bound).
    double x_max = 0.0;

    std::vector<double> step_centers(double upto) const;
};

// Sum of logistic steps approximating ceil(x) on (0, x_max]. Throws
// std::domain_error outside that range.
DiffScalar smooth_ceil(const DiffScalar& x, const SmoothParams& p, double x_max);

struct SmoothLayerCost {
    DiffScalar cycles;
    DiffScalar macs;
    DiffScalar utilization;
};

// Same algebra as hard_layer_cost with smooth_ceil substituted for every
// ceiling whose argument involves the channel dimensions. `layer` supplies
// kind/kernel/shape; c and f override the channel fields.
SmoothLayerCost smooth_layer_cost(const LayerSpec& layer, const DiffScalar& c,
                                  const DiffScalar& f, const HardwareConfig& hw,
                                  const SmoothParams& p);

struct SmoothNetworkCost {
    DiffScalar cycles;
    DiffScalar seconds;
    DiffScalar macs;
    DiffScalar utilization;
};

// Evaluates the network at the given cell widths, one DiffScalar variable
// per width (variable id = width index).
SmoothNetworkCost smooth_network_cost(const ExpandedNetwork& net,
                                      const std::vector<double>& widths,
                                      const HardwareConfig& hw, const SmoothParams& p);

struct HardwareLossParams {
    double lambda_latency = 1.0;   // weight of total runtime in seconds
    double beta_utilization = 1.0; // weight of network utilization
};

// lambda * runtime_seconds - beta * utilization, differentiable in every
// cell width.
DiffScalar hardware_loss(const ExpandedNetwork& net, const std::vector<double>& widths,
                         const HardwareConfig& hw, const SmoothParams& p,
                         const HardwareLossParams& hl);

// Upper bound for smooth_ceil arguments over this network with channels up
// to c_upper.
double smooth_arg_bound(const ExpandedNetwork& net, const HardwareConfig& hw,
                        double c_upper);

} // namespace sacost
