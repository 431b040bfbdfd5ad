#pragma once

// Channel-width optimization: projected gradient descent on the smooth
// hardware loss, a brute-force grid oracle, operator scoring, and
// Pareto-front / hypervolume metrics.

#include <optional>
#include <vector>

#include "sacost/arch.hpp"
#include "sacost/hw.hpp"
#include "sacost/smooth.hpp"

namespace sacost {

struct ChannelSearchSpace {
    long long min_c = 64;
    long long max_c = 280;
    long long step = 8;

    std::vector<long long> grid() const;
};

struct OptimConfig {
    double learning_rate = 5000.0;
    int max_iterations = 400;
    double tolerance = 1e-9; // convergence threshold on the loss decrease
    int max_halvings = 10;   // learning-rate backoff budget
    HardwareLossParams loss;
    SmoothParams smooth;
    // With a seed, widths start at uniformly random points in the search
    // range; without one, the network's declared widths are the start.
    std::optional<unsigned long long> seed;
};

struct TrajectoryPoint {
    int iteration = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
};

struct OptimResult {
    std::vector<double> initial_widths;
    std::vector<double> final_widths; // continuous optimum
    std::vector<long long> projected_widths;
    std::vector<TrajectoryPoint> trajectory;
    double initial_hard_loss = 0.0;
    double projected_hard_loss = 0.0;
    NetworkCost initial_cost;
    NetworkCost projected_cost;
};

// Hard-model loss lambda*seconds - beta*utilization at integer widths.
double hard_loss(const ExpandedNetwork& net, const std::vector<long long>& widths,
                 const HardwareConfig& hw, const HardwareLossParams& hl);

OptimResult optimize_channels(const NetworkSpec& spec, const HardwareConfig& hw,
                              const ChannelSearchSpace& space, const OptimConfig& cfg);

struct ExhaustiveResult {
    std::vector<long long> widths;
    double loss = 0.0;
    NetworkCost cost;
    unsigned long long evaluated = 0;
};

// Evaluates the hard loss on every grid assignment. Throws OptimError when
// the combination count exceeds the cap.
ExhaustiveResult exhaustive_search(const NetworkSpec& spec, const HardwareConfig& hw,
                                   const ChannelSearchSpace& space,
                                   const HardwareLossParams& hl,
                                   unsigned long long cap = 1000000);

struct OpCandidate {
    LayerKind kind = LayerKind::Identity;
    int k = 1;
    int dilation = 1;
    const char* name = "";
};

// The candidate operator set for cell edges.
const std::vector<OpCandidate>& default_op_set();

struct ScoredOp {
    OpCandidate op;
    double loss = 0.0;
    double runtime_s = 0.0;
    double utilization = 1.0;
};

// Ranks every candidate edge operator by its single-layer hard loss at the
// given width and input shape, ascending (ties: lower runtime, then
// declaration order).
std::vector<ScoredOp> score_operators(long long h, long long w, long long b,
                                      const HardwareConfig& hw, const HardwareLossParams& hl,
                                      long long width,
                                      const std::vector<OpCandidate>& candidates = default_op_set());

struct ParetoPoint {
    double runtime = 0.0; // lower is better
    double score = 0.0;   // accuracy-like percentage, higher is better
};

// Non-dominated subset, sorted by runtime; exact duplicates collapse.
std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points);

// Area of the union of rectangles [0, runtime] x [score, 100] spanned by
// the Pareto points against the perfect-oracle reference (0, 100). Lower
// is closer to the ideal.
double hypervolume(const std::vector<ParetoPoint>& points);

} // namespace sacost
