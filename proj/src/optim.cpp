#include "sacost/optim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sacost {

std::vector<long long> ChannelSearchSpace::grid() const {
    std::vector<long long> g;
    for (long long c = min_c; c <= max_c; c += step) g.push_back(c);
    return g;
}

double hard_loss(const ExpandedNetwork& net, const std::vector<long long>& widths,
                 const HardwareConfig& hw, const HardwareLossParams& hl) {
    auto layers = materialize(net, widths);
    auto cost = network_cost(layers, hw, CostModelKind::Hard);
    return hl.lambda_latency * cost.total_s - hl.beta_utilization * cost.utilization;
}

namespace {

std::vector<long long> round_widths(const std::vector<double>& widths) {
    std::vector<long long> out;
    out.reserve(widths.size());
    for (double w : widths) out.push_back(std::llround(w));
    return out;
}

// Compares (loss, runtime, widths) lexicographically for deterministic
// tie-breaking.
bool better(double loss_a, double runtime_a, const std::vector<long long>& wa,
            double loss_b, double runtime_b, const std::vector<long long>& wb) {
    if (loss_a != loss_b) return loss_a < loss_b;
    if (runtime_a != runtime_b) return runtime_a < runtime_b;
    return wa < wb;
}

} // namespace

OptimResult optimize_channels(const NetworkSpec& spec, const HardwareConfig& hw,
                              const ChannelSearchSpace& space, const OptimConfig& cfg) {
    auto net = expand_bound(spec);
    if (net.num_vars < 1)
        throw ParseError("network has no tunable cell widths to optimize");
    if (cfg.learning_rate <= 0 || cfg.max_iterations < 1)
        throw OptimError("invalid optimizer configuration");

    const int n = net.num_vars;
    const double lo = static_cast<double>(space.min_c);
    const double hi = static_cast<double>(space.max_c);

    std::vector<double> widths(n);
    if (cfg.seed) {
        std::mt19937_64 rng(*cfg.seed);
        std::uniform_real_distribution<double> dist(lo, hi);
        for (auto& w : widths) w = dist(rng);
    } else {
        for (int i = 0; i < n; ++i)
            widths[i] = std::clamp(static_cast<double>(net.declared_widths[i]), lo, hi);
    }

    OptimResult result;
    result.initial_widths = widths;
    {
        auto init_layers = materialize(net, round_widths(widths));
        result.initial_cost = network_cost(init_layers, hw, CostModelKind::Hard);
        result.initial_hard_loss =
            cfg.loss.lambda_latency * result.initial_cost.total_s -
            cfg.loss.beta_utilization * result.initial_cost.utilization;
    }

    SmoothParams smooth = cfg.smooth;
    if (smooth.x_max <= 0)
        smooth.x_max = smooth_arg_bound(net, hw, hi);

    auto eval = [&](const std::vector<double>& w) {
        return hardware_loss(net, w, hw, smooth, cfg.loss);
    };

    DiffScalar loss = eval(widths);
    double lr = cfg.learning_rate;
    int halvings = 0;
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        if (!std::isfinite(loss.value()))
            throw OptimError("non-finite loss at iteration " + std::to_string(iter), iter);

        double grad_norm = 0.0;
        std::vector<double> next(n);
        for (int i = 0; i < n; ++i) {
            const double g = loss.partial(i);
            if (!std::isfinite(g))
                throw OptimError("non-finite gradient at iteration " + std::to_string(iter),
                                 iter);
            grad_norm += g * g;
            next[i] = std::clamp(widths[i] - lr * g, lo, hi);
        }
        grad_norm = std::sqrt(grad_norm);

        DiffScalar next_loss = eval(next);
        if (next_loss.value() > loss.value()) {
            // Worsening step: back off and retry from the same point.
            if (++halvings > cfg.max_halvings) break;
            lr *= 0.5;
            continue;
        }
        const double delta = loss.value() - next_loss.value();
        widths = std::move(next);
        loss = std::move(next_loss);
        result.trajectory.push_back({iter, loss.value(), grad_norm});
        if (delta < cfg.tolerance) break;
    }
    result.final_widths = widths;

    // Snap each width to its best grid neighbor by exact hard loss. The
    // joint enumeration is cheap for cell counts that occur in practice.
    const auto grid = space.grid();
    auto neighbors = [&](double w) {
        std::vector<long long> cand;
        long long below = space.min_c, above = space.max_c;
        for (long long g : grid) {
            if (static_cast<double>(g) <= w) below = g;
        }
        for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
            if (static_cast<double>(*it) >= w) above = *it;
        }
        cand.push_back(below);
        if (above != below) cand.push_back(above);
        return cand;
    };

    std::vector<std::vector<long long>> options;
    options.reserve(n);
    for (int i = 0; i < n; ++i) options.push_back(neighbors(widths[i]));

    bool have_best = false;
    std::vector<long long> best;
    double best_loss = 0.0, best_runtime = 0.0;
    NetworkCost best_cost;

    std::vector<size_t> pick(n, 0);
    while (true) {
        std::vector<long long> candidate(n);
        for (int i = 0; i < n; ++i) candidate[i] = options[i][pick[i]];
        try {
            auto layers = materialize(net, candidate);
            auto cost = network_cost(layers, hw, CostModelKind::Hard);
            const double loss_c = cfg.loss.lambda_latency * cost.total_s -
                                  cfg.loss.beta_utilization * cost.utilization;
            if (!have_best || better(loss_c, cost.total_s, candidate, best_loss,
                                     best_runtime, best)) {
                have_best = true;
                best = candidate;
                best_loss = loss_c;
                best_runtime = cost.total_s;
                best_cost = cost;
            }
        } catch (const ParseError&) {
            // Width combination violates a structural constraint; skip it.
        }
        int i = 0;
        for (; i < n; ++i) {
            if (++pick[i] < options[i].size()) break;
            pick[i] = 0;
        }
        if (i == n) break;
    }
    if (!have_best)
        throw OptimError("no valid grid projection for the final widths");

    result.projected_widths = best;
    result.projected_hard_loss = best_loss;
    result.projected_cost = best_cost;
    return result;
}

ExhaustiveResult exhaustive_search(const NetworkSpec& spec, const HardwareConfig& hw,
                                   const ChannelSearchSpace& space,
                                   const HardwareLossParams& hl, unsigned long long cap) {
    auto net = expand_bound(spec);
    if (net.num_vars < 1)
        throw ParseError("network has no tunable cell widths to optimize");

    const auto grid = space.grid();
    unsigned long long combos = 1;
    for (int i = 0; i < net.num_vars; ++i) {
        combos *= grid.size();
        if (combos > cap)
            throw OptimError("grid has more than " + std::to_string(cap) + " combinations");
    }

    ExhaustiveResult result;
    bool have_best = false;
    double best_runtime = 0.0;

    std::vector<size_t> pick(net.num_vars, 0);
    while (true) {
        std::vector<long long> widths(net.num_vars);
        for (int i = 0; i < net.num_vars; ++i) widths[i] = grid[pick[i]];
        try {
            auto layers = materialize(net, widths);
            auto cost = network_cost(layers, hw, CostModelKind::Hard);
            const double loss = hl.lambda_latency * cost.total_s -
                                hl.beta_utilization * cost.utilization;
            result.evaluated++;
            if (!have_best || better(loss, cost.total_s, widths, result.loss,
                                     best_runtime, result.widths)) {
                have_best = true;
                result.widths = widths;
                result.loss = loss;
                best_runtime = cost.total_s;
                result.cost = cost;
            }
        } catch (const ParseError&) {
        }
        int i = 0;
        for (; i < net.num_vars; ++i) {
            if (++pick[i] < grid.size()) break;
            pick[i] = 0;
        }
        if (i == net.num_vars) break;
    }
    if (!have_best) throw OptimError("no valid grid assignment");
    return result;
}

const std::vector<OpCandidate>& default_op_set() {
    static const std::vector<OpCandidate> ops = {
        {LayerKind::Conv, 3, 1, "conv2d_3x3"},
        {LayerKind::Conv, 5, 1, "conv2d_5x5"},
        {LayerKind::DepthwiseSeparableConv, 3, 1, "dws_3x3"},
        {LayerKind::DepthwiseSeparableConv, 5, 1, "dws_5x5"},
        {LayerKind::DilatedConv, 3, 2, "dil_3x3"},
        {LayerKind::DilatedConv, 5, 2, "dil_5x5"},
        {LayerKind::Identity, 1, 1, "identity"},
        {LayerKind::Zero, 1, 1, "zero"},
    };
    return ops;
}

std::vector<ScoredOp> score_operators(long long h, long long w, long long b,
                                      const HardwareConfig& hw, const HardwareLossParams& hl,
                                      long long width,
                                      const std::vector<OpCandidate>& candidates) {
    std::vector<ScoredOp> scored;
    std::vector<size_t> order;
    for (size_t i = 0; i < candidates.size(); ++i) {
        const auto& op = candidates[i];
        LayerSpec l;
        l.kind = op.kind;
        l.k1 = l.k2 = op.k;
        l.dilation = op.dilation;
        l.c = l.f = width;
        l.h = h;
        l.w = w;
        l.b = b;
        auto cost = hard_layer_cost(l, hw);
        ScoredOp s;
        s.op = op;
        s.runtime_s = cost.runtime_s;
        s.utilization = cost.utilization;
        s.loss = hl.lambda_latency * cost.runtime_s - hl.beta_utilization * cost.utilization;
        scored.push_back(s);
        order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b2) {
        if (scored[a].loss != scored[b2].loss) return scored[a].loss < scored[b2].loss;
        if (scored[a].runtime_s != scored[b2].runtime_s)
            return scored[a].runtime_s < scored[b2].runtime_s;
        return a < b2; // declaration order
    });
    std::vector<ScoredOp> ranked;
    ranked.reserve(order.size());
    for (size_t i : order) ranked.push_back(scored[i]);
    return ranked;
}

std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points) {
    if (points.empty()) return {};
    std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        if (a.runtime != b.runtime) return a.runtime < b.runtime;
        return a.score > b.score;
    });
    std::vector<ParetoPoint> front;
    double best_score = -1.0;
    for (const auto& p : points) {
        if (!front.empty() && p.runtime == front.back().runtime && p.score == front.back().score)
            continue; // duplicate
        if (p.score > best_score) {
            front.push_back(p);
            best_score = p.score;
        }
    }
    return front;
}

double hypervolume(const std::vector<ParetoPoint>& points) {
    for (const auto& p : points) {
        if (p.runtime < 0 || p.score > 100.0)
            throw ParseError("hypervolume points require runtime >= 0 and score <= 100");
    }
    auto front = pareto_front(points);
    // Front is sorted by runtime ascending, scores strictly ascending; the
    // union of [0, r_i] x [s_i, 100] decomposes into bands between
    // consecutive scores.
    double area = 0.0;
    for (size_t i = 0; i < front.size(); ++i) {
        const double next_score = i + 1 < front.size() ? front[i + 1].score : 100.0;
        area += front[i].runtime * (next_score - front[i].score);
    }
    return area;
}

} // namespace sacost
