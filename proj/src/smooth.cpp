#include "sacost/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sacost {

namespace {

// One logistic step [1 + exp(-B(x - w))/C]^(-1/v), rising from 0 to 1
// around w. Far below the center both the value and the slope underflow;
// cut off before exp overflows.
DiffScalar logistic_step(const DiffScalar& x, double w, const SmoothParams& p) {
    const double t = x.value() - w;
    if (-p.B * t > 600.0) return DiffScalar(0.0);
    DiffScalar u = exp((x - w) * (-p.B)) / p.C;
    return pow(u + 1.0, -1.0 / p.v);
}

double default_x_max(const SmoothParams& p) { return p.x_max > 0 ? p.x_max : 64.0; }

} // namespace

std::vector<double> SmoothParams::step_centers(double upto) const {
    std::vector<double> centers;
    const int n = static_cast<int>(std::ceil(upto));
    centers.reserve(n);
    for (int i = 0; i < n; ++i) centers.push_back(i + step_offset);
    return centers;
}

DiffScalar smooth_ceil(const DiffScalar& x, const SmoothParams& p, double x_max) {
    if (!(x.value() > 0.0) || x.value() > x_max)
        throw std::domain_error("smooth_ceil argument " + std::to_string(x.value()) +
                                " outside (0, " + std::to_string(x_max) + "]");
    DiffScalar sum(0.0);
    for (double w : p.step_centers(x_max)) sum += logistic_step(x, w, p);
    return sum;
}

SmoothLayerCost smooth_layer_cost(const LayerSpec& layer, const DiffScalar& c,
                                  const DiffScalar& f, const HardwareConfig& hw,
                                  const SmoothParams& p) {
    const double s1 = static_cast<double>(hw.s1);
    const double s2 = static_cast<double>(hw.s2);
    const double rows = static_cast<double>(layer.out_h()) *
                        static_cast<double>(layer.out_w()) * static_cast<double>(layer.b);
    const double kk = static_cast<double>(layer.k1) * static_cast<double>(layer.k2);
    const double x_max = default_x_max(p);

    SmoothLayerCost out;
    switch (layer.kind) {
        case LayerKind::Conv:
        case LayerKind::DilatedConv:
            out.cycles = smooth_ceil(c * (kk / s1), p, x_max) *
                         smooth_ceil(f / s2, p, x_max) * rows;
            out.macs = c * f * (kk * rows);
            break;
        case LayerKind::DepthwiseConv: {
            // The kernel/array ratio does not depend on the channel count,
            // so the exact ceiling is kept; cycles stay linear in c.
            const double tiles = std::ceil(kk / s1);
            out.cycles = c * (tiles * rows);
            out.macs = c * (kk * rows);
            break;
        }
        case LayerKind::DepthwiseSeparableConv: {
            const double tiles = std::ceil(kk / s1);
            out.cycles = c * (tiles * rows) +
                         smooth_ceil(c / s1, p, x_max) *
                             smooth_ceil(f / s2, p, x_max) * rows;
            out.macs = c * (kk * rows) + c * f * rows;
            break;
        }
        case LayerKind::FullyConnected: {
            const double batch = static_cast<double>(layer.b);
            out.cycles = smooth_ceil(c / s1, p, x_max) *
                         smooth_ceil(f / s2, p, x_max) * batch;
            out.macs = c * f * batch;
            break;
        }
        default:
            out.cycles = DiffScalar(0.0);
            out.macs = DiffScalar(0.0);
            out.utilization = DiffScalar(1.0);
            return out;
    }
    out.utilization = out.macs / (out.cycles * (s1 * s2));
    return out;
}

double smooth_arg_bound(const ExpandedNetwork& net, const HardwareConfig& hw,
                        double c_upper) {
    double bound = 1.0;
    for (const auto& bl : net.layers) {
        const auto& l = bl.proto;
        if (!is_compute_kind(l.kind)) continue;
        const double kk = static_cast<double>(l.k1) * l.k2;
        const double c = bl.c_var >= 0 ? static_cast<double>(bl.c_scale) * c_upper
                                       : static_cast<double>(l.c);
        const double f = bl.f_var >= 0 ? static_cast<double>(bl.f_scale) * c_upper
                                       : static_cast<double>(l.f);
        switch (l.kind) {
            case LayerKind::Conv:
            case LayerKind::DilatedConv:
                bound = std::max(bound, kk * c / hw.s1);
                break;
            case LayerKind::DepthwiseSeparableConv:
            case LayerKind::FullyConnected:
                bound = std::max(bound, c / hw.s1);
                break;
            default:
                break;
        }
        bound = std::max(bound, f / hw.s2);
    }
    return std::ceil(bound) + 1.0;
}

SmoothNetworkCost smooth_network_cost(const ExpandedNetwork& net,
                                      const std::vector<double>& widths,
                                      const HardwareConfig& hw, const SmoothParams& p) {
    if (static_cast<int>(widths.size()) != net.num_vars)
        throw std::invalid_argument("width count does not match network variables");

    double c_upper = 1.0;
    for (double w : widths) c_upper = std::max(c_upper, w);
    for (const auto& bl : net.layers) {
        c_upper = std::max(c_upper, static_cast<double>(std::max<long long>(bl.proto.c, 1)));
        c_upper = std::max(c_upper, static_cast<double>(std::max<long long>(bl.proto.f, 1)));
    }
    SmoothParams params = p;
    if (params.x_max <= 0) params.x_max = smooth_arg_bound(net, hw, c_upper);

    std::vector<DiffScalar> vars;
    vars.reserve(widths.size());
    for (size_t i = 0; i < widths.size(); ++i)
        vars.push_back(DiffScalar::variable(static_cast<int>(i), widths[i]));

    SmoothNetworkCost total;
    total.cycles = DiffScalar(0.0);
    total.macs = DiffScalar(0.0);
    for (const auto& bl : net.layers) {
        DiffScalar c = bl.c_var >= 0 ? vars[bl.c_var] * static_cast<double>(bl.c_scale)
                                     : DiffScalar(static_cast<double>(bl.proto.c));
        DiffScalar f = bl.f_var >= 0 ? vars[bl.f_var] * static_cast<double>(bl.f_scale)
                                     : DiffScalar(static_cast<double>(bl.proto.f));
        auto cost = smooth_layer_cost(bl.proto, c, f, hw, params);
        total.cycles += cost.cycles;
        total.macs += cost.macs;
    }
    total.seconds = total.cycles / hw.clock_hz;
    if (total.cycles.value() <= 0.0) {
        total.utilization = DiffScalar(1.0); // nothing executed: full utilization
    } else {
        total.utilization = total.macs / (total.cycles * (static_cast<double>(hw.s1) *
                                                          static_cast<double>(hw.s2)));
    }
    return total;
}

DiffScalar hardware_loss(const ExpandedNetwork& net, const std::vector<double>& widths,
                         const HardwareConfig& hw, const SmoothParams& p,
                         const HardwareLossParams& hl) {
    auto cost = smooth_network_cost(net, widths, hw, p);
    return cost.seconds * hl.lambda_latency - cost.utilization * hl.beta_utilization;
}

} // namespace sacost
