#pragma once

// Analytical cost models for weight-stationary systolic arrays: the exact
// tiling-aware model plus the FLOPS, roofline and lookup-table baselines.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sacost/arch.hpp"

namespace sacost {

struct HardwareConfig {
    long long s1 = 128;                    // array rows
    long long s2 = 128;                    // array columns
    double clock_hz = 1e9;
    long long onchip_bytes = 15 * 1024 * 1024;
    double offchip_bytes_per_s = 80e9;
    int bytes_per_elem = 2;
};

HardwareConfig parse_hardware_config(const std::string& text);

enum class CostModelKind { Hard, Flops, Roofline, Blackbox };

CostModelKind cost_model_from_name(const std::string& name);
const char* cost_model_name(CostModelKind kind);

struct LayerCost {
    unsigned long long macs = 0;
    unsigned long long runtime_cycles = 0;
    double runtime_s = 0.0;
    double utilization = 1.0;
    unsigned long long weight_bytes = 0;
    unsigned long long activation_bytes = 0;
};

struct NetworkCost {
    std::vector<LayerCost> layers;
    unsigned long long total_cycles = 0;
    unsigned long long total_macs = 0;
    double total_s = 0.0;
    double utilization = 1.0; // MAC-weighted: total_macs / (s1*s2*total_cycles)
};

// Multiply-accumulate count. Zero for layers that need no matrix product.
unsigned long long layer_macs(const LayerSpec& layer);

LayerCost hard_layer_cost(const LayerSpec& layer, const HardwareConfig& hw);
LayerCost flops_layer_cost(const LayerSpec& layer, const HardwareConfig& hw);
LayerCost roofline_layer_cost(const LayerSpec& layer, const HardwareConfig& hw);

// Latency lookup table indexed by layer kind, kernel and channel dimensions
// quantized to multiples of 16; queried by nearest neighbor on channels.
class BlackboxLut {
public:
    struct Key {
        std::string kind;
        int k = 1;
        long long c = 1, f = 1, h = 1, w = 1, b = 1;
        auto operator<=>(const Key&) const = default;
    };

    BlackboxLut() = default;
    BlackboxLut(long long min_c, long long max_c) : min_c_(min_c), max_c_(max_c) {}

    static constexpr long long kQuantization = 16;

    void insert(const Key& key, unsigned long long cycles);
    // Nearest-neighbor lookup on the channel grid; throws ModelError when
    // the (kind, k, h, w, b) slice was never built.
    unsigned long long lookup(const LayerSpec& layer) const;
    long long quantize_channels(long long c) const;

    size_t size() const { return entries_.size(); }
    long long min_c() const { return min_c_; }
    long long max_c() const { return max_c_; }

    std::string serialize() const;
    static BlackboxLut deserialize(const std::string& text);

private:
    long long min_c_ = 64, max_c_ = 280;
    std::map<Key, unsigned long long> entries_;
};

// Builds the LUT by running the oracle over every layer kind present in the
// shape list crossed with the quantized channel grid. The oracle maps a
// fully specified layer to its cycle count (normally the simulator).
struct LutShape {
    long long h = 1, w = 1, b = 1;
    auto operator<=>(const LutShape&) const = default;
};

using CycleOracle = unsigned long long (*)(const LayerSpec&, const HardwareConfig&);

BlackboxLut build_blackbox_lut(const std::vector<LayerSpec>& representative_layers,
                               const HardwareConfig& hw, long long min_c, long long max_c,
                               CycleOracle oracle);

LayerCost blackbox_layer_cost(const LayerSpec& layer, const HardwareConfig& hw,
                              const BlackboxLut& lut);

NetworkCost network_cost(const std::vector<LayerSpec>& layers, const HardwareConfig& hw,
                         CostModelKind kind, const BlackboxLut* lut = nullptr);

} // namespace sacost
