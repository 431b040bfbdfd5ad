#pragma once

// Tile-level weight-stationary simulator. Weight tiles are pinned on the
// array one at a time; activations stream through the rows, so each tile
// costs as many cycles as the streamed row count. DRAM traffic is tracked
// separately and overlapped with compute (double buffering).

#include <cstdint>
#include <vector>

#include "sacost/arch.hpp"
#include "sacost/hw.hpp"

namespace sacost {

// One matrix multiplication (M x K) * (K x N), possibly repeated for
// channel-by-channel operations.
struct GemmShape {
    unsigned long long m = 0;
    unsigned long long k = 0;
    unsigned long long n = 0;
    unsigned long long repeat = 1;
};

// Kind-specific lowering to matrix multiplications.
std::vector<GemmShape> lower_to_gemm(const LayerSpec& layer);

struct TileTraceRecord {
    int layer = 0;
    unsigned long long tile_i = 0;
    unsigned long long tile_j = 0;
    unsigned long long start_cycle = 0;
    unsigned long long end_cycle = 0;
    unsigned long long bytes_in = 0;
};

struct SimResult {
    unsigned long long compute_cycles = 0;
    unsigned long long dram_cycles = 0;
    unsigned long long total_cycles = 0; // max(compute, dram) per layer
    unsigned long long dram_bytes = 0;
    unsigned long long macs = 0;
    unsigned long long tiles = 0;
    double utilization = 1.0;
    bool memory_bound = false;
};

SimResult simulate_layer(const LayerSpec& layer, const HardwareConfig& hw,
                         std::vector<TileTraceRecord>* trace = nullptr,
                         int layer_index = 0);

struct NetworkSimResult {
    std::vector<SimResult> layers;
    SimResult total;
};

// Layers run strictly sequentially; totals are sums and the aggregate
// utilization is MAC-weighted like NetworkCost.
NetworkSimResult simulate_network(const std::vector<LayerSpec>& layers,
                                  const HardwareConfig& hw,
                                  std::vector<TileTraceRecord>* trace = nullptr);

} // namespace sacost
