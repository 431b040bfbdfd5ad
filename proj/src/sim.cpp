#include "sacost/sim.hpp"

#include <algorithm>
#include <cmath>

namespace sacost {

namespace {

using u64 = unsigned long long;

u64 ceil_div(u64 a, u64 b) { return (a + b - 1) / b; }

u64 dram_cycles_for(u64 bytes, const HardwareConfig& hw) {
    // bytes * clock may approach the 64-bit range for large layers.
    const unsigned __int128 scaled =
        static_cast<unsigned __int128>(bytes) * static_cast<u64>(hw.clock_hz);
    const u64 bw = static_cast<u64>(hw.offchip_bytes_per_s);
    return static_cast<u64>((scaled + bw - 1) / bw);
}

} // namespace

std::vector<GemmShape> lower_to_gemm(const LayerSpec& l) {
    const u64 rows = static_cast<u64>(l.out_h()) * l.out_w() * l.b;
    switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::DilatedConv:
            return {{rows, static_cast<u64>(l.k1) * l.k2 * l.c, static_cast<u64>(l.f), 1}};
        case LayerKind::DepthwiseConv:
            // One filter per channel: c independent single-column products.
            return {{rows, static_cast<u64>(l.k1) * l.k2, 1, static_cast<u64>(l.c)}};
        case LayerKind::DepthwiseSeparableConv:
            return {{rows, static_cast<u64>(l.k1) * l.k2, 1, static_cast<u64>(l.c)},
                    {rows, static_cast<u64>(l.c), static_cast<u64>(l.f), 1}};
        case LayerKind::FullyConnected:
            return {{static_cast<u64>(l.b), static_cast<u64>(l.c), static_cast<u64>(l.f), 1}};
        default:
            return {};
    }
}

SimResult simulate_layer(const LayerSpec& layer, const HardwareConfig& hw,
                         std::vector<TileTraceRecord>* trace, int layer_index) {
    const u64 s1 = static_cast<u64>(hw.s1);
    const u64 s2 = static_cast<u64>(hw.s2);
    const u64 elem = static_cast<u64>(hw.bytes_per_elem);
    const u64 onchip = static_cast<u64>(hw.onchip_bytes);

    SimResult result;
    result.macs = layer_macs(layer);

    u64 act_in_bytes = 0, act_out_bytes = 0;
    for (const auto& g : lower_to_gemm(layer)) {
        const u64 row_tiles = ceil_div(g.k, s1); // I
        const u64 col_tiles = ceil_div(g.n, s2); // J

        // Even one mapping pass needs a weight tile plus stream buffers.
        const u64 tile_rows = std::min(g.k, s1);
        const u64 tile_cols = std::min(g.n, s2);
        const u64 min_footprint = (tile_rows * tile_cols + tile_rows + tile_cols) * elem;
        if (min_footprint > onchip)
            throw SimError("layer '" + layer.label + "' needs " +
                               std::to_string(min_footprint) +
                               " bytes on-chip for a single tile (capacity " +
                               std::to_string(onchip) + ")",
                           layer_index);

        // Partial edge tiles occupy the array for the full stream anyway.
        result.compute_cycles += g.repeat * row_tiles * col_tiles * g.m;
        result.tiles += g.repeat * row_tiles * col_tiles;

        result.dram_bytes += g.repeat * g.k * g.n * elem; // weights, loaded once
        act_in_bytes += g.repeat * g.m * g.k * elem;
        act_out_bytes += g.repeat * g.m * g.n * elem;
    }

    // Activations and outputs stay resident when they fit next to a weight
    // tile; otherwise the activation matrix is re-streamed for every column
    // group of weight tiles and outputs spill to DRAM.
    const u64 working_set = act_in_bytes + act_out_bytes + s1 * s2 * elem;
    const bool resident = working_set <= onchip;
    u64 refetch = 1;
    if (!resident) {
        // All gemms of a layer share the refetch factor of its widest one.
        for (const auto& g : lower_to_gemm(layer)) refetch = std::max(refetch, ceil_div(g.n, s2));
        result.dram_bytes += refetch * act_in_bytes + act_out_bytes;
    } else {
        result.dram_bytes += act_in_bytes;
    }

    result.dram_cycles = result.dram_bytes == 0 ? 0 : dram_cycles_for(result.dram_bytes, hw);
    result.total_cycles = std::max(result.compute_cycles, result.dram_cycles);
    result.memory_bound = result.dram_cycles > result.compute_cycles;
    if (result.total_cycles > 0)
        result.utilization =
            static_cast<double>(result.macs) /
            (static_cast<double>(s1) * static_cast<double>(s2) *
             static_cast<double>(result.total_cycles));

    if (trace) {
        u64 cycle = 0;
        for (const auto& g : lower_to_gemm(layer)) {
            const u64 row_tiles = ceil_div(g.k, s1);
            const u64 col_tiles = ceil_div(g.n, s2);
            for (u64 rep = 0; rep < g.repeat; ++rep) {
                for (u64 j = 1; j <= col_tiles; ++j) {
                    for (u64 i = 1; i <= row_tiles; ++i) {
                        const u64 rows = std::min(s1, g.k - (i - 1) * s1);
                        const u64 cols = std::min(s2, g.n - (j - 1) * s2);
                        u64 bytes = rows * cols * elem; // weight tile
                        if (!resident || j == 1) bytes += g.m * rows * elem;
                        trace->push_back({layer_index, i, j, cycle, cycle + g.m, bytes});
                        cycle += g.m;
                    }
                }
            }
        }
    }
    return result;
}

NetworkSimResult simulate_network(const std::vector<LayerSpec>& layers,
                                  const HardwareConfig& hw,
                                  std::vector<TileTraceRecord>* trace) {
    NetworkSimResult net;
    int idx = 0;
    for (const auto& l : layers) {
        auto r = simulate_layer(l, hw, trace, idx);
        net.total.compute_cycles += r.compute_cycles;
        net.total.dram_cycles += r.dram_cycles;
        net.total.total_cycles += r.total_cycles;
        net.total.dram_bytes += r.dram_bytes;
        net.total.macs += r.macs;
        net.total.tiles += r.tiles;
        net.layers.push_back(r);
        idx++;
    }
    net.total.memory_bound = net.total.dram_cycles > net.total.compute_cycles;
    if (net.total.total_cycles > 0)
        net.total.utilization =
            static_cast<double>(net.total.macs) /
            (static_cast<double>(hw.s1) * static_cast<double>(hw.s2) *
             static_cast<double>(net.total.total_cycles));
    return net;
}

} // namespace sacost
