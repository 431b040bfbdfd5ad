#include "sacost/hw.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace sacost {

using nlohmann::json;

namespace {

using u64 = unsigned long long;

u64 ceil_div(u64 a, u64 b) { return (a + b - 1) / b; }

// Rows streamed through the array: one per output position per batch.
u64 stream_rows(const LayerSpec& l) {
    return static_cast<u64>(l.out_h()) * static_cast<u64>(l.out_w()) *
           static_cast<u64>(l.b);
}

u64 cycles_to_dram(long double bytes, const HardwareConfig& hw) {
    const long double cycles = bytes * hw.clock_hz / hw.offchip_bytes_per_s;
    return static_cast<u64>(std::ceil(cycles));
}

double utilization_of(u64 macs, u64 cycles, const HardwareConfig& hw) {
    if (cycles == 0) return 1.0;
    return static_cast<double>(macs) /
           (static_cast<double>(hw.s1) * static_cast<double>(hw.s2) *
            static_cast<double>(cycles));
}

u64 weight_count(const LayerSpec& l) {
    switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::DilatedConv:
            return static_cast<u64>(l.k1) * l.k2 * l.c * l.f;
        case LayerKind::DepthwiseConv:
            return static_cast<u64>(l.k1) * l.k2 * l.c;
        case LayerKind::DepthwiseSeparableConv:
            return static_cast<u64>(l.k1) * l.k2 * l.c + static_cast<u64>(l.c) * l.f;
        case LayerKind::FullyConnected:
            return static_cast<u64>(l.c) * l.f;
        default:
            return 0;
    }
}

u64 activation_count(const LayerSpec& l) {
    if (!is_compute_kind(l.kind)) return 0;
    if (l.kind == LayerKind::FullyConnected)
        return static_cast<u64>(l.c) * l.b + static_cast<u64>(l.f) * l.b;
    const u64 in = static_cast<u64>(l.h) * l.w * l.c * l.b;
    const u64 out = static_cast<u64>(l.out_h()) * l.out_w() * l.f * l.b;
    return in + out;
}

LayerCost finish(const LayerSpec& l, u64 cycles, const HardwareConfig& hw) {
    LayerCost cost;
    cost.macs = layer_macs(l);
    cost.runtime_cycles = cycles;
    cost.runtime_s = static_cast<double>(cycles) / hw.clock_hz;
    cost.utilization = utilization_of(cost.macs, cycles, hw);
    cost.weight_bytes = weight_count(l) * hw.bytes_per_elem;
    cost.activation_bytes = activation_count(l) * hw.bytes_per_elem;
    return cost;
}

} // namespace

HardwareConfig parse_hardware_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("syntax error: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("syntax error: hardware config must be an object");
    const std::set<std::string> allowed = {"s1", "s2", "clock_hz", "onchip_bytes",
                                           "offchip_bytes_per_s", "bytes_per_elem"};
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (!allowed.count(it.key()))
            throw ParseError("syntax error: unknown field '" + it.key() +
                             "' in hardware config");

    HardwareConfig hw;
    auto get_ll = [&](const char* key, long long& out) {
        if (!doc.contains(key)) return;
        out = doc.at(key).get<long long>();
        if (out <= 0) throw ParseError(std::string("semantic error: ") + key + " must be positive");
    };
    auto get_d = [&](const char* key, double& out) {
        if (!doc.contains(key)) return;
        out = doc.at(key).get<double>();
        if (!(out > 0)) throw ParseError(std::string("semantic error: ") + key + " must be positive");
    };
    get_ll("s1", hw.s1);
    get_ll("s2", hw.s2);
    get_d("clock_hz", hw.clock_hz);
    get_ll("onchip_bytes", hw.onchip_bytes);
    get_d("offchip_bytes_per_s", hw.offchip_bytes_per_s);
    long long bpe = hw.bytes_per_elem;
    get_ll("bytes_per_elem", bpe);
    hw.bytes_per_elem = static_cast<int>(bpe);
    return hw;
}

CostModelKind cost_model_from_name(const std::string& name) {
    if (name == "hard") return CostModelKind::Hard;
    if (name == "flops") return CostModelKind::Flops;
    if (name == "roofline") return CostModelKind::Roofline;
    if (name == "blackbox") return CostModelKind::Blackbox;
    throw ParseError("unknown cost model '" + name + "'");
}

const char* cost_model_name(CostModelKind kind) {
    switch (kind) {
        case CostModelKind::Hard: return "hard";
        case CostModelKind::Flops: return "flops";
        case CostModelKind::Roofline: return "roofline";
        case CostModelKind::Blackbox: return "blackbox";
    }
    return "?";
}

unsigned long long layer_macs(const LayerSpec& l) {
    const u64 rows = stream_rows(l);
    switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::DilatedConv:
            return rows * l.k1 * l.k2 * l.c * l.f;
        case LayerKind::DepthwiseConv:
            return rows * l.k1 * l.k2 * l.c;
        case LayerKind::DepthwiseSeparableConv:
            return rows * l.k1 * l.k2 * l.c + rows * l.c * l.f;
        case LayerKind::FullyConnected:
            return static_cast<u64>(l.b) * l.c * l.f;
        default:
            return 0;
    }
}

LayerCost hard_layer_cost(const LayerSpec& l, const HardwareConfig& hw) {
    const u64 s1 = hw.s1, s2 = hw.s2;
    const u64 rows = stream_rows(l);
    u64 cycles = 0;
    switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::DilatedConv:
            cycles = ceil_div(static_cast<u64>(l.k1) * l.k2 * l.c, s1) *
                     ceil_div(static_cast<u64>(l.f), s2) * rows;
            break;
        case LayerKind::DepthwiseConv:
            // One filter per channel: a single array column, repeated c times.
            cycles = static_cast<u64>(l.c) * ceil_div(static_cast<u64>(l.k1) * l.k2, s1) * rows;
            break;
        case LayerKind::DepthwiseSeparableConv:
            cycles = static_cast<u64>(l.c) * ceil_div(static_cast<u64>(l.k1) * l.k2, s1) * rows +
                     ceil_div(static_cast<u64>(l.c), s1) * ceil_div(static_cast<u64>(l.f), s2) * rows;
            break;
        case LayerKind::FullyConnected:
            cycles = ceil_div(static_cast<u64>(l.c), s1) * ceil_div(static_cast<u64>(l.f), s2) *
                     static_cast<u64>(l.b);
            break;
        default:
            cycles = 0; // identity, zero, pooling, normalization, activation
            break;
    }
    return finish(l, cycles, hw);
}

LayerCost flops_layer_cost(const LayerSpec& l, const HardwareConfig& hw) {
    const u64 macs = layer_macs(l);
    const u64 peak = static_cast<u64>(hw.s1) * hw.s2;
    const u64 cycles = macs == 0 ? 0 : ceil_div(macs, peak);
    return finish(l, cycles, hw);
}

LayerCost roofline_layer_cost(const LayerSpec& l, const HardwareConfig& hw) {
    LayerCost compute = flops_layer_cost(l, hw);
    if (compute.macs == 0) return compute;
    const u64 footprint = compute.weight_bytes + compute.activation_bytes;
    const u64 mem_cycles = cycles_to_dram(static_cast<long double>(footprint), hw);
    const u64 cycles = std::max(compute.runtime_cycles, mem_cycles);
    return finish(l, cycles, hw);
}

void BlackboxLut::insert(const Key& key, unsigned long long cycles) {
    entries_[key] = cycles;
}

long long BlackboxLut::quantize_channels(long long c) const {
    const long long grid_min = ceil_div(min_c_, kQuantization) * kQuantization;
    const long long grid_max = (max_c_ / kQuantization) * kQuantization;
    long long lo = (c / kQuantization) * kQuantization;
    long long hi = lo + kQuantization;
    long long q = (c - lo <= hi - c) ? lo : hi; // ties resolve to the lower point
    return std::clamp(q, grid_min, grid_max);
}

unsigned long long BlackboxLut::lookup(const LayerSpec& layer) const {
    if (!is_compute_kind(layer.kind)) return 0;
    Key key;
    key.kind = kind_name(layer.kind);
    key.k = layer.k1;
    key.c = quantize_channels(layer.c);
    key.f = layer.kind == LayerKind::DepthwiseConv ? key.c : quantize_channels(layer.f);
    key.h = layer.h;
    key.w = layer.w;
    key.b = layer.b;
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw ModelError("lookup table has no entry for " + key.kind + " k=" +
                         std::to_string(key.k) + " c=" + std::to_string(key.c) + " f=" +
                         std::to_string(key.f) + " h=" + std::to_string(key.h) + " w=" +
                         std::to_string(key.w) + " b=" + std::to_string(key.b));
    return it->second;
}

std::string BlackboxLut::serialize() const {
    json doc;
    doc["version"] = 1;
    doc["quantization"] = kQuantization;
    doc["min_c"] = min_c_;
    doc["max_c"] = max_c_;
    json entries = json::array();
    for (const auto& [key, cycles] : entries_) {
        entries.push_back({{"kind", key.kind},
                           {"k", key.k},
                           {"c", key.c},
                           {"f", key.f},
                           {"h", key.h},
                           {"w", key.w},
                           {"b", key.b},
                           {"cycles", cycles}});
    }
    doc["entries"] = std::move(entries);
    return doc.dump();
}

BlackboxLut BlackboxLut::deserialize(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("syntax error in LUT file: ") + e.what());
    }
    if (!doc.contains("version") || doc.at("version").get<int>() != 1)
        throw ParseError("unsupported LUT file version");
    if (doc.at("quantization").get<long long>() != kQuantization)
        throw ParseError("unsupported LUT quantization");
    BlackboxLut lut(doc.at("min_c").get<long long>(), doc.at("max_c").get<long long>());
    for (const auto& e : doc.at("entries")) {
        Key key{e.at("kind").get<std::string>(), e.at("k").get<int>(),
                e.at("c").get<long long>(),      e.at("f").get<long long>(),
                e.at("h").get<long long>(),      e.at("w").get<long long>(),
                e.at("b").get<long long>()};
        lut.insert(key, e.at("cycles").get<unsigned long long>());
    }
    return lut;
}

BlackboxLut build_blackbox_lut(const std::vector<LayerSpec>& representative_layers,
                               const HardwareConfig& hw, long long min_c, long long max_c,
                               CycleOracle oracle) {
    BlackboxLut lut(min_c, max_c);

    // One slice per (kind, kernel, spatial shape) that actually occurs.
    struct Slice {
        LayerKind kind;
        int k;
        int dilation;
        LutShape shape;
        auto operator<=>(const Slice&) const = default;
    };
    std::set<Slice> slices;
    for (const auto& l : representative_layers) {
        if (!is_compute_kind(l.kind)) continue;
        slices.insert({l.kind, l.k1, l.dilation, {l.h, l.w, l.b}});
    }

    std::vector<long long> grid;
    const long long grid_min = ceil_div(min_c, BlackboxLut::kQuantization) *
                               BlackboxLut::kQuantization;
    for (long long c = grid_min; c <= max_c; c += BlackboxLut::kQuantization)
        grid.push_back(c);
    if (grid.empty()) throw ModelError("empty channel grid for LUT build");

    for (const auto& s : slices) {
        for (long long c : grid) {
            for (long long f : grid) {
                if (s.kind == LayerKind::DepthwiseConv && f != c) continue;
                LayerSpec l;
                l.kind = s.kind;
                l.k1 = l.k2 = s.k;
                l.dilation = s.dilation;
                l.c = c;
                l.f = s.kind == LayerKind::DepthwiseConv ? c : f;
                l.h = s.shape.h;
                l.w = s.shape.w;
                l.b = s.shape.b;
                BlackboxLut::Key key{kind_name(s.kind), s.k, c, l.f,
                                     s.shape.h, s.shape.w, s.shape.b};
                lut.insert(key, oracle(l, hw));
            }
        }
    }
    return lut;
}

LayerCost blackbox_layer_cost(const LayerSpec& l, const HardwareConfig& hw,
                              const BlackboxLut& lut) {
    return finish(l, lut.lookup(l), hw);
}

NetworkCost network_cost(const std::vector<LayerSpec>& layers, const HardwareConfig& hw,
                         CostModelKind kind, const BlackboxLut* lut) {
    if (kind == CostModelKind::Blackbox && lut == nullptr)
        throw ModelError("blackbox model requires a lookup table");

    NetworkCost total;
    for (const auto& l : layers) {
        LayerCost cost;
        switch (kind) {
            case CostModelKind::Hard: cost = hard_layer_cost(l, hw); break;
            case CostModelKind::Flops: cost = flops_layer_cost(l, hw); break;
            case CostModelKind::Roofline: cost = roofline_layer_cost(l, hw); break;
            case CostModelKind::Blackbox: cost = blackbox_layer_cost(l, hw, *lut); break;
        }
        total.total_cycles += cost.runtime_cycles;
        total.total_macs += cost.macs;
        total.layers.push_back(cost);
    }
    total.total_s = static_cast<double>(total.total_cycles) / hw.clock_hz;
    total.utilization = utilization_of(total.total_macs, total.total_cycles, hw);
    return total;
}

} // namespace sacost
