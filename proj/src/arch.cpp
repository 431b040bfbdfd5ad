#include "sacost/arch.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sacost {

using nlohmann::json;

namespace {

struct KindName {
    LayerKind kind;
    const char* name;
};

constexpr KindName kKindNames[] = {
    {LayerKind::Conv, "conv"},
    {LayerKind::DepthwiseConv, "depthwise"},
    {LayerKind::DepthwiseSeparableConv, "dws"},
    {LayerKind::DilatedConv, "dilated"},
    {LayerKind::FullyConnected, "fc"},
    {LayerKind::Identity, "identity"},
    {LayerKind::Zero, "zero"},
    {LayerKind::MaxPool, "maxpool"},
    {LayerKind::BatchNorm, "batchnorm"},
    {LayerKind::ReLU, "relu"},
};

[[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }

void check_known_fields(const json& obj, const std::set<std::string>& allowed,
                        const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            fail("syntax error: unknown field '" + it.key() + "' in " + where);
    }
}

long long get_positive_int(const json& obj, const std::string& key,
                           const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        fail("semantic error: " + where + "." + key + " must be an integer");
    long long n = v.get<long long>();
    if (n <= 0)
        fail("semantic error: " + where + "." + key + " must be >= 1 (got " +
             std::to_string(n) + ")");
    return n;
}

} // namespace

const char* kind_name(LayerKind kind) {
    for (const auto& kn : kKindNames)
        if (kn.kind == kind) return kn.name;
    return "?";
}

LayerKind kind_from_name(const std::string& name) {
    for (const auto& kn : kKindNames)
        if (name == kn.name) return kn.kind;
    fail("semantic error: unknown op kind '" + name + "'");
}

bool is_compute_kind(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv:
        case LayerKind::DepthwiseConv:
        case LayerKind::DepthwiseSeparableConv:
        case LayerKind::DilatedConv:
        case LayerKind::FullyConnected:
            return true;
        default:
            return false;
    }
}

long long LayerSpec::out_c() const {
    switch (kind) {
        case LayerKind::Identity:
        case LayerKind::Zero:
        case LayerKind::MaxPool:
        case LayerKind::BatchNorm:
        case LayerKind::ReLU:
            return c;
        default:
            return f;
    }
}

namespace {

LayerDecl parse_layer_decl(const json& obj, const std::string& where) {
    check_known_fields(obj, {"kind", "k", "dilation", "stride", "c", "f"}, where);
    if (!obj.contains("kind")) fail("semantic error: " + where + " missing 'kind'");
    LayerDecl decl;
    decl.kind = kind_from_name(obj.at("kind").get<std::string>());

    const bool conv_like = decl.kind == LayerKind::Conv ||
                           decl.kind == LayerKind::DilatedConv ||
                           decl.kind == LayerKind::DepthwiseConv ||
                           decl.kind == LayerKind::DepthwiseSeparableConv;

    if (obj.contains("k")) {
        if (!conv_like && decl.kind != LayerKind::MaxPool)
            fail("semantic error: " + where + ".k not applicable to kind '" +
                 kind_name(decl.kind) + "'");
        decl.k = static_cast<int>(get_positive_int(obj, "k", where));
    } else if (conv_like) {
        fail("semantic error: " + where + " missing 'k'");
    }

    if (decl.kind == LayerKind::MaxPool) {
        decl.k = obj.contains("k") ? decl.k : 2;
        if (decl.k != 2)
            fail("semantic error: " + where + ": only 2x2 maxpool is supported");
        decl.stride = 2;
    }

    if (obj.contains("dilation")) {
        if (decl.kind != LayerKind::DilatedConv)
            fail("semantic error: " + where + ".dilation requires kind 'dilated'");
        decl.dilation = static_cast<int>(get_positive_int(obj, "dilation", where));
    }
    if (decl.kind == LayerKind::DilatedConv) {
        if (!obj.contains("dilation")) decl.dilation = 2;
        if (decl.dilation < 2)
            fail("semantic error: " + where + ".dilation must be >= 2 for dilated conv");
    }

    if (obj.contains("stride")) {
        if (!conv_like)
            fail("semantic error: " + where + ".stride not applicable to kind '" +
                 kind_name(decl.kind) + "'");
        decl.stride = static_cast<int>(get_positive_int(obj, "stride", where));
    }

    const bool has_channels = conv_like || decl.kind == LayerKind::FullyConnected;
    if (obj.contains("c")) {
        if (!has_channels)
            fail("semantic error: " + where + ".c not applicable to kind '" +
                 kind_name(decl.kind) + "'");
        decl.c = get_positive_int(obj, "c", where);
    }
    if (obj.contains("f")) {
        if (!has_channels)
            fail("semantic error: " + where + ".f not applicable to kind '" +
                 kind_name(decl.kind) + "'");
        decl.f = get_positive_int(obj, "f", where);
    }

    if (decl.kind == LayerKind::DepthwiseConv && decl.c && decl.f && *decl.c != *decl.f)
        fail("semantic error: " + where + ": depthwise requires f == c (got c=" +
             std::to_string(*decl.c) + ", f=" + std::to_string(*decl.f) + ")");

    const bool needs_f = decl.kind == LayerKind::Conv ||
                         decl.kind == LayerKind::DilatedConv ||
                         decl.kind == LayerKind::DepthwiseSeparableConv ||
                         decl.kind == LayerKind::FullyConnected;
    if (needs_f && !decl.f)
        fail("semantic error: " + where + " missing 'f'");
    return decl;
}

CellSpec parse_cell(const json& obj) {
    check_known_fields(obj, {"nodes", "edges"}, "cell");
    if (!obj.contains("nodes") || !obj.contains("edges"))
        fail("semantic error: cell requires 'nodes' and 'edges'");

    CellSpec cell;
    for (const auto& n : obj.at("nodes")) cell.nodes.push_back(n.get<std::string>());
    if (cell.nodes.size() < 3)
        fail("semantic error: cell needs at least two input nodes and one output node");
    std::set<std::string> seen(cell.nodes.begin(), cell.nodes.end());
    if (seen.size() != cell.nodes.size()) fail("semantic error: duplicate cell node name");

    auto node_index = [&](const std::string& name, const std::string& where) {
        auto it = std::find(cell.nodes.begin(), cell.nodes.end(), name);
        if (it == cell.nodes.end())
            fail("semantic error: " + where + " references unknown node '" + name + "'");
        return static_cast<int>(it - cell.nodes.begin());
    };

    int idx = 0;
    for (const auto& e : obj.at("edges")) {
        std::string where = "cell.edges[" + std::to_string(idx) + "]";
        check_known_fields(e, {"src", "dst", "kind", "k", "dilation"}, where);
        if (!e.contains("src") || !e.contains("dst") || !e.contains("kind"))
            fail("semantic error: " + where + " requires 'src', 'dst' and 'kind'");
        CellEdge edge;
        edge.src = node_index(e.at("src").get<std::string>(), where);
        edge.dst = node_index(e.at("dst").get<std::string>(), where);
        if (edge.src == edge.dst) fail("semantic error: " + where + " is a self-loop");
        if (edge.dst < 2)
            fail("semantic error: " + where + " targets an input node");
        edge.kind = kind_from_name(e.at("kind").get<std::string>());
        switch (edge.kind) {
            case LayerKind::Conv:
            case LayerKind::DilatedConv:
            case LayerKind::DepthwiseConv:
            case LayerKind::DepthwiseSeparableConv:
                if (!e.contains("k")) fail("semantic error: " + where + " missing 'k'");
                edge.k = static_cast<int>(get_positive_int(e, "k", where));
                break;
            case LayerKind::Identity:
            case LayerKind::Zero:
                if (e.contains("k"))
                    fail("semantic error: " + where + ".k not applicable");
                break;
            default:
                fail("semantic error: " + where + ": kind '" + kind_name(edge.kind) +
                     "' not allowed on a cell edge");
        }
        if (e.contains("dilation")) {
            if (edge.kind != LayerKind::DilatedConv)
                fail("semantic error: " + where + ".dilation requires kind 'dilated'");
            edge.dilation = static_cast<int>(get_positive_int(e, "dilation", where));
        }
        if (edge.kind == LayerKind::DilatedConv) {
            if (!e.contains("dilation")) edge.dilation = 2;
            if (edge.dilation < 2)
                fail("semantic error: " + where + ".dilation must be >= 2");
        }
        cell.edges.push_back(edge);
        idx++;
    }
    if (cell.edges.empty()) fail("semantic error: cell has no edges");
    return cell;
}

// Returns edge evaluation order and validates the multigraph: acyclic, no
// dangling internal nodes, output reachable.
std::vector<int> cell_edge_order(const CellSpec& cell) {
    const int n = static_cast<int>(cell.nodes.size());
    const int output = n - 1;

    std::vector<int> indegree(n, 0);
    for (const auto& e : cell.edges) indegree[e.dst]++;

    for (int v = 2; v < n; ++v) {
        if (indegree[v] == 0)
            fail("semantic error: dangling node '" + cell.nodes[v] +
                 "' (no incoming edges)");
        if (v != output) {
            bool has_out = false;
            for (const auto& e : cell.edges) has_out |= (e.src == v);
            if (!has_out)
                fail("semantic error: dangling node '" + cell.nodes[v] +
                     "' (no outgoing edges)");
        }
    }

    // Kahn's algorithm with stable node order.
    std::vector<int> remaining = indegree;
    std::vector<int> topo_pos(n, -1);
    int placed = 0;
    for (int step = 0; step < n; ++step) {
        int pick = -1;
        for (int v = 0; v < n; ++v) {
            if (topo_pos[v] < 0 && remaining[v] == 0) { pick = v; break; }
        }
        if (pick < 0) fail("semantic error: cycle detected in cell multigraph");
        topo_pos[pick] = placed++;
        for (const auto& e : cell.edges)
            if (e.src == pick) remaining[e.dst]--;
    }

    std::vector<int> order(cell.edges.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return topo_pos[cell.edges[a].dst] < topo_pos[cell.edges[b].dst];
    });
    return order;
}

void validate_network(const NetworkSpec& spec) {
    if (spec.cell_form) {
        if (spec.stack < 1) fail("semantic error: stack must be >= 1");
        if (spec.widths.size() != static_cast<size_t>(spec.stack))
            fail("semantic error: widths must list one width per stacked cell (" +
                 std::to_string(spec.widths.size()) + " given, stack=" +
                 std::to_string(spec.stack) + ")");
        for (long long w : spec.widths)
            if (w < 1) fail("semantic error: cell widths must be >= 1");
        cell_edge_order(spec.cell);
    }
    // Full expansion + shape inference exercises every remaining invariant.
    auto layers = expand_cells(spec);
    (void)layers;
}

} // namespace

NetworkSpec parse_network(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(std::string("syntax error: ") + e.what());
    }
    if (!doc.is_object()) fail("syntax error: top-level document must be an object");

    check_known_fields(doc,
                       {"input", "layers", "cell", "stack", "widths", "maxpool_every",
                        "prep", "classifier"},
                       "document");
    if (!doc.contains("input")) fail("semantic error: missing 'input'");
    const auto& in = doc.at("input");
    check_known_fields(in, {"h", "w", "c", "b"}, "input");
    NetworkSpec spec;
    spec.input.h = get_positive_int(in, "h", "input");
    spec.input.w = get_positive_int(in, "w", "input");
    spec.input.c = get_positive_int(in, "c", "input");
    spec.input.b = get_positive_int(in, "b", "input");

    const bool flat = doc.contains("layers");
    const bool cellform = doc.contains("cell");
    if (flat == cellform)
        fail("semantic error: document must have exactly one of 'layers' or 'cell'");

    if (flat) {
        for (const auto& key : {"stack", "widths", "maxpool_every", "prep", "classifier"})
            if (doc.contains(key))
                fail(std::string("semantic error: '") + key +
                     "' is only valid in cell form");
        int idx = 0;
        for (const auto& l : doc.at("layers")) {
            spec.layers.push_back(parse_layer_decl(l, "layers[" + std::to_string(idx) + "]"));
            idx++;
        }
    } else {
        spec.cell_form = true;
        spec.cell = parse_cell(doc.at("cell"));
        if (!doc.contains("stack")) fail("semantic error: cell form requires 'stack'");
        spec.stack = static_cast<int>(get_positive_int(doc, "stack", "document"));
        if (!doc.contains("widths")) fail("semantic error: cell form requires 'widths'");
        for (const auto& w : doc.at("widths")) {
            if (!w.is_number_integer() || w.get<long long>() < 1)
                fail("semantic error: widths entries must be integers >= 1");
            spec.widths.push_back(w.get<long long>());
        }
        if (doc.contains("maxpool_every")) {
            long long n = doc.at("maxpool_every").get<long long>();
            if (n < 0) fail("semantic error: maxpool_every must be >= 0");
            spec.maxpool_every = static_cast<int>(n);
        }
        if (doc.contains("prep")) {
            int idx = 0;
            for (const auto& l : doc.at("prep")) {
                spec.prep.push_back(parse_layer_decl(l, "prep[" + std::to_string(idx) + "]"));
                idx++;
            }
        }
        if (doc.contains("classifier")) {
            const auto& cls = doc.at("classifier");
            check_known_fields(cls, {"f"}, "classifier");
            spec.classifier_f = get_positive_int(cls, "f", "classifier");
        }
    }

    validate_network(spec);
    return spec;
}

std::string serialize_network(const NetworkSpec& spec) {
    json doc;
    doc["input"] = {{"h", spec.input.h}, {"w", spec.input.w},
                    {"c", spec.input.c}, {"b", spec.input.b}};

    auto decl_to_json = [](const LayerDecl& d) {
        json o;
        o["kind"] = kind_name(d.kind);
        switch (d.kind) {
            case LayerKind::Conv:
            case LayerKind::DepthwiseConv:
            case LayerKind::DepthwiseSeparableConv:
            case LayerKind::DilatedConv:
                o["k"] = d.k;
                if (d.kind == LayerKind::DilatedConv) o["dilation"] = d.dilation;
                if (d.stride != 1) o["stride"] = d.stride;
                break;
            default:
                break;
        }
        if (d.c) o["c"] = *d.c;
        if (d.f) o["f"] = *d.f;
        return o;
    };

    if (!spec.cell_form) {
        doc["layers"] = json::array();
        for (const auto& l : spec.layers) doc["layers"].push_back(decl_to_json(l));
    } else {
        json cell;
        cell["nodes"] = spec.cell.nodes;
        cell["edges"] = json::array();
        for (const auto& e : spec.cell.edges) {
            json o;
            o["src"] = spec.cell.nodes[e.src];
            o["dst"] = spec.cell.nodes[e.dst];
            o["kind"] = kind_name(e.kind);
            switch (e.kind) {
                case LayerKind::Conv:
                case LayerKind::DepthwiseConv:
                case LayerKind::DepthwiseSeparableConv:
                case LayerKind::DilatedConv:
                    o["k"] = e.k;
                    if (e.kind == LayerKind::DilatedConv) o["dilation"] = e.dilation;
                    break;
                default:
                    break;
            }
            cell["edges"].push_back(o);
        }
        doc["cell"] = cell;
        doc["stack"] = spec.stack;
        doc["widths"] = spec.widths;
        if (spec.maxpool_every > 0) doc["maxpool_every"] = spec.maxpool_every;
        if (!spec.prep.empty()) {
            doc["prep"] = json::array();
            for (const auto& l : spec.prep) doc["prep"].push_back(decl_to_json(l));
        }
        if (spec.classifier_f) doc["classifier"] = {{"f", *spec.classifier_f}};
    }
    return doc.dump(2);
}

namespace {

LayerSpec from_decl(const LayerDecl& d, const std::string& label) {
    LayerSpec l;
    l.kind = d.kind;
    l.k1 = l.k2 = d.k;
    l.dilation = d.dilation;
    l.stride = d.stride;
    if (d.c) l.c = *d.c; else l.c = 0; // 0 = infer from chain
    if (d.f) l.f = *d.f; else l.f = 0;
    l.label = label;
    return l;
}

// Materializes at the declared widths to resolve shapes and the classifier
// flatten scale, then folds the annotations back into the prototypes.
void annotate(ExpandedNetwork& net) {
    auto layers = materialize(net, net.declared_widths);
    for (size_t i = 0; i < layers.size(); ++i) {
        auto& bl = net.layers[i];
        bl.proto = layers[i];
        if (bl.c_scale == 0) {
            const long long width = net.declared_widths[bl.c_var];
            bl.c_scale = layers[i].c / width;
        }
    }
}

} // namespace

ExpandedNetwork expand_bound(const NetworkSpec& spec) {
    ExpandedNetwork net;
    net.input = spec.input;

    if (!spec.cell_form) {
        int idx = 0;
        for (const auto& d : spec.layers) {
            BoundLayer bl;
            bl.proto = from_decl(d, std::string(kind_name(d.kind)) + "." + std::to_string(idx));
            net.layers.push_back(bl);
            idx++;
        }
        return net;
    }

    net.num_vars = spec.stack;
    net.declared_widths = spec.widths;

    int idx = 0;
    for (const auto& d : spec.prep) {
        BoundLayer bl;
        bl.proto = from_decl(d, "prep." + std::to_string(idx) + "." + kind_name(d.kind));
        net.layers.push_back(bl);
        idx++;
    }

    // Channel source feeding each cell input: variable id, or -1 with a
    // fixed count (the prep/stem output).
    struct Source { int var; long long fixed; };
    long long stem_c = spec.input.c;
    for (const auto& d : spec.prep)
        if (d.f) stem_c = *d.f;
    Source prev{-1, stem_c};      // output of cell t-1
    Source prev_prev{-1, stem_c}; // output of cell t-2

    const auto order = cell_edge_order(spec.cell);
    const int output_node = static_cast<int>(spec.cell.nodes.size()) - 1;

    for (int t = 0; t < spec.stack; ++t) {
        const std::string cell_tag = "cell" + std::to_string(t + 1);
        const long long width = spec.widths[t];

        // Channels carried by each node: any convolutional edge into a node
        // produces this cell's width; nodes fed only by pass-through edges
        // adopt their (unique) source. Pass-through tensors merged into a
        // wider node are mask-padded, which costs nothing.
        std::vector<Source> node_src(spec.cell.nodes.size(), Source{t, width});
        node_src[0] = prev;
        node_src[1] = prev_prev;
        std::vector<char> has_conv(spec.cell.nodes.size(), 0);
        for (const auto& e : spec.cell.edges)
            if (e.kind == LayerKind::Conv || e.kind == LayerKind::DilatedConv ||
                e.kind == LayerKind::DepthwiseSeparableConv)
                has_conv[e.dst] = 1;
        std::vector<char> typed(spec.cell.nodes.size(), 0);
        for (int ei : order) { // topological, so sources are final when read
            const auto& e = spec.cell.edges[ei];
            if (has_conv[e.dst] || e.kind == LayerKind::Zero) continue;
            const Source s = node_src[e.src];
            if (!typed[e.dst]) {
                node_src[e.dst] = s;
                typed[e.dst] = 1;
            } else if (s.var != node_src[e.dst].var || s.fixed != node_src[e.dst].fixed) {
                fail("semantic error: " + cell_tag + ": pass-through edges into node '" +
                     spec.cell.nodes[e.dst] + "' carry mismatched channels (" +
                     std::to_string(node_src[e.dst].fixed) + " vs " + std::to_string(s.fixed) +
                     ")");
            }
        }

        for (int ei : order) {
            const auto& e = spec.cell.edges[ei];
            const Source in = node_src[e.src];
            const Source out = node_src[e.dst];
            const std::string tag =
                cell_tag + ".e" + std::to_string(ei) + "." + kind_name(e.kind);

            auto bind_c = [&](BoundLayer& bl, const Source& s) {
                bl.proto.c = s.fixed;
                bl.c_var = s.var;
            };
            auto bind_f = [&](BoundLayer& bl, const Source& s) {
                bl.proto.f = s.fixed;
                bl.f_var = s.var;
            };

            switch (e.kind) {
                case LayerKind::Zero:
                    break; // contributes nothing to the cost path
                case LayerKind::Identity: {
                    BoundLayer bl;
                    bl.proto.kind = LayerKind::Identity;
                    bl.proto.label = tag;
                    bind_c(bl, in);
                    bind_f(bl, in);
                    net.layers.push_back(bl);
                    break;
                }
                case LayerKind::DepthwiseConv: {
                    BoundLayer bl;
                    bl.proto.kind = LayerKind::DepthwiseConv;
                    bl.proto.k1 = bl.proto.k2 = e.k;
                    bl.proto.label = tag;
                    bind_c(bl, in);
                    bind_f(bl, in);
                    net.layers.push_back(bl);
                    break;
                }
                case LayerKind::DepthwiseSeparableConv: {
                    BoundLayer dw;
                    dw.proto.kind = LayerKind::DepthwiseConv;
                    dw.proto.k1 = dw.proto.k2 = e.k;
                    dw.proto.label = tag + ".dw";
                    bind_c(dw, in);
                    bind_f(dw, in);
                    net.layers.push_back(dw);

                    BoundLayer pw;
                    pw.proto.kind = LayerKind::Conv;
                    pw.proto.k1 = pw.proto.k2 = 1;
                    pw.proto.label = tag + ".pw";
                    bind_c(pw, in);
                    bind_f(pw, out);
                    net.layers.push_back(pw);
                    break;
                }
                case LayerKind::Conv:
                case LayerKind::DilatedConv: {
                    BoundLayer bl;
                    bl.proto.kind = e.kind;
                    bl.proto.k1 = bl.proto.k2 = e.k;
                    bl.proto.dilation = e.dilation;
                    bl.proto.label = tag;
                    bind_c(bl, in);
                    bind_f(bl, out);
                    net.layers.push_back(bl);
                    break;
                }
                default:
                    fail("semantic error: unsupported edge kind");
            }
        }

        if (spec.maxpool_every > 0 && (t + 1) % spec.maxpool_every == 0) {
            BoundLayer pool;
            pool.proto.kind = LayerKind::MaxPool;
            pool.proto.k1 = pool.proto.k2 = 2;
            pool.proto.stride = 2;
            pool.proto.label = "pool" + std::to_string(t + 1);
            net.layers.push_back(pool);
        }

        prev_prev = prev;
        prev = node_src[output_node];
    }

    if (spec.classifier_f) {
        BoundLayer fc;
        fc.proto.kind = LayerKind::FullyConnected;
        fc.proto.label = "classifier";
        fc.proto.c = 0; // flattened input, resolved during shape inference
        fc.c_var = prev.var;
        fc.c_scale = 0; // marker: flatten scale not yet known
        fc.proto.f = *spec.classifier_f;
        net.layers.push_back(fc);
    }

    annotate(net);
    return net;
}

std::vector<LayerSpec> expand_cells(const NetworkSpec& spec) {
    auto net = expand_bound(spec);
    return materialize(net, net.declared_widths);
}

namespace {

// Walks the layer list as a sequential chain and resolves omitted channel
// counts. Strict mode (flat documents) rejects mismatches; lenient mode
// (cell expansions, whose channels are already fixed by the edge bindings)
// only fills in pass-through layers.
void resolve_channels(std::vector<LayerSpec>& layers, const InputShape& input,
                      bool strict) {
    long long ch = input.c;
    for (size_t i = 0; i < layers.size(); ++i) {
        LayerSpec& l = layers[i];
        const std::string where = "layers[" + std::to_string(i) + "]";
        switch (l.kind) {
            case LayerKind::Conv:
            case LayerKind::DilatedConv:
            case LayerKind::DepthwiseConv:
            case LayerKind::DepthwiseSeparableConv:
                if (l.c == 0) l.c = ch;
                if (strict && l.c != ch)
                    fail("semantic error: " + where + ".c: expected " + std::to_string(ch) +
                         " input channels, got " + std::to_string(l.c));
                if (l.kind == LayerKind::DepthwiseConv) {
                    if (l.f == 0) l.f = l.c;
                    if (l.f != l.c)
                        fail("semantic error: " + where + ".f: depthwise requires f == c");
                }
                ch = l.f;
                break;
            case LayerKind::FullyConnected: {
                const long long flat = l.h * l.w * ch;
                if (l.c == 0) l.c = flat;
                if (strict && l.c != flat)
                    fail("semantic error: " + where + ".c: expected " + std::to_string(flat) +
                         " flattened inputs, got " + std::to_string(l.c));
                ch = l.f;
                break;
            }
            case LayerKind::MaxPool:
                l.c = l.f = ch;
                break;
            case LayerKind::Identity:
            case LayerKind::Zero:
            case LayerKind::BatchNorm:
            case LayerKind::ReLU:
                if (l.c == 0) l.c = ch;
                if (l.f == 0) l.f = l.c;
                if (strict && (l.c != ch || l.f != ch))
                    fail("semantic error: " + where + ": pass-through channel mismatch");
                ch = l.f;
                break;
        }
    }
}

void annotate_spatial(std::vector<LayerSpec>& layers, const InputShape& input) {
    long long h = input.h, w = input.w;
    for (size_t i = 0; i < layers.size(); ++i) {
        LayerSpec& l = layers[i];
        l.h = h;
        l.w = w;
        l.b = input.b;
        switch (l.kind) {
            case LayerKind::Conv:
            case LayerKind::DilatedConv:
            case LayerKind::DepthwiseConv:
            case LayerKind::DepthwiseSeparableConv:
                // "same" padding; stride divides output dims with ceiling.
                h = l.out_h();
                w = l.out_w();
                break;
            case LayerKind::FullyConnected:
                h = w = 1;
                break;
            case LayerKind::MaxPool: {
                const long long nh = h / 2, nw = w / 2;
                if (nh < 1 || nw < 1)
                    fail("semantic error: layers[" + std::to_string(i) +
                         "]: spatial dimension underflow (" + std::to_string(h) + "x" +
                         std::to_string(w) + " -> " + std::to_string(nh) + "x" +
                         std::to_string(nw) + ")");
                h = nh;
                w = nw;
                break;
            }
            default:
                break;
        }
    }
}

} // namespace

std::vector<LayerSpec> materialize(const ExpandedNetwork& net,
                                   const std::vector<long long>& widths) {
    if (static_cast<int>(widths.size()) != net.num_vars)
        fail("semantic error: expected " + std::to_string(net.num_vars) +
             " widths, got " + std::to_string(widths.size()));
    std::vector<LayerSpec> layers;
    layers.reserve(net.layers.size());
    for (const auto& bl : net.layers) {
        LayerSpec l = bl.proto;
        // c_scale == 0 marks an unresolved flatten; the chain pass fills it.
        if (bl.c_var >= 0) l.c = bl.c_scale == 0 ? 0 : bl.c_scale * widths[bl.c_var];
        if (bl.f_var >= 0) l.f = bl.f_scale * widths[bl.f_var];
        layers.push_back(l);
    }
    annotate_spatial(layers, net.input);
    resolve_channels(layers, net.input, /*strict=*/net.num_vars == 0);
    return layers;
}

void infer_shapes(std::vector<LayerSpec>& layers, const InputShape& input) {
    annotate_spatial(layers, input);
    resolve_channels(layers, input, /*strict=*/true);
}

} // namespace sacost
