#pragma once

// Network intermediate representation: layer and cell descriptions, the
// JSON document schema, cell-stack expansion and shape inference.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sacost/errors.hpp"

namespace sacost {

enum class LayerKind {
    Conv,
    DepthwiseConv,
    DepthwiseSeparableConv,
    DilatedConv,
    FullyConnected,
    Identity,
    Zero,
    MaxPool,
    BatchNorm,
    ReLU,
};

const char* kind_name(LayerKind kind);
LayerKind kind_from_name(const std::string& name);

// True for kinds that perform matrix multiplications.
bool is_compute_kind(LayerKind kind);

// One concrete layer with fully resolved dimensions. h/w/b are the input
// spatial dims and batch; output spatial dims follow from stride/pooling.
struct LayerSpec {
    LayerKind kind = LayerKind::Identity;
    int k1 = 1;
    int k2 = 1;
    int dilation = 1;
    int stride = 1;
    long long c = 1; // input channels
    long long f = 1; // output channels
    long long h = 0;
    long long w = 0;
    long long b = 1;
    std::string label;

    long long out_h() const { return stride > 1 ? (h + stride - 1) / stride : h; }
    long long out_w() const { return stride > 1 ? (w + stride - 1) / stride : w; }
    // Channels leaving the layer (pass-through kinds keep their input count).
    long long out_c() const;
};

struct InputShape {
    long long h = 1;
    long long w = 1;
    long long c = 1;
    long long b = 1;

    bool operator==(const InputShape&) const = default;
};

// Schema-level layer entry; c/f may be omitted and inferred from the chain.
struct LayerDecl {
    LayerKind kind = LayerKind::Identity;
    int k = 1;
    int dilation = 1;
    int stride = 1;
    std::optional<long long> c;
    std::optional<long long> f;

    bool operator==(const LayerDecl&) const = default;
};

// One edge of a cell multigraph. Node indices refer to CellSpec::nodes.
struct CellEdge {
    int src = 0;
    int dst = 0;
    LayerKind kind = LayerKind::Identity;
    int k = 1;
    int dilation = 1;

    bool operator==(const CellEdge&) const = default;
};

// Cell multigraph. The first two nodes are the cell inputs (connected to
// the outputs of the previous and the one-before-previous cell); the last
// node is the cell output.
struct CellSpec {
    std::vector<std::string> nodes;
    std::vector<CellEdge> edges;

    bool operator==(const CellSpec&) const = default;
};

// A network is either a flat layer list or a stack of identical cells with
// per-cell channel widths, an optional preparatory block, optional periodic
// 2x2 maxpooling and an optional fully connected classifier.
struct NetworkSpec {
    InputShape input;
    bool cell_form = false;

    std::vector<LayerDecl> layers; // flat form

    CellSpec cell;
    int stack = 0;
    std::vector<long long> widths; // one per stacked cell
    int maxpool_every = 0;         // 0 = no pooling
    std::vector<LayerDecl> prep;
    std::optional<long long> classifier_f;

    bool operator==(const NetworkSpec&) const = default;
};

// Expanded layer with channel fields optionally bound to a tunable cell
// width: c = c_scale * width[c_var] when c_var >= 0 (same for f).
struct BoundLayer {
    LayerSpec proto;
    int c_var = -1;
    int f_var = -1;
    long long c_scale = 1;
    long long f_scale = 1;
};

struct ExpandedNetwork {
    std::vector<BoundLayer> layers;
    int num_vars = 0;
    std::vector<long long> declared_widths;
    InputShape input;
};

NetworkSpec parse_network(const std::string& text);
std::string serialize_network(const NetworkSpec& spec);

// Expands cells into a flat layer list with width bindings. Flat networks
// pass through with no bound variables. Shapes are not yet annotated.
ExpandedNetwork expand_bound(const NetworkSpec& spec);

// Flat, shape-annotated layer list at the declared widths.
std::vector<LayerSpec> expand_cells(const NetworkSpec& spec);

// Re-instantiates the expanded network at the given cell widths and
// annotates shapes. `widths` must have one entry per bound variable.
std::vector<LayerSpec> materialize(const ExpandedNetwork& net,
                                   const std::vector<long long>& widths);

// Annotates every layer with concrete h/w/b, resolves omitted channel
// counts and validates the channel chain. Throws ParseError on spatial
// underflow or channel mismatches.
void infer_shapes(std::vector<LayerSpec>& layers, const InputShape& input);

} // namespace sacost
