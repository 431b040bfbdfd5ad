// Command-line front end: latency/utilization estimation, tile-level
// simulation, channel optimization, LUT construction and Pareto metrics.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sacost/arch.hpp"
#include "sacost/hw.hpp"
#include "sacost/optim.hpp"
#include "sacost/sim.hpp"
#include "sacost/smooth.hpp"

using namespace sacost;
using nlohmann::json;

namespace {

enum class OutputFormat { Table, Csv, Structured };

OutputFormat format_from_name(const std::string& name) {
    if (name == "table") return OutputFormat::Table;
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Structured;
    throw ParseError("unknown output format '" + name + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << text;
}

NetworkSpec load_network(const std::string& path) {
    return parse_network(read_file(path));
}

HardwareConfig load_hw(const std::string& path) {
    if (path.empty()) return HardwareConfig{};
    return parse_hardware_config(read_file(path));
}

std::string format_time(double seconds) {
    char buf[64];
    if (seconds >= 1e-3)
        std::snprintf(buf, sizeof(buf), "%.3f ms", seconds * 1e3);
    else
        std::snprintf(buf, sizeof(buf), "%.3f us", seconds * 1e6);
    return buf;
}

std::string dims_of(const LayerSpec& l) {
    std::ostringstream ss;
    ss << l.c << "->" << l.f;
    return ss.str();
}

void print_cost_table(const std::vector<LayerSpec>& layers, const NetworkCost& cost) {
    std::printf("%-4s %-22s %-10s %-3s %-12s %-9s %-3s %14s %12s %12s %7s\n", "idx",
                "layer", "kind", "k", "channels", "hxw", "b", "macs", "cycles", "time",
                "util%");
    for (size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const auto& c = cost.layers[i];
        std::printf("%-4zu %-22s %-10s %-3d %-12s %4lldx%-4lld %-3lld %14llu %12llu %12s %7.1f\n",
                    i, l.label.empty() ? kind_name(l.kind) : l.label.c_str(),
                    kind_name(l.kind), l.k1, dims_of(l).c_str(), l.h, l.w, l.b, c.macs,
                    c.runtime_cycles, format_time(c.runtime_s).c_str(),
                    100.0 * c.utilization);
    }
    std::printf("total: cycles=%llu time=%s macs=%llu utilization=%.1f%%\n",
                cost.total_cycles, format_time(cost.total_s).c_str(), cost.total_macs,
                100.0 * cost.utilization);
}

void print_cost_csv(const std::vector<LayerSpec>& layers, const NetworkCost& cost) {
    std::printf("idx,layer,kind,k,c,f,h,w,b,macs,cycles,runtime_s,utilization\n");
    for (size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const auto& c = cost.layers[i];
        std::printf("%zu,%s,%s,%d,%lld,%lld,%lld,%lld,%lld,%llu,%llu,%.9e,%.9f\n", i,
                    l.label.empty() ? kind_name(l.kind) : l.label.c_str(),
                    kind_name(l.kind), l.k1, l.c, l.f, l.h, l.w, l.b, c.macs,
                    c.runtime_cycles, c.runtime_s, c.utilization);
    }
    std::printf("total,,,,,,,,,%llu,%llu,%.9e,%.9f\n", cost.total_macs, cost.total_cycles,
                cost.total_s, cost.utilization);
}

json cost_to_json(const std::vector<LayerSpec>& layers, const NetworkCost& cost) {
    json doc;
    doc["layers"] = json::array();
    for (size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        const auto& c = cost.layers[i];
        doc["layers"].push_back({{"idx", i},
                                 {"layer", l.label},
                                 {"kind", kind_name(l.kind)},
                                 {"k", l.k1},
                                 {"c", l.c},
                                 {"f", l.f},
                                 {"h", l.h},
                                 {"w", l.w},
                                 {"b", l.b},
                                 {"macs", c.macs},
                                 {"cycles", c.runtime_cycles},
                                 {"runtime_s", c.runtime_s},
                                 {"utilization", c.utilization}});
    }
    doc["total"] = {{"cycles", cost.total_cycles},
                    {"macs", cost.total_macs},
                    {"runtime_s", cost.total_s},
                    {"utilization", cost.utilization}};
    return doc;
}

unsigned long long sim_oracle(const LayerSpec& l, const HardwareConfig& hw) {
    return simulate_layer(l, hw).total_cycles;
}

int run_estimate(const std::string& net_path, const std::string& hw_path,
                 const std::string& model, const std::string& lut_path,
                 const std::string& format) {
    auto spec = load_network(net_path);
    auto hw = load_hw(hw_path);
    auto layers = expand_cells(spec);
    const auto kind = cost_model_from_name(model);

    std::optional<BlackboxLut> lut;
    if (kind == CostModelKind::Blackbox) {
        if (lut_path.empty()) throw ModelError("blackbox model requires --lut");
        lut = BlackboxLut::deserialize(read_file(lut_path));
    }
    auto cost = network_cost(layers, hw, kind, lut ? &*lut : nullptr);

    switch (format_from_name(format)) {
        case OutputFormat::Table: print_cost_table(layers, cost); break;
        case OutputFormat::Csv: print_cost_csv(layers, cost); break;
        case OutputFormat::Structured:
            std::printf("%s\n", cost_to_json(layers, cost).dump(2).c_str());
            break;
    }
    return 0;
}

int run_simulate(const std::string& net_path, const std::string& hw_path,
                 const std::string& trace_path, const std::string& format) {
    auto spec = load_network(net_path);
    auto hw = load_hw(hw_path);
    auto layers = expand_cells(spec);

    std::vector<TileTraceRecord> trace;
    auto result = simulate_network(layers, hw, trace_path.empty() ? nullptr : &trace);

    if (!trace_path.empty()) {
        std::ostringstream ss;
        for (const auto& r : trace)
            ss << r.layer << ',' << r.tile_i << ',' << r.tile_j << ',' << r.start_cycle
               << ',' << r.end_cycle << ',' << r.bytes_in << '\n';
        write_file(trace_path, ss.str());
    }

    switch (format_from_name(format)) {
        case OutputFormat::Table: {
            std::printf("%-4s %-22s %-10s %12s %12s %12s %7s %7s\n", "idx", "layer", "kind",
                        "compute", "dram", "total", "bound", "util%");
            for (size_t i = 0; i < layers.size(); ++i) {
                const auto& l = layers[i];
                const auto& r = result.layers[i];
                std::printf("%-4zu %-22s %-10s %12llu %12llu %12llu %7s %7.1f\n", i,
                            l.label.empty() ? kind_name(l.kind) : l.label.c_str(),
                            kind_name(l.kind), r.compute_cycles, r.dram_cycles,
                            r.total_cycles, r.memory_bound ? "memory" : "compute",
                            100.0 * r.utilization);
            }
            std::printf("total: cycles=%llu time=%s utilization=%.1f%%\n",
                        result.total.total_cycles,
                        format_time(static_cast<double>(result.total.total_cycles) /
                                    hw.clock_hz)
                            .c_str(),
                        100.0 * result.total.utilization);
            break;
        }
        case OutputFormat::Csv: {
            std::printf(
                "idx,layer,kind,compute_cycles,dram_cycles,total_cycles,bound,utilization\n");
            for (size_t i = 0; i < layers.size(); ++i) {
                const auto& l = layers[i];
                const auto& r = result.layers[i];
                std::printf("%zu,%s,%s,%llu,%llu,%llu,%s,%.9f\n", i,
                            l.label.empty() ? kind_name(l.kind) : l.label.c_str(),
                            kind_name(l.kind), r.compute_cycles, r.dram_cycles,
                            r.total_cycles, r.memory_bound ? "memory" : "compute",
                            r.utilization);
            }
            std::printf("total,,,%llu,%llu,%llu,%s,%.9f\n", result.total.compute_cycles,
                        result.total.dram_cycles, result.total.total_cycles,
                        result.total.memory_bound ? "memory" : "compute",
                        result.total.utilization);
            break;
        }
        case OutputFormat::Structured: {
            json doc;
            doc["layers"] = json::array();
            for (size_t i = 0; i < layers.size(); ++i) {
                const auto& r = result.layers[i];
                doc["layers"].push_back({{"idx", i},
                                         {"layer", layers[i].label},
                                         {"compute_cycles", r.compute_cycles},
                                         {"dram_cycles", r.dram_cycles},
                                         {"total_cycles", r.total_cycles},
                                         {"memory_bound", r.memory_bound},
                                         {"utilization", r.utilization}});
            }
            doc["total"] = {{"total_cycles", result.total.total_cycles},
                            {"compute_cycles", result.total.compute_cycles},
                            {"dram_cycles", result.total.dram_cycles},
                            {"utilization", result.total.utilization}};
            std::printf("%s\n", doc.dump(2).c_str());
            break;
        }
    }
    return 0;
}

json widths_json(const std::vector<double>& w) {
    json a = json::array();
    for (double x : w) a.push_back(x);
    return a;
}

int run_optimize(const std::string& net_path, const std::string& hw_path, double lambda,
                 double beta, std::optional<unsigned long long> seed, double lr, int iters,
                 double tol, long long min_c, long long max_c, long long step,
                 const std::string& report_path) {
    if (lambda < 0 || beta < 0) throw ParseError("lambda and beta must be >= 0");
    auto spec = load_network(net_path);
    auto hw = load_hw(hw_path);

    ChannelSearchSpace space{min_c, max_c, step};
    OptimConfig cfg;
    cfg.loss = {lambda, beta};
    cfg.seed = seed;
    cfg.learning_rate = lr;
    cfg.max_iterations = iters;
    cfg.tolerance = tol;

    auto r = optimize_channels(spec, hw, space, cfg);

    std::printf("initial widths:");
    for (double w : r.initial_widths) std::printf(" %.2f", w);
    std::printf("\nfinal widths (continuous):");
    for (double w : r.final_widths) std::printf(" %.2f", w);
    std::printf("\nprojected widths:");
    for (long long w : r.projected_widths) std::printf(" %lld", w);
    std::printf("\ninitial: runtime=%s utilization=%.1f%% loss=%.6g\n",
                format_time(r.initial_cost.total_s).c_str(),
                100.0 * r.initial_cost.utilization, r.initial_hard_loss);
    std::printf("projected: runtime=%s utilization=%.1f%% loss=%.6g\n",
                format_time(r.projected_cost.total_s).c_str(),
                100.0 * r.projected_cost.utilization, r.projected_hard_loss);
    std::printf("iterations: %zu\n", r.trajectory.size());

    if (!report_path.empty()) {
        json doc;
        doc["lambda"] = lambda;
        doc["beta"] = beta;
        if (seed) doc["seed"] = *seed;
        doc["search_space"] = {{"min_c", min_c}, {"max_c", max_c}, {"step", step}};
        doc["initial_widths"] = widths_json(r.initial_widths);
        doc["final_widths"] = widths_json(r.final_widths);
        doc["projected_widths"] = r.projected_widths;
        doc["trajectory"] = json::array();
        for (const auto& t : r.trajectory)
            doc["trajectory"].push_back(
                {{"iteration", t.iteration}, {"loss", t.loss}, {"grad_norm", t.grad_norm}});
        doc["initial"] = {{"cycles", r.initial_cost.total_cycles},
                          {"runtime_s", r.initial_cost.total_s},
                          {"utilization", r.initial_cost.utilization},
                          {"loss", r.initial_hard_loss}};
        doc["projected"] = {{"cycles", r.projected_cost.total_cycles},
                            {"runtime_s", r.projected_cost.total_s},
                            {"utilization", r.projected_cost.utilization},
                            {"loss", r.projected_hard_loss}};
        write_file(report_path, doc.dump(2) + "\n");
    }
    return 0;
}

int run_lut_build(const std::string& hw_path, const std::string& net_path,
                  const std::vector<std::string>& dims, long long min_c, long long max_c,
                  const std::string& out_path) {
    auto hw = load_hw(hw_path);
    std::vector<LayerSpec> representative;

    if (!net_path.empty()) {
        auto spec = load_network(net_path);
        representative = expand_cells(spec);
    }
    for (const auto& d : dims) {
        long long h = 0, w = 0, b = 0;
        char comma = ',';
        std::istringstream ss(d);
        if (!(ss >> h >> comma >> w >> comma >> b) || h < 1 || w < 1 || b < 1)
            throw ParseError("bad --dims value '" + d + "' (expected h,w,b)");
        for (const auto& op : default_op_set()) {
            if (op.kind == LayerKind::Identity || op.kind == LayerKind::Zero) continue;
            LayerSpec l;
            l.kind = op.kind;
            l.k1 = l.k2 = op.k;
            l.dilation = op.dilation;
            l.c = l.f = min_c;
            l.h = h;
            l.w = w;
            l.b = b;
            representative.push_back(l);
        }
        LayerSpec fc;
        fc.kind = LayerKind::FullyConnected;
        fc.c = fc.f = min_c;
        fc.h = fc.w = 1;
        fc.b = b;
        representative.push_back(fc);
    }
    if (representative.empty())
        throw ParseError("lut build requires --network or at least one --dims");

    auto lut = build_blackbox_lut(representative, hw, min_c, max_c, sim_oracle);
    write_file(out_path, lut.serialize() + "\n");
    std::printf("wrote %zu entries to %s\n", lut.size(), out_path.c_str());
    return 0;
}

int run_hypervolume(const std::string& points_path) {
    std::istringstream in(read_file(points_path));
    std::vector<ParetoPoint> points;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        for (auto& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ls(line);
        double runtime = 0, score = 0;
        if (!(ls >> runtime >> score)) {
            if (lineno == 1) continue; // header row
            throw ParseError("bad points file line " + std::to_string(lineno));
        }
        points.push_back({runtime, score});
    }
    if (points.empty()) throw ParseError("points file has no data rows");

    auto front = pareto_front(points);
    std::printf("pareto front:");
    for (const auto& p : front) std::printf(" (%g, %g)", p.runtime, p.score);
    std::printf("\nhypervolume: %.6g\n", hypervolume(points));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Runtime and utilization modeling for systolic-array accelerators"};
    app.require_subcommand(1);

    std::string net_path, hw_path, lut_path, model = "hard", format = "table";
    std::string trace_path, report_path, out_path, points_path;
    std::vector<std::string> dims;
    double lambda = 1.0, beta = 1.0, lr = 5000.0, tol = 1e-9;
    long long min_c = 64, max_c = 280, step = 8;
    int iters = 400;
    std::optional<unsigned long long> seed;
    unsigned long long seed_value = 0;

    auto* est = app.add_subcommand("estimate", "Analytical per-layer cost of a network");
    est->add_option("--network", net_path, "network description file")->required();
    est->add_option("--hw", hw_path, "hardware config file (defaults when omitted)");
    est->add_option("--model", model, "hard|flops|roofline|blackbox");
    est->add_option("--lut", lut_path, "lookup table file (blackbox model)");
    est->add_option("--format", format, "table|csv|json");

    auto* sim = app.add_subcommand("simulate", "Tile-level simulation of a network");
    sim->add_option("--network", net_path, "network description file")->required();
    sim->add_option("--hw", hw_path, "hardware config file");
    sim->add_option("--trace", trace_path, "write per-tile trace records to this file");
    sim->add_option("--format", format, "table|csv|json");

    auto* opt = app.add_subcommand("optimize", "Gradient-based channel width search");
    opt->add_option("--network", net_path, "network description file")->required();
    opt->add_option("--hw", hw_path, "hardware config file");
    opt->add_option("--lambda", lambda, "latency coefficient (>= 0)");
    opt->add_option("--beta", beta, "utilization coefficient (>= 0)");
    auto* seed_opt = opt->add_option("--seed", seed_value, "randomize initial widths");
    opt->add_option("--lr", lr, "initial learning rate");
    opt->add_option("--iters", iters, "iteration cap");
    opt->add_option("--tol", tol, "convergence tolerance on loss decrease");
    opt->add_option("--min-c", min_c, "channel grid lower bound");
    opt->add_option("--max-c", max_c, "channel grid upper bound");
    opt->add_option("--step", step, "channel grid step");
    opt->add_option("--report", report_path, "write the full optimization report here");

    auto* lut = app.add_subcommand("lut", "Latency lookup table operations");
    auto* lut_build = lut->add_subcommand("build", "Simulate the layer grid into a LUT");
    lut_build->add_option("--hw", hw_path, "hardware config file");
    lut_build->add_option("--network", net_path, "take layer shapes from this network");
    lut_build->add_option("--dims", dims, "h,w,b shape to cover (repeatable)");
    lut_build->add_option("--min-c", min_c, "channel grid lower bound");
    lut_build->add_option("--max-c", max_c, "channel grid upper bound");
    lut_build->add_option("--out", out_path, "output file")->required();

    auto* hv =
        app.add_subcommand("hypervolume", "Pareto front metric for (runtime, score) points");
    hv->add_option("--points", points_path, "two-column csv: runtime_ms,accuracy_pct")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*est) return run_estimate(net_path, hw_path, model, lut_path, format);
        if (*sim) return run_simulate(net_path, hw_path, trace_path, format);
        if (*opt) {
            if (seed_opt->count() > 0) seed = seed_value;
            return run_optimize(net_path, hw_path, lambda, beta, seed, lr, iters, tol,
                                min_c, max_c, step, report_path);
        }
        if (*lut_build) return run_lut_build(hw_path, net_path, dims, min_c, max_c, out_path);
        if (*lut) {
            std::fprintf(stderr, "error: lut requires a subcommand (build)\n");
            return 1;
        }
        if (*hv) return run_hypervolume(points_path);
    } catch (const SimError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ModelError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const OptimError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
