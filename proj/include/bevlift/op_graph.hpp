#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bevlift/aggregation.hpp"
#include "bevlift/errors.hpp"
#include "bevlift/geometry.hpp"
#include "bevlift/index_graph.hpp"
#include "bevlift/stacks.hpp"

namespace bevlift {

// The whitelisted primitive set. Anything else in a graph is a validation
// violation; the lowering below can only ever emit these.
inline const std::vector<std::string>& op_whitelist() {
    static const std::vector<std::string> kinds = {
        "INPUT", "CONST_INDEX", "CONST_TENSOR", "GATHER", "MUL", "RESHAPE", "OUTPUT",
    };
    return kinds;
}

using AttrValue = std::variant<int64_t, std::string, std::vector<int64_t>>;

struct OpNode {
    uint32_t id = 0;
    std::string kind;
    std::vector<uint32_t> inputs;
    std::map<std::string, AttrValue> attrs;

    bool operator==(const OpNode&) const = default;
};

/// Stage-2 aggregation as an explicit operator graph. The INPUT node carries
/// the declared tensor signature; the CONST_INDEX node carries the two
/// synchronized offset arrays baked from an IndexGraph (persisted as a
/// reference to the FBLT sidecar, never inlined); gathers select their
/// source tensor and offset array by attribute.
struct OpGraph {
    uint32_t version = 1;
    std::vector<int64_t> feature_dims;  // [N, H_img, W_img, C]; C may be -1
    std::vector<int64_t> depth_dims;    // [N, D, H_img, W_img]; empty without depth
    std::vector<OpNode> nodes;          // topological order
    uint32_t output_id = 0;

    // Baked constants.
    std::vector<uint32_t> spatial_offsets;
    std::vector<uint32_t> depth_offsets;  // empty without depth
    int64_t spatial_pad = 0;
    int64_t depth_pad = 0;
    std::string lut_ref;      // sidecar FBLT path used on export
    uint64_t lut_fingerprint = 0;

    bool with_depth() const { return !depth_dims.empty(); }

    bool operator==(const OpGraph&) const = default;
};

/// Lowers an index graph to the operator pipeline. Emits
/// INPUT -> CONST_INDEX -> GATHER -> RESHAPE -> OUTPUT (5 nodes); with depth
/// the gathered weights feed one extra GATHER and a broadcast MUL (7 nodes).
/// `channels` of -1 leaves the channel dimension to be inferred at bind time.
inline OpGraph lower(const IndexGraph& g, const VoxelGrid& grid, bool with_depth,
                     int64_t channels = -1, std::string lut_ref = "") {
    check_grid_dims(g, grid);
    if (channels == 0 || channels < -1) {
        throw ArgumentError("lower: channels must be positive or -1");
    }

    OpGraph out;
    out.feature_dims = {int64_t(g.num_cams), int64_t(g.img_h), int64_t(g.img_w), channels};
    if (with_depth) {
        out.depth_dims = {int64_t(g.num_cams), int64_t(g.depth_bins), int64_t(g.img_h),
                          int64_t(g.img_w)};
    }
    out.spatial_offsets = g.spatial_offsets;
    if (with_depth) {
        out.depth_offsets = g.depth_offsets;
    }
    out.spatial_pad = g.spatial_pad_offset();
    out.depth_pad = with_depth ? int64_t(g.depth_pad_offset()) : 0;
    out.lut_ref = std::move(lut_ref);
    out.lut_fingerprint = g.fingerprint;

    const int64_t count = int64_t(g.num_voxels());

    OpNode input{0, "INPUT", {}, {}};
    input.attrs["features_shape"] = out.feature_dims;
    if (with_depth) {
        input.attrs["depth_shape"] = out.depth_dims;
    }
    out.nodes.push_back(std::move(input));

    OpNode consts{1, "CONST_INDEX", {}, {}};
    consts.attrs["count"] = count;
    consts.attrs["spatial_pad"] = out.spatial_pad;
    if (with_depth) {
        consts.attrs["depth_pad"] = out.depth_pad;
    }
    out.nodes.push_back(std::move(consts));

    OpNode gather_feat{2, "GATHER", {0, 1}, {}};
    gather_feat.attrs["tensor"] = std::string("features");
    gather_feat.attrs["index"] = std::string("spatial");
    out.nodes.push_back(std::move(gather_feat));
    uint32_t tail = 2;

    if (with_depth) {
        OpNode gather_depth{3, "GATHER", {0, 1}, {}};
        gather_depth.attrs["tensor"] = std::string("depth");
        gather_depth.attrs["index"] = std::string("depth");
        out.nodes.push_back(std::move(gather_depth));

        OpNode mul{4, "MUL", {2, 3}, {}};
        mul.attrs["broadcast"] = std::string("channel");
        out.nodes.push_back(std::move(mul));
        tail = 4;
    }

    const uint32_t reshape_id = tail + 1;
    OpNode reshape{reshape_id, "RESHAPE", {tail}, {}};
    reshape.attrs["shape"] = std::vector<int64_t>{int64_t(grid.dim_z), int64_t(grid.dim_h),
                                                  int64_t(grid.dim_w), channels};
    out.nodes.push_back(std::move(reshape));

    OpNode output{reshape_id + 1, "OUTPUT", {reshape_id}, {}};
    out.nodes.push_back(std::move(output));
    out.output_id = reshape_id + 1;
    return out;
}

struct Violation {
    std::string kind;  // "whitelist" | "structure" | "bounds"
    int64_t node_id = -1;
    std::string message;

    bool operator==(const Violation&) const = default;
};

/// Checks the whitelist, DAG shape, and that every baked index is in bounds
/// for the declared input shapes. Violations are data, not exceptions.
inline std::vector<Violation> validate(const OpGraph& graph) {
    std::vector<Violation> out;
    const auto& whitelist = op_whitelist();

    size_t output_count = 0;
    for (size_t i = 0; i < graph.nodes.size(); ++i) {
        const OpNode& node = graph.nodes[i];
        if (node.id != i) {
            out.push_back({"structure", int64_t(node.id),
                           "node ids must be dense and in topological order"});
        }
        bool whitelisted = false;
        for (const auto& kind : whitelist) {
            if (node.kind == kind) {
                whitelisted = true;
                break;
            }
        }
        if (!whitelisted) {
            out.push_back({"whitelist", int64_t(node.id),
                           "node kind '" + node.kind + "' is not a whitelisted primitive"});
        }
        for (uint32_t input : node.inputs) {
            if (input >= node.id) {
                out.push_back({"structure", int64_t(node.id),
                               "input " + std::to_string(input) +
                                   " does not precede the node (graph must be a DAG in "
                                   "topological order)"});
            }
        }
        const auto has_string_attr = [&node](const char* key) {
            const auto it = node.attrs.find(key);
            return it != node.attrs.end() && std::holds_alternative<std::string>(it->second);
        };
        if (node.kind == "GATHER" &&
            (node.inputs.size() != 2 || !has_string_attr("tensor") ||
             !has_string_attr("index"))) {
            out.push_back({"structure", int64_t(node.id),
                           "GATHER needs two inputs and tensor/index attributes"});
        }
        if (node.kind == "MUL" && node.inputs.size() != 2) {
            out.push_back({"structure", int64_t(node.id), "MUL needs exactly two inputs"});
        }
        if (node.kind == "RESHAPE") {
            const auto it = node.attrs.find("shape");
            if (node.inputs.size() != 1 || it == node.attrs.end() ||
                !std::holds_alternative<std::vector<int64_t>>(it->second)) {
                out.push_back({"structure", int64_t(node.id),
                               "RESHAPE needs one input and a shape attribute"});
            }
        }
        if (node.kind == "OUTPUT") {
            ++output_count;
            if (node.inputs.size() != 1) {
                out.push_back({"structure", int64_t(node.id), "OUTPUT needs exactly one input"});
            }
        }
    }
    if (output_count != 1) {
        out.push_back({"structure", -1, "graph must contain exactly one OUTPUT node, found " +
                                            std::to_string(output_count)});
    } else if (graph.output_id >= graph.nodes.size() ||
               graph.nodes[graph.output_id].kind != "OUTPUT") {
        out.push_back({"structure", int64_t(graph.output_id),
                       "declared output id does not name the OUTPUT node"});
    }

    if (graph.feature_dims.size() != 4) {
        out.push_back({"structure", -1, "feature input signature must have rank 4"});
        return out;
    }

    // Index bounds against the declared shapes. The padding slot (== pad) is
    // the largest legal offset.
    const int64_t spatial_pad =
        graph.feature_dims[0] * graph.feature_dims[1] * graph.feature_dims[2];
    if (graph.spatial_pad != spatial_pad) {
        out.push_back({"structure", -1, "spatial padding slot does not match the declared "
                                        "feature shape"});
    }
    uint64_t bad = 0;
    uint32_t first_bad_offset = 0;
    for (uint32_t offset : graph.spatial_offsets) {
        if (int64_t(offset) > spatial_pad) {
            if (bad == 0) {
                first_bad_offset = offset;
            }
            ++bad;
        }
    }
    if (bad > 0) {
        out.push_back({"bounds", -1,
                       "spatial index constant out of bounds for the declared feature shape (" +
                           std::to_string(bad) + " offending, first " +
                           std::to_string(first_bad_offset) + ")"});
    }
    if (graph.with_depth()) {
        if (graph.depth_dims.size() != 4) {
            out.push_back({"structure", -1, "depth input signature must have rank 4"});
            return out;
        }
        const int64_t depth_pad = graph.depth_dims[0] * graph.depth_dims[1] *
                                  graph.depth_dims[2] * graph.depth_dims[3];
        if (graph.depth_pad != depth_pad) {
            out.push_back({"structure", -1, "depth padding slot does not match the declared "
                                            "depth shape"});
        }
        bad = 0;
        for (uint32_t offset : graph.depth_offsets) {
            if (int64_t(offset) > depth_pad) {
                if (bad == 0) {
                    first_bad_offset = offset;
                }
                ++bad;
            }
        }
        if (bad > 0) {
            out.push_back({"bounds", -1,
                           "depth index constant out of bounds for the declared depth shape (" +
                               std::to_string(bad) + " offending, first " +
                               std::to_string(first_bad_offset) + ")"});
        }
    }
    return out;
}

/// Reference executor. Walks the node list in order with the obvious
/// semantics; refuses to run a graph that fails validation. Output matches
/// the aggregation pipeline bit for bit.
inline BEVVolume interpret(const OpGraph& graph, const FeatureStack& features,
                           const DepthStack* depth = nullptr) {
    const std::vector<Violation> violations = validate(graph);
    if (!violations.empty()) {
        std::string msg = "refusing to interpret an invalid graph:";
        for (const Violation& v : violations) {
            msg += "\n  [" + v.kind + "] " + v.message;
        }
        throw ValidationError(msg);
    }

    const auto& fd = graph.feature_dims;
    if (int64_t(features.num_cams) != fd[0] || int64_t(features.height) != fd[1] ||
        int64_t(features.width) != fd[2] ||
        (fd[3] != -1 && int64_t(features.channels) != fd[3])) {
        throw ConfigError("interpret: feature stack does not match the graph signature");
    }
    if (graph.with_depth()) {
        if (depth == nullptr) {
            throw ConfigError("interpret: graph declares a depth input but none was bound");
        }
        const auto& dd = graph.depth_dims;
        if (int64_t(depth->num_cams) != dd[0] || int64_t(depth->num_bins) != dd[1] ||
            int64_t(depth->height) != dd[2] || int64_t(depth->width) != dd[3]) {
            throw ConfigError("interpret: depth stack does not match the graph signature");
        }
    }

    struct Value {
        std::vector<float> buf;
        uint64_t rows = 0;
        uint32_t cols = 0;
    };
    std::map<uint32_t, Value> values;
    std::vector<int64_t> out_shape;

    const uint64_t count = graph.spatial_offsets.size();
    const uint32_t channels = features.channels;

    for (const OpNode& node : graph.nodes) {
        if (node.kind == "INPUT" || node.kind == "CONST_INDEX" || node.kind == "CONST_TENSOR") {
            continue;
        }
        if (node.kind == "GATHER") {
            const std::string& tensor = std::get<std::string>(node.attrs.at("tensor"));
            Value v;
            if (tensor == "features") {
                v.rows = count;
                v.cols = channels;
                v.buf.resize(count * channels);
                for (uint64_t i = 0; i < count; ++i) {
                    std::memcpy(v.buf.data() + i * channels,
                                features.row(graph.spatial_offsets[i]),
                                size_t(channels) * sizeof(float));
                }
            } else if (tensor == "depth") {
                v.rows = count;
                v.cols = 1;
                v.buf.resize(count);
                for (uint64_t i = 0; i < count; ++i) {
                    v.buf[i] = depth->data[graph.depth_offsets[i]];
                }
            } else {
                throw ValidationError("interpret: unknown gather source '" + tensor + "'");
            }
            values[node.id] = std::move(v);
        } else if (node.kind == "MUL") {
            Value a = std::move(values.at(node.inputs.at(0)));
            const Value& b = values.at(node.inputs.at(1));
            if (a.rows != b.rows || b.cols != 1) {
                throw ConfigError("interpret: MUL expects [rows, C] * [rows, 1]");
            }
            for (uint64_t i = 0; i < a.rows; ++i) {
                const float w = b.buf[i];
                float* row = a.buf.data() + i * a.cols;
                for (uint32_t c = 0; c < a.cols; ++c) {
                    row[c] *= w;
                }
            }
            values[node.id] = std::move(a);
        } else if (node.kind == "RESHAPE") {
            Value v = std::move(values.at(node.inputs.at(0)));
            out_shape = std::get<std::vector<int64_t>>(node.attrs.at("shape"));
            values[node.id] = std::move(v);
        } else if (node.kind == "OUTPUT") {
            Value v = std::move(values.at(node.inputs.at(0)));
            if (out_shape.size() != 4) {
                throw ConfigError("interpret: OUTPUT requires a preceding rank-4 RESHAPE");
            }
            BEVVolume volume;
            volume.dim_z = uint32_t(out_shape[0]);
            volume.dim_h = uint32_t(out_shape[1]);
            volume.dim_w = uint32_t(out_shape[2]);
            volume.channels = out_shape[3] == -1 ? v.cols : uint32_t(out_shape[3]);
            if (uint64_t(volume.dim_z) * volume.dim_h * volume.dim_w * volume.channels !=
                v.buf.size()) {
                throw ConfigError("interpret: reshape target does not match the element count");
            }
            volume.data = std::move(v.buf);
            return volume;
        }
    }
    throw ValidationError("interpret: graph has no OUTPUT node");
}

// ---------------------------------------------------------------------------
// Graph text format: JSON with {version, inputs[], nodes[], output,
// constants}; the offset arrays live in the referenced FBLT sidecar.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json attr_to_json(const AttrValue& v) {
    if (std::holds_alternative<int64_t>(v)) {
        return std::get<int64_t>(v);
    }
    if (std::holds_alternative<std::string>(v)) {
        return std::get<std::string>(v);
    }
    return std::get<std::vector<int64_t>>(v);
}

inline AttrValue attr_from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) {
        return j.get<int64_t>();
    }
    if (j.is_string()) {
        return j.get<std::string>();
    }
    if (j.is_array()) {
        return j.get<std::vector<int64_t>>();
    }
    throw FormatError("op graph: unsupported attribute type");
}

}  // namespace detail

/// Deterministic textual form: identical graphs export identical bytes.
inline std::string export_graph(const OpGraph& graph) {
    if (graph.lut_ref.empty()) {
        throw ArgumentError("export_graph: graph needs a LUT sidecar reference (constants are "
                            "not inlined)");
    }
    nlohmann::ordered_json j;
    j["version"] = graph.version;
    j["inputs"] = nlohmann::ordered_json::array();
    {
        nlohmann::ordered_json input;
        input["name"] = "features";
        input["dims"] = graph.feature_dims;
        j["inputs"].push_back(std::move(input));
    }
    if (graph.with_depth()) {
        nlohmann::ordered_json input;
        input["name"] = "depth";
        input["dims"] = graph.depth_dims;
        j["inputs"].push_back(std::move(input));
    }
    j["nodes"] = nlohmann::ordered_json::array();
    for (const OpNode& node : graph.nodes) {
        nlohmann::ordered_json nj;
        nj["id"] = node.id;
        nj["kind"] = node.kind;
        nj["inputs"] = node.inputs;
        nj["attrs"] = nlohmann::ordered_json::object();
        for (const auto& [key, value] : node.attrs) {
            nj["attrs"][key] = detail::attr_to_json(value);
        }
        j["nodes"].push_back(std::move(nj));
    }
    j["output"] = graph.output_id;
    j["constants"]["lut"] = graph.lut_ref;
    j["constants"]["fingerprint"] = graph.lut_fingerprint;
    return j.dump(2) + "\n";
}

/// Parses an exported graph and reloads its baked constants from the FBLT
/// sidecar (resolved against `base_dir` when the reference is relative).
inline OpGraph parse_graph(const std::string& text, const std::string& base_dir = ".") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("op graph: ") + e.what());
    }
    OpGraph graph;
    try {
        graph.version = j.at("version").get<uint32_t>();
        for (const auto& input : j.at("inputs")) {
            const std::string name = input.at("name").get<std::string>();
            if (name == "features") {
                graph.feature_dims = input.at("dims").get<std::vector<int64_t>>();
            } else if (name == "depth") {
                graph.depth_dims = input.at("dims").get<std::vector<int64_t>>();
            } else {
                throw FormatError("op graph: unknown input '" + name + "'");
            }
        }
        for (const auto& nj : j.at("nodes")) {
            OpNode node;
            node.id = nj.at("id").get<uint32_t>();
            node.kind = nj.at("kind").get<std::string>();
            node.inputs = nj.at("inputs").get<std::vector<uint32_t>>();
            for (const auto& [key, value] : nj.at("attrs").items()) {
                node.attrs[key] = detail::attr_from_json(value);
            }
            graph.nodes.push_back(std::move(node));
        }
        graph.output_id = j.at("output").get<uint32_t>();
        graph.lut_ref = j.at("constants").at("lut").get<std::string>();
        graph.lut_fingerprint = j.at("constants").at("fingerprint").get<uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("op graph: ") + e.what());
    }

    std::filesystem::path lut_path(graph.lut_ref);
    if (lut_path.is_relative()) {
        lut_path = std::filesystem::path(base_dir) / lut_path;
    }
    const IndexGraph lut = load_index_graph(lut_path.string());
    if (lut.fingerprint != graph.lut_fingerprint) {
        throw FingerprintError("op graph: sidecar LUT fingerprint does not match the graph");
    }
    graph.spatial_offsets = lut.spatial_offsets;
    graph.spatial_pad = lut.spatial_pad_offset();
    if (graph.with_depth()) {
        graph.depth_offsets = lut.depth_offsets;
        graph.depth_pad = lut.depth_pad_offset();
    }
    if (graph.feature_dims.size() == 4 &&
        int64_t(lut.num_voxels()) != int64_t(graph.spatial_offsets.size())) {
        throw FormatError("op graph: sidecar LUT voxel count mismatch");
    }
    return graph;
}

inline void save_graph(const std::string& path, const OpGraph& graph) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot open for writing: " + path);
    }
    out << export_graph(graph);
}

inline OpGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open: " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_graph(text, std::filesystem::path(path).parent_path().string());
}

}  // namespace bevlift
