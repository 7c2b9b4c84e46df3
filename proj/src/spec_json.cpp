#include "eshift/spec_json.hpp"

#include <json.hpp>

#include "eshift/errors.hpp"

namespace eshift {

using nlohmann::json;

std::string norm_kind_name(NormKind kind) {
    switch (kind) {
        case NormKind::None: return "none";
        case NormKind::BatchNorm: return "bn";
        case NormKind::GroupNorm: return "gn";
        case NormKind::LayerNorm: return "ln";
        case NormKind::InstanceNorm: return "in";
    }
    return "none";
}

NormKind norm_kind_from_name(const std::string& name) {
    if (name == "none") return NormKind::None;
    if (name == "bn") return NormKind::BatchNorm;
    if (name == "gn") return NormKind::GroupNorm;
    if (name == "ln") return NormKind::LayerNorm;
    if (name == "in") return NormKind::InstanceNorm;
    throw ConfigError("unknown normalizer kind: " + name);
}

std::string block_kind_name(BlockKind kind) {
    switch (kind) {
        case BlockKind::Baseline: return "baseline";
        case BlockKind::P1: return "p1";
        case BlockKind::P2: return "p2";
        case BlockKind::P3: return "p3";
    }
    return "baseline";
}

BlockKind block_kind_from_name(const std::string& name) {
    if (name == "baseline") return BlockKind::Baseline;
    if (name == "p1") return BlockKind::P1;
    if (name == "p2") return BlockKind::P2;
    if (name == "p3") return BlockKind::P3;
    throw ConfigError("unknown block variant: " + name);
}

namespace {

json pattern_to_json(const NormPattern& pattern) {
    json arr = json::array();
    for (const auto& c : pattern) {
        json e;
        e["kind"] = norm_kind_name(c.kind);
        if (c.kind == NormKind::GroupNorm) e["groups"] = c.groups;
        arr.push_back(e);
    }
    return arr;
}

NormPattern pattern_from_json(const json& arr) {
    NormPattern p;
    for (const auto& e : arr) {
        NormChoice c;
        c.kind = norm_kind_from_name(e.at("kind").get<std::string>());
        c.groups = e.value("groups", 1u);
        p.push_back(c);
    }
    return p;
}

}  // namespace

std::string network_spec_to_json(const NetworkSpec& spec) {
    json j;
    j["alpha"] = spec.alpha;
    j["eps"] = spec.eps;
    j["affine"] = spec.affine;
    j["init_seed"] = spec.init_seed;
    switch (spec.arch) {
        case NetworkSpec::Arch::Mlp:
            j["arch"] = "mlp";
            j["mlp"] = {{"depth", spec.mlp.depth},
                        {"width", spec.mlp.width},
                        {"inputs", spec.mlp.inputs},
                        {"classes", spec.mlp.classes}};
            j["pattern"] = pattern_to_json(spec.pattern);
            break;
        case NetworkSpec::Arch::Cnn:
            j["arch"] = "cnn";
            j["cnn"] = {{"depth", spec.cnn.depth},
                        {"base_channels", spec.cnn.base_channels},
                        {"in_channels", spec.cnn.in_channels},
                        {"image_h", spec.cnn.image_h},
                        {"image_w", spec.cnn.image_w},
                        {"classes", spec.cnn.classes}};
            j["pattern"] = pattern_to_json(spec.pattern);
            break;
        case NetworkSpec::Arch::Residual: {
            j["arch"] = "residual";
            json variants = json::array();
            for (const auto& v : spec.residual.variants) {
                json e;
                e["kind"] = block_kind_name(v.kind);
                e["bfn"] = norm_kind_name(v.bfn.kind);
                e["groups"] = v.bfn.groups;
                variants.push_back(e);
            }
            j["residual"] = {{"blocks", spec.residual.blocks},
                             {"channels", spec.residual.channels},
                             {"classes", spec.residual.classes},
                             {"variants", variants}};
            break;
        }
    }
    return j.dump();
}

NetworkSpec network_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad network spec json: ") + e.what());
    }
    NetworkSpec spec;
    spec.alpha = j.at("alpha").get<double>();
    spec.eps = j.at("eps").get<double>();
    spec.affine = j.at("affine").get<bool>();
    spec.init_seed = j.at("init_seed").get<std::uint64_t>();
    const std::string arch = j.at("arch").get<std::string>();
    if (arch == "mlp") {
        spec.arch = NetworkSpec::Arch::Mlp;
        const auto& m = j.at("mlp");
        spec.mlp.depth = m.at("depth").get<std::size_t>();
        spec.mlp.width = m.at("width").get<std::size_t>();
        spec.mlp.inputs = m.at("inputs").get<std::size_t>();
        spec.mlp.classes = m.at("classes").get<std::size_t>();
        spec.pattern = pattern_from_json(j.at("pattern"));
    } else if (arch == "cnn") {
        spec.arch = NetworkSpec::Arch::Cnn;
        const auto& c = j.at("cnn");
        spec.cnn.depth = c.at("depth").get<std::size_t>();
        spec.cnn.base_channels = c.at("base_channels").get<std::size_t>();
        spec.cnn.in_channels = c.at("in_channels").get<std::size_t>();
        spec.cnn.image_h = c.at("image_h").get<std::size_t>();
        spec.cnn.image_w = c.at("image_w").get<std::size_t>();
        spec.cnn.classes = c.at("classes").get<std::size_t>();
        spec.pattern = pattern_from_json(j.at("pattern"));
    } else if (arch == "residual") {
        spec.arch = NetworkSpec::Arch::Residual;
        const auto& r = j.at("residual");
        spec.residual.blocks = r.at("blocks").get<std::size_t>();
        spec.residual.channels = r.at("channels").get<std::size_t>();
        spec.residual.classes = r.at("classes").get<std::size_t>();
        for (const auto& e : r.at("variants")) {
            BlockVariant v;
            v.kind = block_kind_from_name(e.at("kind").get<std::string>());
            v.bfn.kind = norm_kind_from_name(e.at("bfn").get<std::string>());
            v.bfn.groups = e.at("groups").get<std::size_t>();
            spec.residual.variants.push_back(v);
        }
    } else {
        throw ConfigError("unknown architecture: " + arch);
    }
    return spec;
}

}  // namespace eshift
