#include "tokred/arch.hpp"

#include <algorithm>
#include <stdexcept>

namespace tokred {

char layer_kind_code(LayerKind k) {
    switch (k) {
        case LayerKind::Attention: return 'A';
        case LayerKind::Mamba: return 'M';
        case LayerKind::Mlp: return 'F';
    }
    return '?';
}

LayerKind layer_kind_from_code(char c) {
    switch (c) {
        case 'A': return LayerKind::Attention;
        case 'M': return LayerKind::Mamba;
        case 'F': return LayerKind::Mlp;
        default: throw std::invalid_argument(std::string("unknown layer kind code: ") + c);
    }
}

void ArchitectureSpec::validate() const {
    if (num_layers <= 0 || static_cast<int>(layer_kinds.size()) != num_layers)
        throw std::invalid_argument("layer_kinds length must equal num_layers");
    if (hidden_dim <= 0) throw std::invalid_argument("hidden_dim must be positive");
    if (attn_heads <= 0 || attn_head_dim <= 0 || attn_heads * attn_head_dim != hidden_dim)
        throw std::invalid_argument("attn_heads * attn_head_dim must equal hidden_dim");
    if (kv_heads <= 0 || attn_heads % kv_heads != 0)
        throw std::invalid_argument("attn_heads must be divisible by kv_heads");
    if (mamba_heads <= 0 || mamba_head_dim <= 0 || mamba_heads * mamba_head_dim != hidden_dim)
        throw std::invalid_argument("mamba_heads * mamba_head_dim must equal hidden_dim");
    if (mamba_groups <= 0 || mamba_heads % mamba_groups != 0)
        throw std::invalid_argument("mamba_heads must be divisible by mamba_groups");
    if (state_dim <= 0) throw std::invalid_argument("state_dim must be positive");
    if (mlp_hidden_dim <= 0) throw std::invalid_argument("mlp_hidden_dim must be positive");
}

std::vector<int> ArchitectureSpec::layers_of(LayerKind kind) const {
    std::vector<int> out;
    for (int i = 0; i < num_layers; ++i)
        if (layer_kinds[i] == kind) out.push_back(i);
    return out;
}

int ArchitectureSpec::count_of(LayerKind kind) const {
    return static_cast<int>(std::count(layer_kinds.begin(), layer_kinds.end(), kind));
}

namespace {

// Non-attention positions alternate Mamba/MLP starting with Mamba, so the
// first layer of a hybrid stack is always a Mamba layer.
std::vector<LayerKind> hybrid_kinds(int num_layers, const std::vector<int>& attn_positions) {
    std::vector<LayerKind> kinds(num_layers, LayerKind::Mamba);
    std::vector<bool> is_attn(num_layers, false);
    for (int pos : attn_positions) is_attn[pos] = true;
    int non_attn_index = 0;
    for (int i = 0; i < num_layers; ++i) {
        if (is_attn[i]) {
            kinds[i] = LayerKind::Attention;
        } else {
            kinds[i] = (non_attn_index % 2 == 0) ? LayerKind::Mamba : LayerKind::Mlp;
            ++non_attn_index;
        }
    }
    return kinds;
}

}  // namespace

ArchitectureSpec build_preset(const std::string& name) {
    ArchitectureSpec spec;
    if (name == "nemotron62") {
        spec.num_layers = 62;
        spec.layer_kinds = hybrid_kinds(62, {7, 16, 25, 34, 43, 52});
        spec.hidden_dim = 5120;
        spec.attn_heads = 40;
        spec.attn_head_dim = 128;
        spec.kv_heads = 8;
        spec.mamba_heads = 80;
        spec.mamba_head_dim = 64;
        spec.state_dim = 128;
        spec.mamba_groups = 8;
        spec.mlp_hidden_dim = 20480;
    } else if (name == "tiny8") {
        spec.num_layers = 8;
        spec.layer_kinds = hybrid_kinds(8, {1, 5});
        spec.hidden_dim = 32;
        spec.attn_heads = 4;
        spec.attn_head_dim = 8;
        spec.kv_heads = 2;
        spec.mamba_heads = 16;
        spec.mamba_head_dim = 2;
        spec.state_dim = 16;
        spec.mamba_groups = 8;
        spec.mlp_hidden_dim = 64;
    } else if (name.rfind("transformer-only-", 0) == 0) {
        const std::string tail = name.substr(std::string("transformer-only-").size());
        int pairs = 0;
        try {
            pairs = std::stoi(tail);
        } catch (const std::exception&) {
            throw std::invalid_argument("unknown preset: " + name);
        }
        if (pairs <= 0) throw std::invalid_argument("transformer-only preset needs a positive pair count");
        spec.num_layers = 2 * pairs;
        spec.layer_kinds.resize(spec.num_layers);
        for (int i = 0; i < spec.num_layers; ++i)
            spec.layer_kinds[i] = (i % 2 == 0) ? LayerKind::Attention : LayerKind::Mlp;
        spec.hidden_dim = 32;
        spec.attn_heads = 4;
        spec.attn_head_dim = 8;
        spec.kv_heads = 2;
        spec.mamba_heads = 4;   // unused by the stack; kept so the spec validates
        spec.mamba_head_dim = 8;
        spec.state_dim = 16;
        spec.mamba_groups = 2;
        spec.mlp_hidden_dim = 64;
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    spec.validate();
    return spec;
}

nlohmann::json arch_to_json(const ArchitectureSpec& spec) {
    std::vector<std::string> kinds;
    kinds.reserve(spec.layer_kinds.size());
    for (LayerKind k : spec.layer_kinds) kinds.emplace_back(1, layer_kind_code(k));
    return nlohmann::json{
        {"num_layers", spec.num_layers},
        {"layer_kinds", kinds},
        {"hidden_dim", spec.hidden_dim},
        {"attn_heads", spec.attn_heads},
        {"attn_head_dim", spec.attn_head_dim},
        {"kv_heads", spec.kv_heads},
        {"mamba_heads", spec.mamba_heads},
        {"mamba_head_dim", spec.mamba_head_dim},
        {"state_dim", spec.state_dim},
        {"mamba_groups", spec.mamba_groups},
        {"mlp_hidden_dim", spec.mlp_hidden_dim},
    };
}

ArchitectureSpec arch_from_json(const nlohmann::json& j) {
    ArchitectureSpec spec;
    spec.num_layers = j.at("num_layers").get<int>();
    for (const auto& code : j.at("layer_kinds")) {
        const std::string s = code.get<std::string>();
        if (s.size() != 1) throw std::invalid_argument("layer kind codes must be single characters");
        spec.layer_kinds.push_back(layer_kind_from_code(s[0]));
    }
    spec.hidden_dim = j.at("hidden_dim").get<int>();
    spec.attn_heads = j.at("attn_heads").get<int>();
    spec.attn_head_dim = j.at("attn_head_dim").get<int>();
    spec.kv_heads = j.at("kv_heads").get<int>();
    spec.mamba_heads = j.at("mamba_heads").get<int>();
    spec.mamba_head_dim = j.at("mamba_head_dim").get<int>();
    spec.state_dim = j.at("state_dim").get<int>();
    spec.mamba_groups = j.at("mamba_groups").get<int>();
    spec.mlp_hidden_dim = j.at("mlp_hidden_dim").get<int>();
    spec.validate();
    return spec;
}

}  // namespace tokred
