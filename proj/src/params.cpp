#include "tokred/params.hpp"

#include <cmath>

#include "tokred/rng.hpp"

namespace tokred {

namespace {

void fill_gaussian(MatF& m, Rng& rng, double stddev) {
    for (auto& v : m.data) v = static_cast<float>(stddev * rng.next_gaussian());
}

}  // namespace

Parameters init_parameters(const ArchitectureSpec& spec, std::uint64_t seed) {
    spec.validate();
    Parameters params;
    params.seed = seed;
    params.layers.reserve(spec.layer_kinds.size());

    Rng rng = rng_stream(seed, "params");
    const double stddev = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
    const int d = spec.hidden_dim;

    for (LayerKind kind : spec.layer_kinds) {
        switch (kind) {
            case LayerKind::Attention: {
                AttentionWeights w;
                w.wq = MatF(d, spec.attn_heads * spec.attn_head_dim);
                w.wk = MatF(d, spec.kv_heads * spec.attn_head_dim);
                w.wv = MatF(d, spec.kv_heads * spec.attn_head_dim);
                w.wo = MatF(d, d);
                fill_gaussian(w.wq, rng, stddev);
                fill_gaussian(w.wk, rng, stddev);
                fill_gaussian(w.wv, rng, stddev);
                fill_gaussian(w.wo, rng, stddev);
                params.layers.emplace_back(std::move(w));
                break;
            }
            case LayerKind::Mamba: {
                MambaWeights w;
                w.wx = MatF(d, spec.mamba_heads * spec.mamba_head_dim);
                w.wb = MatF(d, spec.mamba_groups * spec.state_dim);
                w.wc = MatF(d, spec.mamba_groups * spec.state_dim);
                w.wdelta = MatF(d, spec.mamba_groups);
                w.wout = MatF(d, d);
                fill_gaussian(w.wx, rng, stddev);
                fill_gaussian(w.wb, rng, stddev);
                fill_gaussian(w.wc, rng, stddev);
                fill_gaussian(w.wdelta, rng, stddev);
                fill_gaussian(w.wout, rng, stddev);
                w.a.resize(spec.mamba_heads);
                for (auto& a : w.a) a = static_cast<float>(rng.next_uniform(0.5, 1.5));
                params.layers.emplace_back(std::move(w));
                break;
            }
            case LayerKind::Mlp: {
                MlpWeights w;
                w.w1 = MatF(d, spec.mlp_hidden_dim);
                w.w2 = MatF(spec.mlp_hidden_dim, d);
                fill_gaussian(w.w1, rng, stddev);
                fill_gaussian(w.w2, rng, stddev);
                params.layers.emplace_back(std::move(w));
                break;
            }
        }
    }
    return params;
}

}  // namespace tokred
