#include "tokred/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tokred/ssm_scan.hpp"

namespace tokred {

namespace {

// out = in * w, in is T x w.rows
MatF matmul(const MatF& in, const MatF& w) {
    if (in.cols != w.rows) throw std::invalid_argument("hidden dim does not match weight shape");
    MatF out(in.rows, w.cols);
    for (std::size_t t = 0; t < in.rows; ++t) {
        const float* row = in.row(t);
        float* orow = out.row(t);
        for (std::size_t k = 0; k < in.cols; ++k) {
            const float v = row[k];
            if (v == 0.0f) continue;
            const float* wrow = w.row(k);
            for (std::size_t j = 0; j < w.cols; ++j) orow[j] += v * wrow[j];
        }
    }
    return out;
}

float silu(float x) { return x / (1.0f + std::exp(-x)); }

MatF attention_block(const MatF& h, const AttentionWeights& w, const ArchitectureSpec& spec,
                     LayerIntermediates* inter) {
    const std::size_t seq = h.rows;
    const int heads = spec.attn_heads;
    const int head_dim = spec.attn_head_dim;
    const int kv_heads = spec.kv_heads;
    const int heads_per_kv = heads / kv_heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));

    MatF q = matmul(h, w.wq);
    MatF k = matmul(h, w.wk);
    MatF v = matmul(h, w.wv);

    MatF ctx(seq, static_cast<std::size_t>(heads) * head_dim);
    std::vector<double> weights(seq);
    for (int hd = 0; hd < heads; ++hd) {
        const int kv = hd / heads_per_kv;
        const std::size_t q_off = static_cast<std::size_t>(hd) * head_dim;
        const std::size_t kv_off = static_cast<std::size_t>(kv) * head_dim;
        for (std::size_t t = 0; t < seq; ++t) {
            const float* qt = q.row(t) + q_off;
            // causal softmax over positions <= t
            double max_logit = -1e300;
            for (std::size_t j = 0; j <= t; ++j) {
                const float* kj = k.row(j) + kv_off;
                double dot = 0.0;
                for (int e = 0; e < head_dim; ++e) dot += static_cast<double>(qt[e]) * kj[e];
                weights[j] = dot * scale;
                if (weights[j] > max_logit) max_logit = weights[j];
            }
            double denom = 0.0;
            for (std::size_t j = 0; j <= t; ++j) {
                weights[j] = std::exp(weights[j] - max_logit);
                denom += weights[j];
            }
            float* out = ctx.row(t) + q_off;
            for (std::size_t j = 0; j <= t; ++j) {
                const float wj = static_cast<float>(weights[j] / denom);
                const float* vj = v.row(j) + kv_off;
                for (int e = 0; e < head_dim; ++e) out[e] += wj * vj[e];
            }
        }
    }

    if (inter) inter->attn = AttentionIntermediates{std::move(q), std::move(k)};
    return matmul(ctx, w.wo);
}

MatF mamba_block(const MatF& h, const MambaWeights& w, const ArchitectureSpec& spec,
                 LayerIntermediates* inter) {
    const std::size_t seq = h.rows;
    const int heads = spec.mamba_heads;
    const int p = spec.mamba_head_dim;
    const int n = spec.state_dim;
    const int groups = spec.mamba_groups;
    const int heads_per_group = heads / groups;

    MatF x = matmul(h, w.wx);            // T x heads*p
    MatF b = matmul(h, w.wb);            // T x G*n
    MatF c = matmul(h, w.wc);            // T x G*n
    MatF delta_raw = matmul(h, w.wdelta);  // T x G

    MatF b_bar(seq, static_cast<std::size_t>(groups) * n);
    MatF delta(seq, groups);
    for (std::size_t t = 0; t < seq; ++t) {
        for (int g = 0; g < groups; ++g) {
            const float dt = discretization_step(delta_raw(t, g));
            delta(t, g) = dt;
            const std::size_t off = static_cast<std::size_t>(g) * n;
            for (int e = 0; e < n; ++e) b_bar(t, off + e) = dt * b(t, off + e);
        }
    }

    // decay must stay strictly inside (0,1) at float resolution; large
    // delta*a underflows exp to 0, tiny products round to 1
    MatF a_bar(seq, heads);
    for (std::size_t t = 0; t < seq; ++t)
        for (int hd = 0; hd < heads; ++hd) {
            float a = std::exp(-delta(t, hd / heads_per_group) * w.a[hd]);
            a_bar(t, hd) = std::clamp(a, 1e-30f, 0.999999f);
        }

    MatF y(seq, static_cast<std::size_t>(heads) * p);
    ScanInputs<float> scan;
    scan.x = MatF(seq, p);
    scan.a_bar.resize(seq);
    scan.b_bar = MatF(seq, n);
    scan.c = MatF(seq, n);
    for (int hd = 0; hd < heads; ++hd) {
        const int g = hd / heads_per_group;
        const std::size_t x_off = static_cast<std::size_t>(hd) * p;
        const std::size_t g_off = static_cast<std::size_t>(g) * n;
        for (std::size_t t = 0; t < seq; ++t) {
            scan.a_bar[t] = a_bar(t, hd);
            for (int e = 0; e < p; ++e) scan.x(t, e) = x(t, x_off + e);
            for (int e = 0; e < n; ++e) {
                scan.b_bar(t, e) = b_bar(t, g_off + e);
                scan.c(t, e) = c(t, g_off + e);
            }
        }
        const MatF yh = selective_scan(scan);
        for (std::size_t t = 0; t < seq; ++t)
            for (int e = 0; e < p; ++e) y(t, x_off + e) = yh(t, e);
    }

    if (inter) inter->mamba = MambaIntermediates{std::move(b_bar), std::move(c), std::move(a_bar)};
    return matmul(y, w.wout);
}

MatF mlp_block(const MatF& h, const MlpWeights& w) {
    MatF hidden = matmul(h, w.w1);
    for (auto& v : hidden.data) v = silu(v);
    return matmul(hidden, w.w2);
}

}  // namespace

float discretization_step(float raw) {
    // softplus, numerically stable on both tails; the step is confined to
    // [1e-4, 5] the way practical SSMs bound dt, which keeps the decay
    // strictly inside (0,1) and the state update finite for outlier inputs
    const float sp = raw > 20.0f ? raw : std::log1p(std::exp(raw));
    return std::clamp(sp, 1e-4f, 5.0f);
}

HiddenSequence forward_layer(int layer_index, const ArchitectureSpec& spec, const Parameters& params,
                             const HiddenSequence& h, LayerIntermediates* intermediates) {
    if (layer_index < 0 || layer_index >= static_cast<int>(params.layers.size()))
        throw std::invalid_argument("layer_index out of range");
    if (h.vectors.cols != static_cast<std::size_t>(spec.hidden_dim))
        throw std::invalid_argument("sequence width does not match hidden_dim");
    h.validate();

    MatF block_out;
    const LayerWeights& weights = params.layers[layer_index];
    switch (spec.layer_kinds[layer_index]) {
        case LayerKind::Attention:
            if (!std::holds_alternative<AttentionWeights>(weights))
                throw std::invalid_argument("params do not match layer kind");
            block_out = attention_block(h.vectors, std::get<AttentionWeights>(weights), spec, intermediates);
            break;
        case LayerKind::Mamba:
            if (!std::holds_alternative<MambaWeights>(weights))
                throw std::invalid_argument("params do not match layer kind");
            block_out = mamba_block(h.vectors, std::get<MambaWeights>(weights), spec, intermediates);
            break;
        case LayerKind::Mlp:
            if (!std::holds_alternative<MlpWeights>(weights))
                throw std::invalid_argument("params do not match layer kind");
            block_out = mlp_block(h.vectors, std::get<MlpWeights>(weights));
            break;
    }

    HiddenSequence out;
    out.vectors = h.vectors;
    out.roles = h.roles;
    out.position_ids = h.position_ids;
    for (std::size_t i = 0; i < block_out.data.size(); ++i) out.vectors.data[i] += block_out.data[i];
    return out;
}

}  // namespace tokred
