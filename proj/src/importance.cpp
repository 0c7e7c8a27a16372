#include "tokred/importance.hpp"

#include <cmath>
#include <stdexcept>

namespace tokred {

namespace {

void check_finite(const MatF& m, const char* name) {
    for (float v : m.data)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite value in ") + name);
}

void average_units(ImportanceMap& map) {
    const std::size_t units = map.per_unit.rows;
    const std::size_t n = map.per_unit.cols;
    map.scores.assign(n, 0.0);
    for (std::size_t u = 0; u < units; ++u) {
        const double* row = map.per_unit.row(u);
        for (std::size_t i = 0; i < n; ++i) map.scores[i] += row[i];
    }
    for (auto& s : map.scores) s /= static_cast<double>(units);
}

}  // namespace

ImportanceMap attn_importance(const MatF& q_text, const MatF& k_vis, int heads, int kv_heads,
                              int head_dim) {
    const std::size_t m_count = q_text.rows;
    const std::size_t n_count = k_vis.rows;
    if (m_count == 0 || n_count == 0) throw std::invalid_argument("need at least one text and one visual token");
    if (q_text.cols != static_cast<std::size_t>(heads) * head_dim)
        throw std::invalid_argument("q_text width does not match heads * head_dim");
    if (k_vis.cols != static_cast<std::size_t>(kv_heads) * head_dim)
        throw std::invalid_argument("k_vis width does not match kv_heads * head_dim");
    if (heads % kv_heads != 0) throw std::invalid_argument("heads must be divisible by kv_heads");
    check_finite(q_text, "q_text");
    check_finite(k_vis, "k_vis");

    const int heads_per_kv = heads / kv_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    ImportanceMap map;
    map.per_unit = MatD(heads, n_count);
    std::vector<double> logits(n_count);
    for (int h = 0; h < heads; ++h) {
        const std::size_t q_off = static_cast<std::size_t>(h) * head_dim;
        const std::size_t k_off = static_cast<std::size_t>(h / heads_per_kv) * head_dim;
        double* unit = map.per_unit.row(h);
        for (std::size_t m = 0; m < m_count; ++m) {
            const float* qm = q_text.row(m) + q_off;
            double max_logit = -1e300;
            for (std::size_t i = 0; i < n_count; ++i) {
                const float* ki = k_vis.row(i) + k_off;
                double dot = 0.0;
                for (int e = 0; e < head_dim; ++e) dot += static_cast<double>(qm[e]) * ki[e];
                logits[i] = dot * scale;
                if (logits[i] > max_logit) max_logit = logits[i];
            }
            double denom = 0.0;
            for (std::size_t i = 0; i < n_count; ++i) {
                logits[i] = std::exp(logits[i] - max_logit);
                denom += logits[i];
            }
            for (std::size_t i = 0; i < n_count; ++i) unit[i] += logits[i] / denom;
        }
        for (std::size_t i = 0; i < n_count; ++i) unit[i] /= static_cast<double>(m_count);
    }
    average_units(map);
    return map;
}

ImportanceMap ssm_importance(const MatF& b_bar_vis, const MatF& c_text, int groups, int state_dim) {
    const std::size_t n_count = b_bar_vis.rows;
    const std::size_t m_count = c_text.rows;
    if (m_count == 0 || n_count == 0) throw std::invalid_argument("need at least one text and one visual token");
    if (b_bar_vis.cols != static_cast<std::size_t>(groups) * state_dim ||
        c_text.cols != static_cast<std::size_t>(groups) * state_dim)
        throw std::invalid_argument("projection width does not match groups * state_dim");
    check_finite(b_bar_vis, "b_bar_vis");
    check_finite(c_text, "c_text");

    ImportanceMap map;
    map.per_unit = MatD(groups, n_count);
    for (int g = 0; g < groups; ++g) {
        const std::size_t off = static_cast<std::size_t>(g) * state_dim;
        double* unit = map.per_unit.row(g);
        for (std::size_t i = 0; i < n_count; ++i) {
            const float* bi = b_bar_vis.row(i) + off;
            double acc = 0.0;
            for (std::size_t m = 0; m < m_count; ++m) {
                const float* cm = c_text.row(m) + off;
                double dot = 0.0;
                for (int e = 0; e < state_dim; ++e) dot += static_cast<double>(bi[e]) * cm[e];
                acc += std::abs(dot);
            }
            unit[i] = acc / static_cast<double>(m_count);
        }
    }
    average_units(map);
    return map;
}

ImportanceMap ssm_importance_with_decay(const std::vector<ScanInputs<double>>& units,
                                        IndexRange text_range, IndexRange vis_range) {
    if (units.empty()) throw std::invalid_argument("need at least one scan unit");
    if (vis_range.size() <= 0 || text_range.size() <= 0)
        throw std::invalid_argument("ranges must be non-empty");
    if (vis_range.end > text_range.begin)
        throw std::invalid_argument("visual range must precede the text range without overlap");

    const std::size_t n_count = static_cast<std::size_t>(vis_range.size());
    ImportanceMap map;
    map.per_unit = MatD(units.size(), n_count);
    for (std::size_t u = 0; u < units.size(); ++u) {
        if (static_cast<int>(units[u].steps()) < text_range.end)
            throw std::invalid_argument("scan unit shorter than the text range");
        const MatD w = implicit_weights(units[u]);
        double* unit = map.per_unit.row(u);
        for (int t = text_range.begin; t < text_range.end; ++t) {
            const double* wrow = w.row(t);
            for (int i = vis_range.begin; i < vis_range.end; ++i)
                unit[i - vis_range.begin] += std::abs(wrow[i]);
        }
        for (std::size_t i = 0; i < n_count; ++i) unit[i] /= static_cast<double>(text_range.size());
    }
    average_units(map);
    return map;
}

}  // namespace tokred
