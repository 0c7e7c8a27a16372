#include "tokred/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "tokred/model.hpp"
#include "tokred/params.hpp"
#include "tokred/rng.hpp"
#include "tokred/selection.hpp"
#include "tokred/ssm_scan.hpp"

namespace tokred {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string digest_hex(const std::vector<int>& position_ids) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int id : position_ids) {
        std::uint32_t le = static_cast<std::uint32_t>(id);
        h = fnv1a64(&le, sizeof(le), h);
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Mean-pools live visual tokens into non-overlapping windows of
// ceil(live / budget); the last window may be ragged. Pooled tokens take
// the first position id of their window.
HiddenSequence avg_pool_visual(const HiddenSequence& h, int budget) {
    const int live = h.visual_count();
    const int total = h.length();
    if (budget >= live) return h;
    const int window = (live + budget - 1) / budget;
    const int pooled = (live + window - 1) / window;

    HiddenSequence out;
    out.vectors = MatF(pooled + (total - live), h.vectors.cols);
    out.roles.reserve(out.vectors.rows);
    out.position_ids.reserve(out.vectors.rows);

    for (int wi = 0; wi < pooled; ++wi) {
        const int lo = wi * window;
        const int hi = std::min(lo + window, live);
        float* dst = out.vectors.row(wi);
        for (int src = lo; src < hi; ++src) {
            const float* from = h.vectors.row(src);
            for (std::size_t e = 0; e < h.vectors.cols; ++e) dst[e] += from[e];
        }
        const float inv = 1.0f / static_cast<float>(hi - lo);
        for (std::size_t e = 0; e < h.vectors.cols; ++e) dst[e] *= inv;
        out.roles.push_back(TokenRole::Visual);
        out.position_ids.push_back(h.position_ids[lo]);
    }
    for (int t = live; t < total; ++t) {
        const float* from = h.vectors.row(t);
        std::copy(from, from + h.vectors.cols, out.vectors.row(pooled + (t - live)));
        out.roles.push_back(h.roles[t]);
        out.position_ids.push_back(h.position_ids[t]);
    }
    return out;
}

ImportanceMap score_layer(const ArchitectureSpec& spec, LayerKind kind,
                          const LayerIntermediates& inter, const HiddenSequence& h, int layer) {
    const int n_visual = h.visual_count();
    const int m_text = h.text_count();
    ImportanceMap map;
    if (kind == LayerKind::Attention) {
        const AttentionIntermediates& a = *inter.attn;
        MatF q_text(m_text, a.q.cols);
        MatF k_vis(n_visual, a.k.cols);
        for (int m = 0; m < m_text; ++m)
            std::copy(a.q.row(n_visual + m), a.q.row(n_visual + m) + a.q.cols, q_text.row(m));
        for (int i = 0; i < n_visual; ++i)
            std::copy(a.k.row(i), a.k.row(i) + a.k.cols, k_vis.row(i));
        map = attn_importance(q_text, k_vis, spec.attn_heads, spec.kv_heads, spec.attn_head_dim);
    } else {
        const MambaIntermediates& m = *inter.mamba;
        MatF b_vis(n_visual, m.b_bar.cols);
        MatF c_text(m_text, m.c.cols);
        for (int i = 0; i < n_visual; ++i)
            std::copy(m.b_bar.row(i), m.b_bar.row(i) + m.b_bar.cols, b_vis.row(i));
        for (int t = 0; t < m_text; ++t)
            std::copy(m.c.row(n_visual + t), m.c.row(n_visual + t) + m.c.cols, c_text.row(t));
        map = ssm_importance(b_vis, c_text, spec.mamba_groups, spec.state_dim);
    }
    map.layer_index = layer;
    return map;
}

nlohmann::json stability_to_json(const StabilityReport& report) {
    nlohmann::json tau = nlohmann::json::array();
    for (std::size_t i = 0; i < report.taus.size(); ++i)
        tau.push_back({{"layer_a", report.tau_layer_pairs[i].first},
                       {"layer_b", report.tau_layer_pairs[i].second},
                       {"tau", report.taus[i]}});
    nlohmann::json density = nlohmann::json::array();
    for (const LayerDensity& d : report.densities)
        for (std::size_t u = 0; u < d.unit_density.size(); ++u)
            density.push_back({{"layer", d.layer}, {"unit", u}, {"density", d.unit_density[u]}});
    return nlohmann::json{{"tau", tau}, {"density", density}};
}

}  // namespace

std::string reduction_mode_name(ReductionMode mode) {
    switch (mode) {
        case ReductionMode::QueryBased: return "query_based";
        case ReductionMode::AvgPool: return "avg_pool";
        case ReductionMode::QueryAttnAvgPoolMamba: return "query_attn_avgpool_mamba";
    }
    return "?";
}

ReductionMode reduction_mode_from_name(const std::string& name) {
    if (name == "query_based") return ReductionMode::QueryBased;
    if (name == "avg_pool") return ReductionMode::AvgPool;
    if (name == "query_attn_avgpool_mamba") return ReductionMode::QueryAttnAvgPoolMamba;
    throw std::invalid_argument("unknown reduction mode: " + name);
}

ArchitectureSpec RunConfig::resolved_arch() const {
    return architecture ? *architecture : build_preset(preset);
}

void RunConfig::validate() const {
    if (resolved_n_visual() < 1) throw std::invalid_argument("need at least one visual token");
    if (m_text < 1) throw std::invalid_argument("need at least one text token");
    if (frames > 0 && n_visual != 0 && n_visual != frames * 144)
        throw std::invalid_argument("n_visual must equal frames * 144 when both are given");
    if (planted.count < 0 || planted.count > resolved_n_visual())
        throw std::invalid_argument("planted count out of range");
    if (planted.count > 0 && planted.scale <= 0.0)
        throw std::invalid_argument("planted scale must be positive");
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    if (j.contains("version") && j.at("version").get<int>() != 1)
        throw std::invalid_argument("unsupported config version");
    RunConfig cfg;
    if (j.contains("preset")) cfg.preset = j.at("preset").get<std::string>();
    if (j.contains("architecture")) cfg.architecture = arch_from_json(j.at("architecture"));
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("frames")) cfg.frames = j.at("frames").get<int>();
    if (j.contains("n_visual")) cfg.n_visual = j.at("n_visual").get<int>();
    else if (cfg.frames > 0) cfg.n_visual = 0;
    if (j.contains("m_text")) cfg.m_text = j.at("m_text").get<int>();
    if (j.contains("pattern")) cfg.pattern = pattern_from_json(j.at("pattern"));
    if (j.contains("schedule")) cfg.schedule = schedule_from_json(j.at("schedule"));
    if (j.contains("mode")) cfg.mode = reduction_mode_from_name(j.at("mode").get<std::string>());
    if (j.contains("planted")) {
        cfg.planted.count = j.at("planted").value("count", 0);
        cfg.planted.scale = j.at("planted").value("scale", 4.0);
    }
    if (j.contains("collect_stability")) cfg.collect_stability = j.at("collect_stability").get<bool>();
    if (j.contains("timing")) cfg.timing = j.at("timing").get<bool>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    cfg.validate();
    return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["version"] = 1;
    j["preset"] = cfg.preset;
    if (cfg.architecture) j["architecture"] = arch_to_json(*cfg.architecture);
    j["seed"] = cfg.seed;
    j["n_visual"] = cfg.resolved_n_visual();
    if (cfg.frames > 0) j["frames"] = cfg.frames;
    j["m_text"] = cfg.m_text;
    j["pattern"] = pattern_to_json(cfg.pattern);
    j["schedule"] = schedule_to_json(cfg.schedule);
    j["mode"] = reduction_mode_name(cfg.mode);
    if (cfg.planted.count > 0)
        j["planted"] = {{"count", cfg.planted.count}, {"scale", cfg.planted.scale}};
    j["collect_stability"] = cfg.collect_stability;
    return j;
}

HiddenSequence make_synthetic_input(const ArchitectureSpec& spec, const RunConfig& cfg,
                                    std::vector<int>* planted_positions) {
    cfg.validate();
    const int n = cfg.resolved_n_visual();
    const int m = cfg.m_text;
    const int d = spec.hidden_dim;

    HiddenSequence h;
    h.vectors = MatF(n + m, d);
    h.roles.resize(n + m);
    h.position_ids.resize(n + m);
    std::iota(h.position_ids.begin(), h.position_ids.end(), 0);

    Rng vis_rng = rng_stream(cfg.seed, "input.visual");
    for (int i = 0; i < n; ++i) {
        h.roles[i] = TokenRole::Visual;
        float* row = h.vectors.row(i);
        for (int e = 0; e < d; ++e) row[e] = static_cast<float>(vis_rng.next_gaussian());
    }
    Rng text_rng = rng_stream(cfg.seed, "input.text");
    for (int t = 0; t < m; ++t) {
        h.roles[n + t] = TokenRole::Text;
        float* row = h.vectors.row(n + t);
        for (int e = 0; e < d; ++e) row[e] = static_cast<float>(text_rng.next_gaussian());
    }

    if (cfg.planted.count > 0) {
        // sample distinct visual positions, then overwrite each with an
        // amplified copy of a text vector (cycling through the query)
        Rng plant_rng = rng_stream(cfg.seed, "input.planted");
        std::vector<int> pool(n);
        std::iota(pool.begin(), pool.end(), 0);
        std::vector<int> chosen;
        for (int i = 0; i < cfg.planted.count; ++i) {
            const std::size_t pick = i + plant_rng.next_u64() % (pool.size() - i);
            std::swap(pool[i], pool[pick]);
            chosen.push_back(pool[i]);
        }
        std::sort(chosen.begin(), chosen.end());
        for (int i = 0; i < cfg.planted.count; ++i) {
            const float* src = h.vectors.row(n + (i % m));
            float* dst = h.vectors.row(chosen[i]);
            for (int e = 0; e < d; ++e) dst[e] = static_cast<float>(cfg.planted.scale) * src[e];
        }
        if (planted_positions) *planted_positions = chosen;
    } else if (planted_positions) {
        planted_positions->clear();
    }
    return h;
}

ReductionReport run_prefill(const RunConfig& cfg) {
    cfg.validate();
    const ArchitectureSpec spec = cfg.resolved_arch();
    const Parameters params = init_parameters(spec, cfg.seed);
    const RetentionPlan plan = build_plan(spec, cfg.pattern, cfg.schedule, cfg.resolved_n_visual());

    std::vector<int> planted_positions;
    HiddenSequence h = make_synthetic_input(spec, cfg, &planted_positions);

    ReductionReport report;
    report.seed = cfg.seed;
    report.config_echo = run_config_to_json(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    std::size_t next_reduction = 0;
    for (int l = 0; l < spec.num_layers; ++l) {
        const LayerKind kind = spec.layer_kinds[l];
        const bool reduces_here = next_reduction < plan.reduction_layers.size() &&
                                  plan.reduction_layers[next_reduction] == l;
        if (reduces_here) ++next_reduction;

        LayerTrace trace;
        trace.layer = l;
        trace.kind = kind;
        trace.tokens_in = h.length();

        LayerIntermediates inter;
        const bool need_scores = reduces_here && kind != LayerKind::Mlp;
        HiddenSequence out = forward_layer(l, spec, params, h, need_scores ? &inter : nullptr);

        if (reduces_here) {
            const int live = h.visual_count();
            const int budget = plan.budgets[l];
            if (budget >= live) {
                if (budget > live)
                    std::cerr << "warning: layer " << l << " budget " << budget
                              << " exceeds live tokens " << live << ", clamped\n";
            } else {
                const bool pool_here =
                    cfg.mode == ReductionMode::AvgPool ||
                    (cfg.mode == ReductionMode::QueryAttnAvgPoolMamba && kind == LayerKind::Mamba);
                if (pool_here) {
                    out = avg_pool_visual(out, budget);
                } else {
                    const ImportanceMap map = score_layer(spec, kind, inter, h, l);
                    const SelectionResult sel = select_top_k(map.scores, budget, plan.min_tokens);
                    out = apply_reduction(out, sel);
                }
                std::vector<int> kept(out.position_ids.begin(),
                                      out.position_ids.begin() + out.visual_count());
                trace.kept_digest = digest_hex(kept);
            }
        }

        trace.tokens_out = out.length();
        report.trace.push_back(trace);
        h = std::move(out);
    }
    const auto t1 = std::chrono::steady_clock::now();

    report.final_visual_count = h.visual_count();
    report.compression_rate_pct = compression_rate(plan);
    report.flops = account(plan, spec, cfg.resolved_n_visual(), cfg.m_text);

    if (!planted_positions.empty()) {
        PlantedOutcome outcome;
        outcome.count = static_cast<int>(planted_positions.size());
        std::vector<int> kept(h.position_ids.begin(), h.position_ids.begin() + h.visual_count());
        for (int p : planted_positions)
            if (std::binary_search(kept.begin(), kept.end(), p)) ++outcome.survivors;
        outcome.survival = static_cast<double>(outcome.survivors) / outcome.count;
        report.planted = outcome;
    }

    if (cfg.collect_stability) {
        // stability needs every layer to rank the same token set, so it
        // comes from a separate reduction-disabled pass on the same input
        RunConfig base = cfg;
        base.pattern = ReductionPattern{};
        base.collect_stability = false;
        report.stability = run_analysis(base).report;
    }

    if (cfg.timing)
        report.wall_clock_ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0).count();
    return report;
}

nlohmann::json report_to_json(const ReductionReport& report) {
    nlohmann::json j;
    j["seed"] = report.seed;
    j["config"] = report.config_echo;
    nlohmann::json trace = nlohmann::json::array();
    for (const LayerTrace& t : report.trace) {
        nlohmann::json row;
        row["layer"] = t.layer;
        row["kind"] = std::string(1, layer_kind_code(t.kind));
        row["tokens_in"] = t.tokens_in;
        row["tokens_out"] = t.tokens_out;
        if (!t.kept_digest.empty()) row["kept_digest"] = t.kept_digest;
        trace.push_back(row);
    }
    j["trace"] = trace;
    j["final_visual_count"] = report.final_visual_count;
    j["compression_rate_pct"] = report.compression_rate_pct;
    j["flops"] = {{"per_layer", report.flops.per_layer},
                  {"total", report.flops.total},
                  {"baseline_total", report.flops.baseline_total},
                  {"speedup", report.flops.speedup}};
    if (report.planted)
        j["planted"] = {{"count", report.planted->count},
                        {"survivors", report.planted->survivors},
                        {"survival", report.planted->survival}};
    if (report.stability) j["stability"] = stability_to_json(*report.stability);
    if (report.wall_clock_ms) j["wall_clock_ms"] = *report.wall_clock_ms;
    return j;
}

AnalysisArtifacts run_analysis(const RunConfig& cfg) {
    cfg.validate();
    const ArchitectureSpec spec = cfg.resolved_arch();
    const Parameters params = init_parameters(spec, cfg.seed);
    HiddenSequence h = make_synthetic_input(spec, cfg, nullptr);

    std::vector<ImportanceMap> maps;
    for (int l = 0; l < spec.num_layers; ++l) {
        const LayerKind kind = spec.layer_kinds[l];
        LayerIntermediates inter;
        const bool scores_here = kind != LayerKind::Mlp;
        HiddenSequence out = forward_layer(l, spec, params, h, scores_here ? &inter : nullptr);
        if (scores_here) maps.push_back(score_layer(spec, kind, inter, h, l));
        h = std::move(out);
    }

    AnalysisArtifacts artifacts;
    artifacts.report = stability_report(maps);

    std::string tau = "layer_a,layer_b,tau\n";
    for (std::size_t i = 0; i < artifacts.report.taus.size(); ++i)
        tau += std::to_string(artifacts.report.tau_layer_pairs[i].first) + "," +
               std::to_string(artifacts.report.tau_layer_pairs[i].second) + "," +
               fmt_double(artifacts.report.taus[i]) + "\n";
    artifacts.tau_csv = std::move(tau);

    std::string density = "layer,unit,density\n";
    for (const LayerDensity& d : artifacts.report.densities)
        for (std::size_t u = 0; u < d.unit_density.size(); ++u)
            density += std::to_string(d.layer) + "," + std::to_string(u) + "," +
                       fmt_double(d.unit_density[u]) + "\n";
    artifacts.density_csv = std::move(density);

    std::string scores = "layer,token,score\n";
    for (const ImportanceMap& map : maps)
        for (std::size_t i = 0; i < map.scores.size(); ++i)
            scores += std::to_string(map.layer_index) + "," + std::to_string(i) + "," +
                      fmt_double(map.scores[i]) + "\n";
    artifacts.scores_csv = std::move(scores);
    return artifacts;
}

std::string emit_heatmap(const RunConfig& cfg, int layer, HeatmapMode mode, bool log_scale) {
    cfg.validate();
    const ArchitectureSpec spec = cfg.resolved_arch();
    if (layer < 0 || layer >= spec.num_layers) throw std::invalid_argument("layer out of range");
    if (spec.layer_kinds[layer] != LayerKind::Mamba)
        throw std::invalid_argument("heatmaps are only defined for Mamba layers");
    const Parameters params = init_parameters(spec, cfg.seed);
    HiddenSequence h = make_synthetic_input(spec, cfg, nullptr);

    for (int l = 0; l < layer; ++l) h = forward_layer(l, spec, params, h);
    LayerIntermediates inter;
    forward_layer(layer, spec, params, h, &inter);
    const MambaIntermediates& m = *inter.mamba;

    const int n_visual = h.visual_count();
    const int total = h.length();
    const int n = spec.state_dim;
    const int groups = spec.mamba_groups;
    const int heads = spec.mamba_heads;
    const int heads_per_group = heads / groups;

    MatD value(total - n_visual, n_visual);
    if (mode == HeatmapMode::DecayFree) {
        // |b_bar_j . c_t| averaged over groups
        for (int t = n_visual; t < total; ++t)
            for (int j = 0; j < n_visual; ++j) {
                double acc = 0.0;
                for (int g = 0; g < groups; ++g) {
                    const std::size_t off = static_cast<std::size_t>(g) * n;
                    double dot = 0.0;
                    for (int e = 0; e < n; ++e)
                        dot += static_cast<double>(m.b_bar(j, off + e)) * m.c(t, off + e);
                    acc += std::abs(dot);
                }
                value(t - n_visual, j) = acc / groups;
            }
    } else {
        // |W[t][j]| averaged over heads; each head pairs its own decay
        // with its group's projections
        for (int hd = 0; hd < heads; ++hd) {
            const int g = hd / heads_per_group;
            const std::size_t off = static_cast<std::size_t>(g) * n;
            std::vector<double> a_bar(total);
            MatD b_bar(total, n);
            MatD c(total, n);
            for (int t = 0; t < total; ++t) {
                a_bar[t] = m.a_bar(t, hd);
                for (int e = 0; e < n; ++e) {
                    b_bar(t, e) = m.b_bar(t, off + e);
                    c(t, e) = m.c(t, off + e);
                }
            }
            const MatD w = implicit_weights(a_bar, b_bar, c);
            for (int t = n_visual; t < total; ++t)
                for (int j = 0; j < n_visual; ++j)
                    value(t - n_visual, j) += std::abs(w(t, j)) / heads;
        }
    }

    std::string csv = "t,j,value\n";
    for (int t = n_visual; t < total; ++t)
        for (int j = 0; j < n_visual; ++j) {
            double v = value(t - n_visual, j);
            if (log_scale) v = std::log10(v < 1e-300 ? 1e-300 : v);
            csv += std::to_string(t) + "," + std::to_string(j) + "," + fmt_double(v) + "\n";
        }
    return csv;
}

nlohmann::json plan_report(const RunConfig& cfg) {
    cfg.validate();
    const ArchitectureSpec spec = cfg.resolved_arch();
    const RetentionPlan plan = build_plan(spec, cfg.pattern, cfg.schedule, cfg.resolved_n_visual());
    const FlopsBreakdown flops = account(plan, spec, cfg.resolved_n_visual(), cfg.m_text);

    nlohmann::json j;
    j["config"] = run_config_to_json(cfg);
    j["architecture"] = arch_to_json(spec);
    j["reduction_layers"] = plan.reduction_layers;
    j["ratios"] = plan.ratios;
    j["budgets"] = plan.budgets;
    j["compression_rate_pct"] = compression_rate(plan);
    j["flops"] = {{"total", flops.total},
                  {"baseline_total", flops.baseline_total},
                  {"speedup", flops.speedup}};
    return j;
}

}  // namespace tokred
