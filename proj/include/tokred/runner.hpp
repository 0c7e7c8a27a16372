#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tokred/analysis.hpp"
#include "tokred/arch.hpp"
#include "tokred/flops.hpp"
#include "tokred/schedule.hpp"
#include "tokred/sequence.hpp"

namespace tokred {

enum class ReductionMode { QueryBased, AvgPool, QueryAttnAvgPoolMamba };

std::string reduction_mode_name(ReductionMode mode);
ReductionMode reduction_mode_from_name(const std::string& name);

// Synthetic retrieval probe: `count` visual tokens are replaced by
// amplified copies of text-query vectors, so a query-conditioned scorer
// should rank them near the top while position-blind pooling loses them.
struct PlantedConfig {
    int count = 0;
    double scale = 4.0;
};

struct RunConfig {
    std::string preset = "tiny8";
    std::optional<ArchitectureSpec> architecture;  // overrides the preset when set
    std::uint64_t seed = 0;
    int n_visual = 288;  // or frames * 144 when frames is set
    int frames = 0;
    int m_text = 16;
    ReductionPattern pattern;
    ScheduleSpec schedule;
    ReductionMode mode = ReductionMode::QueryBased;
    PlantedConfig planted;
    bool collect_stability = false;
    bool timing = false;  // wall clock is off by default so reports stay byte-reproducible
    std::string out_dir = ".";

    int resolved_n_visual() const { return frames > 0 ? frames * 144 : n_visual; }
    ArchitectureSpec resolved_arch() const;
    void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);

struct LayerTrace {
    int layer = -1;
    LayerKind kind = LayerKind::Mlp;
    int tokens_in = 0;
    int tokens_out = 0;
    std::string kept_digest;  // fnv1a64 over kept position ids, empty off reduction layers
};

struct PlantedOutcome {
    int count = 0;
    int survivors = 0;
    double survival = 0.0;
};

struct ReductionReport {
    std::uint64_t seed = 0;
    nlohmann::json config_echo;
    std::vector<LayerTrace> trace;
    int final_visual_count = 0;
    double compression_rate_pct = 100.0;
    FlopsBreakdown flops;
    std::optional<PlantedOutcome> planted;
    std::optional<StabilityReport> stability;
    std::optional<double> wall_clock_ms;
};

nlohmann::json report_to_json(const ReductionReport& report);

// Full prefill pass: runs every layer in order, scoring and reducing at
// the plan's reduction layers (attention layers score with the softmax
// text-to-visual weights, Mamba layers with the decay-free alignment
// score). Deterministic for fixed (config, seed).
ReductionReport run_prefill(const RunConfig& cfg);

// Reduction-disabled pass collecting an ImportanceMap at every scoring
// layer, plus the CSV artifacts for plotting.
struct AnalysisArtifacts {
    StabilityReport report;
    std::string tau_csv;      // layer_a,layer_b,tau
    std::string density_csv;  // layer,unit,density
    std::string scores_csv;   // layer,token,score
};

AnalysisArtifacts run_analysis(const RunConfig& cfg);

enum class HeatmapMode { WithDecay, DecayFree };

// (t, j, value) CSV over text rows t and visual columns j of one Mamba
// layer: |W[t][j]| with the cumulative decay, or |b_bar_j . c_t| without
// it. Values averaged over heads (with decay) or groups (decay-free).
std::string emit_heatmap(const RunConfig& cfg, int layer, HeatmapMode mode, bool log_scale = false);

// Schedule-only dry run: plan, budgets, compression rate and the FLOP
// model, with no forward pass. Safe on production-scale presets.
nlohmann::json plan_report(const RunConfig& cfg);

// Exposed for tests: the seeded synthetic input built from the config.
HiddenSequence make_synthetic_input(const ArchitectureSpec& spec, const RunConfig& cfg,
                                    std::vector<int>* planted_positions = nullptr);

}  // namespace tokred
