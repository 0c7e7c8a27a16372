#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tokred/runner.hpp"

namespace {

using tokred::RunConfig;

struct CliOverrides {
    std::string config_path;
    std::string preset;
    int frames = -1;
    int n_visual = -1;
    int m_text = -1;
    std::int64_t seed = -1;
    std::string pattern;
    std::string schedule;
    std::string mode;
    std::string out_dir;
    bool timing = false;
};

void add_common_flags(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "run configuration JSON");
    cmd->add_option("--preset", o.preset, "architecture preset (nemotron62, tiny8, transformer-only-N)");
    cmd->add_option("--frames", o.frames, "video frames; visual tokens = frames * 144");
    cmd->add_option("--n-visual", o.n_visual, "visual token count");
    cmd->add_option("--m-text", o.m_text, "text token count");
    cmd->add_option("--seed", o.seed, "run seed");
    cmd->add_option("--pattern", o.pattern,
                    "reduction pattern: baseline|first_attn|all_attn|first_mamba|second_mamba|"
                    "all_attn_plus_m|all_layers");
    cmd->add_option("--schedule", o.schedule, "schedule JSON file (overrides the config's schedule)");
    cmd->add_option("--mode", o.mode, "query_based|avg_pool|query_attn_avgpool_mamba");
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    cmd->add_flag("--timing", o.timing, "include wall-clock timing in the report (non-reproducible)");
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

RunConfig resolve_config(const CliOverrides& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = tokred::run_config_from_json(load_json(o.config_path));
    if (!o.preset.empty()) cfg.preset = o.preset;
    if (o.frames >= 0) {
        cfg.frames = o.frames;
        cfg.n_visual = 0;
    }
    if (o.n_visual >= 0) {
        cfg.n_visual = o.n_visual;
        cfg.frames = 0;
    }
    if (o.m_text >= 0) cfg.m_text = o.m_text;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (!o.pattern.empty()) cfg.pattern.kind = tokred::pattern_kind_from_name(o.pattern);
    if (!o.schedule.empty()) cfg.schedule = tokred::schedule_from_json(load_json(o.schedule));
    if (!o.mode.empty()) cfg.mode = tokred::reduction_mode_from_name(o.mode);
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.timing) cfg.timing = true;
    cfg.validate();
    return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << bytes;
}

// A forward pass on production-scale presets would need tens of GB of
// weights; those presets are served by the `plan` subcommand instead.
void check_runnable(const RunConfig& cfg) {
    const tokred::ArchitectureSpec spec = cfg.resolved_arch();
    const std::uint64_t d = static_cast<std::uint64_t>(spec.hidden_dim);
    const std::uint64_t approx_weights = static_cast<std::uint64_t>(spec.num_layers) * 3 * d * d * 4;
    if (approx_weights > (1ULL << 31))
        throw std::runtime_error("preset " + cfg.preset +
                                 " is too large to run a forward pass at desk scale; use `plan`");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"query-conditioned token reduction for hybrid Mamba-Transformer prefill"};
    app.require_subcommand(1);

    CliOverrides o;
    int heatmap_layer = -1;
    bool decay_free = false;
    bool log_scale = false;

    CLI::App* prefill = app.add_subcommand("prefill", "run a reduced prefill pass and emit the report");
    add_common_flags(prefill, o);
    CLI::App* analyze = app.add_subcommand("analyze", "reduction-disabled stability/density analysis");
    add_common_flags(analyze, o);
    CLI::App* heatmap = app.add_subcommand("heatmap", "token contribution heatmap for one Mamba layer");
    add_common_flags(heatmap, o);
    heatmap->add_option("--layer", heatmap_layer, "Mamba layer index")->required();
    heatmap->add_flag("--decay-free", decay_free, "use the decay-free alignment score");
    heatmap->add_flag("--log", log_scale, "log10-transform values");
    CLI::App* plan = app.add_subcommand("plan", "schedule-only dry run (no forward pass)");
    add_common_flags(plan, o);

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = resolve_config(o);
        const std::filesystem::path out_dir = cfg.out_dir;
        std::filesystem::create_directories(out_dir);

        if (prefill->parsed()) {
            check_runnable(cfg);
            const tokred::ReductionReport report = tokred::run_prefill(cfg);
            const std::string bytes = tokred::report_to_json(report).dump(2) + "\n";
            write_file(out_dir / "report.json", bytes);
            std::cout << "final visual tokens: " << report.final_visual_count
                      << "  compression: " << report.compression_rate_pct
                      << "%  flop speedup: " << report.flops.speedup << "\n";
            std::cout << "wrote " << (out_dir / "report.json").string() << "\n";
        } else if (analyze->parsed()) {
            check_runnable(cfg);
            auto emit = [&](const RunConfig& c, const std::string& tag) {
                const tokred::AnalysisArtifacts art = tokred::run_analysis(c);
                write_file(out_dir / (tag + "_tau.csv"), art.tau_csv);
                write_file(out_dir / (tag + "_density.csv"), art.density_csv);
                write_file(out_dir / (tag + "_scores.csv"), art.scores_csv);
                std::cout << "wrote " << tag << "_{tau,density,scores}.csv ("
                          << art.report.taus.size() << " layer pairs)\n";
            };
            emit(cfg, cfg.preset);
            const tokred::ArchitectureSpec spec = cfg.resolved_arch();
            if (spec.count_of(tokred::LayerKind::Mamba) > 0) {
                // transformer twin of matching depth for side-by-side panels
                RunConfig twin = cfg;
                twin.preset = "transformer-only-" + std::to_string((spec.num_layers + 1) / 2);
                emit(twin, twin.preset);
            }
        } else if (heatmap->parsed()) {
            check_runnable(cfg);
            const tokred::HeatmapMode mode =
                decay_free ? tokred::HeatmapMode::DecayFree : tokred::HeatmapMode::WithDecay;
            const std::string csv = tokred::emit_heatmap(cfg, heatmap_layer, mode, log_scale);
            const std::string name = "heatmap_layer" + std::to_string(heatmap_layer) +
                                     (decay_free ? "_decay_free" : "_with_decay") + ".csv";
            write_file(out_dir / name, csv);
            std::cout << "wrote " << (out_dir / name).string() << "\n";
        } else if (plan->parsed()) {
            const nlohmann::json j = tokred::plan_report(cfg);
            write_file(out_dir / "plan.json", j.dump(2) + "\n");
            std::cout << "reduction layers: " << j["reduction_layers"].size()
                      << "  compression: " << j["compression_rate_pct"]
                      << "%  flop speedup: " << j["flops"]["speedup"] << "\n";
            std::cout << "wrote " << (out_dir / "plan.json").string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
