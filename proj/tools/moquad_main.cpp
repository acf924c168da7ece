// moquad — synthetic-video contrastive learning lab.
//
// Subcommands: gen, pretrain, evaluate, retrieve, diag, sweep.
// Exit codes: 0 success, 2 config error, 3 missing input, 4 artifact
// mismatch, 1 internal error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "moquad/kernels.hpp"
#include "moquad/pipeline.hpp"

namespace {

using moquad::RunConfig;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> data;
    bool deterministic = false;
    // Ablation / strategy overrides.
    std::optional<std::string> ablation;       // simclr | ad_pos | ad_pos_intra | full
    std::optional<std::string> appearance_op;  // be | rad_intra | rad_inter
    std::optional<std::string> motion_op;      // speed | reverse | shuffle
    std::optional<double> warmup_ratio;
    std::optional<double> beta;
    std::optional<double> alpha;
    std::optional<bool> mining;
    std::optional<std::uint32_t> epochs;
    std::optional<std::uint32_t> batch_size;
    std::optional<double> base_lr;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool train_flags) {
    cmd->add_option("--config", args.config_path, "JSON run configuration");
    cmd->add_option("--seed", args.seed, "override the run seed");
    cmd->add_option("--out", args.out, "override out_dir");
    cmd->add_option("--data", args.data, "override data_dir");
    cmd->add_flag("--deterministic", args.deterministic,
                  "pin the scalar kernel backend (bit-reproducible across machines)");
    if (train_flags) {
        cmd->add_option("--ablation", args.ablation,
                        "quadruple preset: simclr, ad_pos, ad_pos_intra, full");
        cmd->add_option("--appearance-op", args.appearance_op,
                        "appearance disturb: be, rad_intra, rad_inter");
        cmd->add_option("--motion-op", args.motion_op,
                        "motion disturb: speed, reverse, shuffle");
        cmd->add_option("--warmup-ratio", args.warmup_ratio,
                        "appearance warm-up fraction of epochs");
        cmd->add_option("--beta", args.beta, "hard-negative fraction");
        cmd->add_option("--alpha", args.alpha, "hard-negative weight");
        cmd->add_option("--mining", args.mining, "enable hard-negative mining");
        cmd->add_option("--epochs", args.epochs, "total training epochs");
        cmd->add_option("--batch-size", args.batch_size, "videos per batch");
        cmd->add_option("--lr", args.base_lr, "base learning rate");
    }
}

RunConfig resolve_config(const CommonArgs& args) {
    nlohmann::json j = nlohmann::json::object();
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in)
            throw moquad::MissingInputError("config file not found: " + args.config_path);
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw moquad::ConfigError("config: parse error in " + args.config_path + ": " +
                                      e.what());
        }
    }

    // Flat flags override config keys.
    if (args.seed) j["seed"] = *args.seed;
    if (args.out) j["out_dir"] = *args.out;
    if (args.data) j["data_dir"] = *args.data;
    if (args.deterministic) j["deterministic"] = true;
    if (args.warmup_ratio) j["schedule"]["warmup_ratio"] = *args.warmup_ratio;
    if (args.epochs) j["schedule"]["epochs"] = *args.epochs;
    if (args.batch_size) j["schedule"]["batch_size"] = *args.batch_size;
    if (args.base_lr) j["optim"]["base_lr"] = *args.base_lr;
    if (args.beta) {
        j["loss"]["beta"] = *args.beta;
        j["loss"]["mining_enabled"] = true;
    }
    if (args.alpha) {
        j["loss"]["alpha"] = *args.alpha;
        j["loss"]["mining_enabled"] = true;
    }
    if (args.mining) j["loss"]["mining_enabled"] = *args.mining;
    if (args.appearance_op) j["rad"]["donor_mode"] = *args.appearance_op;
    if (args.motion_op) j["schedule"]["motion_op"] = *args.motion_op;
    if (args.ablation) {
        const std::string& preset = *args.ablation;
        bool ad_pos, intra, ad_intra;
        if (preset == "simclr") {
            ad_pos = intra = ad_intra = false;
        } else if (preset == "ad_pos") {
            ad_pos = true;
            intra = ad_intra = false;
        } else if (preset == "ad_pos_intra") {
            ad_pos = intra = true;
            ad_intra = false;
        } else if (preset == "full") {
            ad_pos = intra = ad_intra = true;
        } else {
            throw moquad::ConfigError("unknown ablation preset \"" + preset + "\"");
        }
        j["schedule"]["enable_ad_pos"] = ad_pos;
        j["schedule"]["enable_intra_neg"] = intra;
        j["schedule"]["enable_ad_intra_neg"] = ad_intra;
    }

    return moquad::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MoQuad-style motion-focused contrastive learning on synthetic videos"};
    app.require_subcommand(1);

    CommonArgs gen_args, pre_args, eval_args, retr_args, diag_args, sweep_args;
    std::string checkpoint, metrics_path, csv_path, grid;

    CLI::App* cmd_gen = app.add_subcommand("gen", "generate the synthetic dataset");
    add_common(cmd_gen, gen_args, false);

    CLI::App* cmd_pretrain =
        app.add_subcommand("pretrain", "two-stage contrastive pre-training");
    add_common(cmd_pretrain, pre_args, true);

    CLI::App* cmd_evaluate =
        app.add_subcommand("evaluate", "linear probe + retrieval of a checkpoint");
    add_common(cmd_evaluate, eval_args, false);
    cmd_evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

    CLI::App* cmd_retrieve =
        app.add_subcommand("retrieve", "nearest-neighbour video retrieval only");
    add_common(cmd_retrieve, retr_args, false);
    cmd_retrieve->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

    CLI::App* cmd_diag =
        app.add_subcommand("diag", "export the rank-diagnostic curve as CSV");
    cmd_diag->add_option("--metrics", metrics_path, "metrics.jsonl from pretrain")
        ->required();
    cmd_diag->add_option("--csv", csv_path, "output CSV path")->required();

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a named ablation grid");
    add_common(cmd_sweep, sweep_args, true);
    cmd_sweep->add_option("--grid", grid, "components, appearance_ops, motion_ops, mining, warmup")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_gen->parsed()) {
            const RunConfig cfg = resolve_config(gen_args);
            moquad::run_gen(cfg);
            std::printf("dataset written to %s\n", cfg.data_dir.c_str());
        } else if (cmd_pretrain->parsed()) {
            const RunConfig cfg = resolve_config(pre_args);
            const auto artifacts = moquad::run_pretrain(cfg);
            std::printf("checkpoint: %s\nmetrics: %s\n",
                        artifacts.checkpoint.string().c_str(),
                        artifacts.metrics.string().c_str());
        } else if (cmd_evaluate->parsed()) {
            const RunConfig cfg = resolve_config(eval_args);
            const auto artifacts = moquad::run_evaluate(cfg, checkpoint);
            std::printf("%s\n", artifacts.results.dump(2).c_str());
        } else if (cmd_retrieve->parsed()) {
            const RunConfig cfg = resolve_config(retr_args);
            const auto artifacts = moquad::run_retrieve(cfg, checkpoint);
            std::printf("%s\n", artifacts.results.dump(2).c_str());
        } else if (cmd_diag->parsed()) {
            moquad::run_diag(metrics_path, csv_path);
            std::printf("rank curve written to %s\n", csv_path.c_str());
        } else if (cmd_sweep->parsed()) {
            const RunConfig cfg = resolve_config(sweep_args);
            const auto summary = moquad::run_sweep(cfg, grid);
            std::printf("%s\n", summary.dump(2).c_str());
        }
    } catch (const moquad::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const moquad::MissingInputError& e) {
        std::fprintf(stderr, "missing input: %s\n", e.what());
        return 3;
    } catch (const moquad::MismatchError& e) {
        std::fprintf(stderr, "artifact mismatch: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
