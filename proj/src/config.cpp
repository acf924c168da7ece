#include "moquad/config.hpp"

#include <fstream>

namespace moquad {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& section,
                    std::initializer_list<const char*> known) {
    if (!j.is_object())
        throw ConfigError("config: section \"" + section + "\" must be a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw ConfigError("config: unknown key \"" +
                              (section.empty() ? item.key() : section + "." + item.key()) +
                              "\"");
    }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for \"" + std::string(key) + "\": " + e.what());
    }
}

void take_string_enum(const json& j, const char* key, std::string& out) {
    take(j, key, out);
}

}  // namespace

RunConfig default_config() {
    RunConfig cfg;
    cfg.dataset.seed = cfg.seed;
    cfg.encoder.seed = cfg.seed;
    return cfg;
}

RunConfig config_from_json(const json& j) {
    reject_unknown(j, "",
                   {"seed", "deterministic", "out_dir", "data_dir", "dataset", "clip",
                    "dilation_candidates", "rad", "loss", "encoder", "optim",
                    "schedule", "eval", "probe"});

    RunConfig cfg;
    take(j, "seed", cfg.seed);
    take(j, "deterministic", cfg.deterministic);
    take(j, "out_dir", cfg.out_dir);
    take(j, "data_dir", cfg.data_dir);

    cfg.dataset.seed = cfg.seed;
    cfg.encoder.seed = cfg.seed;

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        reject_unknown(d, "dataset",
                       {"num_train", "num_test", "frames", "height", "width", "channels",
                        "num_motion_classes", "num_appearance_classes", "background_mode",
                        "appearance_cue_classes", "sprite_size", "base_speed", "seed"});
        take(d, "num_train", cfg.dataset.num_train);
        take(d, "num_test", cfg.dataset.num_test);
        take(d, "frames", cfg.dataset.T);
        take(d, "height", cfg.dataset.H);
        take(d, "width", cfg.dataset.W);
        take(d, "channels", cfg.dataset.C);
        take(d, "num_motion_classes", cfg.dataset.num_motion_classes);
        take(d, "num_appearance_classes", cfg.dataset.num_appearance_classes);
        take(d, "appearance_cue_classes", cfg.dataset.appearance_cue_classes);
        take(d, "sprite_size", cfg.dataset.sprite_size);
        take(d, "base_speed", cfg.dataset.base_speed);
        take(d, "seed", cfg.dataset.seed);
        if (d.contains("background_mode")) {
            const std::string mode = d.at("background_mode").get<std::string>();
            if (mode == "unique_per_video")
                cfg.dataset.background_mode = BackgroundMode::unique_per_video;
            else if (mode == "shared_per_class")
                cfg.dataset.background_mode = BackgroundMode::shared_per_class;
            else
                throw ConfigError("config: bad value for \"dataset.background_mode\": " + mode);
        }
    }

    if (j.contains("clip")) {
        const json& c = j.at("clip");
        reject_unknown(c, "clip", {"length"});
        take(c, "length", cfg.schedule.quad.clip_length);
    }

    if (j.contains("dilation_candidates")) {
        cfg.schedule.quad.dilation_candidates.clear();
        take(j, "dilation_candidates", cfg.schedule.quad.dilation_candidates);
        if (cfg.schedule.quad.dilation_candidates.empty())
            throw ConfigError("config: dilation_candidates must not be empty");
    }

    if (j.contains("rad")) {
        const json& r = j.at("rad");
        reject_unknown(r, "rad", {"k", "lambda_min", "lambda_max", "donor_mode"});
        take(r, "k", cfg.schedule.quad.rad.k);
        take(r, "lambda_min", cfg.schedule.quad.rad.lambda_min);
        take(r, "lambda_max", cfg.schedule.quad.rad.lambda_max);
        std::string mode;
        take_string_enum(r, "donor_mode", mode);
        if (!mode.empty()) cfg.schedule.quad.rad.donor_mode = donor_mode_from_name(mode);
    }

    if (j.contains("loss")) {
        const json& l = j.at("loss");
        reject_unknown(l, "loss", {"tau", "alpha", "beta", "mining_enabled"});
        take(l, "tau", cfg.schedule.loss.tau);
        take(l, "alpha", cfg.schedule.loss.alpha);
        take(l, "beta", cfg.schedule.loss.beta);
        take(l, "mining_enabled", cfg.schedule.loss.mining_enabled);
    }

    if (j.contains("encoder")) {
        const json& e = j.at("encoder");
        reject_unknown(e, "encoder",
                       {"pool_height", "pool_width", "hidden_dims", "feature_dim",
                        "proj_dims", "proj_out_dim"});
        take(e, "pool_height", cfg.encoder.pool_h);
        take(e, "pool_width", cfg.encoder.pool_w);
        take(e, "hidden_dims", cfg.encoder.hidden_dims);
        take(e, "feature_dim", cfg.encoder.feature_dim);
        take(e, "proj_dims", cfg.encoder.proj_dims);
        take(e, "proj_out_dim", cfg.encoder.proj_out_dim);
    }

    if (j.contains("optim")) {
        const json& o = j.at("optim");
        reject_unknown(o, "optim", {"base_lr", "momentum"});
        take(o, "base_lr", cfg.optim.base_lr);
        take(o, "momentum", cfg.optim.momentum);
    }

    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        reject_unknown(s, "schedule",
                       {"epochs", "warmup_ratio", "batch_size", "steps_per_epoch",
                        "enable_ad_pos", "enable_intra_neg", "enable_ad_intra_neg",
                        "motion_op", "diag_on_holdout"});
        take(s, "epochs", cfg.schedule.epochs);
        take(s, "warmup_ratio", cfg.schedule.warmup_ratio);
        take(s, "batch_size", cfg.schedule.batch_size);
        take(s, "steps_per_epoch", cfg.schedule.steps_per_epoch);
        take(s, "enable_ad_pos", cfg.schedule.quad.enable_ad_pos);
        take(s, "enable_intra_neg", cfg.schedule.quad.enable_intra_neg);
        take(s, "enable_ad_intra_neg", cfg.schedule.quad.enable_ad_intra_neg);
        take(s, "diag_on_holdout", cfg.schedule.diag_on_holdout);
        std::string op;
        take_string_enum(s, "motion_op", op);
        if (!op.empty()) cfg.schedule.quad.motion_op = motion_kind_from_name(op);
    }

    if (j.contains("eval")) {
        const json& e = j.at("eval");
        reject_unknown(e, "eval", {"num_clips", "dilation", "use_projection"});
        take(e, "num_clips", cfg.eval.num_clips);
        take(e, "dilation", cfg.eval.dilation);
        take(e, "use_projection", cfg.eval.use_projection);
    }

    if (j.contains("probe")) {
        const json& p = j.at("probe");
        reject_unknown(p, "probe", {"iterations", "lr", "momentum"});
        take(p, "iterations", cfg.probe.iterations);
        take(p, "lr", cfg.probe.lr);
        take(p, "momentum", cfg.probe.momentum);
    }

    // Derived fields.
    cfg.eval.clip_length = cfg.schedule.quad.clip_length;
    cfg.encoder.clip_length = cfg.schedule.quad.clip_length;
    cfg.encoder.in_h = cfg.dataset.H;
    cfg.encoder.in_w = cfg.dataset.W;
    cfg.encoder.channels = cfg.dataset.C;

    validate_config(cfg);
    return cfg;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["deterministic"] = cfg.deterministic;
    j["out_dir"] = cfg.out_dir;
    j["data_dir"] = cfg.data_dir;

    j["dataset"] = {
        {"num_train", cfg.dataset.num_train},
        {"num_test", cfg.dataset.num_test},
        {"frames", cfg.dataset.T},
        {"height", cfg.dataset.H},
        {"width", cfg.dataset.W},
        {"channels", cfg.dataset.C},
        {"num_motion_classes", cfg.dataset.num_motion_classes},
        {"num_appearance_classes", cfg.dataset.num_appearance_classes},
        {"background_mode", cfg.dataset.background_mode == BackgroundMode::unique_per_video
                                ? "unique_per_video"
                                : "shared_per_class"},
        {"appearance_cue_classes", cfg.dataset.appearance_cue_classes},
        {"sprite_size", cfg.dataset.sprite_size},
        {"base_speed", cfg.dataset.base_speed},
        {"seed", cfg.dataset.seed},
    };
    j["clip"] = {{"length", cfg.schedule.quad.clip_length}};
    j["dilation_candidates"] = cfg.schedule.quad.dilation_candidates;
    j["rad"] = {
        {"k", cfg.schedule.quad.rad.k},
        {"lambda_min", cfg.schedule.quad.rad.lambda_min},
        {"lambda_max", cfg.schedule.quad.rad.lambda_max},
        {"donor_mode", donor_mode_name(cfg.schedule.quad.rad.donor_mode)},
    };
    j["loss"] = {
        {"tau", cfg.schedule.loss.tau},
        {"alpha", cfg.schedule.loss.alpha},
        {"beta", cfg.schedule.loss.beta},
        {"mining_enabled", cfg.schedule.loss.mining_enabled},
    };
    j["encoder"] = {
        {"pool_height", cfg.encoder.pool_h},
        {"pool_width", cfg.encoder.pool_w},
        {"hidden_dims", cfg.encoder.hidden_dims},
        {"feature_dim", cfg.encoder.feature_dim},
        {"proj_dims", cfg.encoder.proj_dims},
        {"proj_out_dim", cfg.encoder.proj_out_dim},
    };
    j["optim"] = {
        {"base_lr", cfg.optim.base_lr},
        {"momentum", cfg.optim.momentum},
    };
    j["schedule"] = {
        {"epochs", cfg.schedule.epochs},
        {"warmup_ratio", cfg.schedule.warmup_ratio},
        {"batch_size", cfg.schedule.batch_size},
        {"steps_per_epoch", cfg.schedule.steps_per_epoch},
        {"enable_ad_pos", cfg.schedule.quad.enable_ad_pos},
        {"enable_intra_neg", cfg.schedule.quad.enable_intra_neg},
        {"enable_ad_intra_neg", cfg.schedule.quad.enable_ad_intra_neg},
        {"motion_op", motion_kind_name(cfg.schedule.quad.motion_op)},
        {"diag_on_holdout", cfg.schedule.diag_on_holdout},
    };
    j["eval"] = {
        {"num_clips", cfg.eval.num_clips},
        {"dilation", cfg.eval.dilation},
        {"use_projection", cfg.eval.use_projection},
    };
    j["probe"] = {
        {"iterations", cfg.probe.iterations},
        {"lr", cfg.probe.lr},
        {"momentum", cfg.probe.momentum},
    };
    return j;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("config: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: parse error in " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw MissingInputError("config: cannot open " + path.string());
    out << config_to_json(cfg).dump(2) << '\n';
}

void validate_config(const RunConfig& cfg) {
    const auto& quad = cfg.schedule.quad;
    if (quad.clip_length < 2) throw ConfigError("config: clip.length must be >= 2");
    for (const std::uint32_t d : quad.dilation_candidates) {
        if (d == 0) throw ConfigError("config: dilation candidates must be positive");
    }
    // The smallest candidate must fit; larger ones may be infeasible and
    // are filtered at sampling time for the speed disturb, but the anchor
    // can draw any candidate, so all of them must fit.
    for (const std::uint32_t d : quad.dilation_candidates) {
        if (static_cast<std::uint64_t>(quad.clip_length - 1) * d + 1 > cfg.dataset.T)
            throw ConfigError("config: dilation " + std::to_string(d) +
                              " does not fit " + std::to_string(cfg.dataset.T) +
                              "-frame videos with clip length " +
                              std::to_string(quad.clip_length));
    }
    if (quad.rad.k < 1 || quad.rad.k > cfg.dataset.H || quad.rad.k > cfg.dataset.W)
        throw ConfigError("config: rad.k must lie in [1, min(height, width)]");
    if (!(quad.rad.lambda_min >= 0.0 && quad.rad.lambda_max <= 1.0 &&
          quad.rad.lambda_min <= quad.rad.lambda_max))
        throw ConfigError("config: rad lambda range must satisfy 0 <= min <= max <= 1");
    if (!(cfg.schedule.loss.tau > 0.0)) throw ConfigError("config: loss.tau must be positive");
    if (cfg.schedule.loss.mining_enabled) {
        if (!(cfg.schedule.loss.alpha >= 1.0))
            throw ConfigError("config: loss.alpha must be >= 1");
        if (!(cfg.schedule.loss.beta >= 0.0 && cfg.schedule.loss.beta <= 1.0))
            throw ConfigError("config: loss.beta must lie in [0, 1]");
    }
    if (!(cfg.schedule.warmup_ratio >= 0.0 && cfg.schedule.warmup_ratio < 1.0))
        throw ConfigError("config: schedule.warmup_ratio must lie in [0, 1)");
    if (cfg.eval.dilation == 0) throw ConfigError("config: eval.dilation must be positive");
    if (static_cast<std::uint64_t>(quad.clip_length - 1) * cfg.eval.dilation + 1 >
        cfg.dataset.T)
        throw ConfigError("config: eval clips do not fit the videos");
    if (!(cfg.optim.base_lr > 0.0)) throw ConfigError("config: optim.base_lr must be positive");
    if (!(cfg.optim.momentum >= 0.0 && cfg.optim.momentum < 1.0))
        throw ConfigError("config: optim.momentum must lie in [0, 1)");
}

}  // namespace moquad
