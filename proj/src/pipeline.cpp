#include "moquad/pipeline.hpp"

#include <fstream>
#include <set>

#include "moquad/kernels.hpp"

namespace moquad {

namespace {

using nlohmann::json;

void echo_config(const RunConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_config(cfg, dir / "config_resolved.json");
}

std::vector<VideoRecord> take_split(Split split, std::vector<VideoRecord>&& all) {
    std::vector<VideoRecord> out;
    for (auto& v : all) {
        if (v.split == split) out.push_back(std::move(v));
    }
    return out;
}

std::vector<VideoRecord> load_dataset_checked(const RunConfig& cfg) {
    const std::filesystem::path dir = cfg.data_dir;
    if (!std::filesystem::exists(dir / "manifest.jsonl"))
        throw MissingInputError("dataset not found under " + dir.string() +
                                " (run the gen command first)");
    return load_dataset(dir);
}

ModelParams load_checkpoint_checked(const RunConfig& cfg,
                                    const std::filesystem::path& checkpoint) {
    if (!std::filesystem::exists(checkpoint))
        throw MissingInputError("checkpoint not found: " + checkpoint.string());
    ModelParams params = load_checkpoint(checkpoint);
    EncoderConfig expected = cfg.encoder;
    expected.seed = params.config.seed;  // the echo pins the original seed
    if (!(params.config == expected))
        throw MismatchError("checkpoint " + checkpoint.string() +
                            " was trained with a different encoder configuration "
                            "than the supplied config");
    return params;
}

void write_features(const std::vector<VideoFeature>& features,
                    const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw MissingInputError("cannot open " + path.string());
    for (const auto& f : features) {
        json j;
        j["video_id"] = f.video_id;
        j["motion_class"] = f.motion_class;
        j["appearance_class"] = f.appearance_class;
        j["vector"] = f.vector;
        out << j.dump() << '\n';
    }
}

std::set<int> cue_class_set(const RunConfig& cfg) {
    std::set<int> cues;
    for (int c = 0; c < cfg.dataset.appearance_cue_classes; ++c) cues.insert(c);
    return cues;
}

}  // namespace

void apply_determinism(const RunConfig& cfg) {
    if (cfg.deterministic) kernels::force_backend(kernels::Backend::Scalar);
}

void run_gen(const RunConfig& cfg) {
    apply_determinism(cfg);
    const auto records = generate_dataset(cfg.dataset);
    std::filesystem::create_directories(cfg.data_dir);
    write_dataset(records, cfg.data_dir);
    echo_config(cfg, cfg.data_dir);
}

void write_metrics_log(const std::vector<EpochMetrics>& log,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw MissingInputError("cannot open " + path.string());
    for (const auto& m : log) {
        json j;
        j["epoch"] = m.epoch;
        j["stage"] = m.stage;
        j["mean_loss"] = m.mean_loss;
        j["mean_rank_ad_pos"] =
            m.ranks.mean_rank_ad_pos ? json(*m.ranks.mean_rank_ad_pos) : json(nullptr);
        j["mean_rank_intra_negs"] = m.ranks.mean_rank_intra_negs
                                        ? json(*m.ranks.mean_rank_intra_negs)
                                        : json(nullptr);
        j["lr"] = m.lr;
        out << j.dump() << '\n';
    }
}

std::vector<EpochMetrics> read_metrics_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("metrics log not found: " + path.string());
    std::vector<EpochMetrics> log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError("metrics log: " + std::string(e.what()));
        }
        EpochMetrics m;
        m.epoch = j.at("epoch").get<std::uint32_t>();
        m.stage = j.at("stage").get<std::string>();
        m.mean_loss = j.at("mean_loss").get<double>();
        if (!j.at("mean_rank_ad_pos").is_null())
            m.ranks.mean_rank_ad_pos = j.at("mean_rank_ad_pos").get<double>();
        if (!j.at("mean_rank_intra_negs").is_null())
            m.ranks.mean_rank_intra_negs = j.at("mean_rank_intra_negs").get<double>();
        m.lr = j.at("lr").get<double>();
        log.push_back(std::move(m));
    }
    return log;
}

PretrainArtifacts run_pretrain(const RunConfig& cfg) {
    apply_determinism(cfg);
    auto all = load_dataset_checked(cfg);
    std::vector<VideoRecord> test;
    for (auto& v : all) {
        if (v.split == Split::test) test.push_back(v);
    }
    const auto train = take_split(Split::train, std::move(all));
    if (train.empty()) throw MissingInputError("dataset has no train split videos");

    const TrainResult result = run_pretraining(train, cfg.encoder, cfg.optim,
                                               cfg.schedule, cfg.seed,
                                               test.empty() ? nullptr : &test);

    const std::filesystem::path out = cfg.out_dir;
    echo_config(cfg, out);
    PretrainArtifacts artifacts;
    artifacts.checkpoint = out / "checkpoint.moqd";
    artifacts.metrics = out / "metrics.jsonl";
    save_checkpoint(result.params, artifacts.checkpoint);
    write_metrics_log(result.log, artifacts.metrics);
    return artifacts;
}

namespace {

EvalArtifacts evaluate_impl(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                            bool with_probe) {
    apply_determinism(cfg);
    const ModelParams params = load_checkpoint_checked(cfg, checkpoint);

    auto all = load_dataset_checked(cfg);
    std::vector<VideoRecord> train, test;
    for (auto& v : all) {
        (v.split == Split::train ? train : test).push_back(std::move(v));
    }
    if (train.empty() || test.empty())
        throw MissingInputError("evaluation needs both train and test split videos");

    const auto gallery = pool_all_features(params, train, cfg.eval);
    const auto queries = pool_all_features(params, test, cfg.eval);

    const std::filesystem::path out = cfg.out_dir;
    echo_config(cfg, out);
    write_features(gallery, out / "features_train.jsonl");
    write_features(queries, out / "features_test.jsonl");

    const RetrievalResult retrieval = retrieve(queries, gallery);
    json results;
    results["top1"] = retrieval.top_k_accuracy.at(1);
    results["top5"] = retrieval.top_k_accuracy.at(5);
    results["top10"] = retrieval.top_k_accuracy.at(10);

    if (with_probe) {
        const ProbeResult probe = linear_probe(gallery, queries, cfg.probe);
        const CategoryReport report = per_category_report(probe, cue_class_set(cfg));
        results["probe_train_acc"] = probe.train_accuracy;
        results["probe_test_acc"] = probe.test_accuracy;
        json per_class = json::object();
        for (const auto& row : report.rows) {
            per_class[std::to_string(row.motion_class)] = {
                {"accuracy", row.accuracy},
                {"count", row.count},
                {"group", row.appearance_cue ? "appearance_cue" : "motion_only"},
            };
        }
        results["per_class"] = per_class;
        results["cue_group_accuracy"] = report.cue_group_accuracy;
        results["motion_group_accuracy"] = report.motion_group_accuracy;
    }

    EvalArtifacts artifacts;
    artifacts.results = results;
    artifacts.results_path = out / "results.json";
    std::ofstream rf(artifacts.results_path, std::ios::trunc);
    rf << results.dump(2) << '\n';
    return artifacts;
}

}  // namespace

EvalArtifacts run_evaluate(const RunConfig& cfg, const std::filesystem::path& checkpoint) {
    return evaluate_impl(cfg, checkpoint, true);
}

EvalArtifacts run_retrieve(const RunConfig& cfg, const std::filesystem::path& checkpoint) {
    return evaluate_impl(cfg, checkpoint, false);
}

void run_diag(const std::filesystem::path& metrics_path,
              const std::filesystem::path& csv_path) {
    const auto log = read_metrics_log(metrics_path);
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw MissingInputError("cannot open " + csv_path.string());
    out << "epoch,mean_rank_ad_pos,mean_rank_intra_negs\n";
    for (const auto& m : log) {
        if (m.stage != "moquad") continue;
        out << m.epoch << ',';
        if (m.ranks.mean_rank_ad_pos) out << *m.ranks.mean_rank_ad_pos;
        out << ',';
        if (m.ranks.mean_rank_intra_negs) out << *m.ranks.mean_rank_intra_negs;
        out << '\n';
    }
}

std::vector<std::string> sweep_grid_names() {
    return {"components", "appearance_ops", "motion_ops", "mining", "warmup"};
}

nlohmann::json run_sweep(const RunConfig& base, const std::string& grid) {
    struct Arm {
        std::string name;
        RunConfig cfg;
    };
    std::vector<Arm> arms;

    auto with = [&base](const std::string& name, auto&& mutate) {
        RunConfig cfg = base;
        mutate(cfg);
        cfg.out_dir = base.out_dir + "/" + name;
        return Arm{name, cfg};
    };

    if (grid == "components") {
        arms.push_back(with("simclr", [](RunConfig& c) {
            c.schedule.quad.enable_ad_pos = false;
            c.schedule.quad.enable_intra_neg = false;
            c.schedule.quad.enable_ad_intra_neg = false;
        }));
        arms.push_back(with("ad_pos", [](RunConfig& c) {
            c.schedule.quad.enable_ad_pos = true;
            c.schedule.quad.enable_intra_neg = false;
            c.schedule.quad.enable_ad_intra_neg = false;
        }));
        arms.push_back(with("ad_pos_intra", [](RunConfig& c) {
            c.schedule.quad.enable_ad_pos = true;
            c.schedule.quad.enable_intra_neg = true;
            c.schedule.quad.enable_ad_intra_neg = false;
        }));
        arms.push_back(with("full", [](RunConfig& c) {
            c.schedule.quad.enable_ad_pos = true;
            c.schedule.quad.enable_intra_neg = true;
            c.schedule.quad.enable_ad_intra_neg = true;
        }));
    } else if (grid == "appearance_ops") {
        for (const auto mode : {DonorMode::be_baseline, DonorMode::intra, DonorMode::inter}) {
            arms.push_back(with(donor_mode_name(mode), [mode](RunConfig& c) {
                c.schedule.quad.rad.donor_mode = mode;
            }));
        }
    } else if (grid == "motion_ops") {
        for (const auto kind : {MotionDisturbKind::reverse, MotionDisturbKind::shuffle,
                                MotionDisturbKind::speed}) {
            arms.push_back(with(motion_kind_name(kind), [kind](RunConfig& c) {
                c.schedule.quad.motion_op = kind;
            }));
        }
    } else if (grid == "mining") {
        struct MiningArm {
            const char* name;
            bool enabled;
            double beta, alpha;
        };
        for (const MiningArm m : {MiningArm{"off", false, 0.0, 1.0},
                                  MiningArm{"b0.01_a1.5", true, 0.01, 1.5},
                                  MiningArm{"b0.01_a2.0", true, 0.01, 2.0},
                                  MiningArm{"b0.01_a3.0", true, 0.01, 3.0},
                                  MiningArm{"b0.05_a1.5", true, 0.05, 1.5}}) {
            arms.push_back(with(m.name, [m](RunConfig& c) {
                c.schedule.loss.mining_enabled = m.enabled;
                c.schedule.loss.beta = m.beta;
                c.schedule.loss.alpha = m.alpha;
            }));
        }
    } else if (grid == "warmup") {
        for (const double p : {0.0, 0.1, 0.2, 0.4, 0.6}) {
            arms.push_back(with("p" + std::to_string(p).substr(0, 3),
                                [p](RunConfig& c) { c.schedule.warmup_ratio = p; }));
        }
    } else {
        throw ConfigError("sweep: unknown grid \"" + grid + "\"");
    }

    json summary = json::array();
    for (const auto& arm : arms) {
        const PretrainArtifacts pre = run_pretrain(arm.cfg);
        const EvalArtifacts ev = run_evaluate(arm.cfg, pre.checkpoint);
        json row = ev.results;
        row["arm"] = arm.name;
        summary.push_back(row);
    }

    std::filesystem::create_directories(base.out_dir);
    std::ofstream out(std::filesystem::path(base.out_dir) / "sweep_summary.json",
                      std::ios::trunc);
    out << summary.dump(2) << '\n';
    return summary;
}

}  // namespace moquad
