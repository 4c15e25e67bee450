// Command-line front end: corpus generation, training, evaluation, and
// ablation grids over the serialized multitask dialogue models.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sermux/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

sermux::ExperimentConfig load_config(const std::string& path, const std::string& preset_name) {
    sermux::ExperimentConfig cfg;
    if (!preset_name.empty()) cfg = sermux::preset(preset_name);
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw sermux::IoError("cannot read config file: " + path);
        json j;
        is >> j;
        if (!preset_name.empty()) {
            // overlay file values on top of the preset
            json base = cfg;
            base.merge_patch(j);
            j = base;
        }
        cfg = j.get<sermux::ExperimentConfig>();
    }
    return cfg;
}

std::string resolve_output_dir(const std::string& dir) {
    if (dir.empty()) return dir;
    fs::path p(dir);
    if (p.is_absolute()) return dir;
    const char* root = std::getenv("SERMUX_OUTPUT_ROOT");
    if (!root || !*root) return dir;
    return (fs::path(root) / p).string();
}

std::string fmt_pct(const std::optional<double>& v) {
    if (!v) return "   -";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%4.1f", *v * 100.0);
    return buf;
}

void print_report_row(const std::string& name, const sermux::EvalReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-18s  Curr UA %s  Resp UA %s  BLEU %5.1f  malformed %4.1f%%",
                  name.c_str(), fmt_pct(r.curr_ua).c_str(), fmt_pct(r.resp_ua).c_str(),
                  r.bleu * 100.0, r.malformed_rate * 100.0);
    std::cout << buf << '\n';
}

int cmd_gen_corpus(const std::string& spec_path, const std::string& out_dir, uint64_t seed,
                   int n_dialogues) {
    sermux::GeneratorSpec spec;
    if (!spec_path.empty()) {
        std::ifstream is(spec_path);
        if (!is) throw sermux::IoError("cannot read generator spec: " + spec_path);
        json j;
        is >> j;
        spec = j.get<sermux::GeneratorSpec>();
    }
    if (seed) spec.seed = seed;
    if (n_dialogues) spec.n_dialogues = n_dialogues;
    sermux::Corpus corpus = sermux::generate_synthetic_corpus(spec);
    sermux::save_corpus(corpus, out_dir);
    for (auto split : {sermux::Split::Train, sermux::Split::Dev, sermux::Split::Test}) {
        auto counts = sermux::class_distribution(corpus, split);
        std::printf("%-5s  positive %ld  neutral %ld  negative %ld\n", sermux::split_name(split),
                    counts[0], counts[1], counts[2]);
    }
    std::cout << "wrote " << corpus.dialogues.size() << " dialogues to " << out_dir << '\n';
    return 0;
}

int cmd_train(sermux::ExperimentConfig cfg) {
    cfg = sermux::normalized(cfg);
    if (cfg.system != sermux::SystemKind::Serialized)
        throw sermux::ValidationError("train: only serialized/lm_only systems train standalone; "
                                      "use `eval` for classifier and random presets");
    sermux::Corpus corpus = sermux::resolve_corpus(cfg);
    sermux::Vocabulary vocab = sermux::build_vocabulary(corpus);
    cfg.model.vocab_size = vocab.size();
    sermux::PooledCache cache(corpus);
    auto train_set = sermux::dataset(corpus, sermux::Split::Train, cfg.assembly, vocab);
    auto dev_set = sermux::dataset(corpus, sermux::Split::Dev, cfg.assembly, vocab);
    auto params = sermux::init_parameters(cfg.model, cfg.train.seed);
    auto result = sermux::train(cfg.train, train_set, dev_set, cache, std::move(params));

    std::string out = resolve_output_dir(cfg.output_dir.empty() ? "run" : cfg.output_dir);
    fs::create_directories(out);
    sermux::save_checkpoint(result.best_params, (fs::path(out) / "checkpoint.bin").string());
    vocab.save((fs::path(out) / "vocab.json").string());
    std::ofstream lf(fs::path(out) / "train_log.jsonl");
    for (const auto& e : result.log)
        lf << json({{"step", e.step}, {"train_loss", e.train_loss}, {"dev_loss", e.dev_loss}})
                  .dump()
           << '\n';
    std::printf("best dev loss %.6f at step %ld; checkpoint written to %s\n",
                result.best_dev_loss, result.best_step, out.c_str());
    return 0;
}

int cmd_eval(sermux::ExperimentConfig cfg, const std::string& checkpoint) {
    cfg.output_dir = resolve_output_dir(cfg.output_dir);
    sermux::RunResult result;
    if (!checkpoint.empty()) {
        sermux::Corpus corpus = sermux::resolve_corpus(cfg);
        auto params = sermux::load_checkpoint(checkpoint);
        result = sermux::evaluate_checkpoint(cfg, corpus, params);
        if (!cfg.output_dir.empty()) {
            fs::create_directories(cfg.output_dir);
            std::ofstream rep(fs::path(cfg.output_dir) / "report.json");
            rep << json(result.report).dump(2) << '\n';
        }
    } else {
        result = sermux::run(cfg);
    }
    print_report_row(cfg.name.empty() ? sermux::system_name(cfg.system) : cfg.name,
                     result.report);
    return 0;
}

int cmd_ablate(const sermux::ExperimentConfig& base, const std::string& axis,
               const std::vector<std::string>& values, int seeds, const std::string& out_path) {
    auto result = sermux::ablate(base, axis, values, seeds);
    std::cout << "axis: " << axis << " (mean over " << seeds << " seeds)\n";
    for (const auto& row : result.rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "%-16s  Curr UA %s  Resp UA %s  BLEU %5.1f  malformed %4.1f%%",
                      row.value.c_str(), fmt_pct(row.mean.curr_ua).c_str(),
                      fmt_pct(row.mean.resp_ua).c_str(), row.mean.bleu * 100.0,
                      row.mean.malformed_rate * 100.0);
        std::cout << buf << '\n';
    }
    if (!out_path.empty()) {
        std::string resolved = resolve_output_dir(out_path);
        std::ofstream os(resolved);
        if (!os) throw sermux::IoError("cannot write ablation result: " + resolved);
        os << json(result).dump(2) << '\n';
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& paths) {
    for (const auto& path : paths) {
        std::ifstream is(path);
        if (!is) throw sermux::IoError("cannot read report: " + path);
        json j;
        is >> j;
        print_report_row(fs::path(path).parent_path().filename().string(),
                         j.get<sermux::EvalReport>());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"serialized multitask spoken-dialogue modeling experiments"};
    app.require_subcommand(1);

    // gen-corpus
    std::string spec_path, corpus_out = "corpus";
    uint64_t gen_seed = 0;
    int gen_n = 0;
    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
    gen->add_option("--spec", spec_path, "generator spec json");
    gen->add_option("--out", corpus_out, "output directory");
    gen->add_option("--seed", gen_seed, "override generator seed");
    gen->add_option("--n-dialogues", gen_n, "override dialogue count");

    // shared config options
    std::string config_path, preset_name, out_dir, checkpoint;
    auto add_config_opts = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config json");
        sub->add_option("--preset", preset_name, "row preset (row4..row15)");
        sub->add_option("--out", out_dir, "output directory (under $SERMUX_OUTPUT_ROOT)");
    };

    auto* train_cmd = app.add_subcommand("train", "train a serialized model");
    add_config_opts(train_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "train-and-evaluate (or evaluate a checkpoint)");
    add_config_opts(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint, "evaluate an existing checkpoint");

    std::string axis;
    std::vector<std::string> values;
    int seeds = 3;
    std::string ablate_out;
    auto* ablate_cmd = app.add_subcommand("ablate", "run one config per axis value");
    add_config_opts(ablate_cmd);
    ablate_cmd->add_option("--axis", axis, "ordering | window | modality | sentiment-context")
        ->required();
    ablate_cmd->add_option("--values", values, "axis values")->required();
    ablate_cmd->add_option("--seeds", seeds, "seed replicas per value");
    ablate_cmd->add_option("--result", ablate_out, "write the grid as json");

    std::vector<std::string> report_paths;
    auto* report_cmd = app.add_subcommand("report", "print report.json files as a table");
    report_cmd->add_option("paths", report_paths, "report.json paths")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_corpus(spec_path, corpus_out, gen_seed, gen_n);
        if (report_cmd->parsed()) return cmd_report(report_paths);

        sermux::ExperimentConfig cfg = load_config(config_path, preset_name);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (train_cmd->parsed()) return cmd_train(cfg);
        if (eval_cmd->parsed()) return cmd_eval(cfg, checkpoint);
        if (ablate_cmd->parsed()) return cmd_ablate(cfg, axis, values, seeds, ablate_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
