#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "sermux/experiment.hpp"

using namespace sermux;
namespace fs = std::filesystem;

namespace {

/// Small-enough-to-train-in-a-test overrides on top of a preset.
ExperimentConfig shrink(ExperimentConfig cfg) {
    cfg.generator.n_dialogues = 50;
    cfg.generator.min_turns = 2;
    cfg.generator.max_turns = 3;
    cfg.generator.seed = 77;
    cfg.model.model_dim = 8;
    cfg.model.n_layers = 1;
    cfg.model.n_heads = 2;
    cfg.model.mlp_ratio = 2;
    cfg.train.batch_size = 4;
    cfg.train.max_steps = 5;
    cfg.train.eval_every = 5;
    cfg.generation.max_new_tokens = 8;
    return cfg;
}

} // namespace

TEST_CASE("presets cover the full comparison table") {
    auto names = all_preset_names();
    REQUIRE(names.size() == 12);
    for (const auto& name : names) REQUIRE(preset(name).name == name);
    REQUIRE_THROWS_AS(preset("row3"), ValidationError);

    ExperimentConfig full = preset("row15");
    REQUIRE(full.system == SystemKind::Serialized);
    REQUIRE(full.assembly.use_current_speech);
    REQUIRE(full.assembly.use_context_text);
    REQUIRE(full.assembly.use_context_speech);
    REQUIRE(full.assembly.use_context_sentiment);
    REQUIRE(full.assembly.window == 4);
    REQUIRE(full.assembly.ordering == TaskOrdering::CurrRespText);

    REQUIRE(preset("row4").system == SystemKind::Random);
    REQUIRE(preset("row5").system == SystemKind::LmOnly);
    REQUIRE_FALSE(preset("row5").assembly.use_context_text);
    REQUIRE(preset("row6").assembly.use_context_text);
    REQUIRE_FALSE(preset("row6").assembly.use_context_speech);

    REQUIRE(preset("row7").classifier.modality == ClassifierSpec::Modality::Text);
    REQUIRE(preset("row8").classifier.modality == ClassifierSpec::Modality::Speech);
    REQUIRE(preset("row9").classifier.modality == ClassifierSpec::Modality::TextSpeech);

    ExperimentConfig r10 = preset("row10");
    REQUIRE(r10.system == SystemKind::Serialized);
    REQUIRE_FALSE(r10.assembly.use_current_speech);
    REQUIRE_FALSE(r10.assembly.use_context_text);
    REQUIRE_FALSE(r10.assembly.use_context_sentiment);

    REQUIRE(preset("row12").assembly.use_context_sentiment);
    REQUIRE_FALSE(preset("row12").assembly.use_context_speech);
    REQUIRE(preset("row13").assembly.use_current_speech);
    REQUIRE(preset("row14").assembly.use_context_speech);
    REQUIRE_FALSE(preset("row14").assembly.use_context_sentiment);
}

TEST_CASE("presets differ from the flagship only in system and context flags") {
    ExperimentConfig base = preset("row15");
    for (const auto& name : all_preset_names()) {
        for (const auto& path : config_diff(preset(name), base)) {
            bool allowed = path == "/name" || path.rfind("/assembly/", 0) == 0 ||
                           path == "/system" || path.rfind("/classifier/", 0) == 0;
            INFO(name << " differs at " << path);
            REQUIRE(allowed);
        }
    }
}

TEST_CASE("experiment configs round-trip through json") {
    ExperimentConfig cfg = preset("row9");
    cfg.corpus_path = "/tmp/somewhere";
    cfg.output_dir = "out/run1";
    cfg.generation.mode = GenerationConfig::Mode::Sample;
    cfg.generation.temperature = 0.7;
    nlohmann::json j = cfg;
    ExperimentConfig back = j.get<ExperimentConfig>();
    REQUIRE(config_fingerprint(back) == config_fingerprint(cfg));
    REQUIRE(config_diff(back, cfg).empty());
}

TEST_CASE("lm_only is the serialized pipeline under the text-only grammar") {
    ExperimentConfig lm = preset("row6");
    ExperimentConfig norm = normalized(lm);
    REQUIRE(norm.system == SystemKind::Serialized);
    REQUIRE(norm.assembly.ordering == TaskOrdering::TextOnly);
    REQUIRE_FALSE(norm.assembly.use_context_sentiment);
    // normalization only touches those fields
    auto diff = config_diff(norm, lm);
    for (const auto& path : diff)
        REQUIRE((path == "/system" || path == "/assembly/ordering" ||
                 path == "/assembly/use_context_sentiment"));
}

TEST_CASE("the random system scores both labels near chance") {
    ExperimentConfig cfg = shrink(preset("row4"));
    cfg.generator.n_dialogues = 2000;
    RunResult r = run(cfg);
    REQUIRE(r.report.curr_ua.has_value());
    REQUIRE(r.report.resp_ua.has_value());
    REQUIRE(std::abs(*r.report.curr_ua - 1.0 / 3.0) < 0.10);
    REQUIRE(std::abs(*r.report.resp_ua - 1.0 / 3.0) < 0.10);
    REQUIRE(r.report.bleu == 0.0); // no generated text
    REQUIRE(r.train_log.empty());  // nothing was trained
}

TEST_CASE("a serialized run writes its artifacts and reloads identically") {
    ExperimentConfig cfg = shrink(preset("row15"));
    auto dir = fs::temp_directory_path() / "sermux_run_artifacts";
    fs::remove_all(dir);
    cfg.output_dir = dir.string();
    RunResult r = run(cfg);
    REQUIRE(fs::exists(dir / "report.json"));
    REQUIRE(fs::exists(dir / "predictions.jsonl"));
    REQUIRE(fs::exists(dir / "train_log.jsonl"));
    REQUIRE(fs::exists(dir / "vocab.json"));
    REQUIRE(fs::exists(dir / "checkpoint.bin"));

    // the written report parses back to the in-memory one
    std::ifstream is(dir / "report.json");
    EvalReport back = nlohmann::json::parse(is).get<EvalReport>();
    REQUIRE(back.bleu == r.report.bleu);
    REQUIRE(back.curr_ua == r.report.curr_ua);
    REQUIRE(back.config_fingerprint == r.report.config_fingerprint);

    // the checkpoint reproduces the predictions
    Corpus corpus = resolve_corpus(cfg);
    ModelParameters params = load_checkpoint((dir / "checkpoint.bin").string());
    RunResult again = evaluate_checkpoint(cfg, corpus, params);
    REQUIRE(again.report.curr_ua == r.report.curr_ua);
    REQUIRE(again.report.resp_ua == r.report.resp_ua);
    REQUIRE(again.report.bleu == r.report.bleu);
    REQUIRE(again.predictions.size() == r.predictions.size());
    fs::remove_all(dir);
}

TEST_CASE("runs are deterministic end to end") {
    ExperimentConfig cfg = shrink(preset("row12"));
    RunResult a = run(cfg);
    RunResult b = run(cfg);
    REQUIRE(nlohmann::json(a.report).dump() == nlohmann::json(b.report).dump());
    REQUIRE(a.predictions.size() == b.predictions.size());
    for (size_t i = 0; i < a.predictions.size(); ++i) {
        REQUIRE(a.predictions[i].pred.current_label == b.predictions[i].pred.current_label);
        REQUIRE(a.predictions[i].pred.response_words == b.predictions[i].pred.response_words);
    }
}

TEST_CASE("seed averaging reports the mean of the per-seed metrics") {
    ExperimentConfig cfg = shrink(preset("row4"));
    cfg.generator.n_dialogues = 100;
    SeededMean mean = run_seeds(cfg, 3);
    REQUIRE(mean.per_seed.size() == 3);
    double curr = 0.0, resp = 0.0;
    for (const auto& r : mean.per_seed) {
        curr += *r.curr_ua;
        resp += *r.resp_ua;
    }
    REQUIRE(std::abs(*mean.curr_ua - curr / 3.0) < 1e-12);
    REQUIRE(std::abs(*mean.resp_ua - resp / 3.0) < 1e-12);
    // different seeds actually produce different corpora/predictions
    REQUIRE((mean.per_seed[0].curr_ua != mean.per_seed[1].curr_ua ||
             mean.per_seed[0].resp_ua != mean.per_seed[1].resp_ua));
}

TEST_CASE("ablation axes rewrite the intended fields") {
    ExperimentConfig base = preset("row15");
    REQUIRE(apply_axis_value(base, "ordering", "resp_text").assembly.ordering ==
            TaskOrdering::RespText);
    ExperimentConfig w0 = apply_axis_value(base, "window", "0");
    REQUIRE(w0.assembly.window == 0);
    REQUIRE_FALSE(w0.assembly.use_context_text);
    REQUIRE(apply_axis_value(base, "window", "2").assembly.use_context_text);
    ExperimentConfig t = apply_axis_value(base, "modality", "T");
    REQUIRE_FALSE(t.assembly.use_current_speech);
    REQUIRE_FALSE(t.assembly.use_context_speech);
    REQUIRE_FALSE(
        apply_axis_value(base, "sentiment-context", "off").assembly.use_context_sentiment);
    REQUIRE_THROWS_AS(apply_axis_value(base, "flux", "1"), ValidationError);
    REQUIRE_THROWS_AS(apply_axis_value(base, "modality", "S"), ValidationError);
}

TEST_CASE("ablating the random system over an axis runs all cells") {
    ExperimentConfig cfg = shrink(preset("row4"));
    cfg.generator.n_dialogues = 60;
    AblationResult abl = ablate(cfg, "sentiment-context", {"off", "on"}, 2);
    REQUIRE(abl.axis == "sentiment-context");
    REQUIRE(abl.rows.size() == 2);
    for (const auto& row : abl.rows) REQUIRE(row.mean.per_seed.size() == 2);
    nlohmann::json j = abl; // serializes without throwing
    REQUIRE(j.at("rows").size() == 2);
}
