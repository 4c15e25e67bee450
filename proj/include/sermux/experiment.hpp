#ifndef SERMUX_EXPERIMENT_HPP
#define SERMUX_EXPERIMENT_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sermux/assembler.hpp"
#include "sermux/baselines.hpp"
#include "sermux/common.hpp"
#include "sermux/corpus.hpp"
#include "sermux/generator.hpp"
#include "sermux/metrics.hpp"
#include "sermux/model.hpp"
#include "sermux/trainer.hpp"
#include "sermux/vocab.hpp"

namespace sermux {

enum class SystemKind { Serialized, LmOnly, Classifier, Random };

inline const char* system_name(SystemKind s) {
    switch (s) {
        case SystemKind::Serialized: return "serialized";
        case SystemKind::LmOnly: return "lm_only";
        case SystemKind::Classifier: return "classifier";
        case SystemKind::Random: return "random";
    }
    return "?";
}

inline SystemKind system_from_name(const std::string& s) {
    if (s == "serialized") return SystemKind::Serialized;
    if (s == "lm_only") return SystemKind::LmOnly;
    if (s == "classifier") return SystemKind::Classifier;
    if (s == "random") return SystemKind::Random;
    throw FormatError("unknown system: " + s);
}

struct ExperimentConfig {
    std::string name;        // preset name or free-form label
    std::string corpus_path; // if empty, the generator spec below is used
    GeneratorSpec generator;
    AssemblyConfig assembly;
    ModelConfig model; // vocab_size resolved from the corpus at run time
    TrainConfig train;
    GenerationConfig generation;
    SystemKind system = SystemKind::Serialized;
    ClassifierSpec classifier;
    std::string output_dir;
};

// ---- json for config structs ----

inline void to_json(nlohmann::json& j, const GeneratorSpec& s) {
    j = {{"n_dialogues", s.n_dialogues},
         {"min_turns", s.min_turns},
         {"max_turns", s.max_turns},
         {"class_prior", s.class_prior},
         {"markov_transition", s.markov_transition},
         {"sarcasm_rate", s.sarcasm_rate},
         {"feature_dim", s.feature_dim},
         {"feature_cluster_separation", s.feature_cluster_separation},
         {"min_frames", s.min_frames},
         {"max_frames", s.max_frames},
         {"template_bank", s.template_bank},
         {"train_fraction", s.train_fraction},
         {"dev_fraction", s.dev_fraction},
         {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, GeneratorSpec& s) {
    s = GeneratorSpec{};
    if (j.contains("n_dialogues")) j.at("n_dialogues").get_to(s.n_dialogues);
    if (j.contains("min_turns")) j.at("min_turns").get_to(s.min_turns);
    if (j.contains("max_turns")) j.at("max_turns").get_to(s.max_turns);
    if (j.contains("class_prior")) j.at("class_prior").get_to(s.class_prior);
    if (j.contains("markov_transition")) j.at("markov_transition").get_to(s.markov_transition);
    if (j.contains("sarcasm_rate")) j.at("sarcasm_rate").get_to(s.sarcasm_rate);
    if (j.contains("feature_dim")) j.at("feature_dim").get_to(s.feature_dim);
    if (j.contains("feature_cluster_separation"))
        j.at("feature_cluster_separation").get_to(s.feature_cluster_separation);
    if (j.contains("min_frames")) j.at("min_frames").get_to(s.min_frames);
    if (j.contains("max_frames")) j.at("max_frames").get_to(s.max_frames);
    if (j.contains("template_bank")) j.at("template_bank").get_to(s.template_bank);
    if (j.contains("train_fraction")) j.at("train_fraction").get_to(s.train_fraction);
    if (j.contains("dev_fraction")) j.at("dev_fraction").get_to(s.dev_fraction);
    if (j.contains("seed")) j.at("seed").get_to(s.seed);
}

inline void to_json(nlohmann::json& j, const AssemblyConfig& c) {
    j = {{"window", c.window},
         {"max_positions", c.max_positions},
         {"use_context_text", c.use_context_text},
         {"use_context_speech", c.use_context_speech},
         {"use_context_sentiment", c.use_context_sentiment},
         {"use_current_speech", c.use_current_speech},
         {"ordering", ordering_name(c.ordering)}};
}

inline void from_json(const nlohmann::json& j, AssemblyConfig& c) {
    c = AssemblyConfig{};
    if (j.contains("window")) j.at("window").get_to(c.window);
    if (j.contains("max_positions")) j.at("max_positions").get_to(c.max_positions);
    if (j.contains("use_context_text")) j.at("use_context_text").get_to(c.use_context_text);
    if (j.contains("use_context_speech")) j.at("use_context_speech").get_to(c.use_context_speech);
    if (j.contains("use_context_sentiment"))
        j.at("use_context_sentiment").get_to(c.use_context_sentiment);
    if (j.contains("use_current_speech"))
        j.at("use_current_speech").get_to(c.use_current_speech);
    if (j.contains("ordering")) c.ordering = ordering_from_name(j.at("ordering"));
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
         {"beta1", c.beta1},           {"beta2", c.beta2},
         {"epsilon", c.epsilon},       {"max_steps", c.max_steps},
         {"eval_every", c.eval_every}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    c = TrainConfig{};
    if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
    if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
    if (j.contains("beta1")) j.at("beta1").get_to(c.beta1);
    if (j.contains("beta2")) j.at("beta2").get_to(c.beta2);
    if (j.contains("epsilon")) j.at("epsilon").get_to(c.epsilon);
    if (j.contains("max_steps")) j.at("max_steps").get_to(c.max_steps);
    if (j.contains("eval_every")) j.at("eval_every").get_to(c.eval_every);
    if (j.contains("seed")) j.at("seed").get_to(c.seed);
}

inline void to_json(nlohmann::json& j, const GenerationConfig& c) {
    j = {{"mode", c.mode == GenerationConfig::Mode::Greedy ? "greedy" : "sample"},
         {"temperature", c.temperature},
         {"max_new_tokens", c.max_new_tokens},
         {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, GenerationConfig& c) {
    c = GenerationConfig{};
    if (j.contains("mode")) {
        std::string m = j.at("mode");
        if (m == "greedy")
            c.mode = GenerationConfig::Mode::Greedy;
        else if (m == "sample")
            c.mode = GenerationConfig::Mode::Sample;
        else
            throw FormatError("unknown generation mode: " + m);
    }
    if (j.contains("temperature")) j.at("temperature").get_to(c.temperature);
    if (j.contains("max_new_tokens")) j.at("max_new_tokens").get_to(c.max_new_tokens);
    if (j.contains("seed")) j.at("seed").get_to(c.seed);
}

inline void to_json(nlohmann::json& j, const ClassifierSpec& s) {
    j = {{"modality", modality_name(s.modality)},
         {"target", s.target == ClassifierSpec::Target::Current ? "current" : "response"}};
}

inline void from_json(const nlohmann::json& j, ClassifierSpec& s) {
    s = ClassifierSpec{};
    if (j.contains("modality")) {
        std::string m = j.at("modality");
        if (m == "T")
            s.modality = ClassifierSpec::Modality::Text;
        else if (m == "S")
            s.modality = ClassifierSpec::Modality::Speech;
        else if (m == "T+S")
            s.modality = ClassifierSpec::Modality::TextSpeech;
        else
            throw FormatError("unknown classifier modality: " + m);
    }
    if (j.contains("target")) {
        std::string t = j.at("target");
        if (t == "current")
            s.target = ClassifierSpec::Target::Current;
        else if (t == "response")
            s.target = ClassifierSpec::Target::Response;
        else
            throw FormatError("unknown classifier target: " + t);
    }
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = {{"name", c.name},
         {"corpus_path", c.corpus_path},
         {"generator", c.generator},
         {"assembly", c.assembly},
         {"model", c.model},
         {"train", c.train},
         {"generation", c.generation},
         {"system", system_name(c.system)},
         {"classifier", c.classifier},
         {"output_dir", c.output_dir}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    c = ExperimentConfig{};
    if (j.contains("name")) j.at("name").get_to(c.name);
    if (j.contains("corpus_path")) j.at("corpus_path").get_to(c.corpus_path);
    if (j.contains("generator")) j.at("generator").get_to(c.generator);
    if (j.contains("assembly")) j.at("assembly").get_to(c.assembly);
    if (j.contains("model")) j.at("model").get_to(c.model);
    if (j.contains("train")) j.at("train").get_to(c.train);
    if (j.contains("generation")) j.at("generation").get_to(c.generation);
    if (j.contains("system")) c.system = system_from_name(j.at("system"));
    if (j.contains("classifier")) j.at("classifier").get_to(c.classifier);
    if (j.contains("output_dir")) j.at("output_dir").get_to(c.output_dir);
}

inline uint64_t config_fingerprint(const ExperimentConfig& c) {
    return fnv1a64(nlohmann::json(c).dump());
}

/// JSON paths (flattened) on which two configs differ.
inline std::vector<std::string> config_diff(const ExperimentConfig& a,
                                            const ExperimentConfig& b) {
    auto fa = nlohmann::json(a).flatten();
    auto fb = nlohmann::json(b).flatten();
    std::vector<std::string> paths;
    for (auto it = fa.begin(); it != fa.end(); ++it)
        if (!fb.contains(it.key()) || fb[it.key()] != it.value()) paths.push_back(it.key());
    for (auto it = fb.begin(); it != fb.end(); ++it)
        if (!fa.contains(it.key())) paths.push_back(it.key());
    return paths;
}

/// "lm_only" is the serialized pipeline restricted to the text-only target
/// grammar; there is no separate code path.
inline ExperimentConfig normalized(ExperimentConfig c) {
    if (c.system == SystemKind::LmOnly) {
        c.system = SystemKind::Serialized;
        c.assembly.ordering = TaskOrdering::TextOnly;
        c.assembly.use_context_sentiment = false;
    }
    return c;
}

// ---- Table-1-row presets ----

/// The full proposed system (row 15): serialized, T+S current and context,
/// context sentiment markers on.
inline ExperimentConfig preset_base() {
    ExperimentConfig c;
    c.name = "row15";
    c.generator.n_dialogues = 1000;
    c.generator.sarcasm_rate = 0.3;
    c.generator.feature_cluster_separation = 6.0;
    c.generator.seed = 11;
    c.assembly.window = 4;
    c.assembly.max_positions = 320;
    c.assembly.ordering = TaskOrdering::CurrRespText;
    c.model.model_dim = 128;
    c.model.n_layers = 4;
    c.model.n_heads = 4;
    c.model.feature_dim = c.generator.feature_dim;
    c.model.max_positions = 352; // assembly limit plus decoding room
    c.train.batch_size = 32;
    c.train.learning_rate = 1e-4;
    c.train.max_steps = 5000;
    c.train.eval_every = 250;
    c.generation.max_new_tokens = 24;
    c.system = SystemKind::Serialized;
    return c;
}

/// Table-1-style rows: each preset differs from row15 only in the system and
/// the modality/context/sentiment columns.
inline ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c = preset_base();
    c.name = name;
    auto current_modality = [&](bool speech) { c.assembly.use_current_speech = speech; };
    // none / "T" / "T+S"
    auto context_modality = [&](const std::string& m) {
        c.assembly.use_context_text = !m.empty();
        c.assembly.use_context_speech = (m == "T+S");
    };
    auto sentiment_context = [&](bool on) { c.assembly.use_context_sentiment = on; };

    if (name == "row4") {
        c.system = SystemKind::Random;
        current_modality(false);
        context_modality("");
        sentiment_context(false);
    } else if (name == "row5" || name == "row6") {
        c.system = SystemKind::LmOnly;
        current_modality(false);
        context_modality(name == "row6" ? "T" : "");
        sentiment_context(false);
    } else if (name == "row7" || name == "row8" || name == "row9") {
        c.system = SystemKind::Classifier;
        c.classifier.modality = name == "row7"   ? ClassifierSpec::Modality::Text
                                : name == "row8" ? ClassifierSpec::Modality::Speech
                                                 : ClassifierSpec::Modality::TextSpeech;
        current_modality(name != "row7");
        context_modality("");
        sentiment_context(false);
    } else if (name == "row10") {
        current_modality(false);
        context_modality("");
        sentiment_context(false);
    } else if (name == "row11") {
        current_modality(false);
        context_modality("T");
        sentiment_context(false);
    } else if (name == "row12") {
        current_modality(false);
        context_modality("T");
        sentiment_context(true);
    } else if (name == "row13") {
        current_modality(true);
        context_modality("");
        sentiment_context(false);
    } else if (name == "row14") {
        current_modality(true);
        context_modality("T+S");
        sentiment_context(false);
    } else if (name == "row15") {
        current_modality(true);
        context_modality("T+S");
        sentiment_context(true);
    } else {
        throw ValidationError("unknown preset: " + name + " (expected row4..row15)");
    }
    return c;
}

inline std::vector<std::string> all_preset_names() {
    return {"row4",  "row5",  "row6",  "row7",  "row8",  "row9",
            "row10", "row11", "row12", "row13", "row14", "row15"};
}

// ---- running ----

struct PredictionRecord {
    std::string dialogue_id;
    int n = 0;
    ParsedPrediction pred;
};

struct RunResult {
    EvalReport report;
    std::vector<PredictionRecord> predictions;
    std::vector<TrainLogEntry> train_log;
};

namespace detail {

struct TestItem {
    const Dialogue* dlg;
    int n;
    GoldTriple gold;
};

inline std::vector<TestItem> test_items(const Corpus& corpus, const AssemblyConfig& assembly) {
    std::vector<TestItem> items;
    for (const auto& dlg : corpus.dialogues) {
        if (dlg.split != Split::Test) continue;
        for (int n = 0; n + 1 < static_cast<int>(dlg.turns.size()); ++n) {
            TestItem it{&dlg, n, {}};
            it.gold.response_words = dlg.turns[n + 1].words;
            if (ordering_predicts_current(assembly.ordering))
                it.gold.current_label = dlg.turns[n].label;
            if (ordering_predicts_response_label(assembly.ordering))
                it.gold.response_label = dlg.turns[n + 1].label;
            items.push_back(std::move(it));
        }
    }
    return items;
}

} // namespace detail

/// Trains (or instantiates) the configured system, evaluates it on the test
/// split with greedy decoding, and optionally writes artifacts to output_dir.
inline RunResult run(const ExperimentConfig& declared, const Corpus& corpus) {
    ExperimentConfig cfg = normalized(declared);
    Vocabulary vocab = build_vocabulary(corpus);
    cfg.model.vocab_size = vocab.size();
    PooledCache cache(corpus);

    auto items = detail::test_items(corpus, cfg.assembly);
    if (items.empty()) throw ValidationError("run: empty test split");

    RunResult result;
    std::vector<ParsedPrediction> preds;
    std::vector<GoldTriple> golds;
    ModelParameters trained_params; // kept for checkpointing
    bool have_params = false;

    switch (cfg.system) {
        case SystemKind::Random: {
            auto curr = random_baseline(cfg.train.seed, static_cast<long>(items.size()));
            auto resp = random_baseline(cfg.train.seed + 1, static_cast<long>(items.size()));
            for (size_t i = 0; i < items.size(); ++i) {
                ParsedPrediction p;
                p.current_label = curr[i];
                p.response_label = resp[i];
                preds.push_back(std::move(p));
            }
            break;
        }
        case SystemKind::Classifier: {
            // separate models per prediction target
            ClassifierSpec curr_spec = cfg.classifier;
            curr_spec.target = ClassifierSpec::Target::Current;
            ClassifierSpec resp_spec = cfg.classifier;
            resp_spec.target = ClassifierSpec::Target::Response;
            Classifier curr_model =
                train_classifier(curr_spec, corpus, vocab, cfg.model, cfg.train, cache);
            TrainConfig resp_train = cfg.train;
            resp_train.seed = cfg.train.seed + 1;
            Classifier resp_model =
                train_classifier(resp_spec, corpus, vocab, cfg.model, resp_train, cache);
            for (const auto& item : items) {
                ParsedPrediction p;
                p.current_label = classify(curr_model, *item.dlg, item.n, vocab, cache);
                p.response_label = classify(resp_model, *item.dlg, item.n, vocab, cache);
                preds.push_back(std::move(p));
            }
            break;
        }
        case SystemKind::Serialized:
        case SystemKind::LmOnly: {
            auto train_set = dataset(corpus, Split::Train, cfg.assembly, vocab);
            auto dev_set = dataset(corpus, Split::Dev, cfg.assembly, vocab);
            ModelParameters params = init_parameters(cfg.model, cfg.train.seed);
            TrainResult tr = train(cfg.train, train_set, dev_set, cache, std::move(params));
            result.train_log = tr.log;
            trained_params = std::move(tr.best_params);
            have_params = true;
            for (const auto& item : items)
                preds.push_back(predict_turn(trained_params, *item.dlg, item.n, cfg.assembly,
                                             cfg.generation, vocab, cache));
            break;
        }
    }

    golds.reserve(items.size());
    for (auto& item : items) golds.push_back(item.gold);
    // classifier/random predictions carry labels only; score them against an
    // ordering that exposes both labels
    TaskOrdering score_ordering = cfg.assembly.ordering;
    if (cfg.system == SystemKind::Classifier || cfg.system == SystemKind::Random) {
        score_ordering = TaskOrdering::CurrRespText;
        for (size_t i = 0; i < items.size(); ++i) {
            golds[i].current_label = items[i].dlg->turns[items[i].n].label;
            golds[i].response_label = items[i].dlg->turns[items[i].n + 1].label;
        }
    }
    result.report = evaluate(preds, golds, score_ordering);
    result.report.config_fingerprint = config_fingerprint(declared);

    result.predictions.reserve(items.size());
    for (size_t i = 0; i < items.size(); ++i)
        result.predictions.push_back({items[i].dlg->id, items[i].n, preds[i]});

    if (!cfg.output_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(cfg.output_dir);
        std::ofstream rep(fs::path(cfg.output_dir) / "report.json");
        rep << nlohmann::json(result.report).dump(2) << '\n';
        std::ofstream pf(fs::path(cfg.output_dir) / "predictions.jsonl");
        for (const auto& rec : result.predictions) {
            nlohmann::json j = {{"dialogue_id", rec.dialogue_id},
                                {"n", rec.n},
                                {"malformed", rec.pred.malformed}};
            j["current_label"] = rec.pred.current_label
                                     ? nlohmann::json(sentiment_name(*rec.pred.current_label))
                                     : nlohmann::json();
            j["response_label"] = rec.pred.response_label
                                      ? nlohmann::json(sentiment_name(*rec.pred.response_label))
                                      : nlohmann::json();
            std::string text;
            for (size_t k = 0; k < rec.pred.response_words.size(); ++k) {
                if (k) text += ' ';
                text += rec.pred.response_words[k];
            }
            j["response_text"] = text;
            pf << j.dump() << '\n';
        }
        std::ofstream lf(fs::path(cfg.output_dir) / "train_log.jsonl");
        for (const auto& e : result.train_log)
            lf << nlohmann::json({{"step", e.step},
                                  {"train_loss", e.train_loss},
                                  {"dev_loss", e.dev_loss}})
                      .dump()
               << '\n';
        vocab.save((fs::path(cfg.output_dir) / "vocab.json").string());
        if (have_params)
            save_checkpoint(trained_params,
                            (fs::path(cfg.output_dir) / "checkpoint.bin").string());
    }
    return result;
}

/// Evaluation-only path for a previously trained serialized checkpoint.
inline RunResult evaluate_checkpoint(const ExperimentConfig& declared, const Corpus& corpus,
                                     const ModelParameters& params) {
    ExperimentConfig cfg = normalized(declared);
    if (cfg.system != SystemKind::Serialized)
        throw ValidationError("evaluate_checkpoint: config system must be serialized or lm_only");
    Vocabulary vocab = build_vocabulary(corpus);
    if (vocab.size() != params.cfg.vocab_size)
        throw ValidationError("evaluate_checkpoint: corpus vocabulary size " +
                              std::to_string(vocab.size()) + " does not match checkpoint " +
                              std::to_string(params.cfg.vocab_size));
    PooledCache cache(corpus);
    auto items = detail::test_items(corpus, cfg.assembly);
    if (items.empty()) throw ValidationError("evaluate_checkpoint: empty test split");

    RunResult result;
    std::vector<ParsedPrediction> preds;
    std::vector<GoldTriple> golds;
    for (const auto& item : items) {
        preds.push_back(predict_turn(params, *item.dlg, item.n, cfg.assembly, cfg.generation,
                                     vocab, cache));
        golds.push_back(item.gold);
    }
    result.report = evaluate(preds, golds, cfg.assembly.ordering);
    result.report.config_fingerprint = config_fingerprint(declared);
    for (size_t i = 0; i < items.size(); ++i)
        result.predictions.push_back({items[i].dlg->id, items[i].n, preds[i]});
    return result;
}

inline Corpus resolve_corpus(const ExperimentConfig& cfg) {
    if (!cfg.corpus_path.empty()) return load_corpus(cfg.corpus_path);
    return generate_synthetic_corpus(cfg.generator);
}

inline RunResult run(const ExperimentConfig& cfg) {
    Corpus corpus = resolve_corpus(cfg);
    return run(cfg, corpus);
}

// ---- seed-averaged comparisons and ablations ----

struct SeededMean {
    std::optional<double> curr_ua;
    std::optional<double> resp_ua;
    double bleu = 0.0;
    double malformed_rate = 0.0;
    std::vector<EvalReport> per_seed;
};

/// Runs a config under `n_seeds` seed triples (corpus, init, order) and
/// averages the metrics.
inline SeededMean run_seeds(const ExperimentConfig& base, int n_seeds) {
    if (n_seeds < 1) throw ValidationError("run_seeds: n_seeds must be >= 1");
    SeededMean mean;
    double curr = 0.0, resp = 0.0;
    int curr_n = 0, resp_n = 0;
    for (int i = 0; i < n_seeds; ++i) {
        ExperimentConfig cfg = base;
        cfg.generator.seed = base.generator.seed + static_cast<uint64_t>(i);
        cfg.train.seed = base.train.seed + static_cast<uint64_t>(i);
        cfg.generation.seed = base.generation.seed + static_cast<uint64_t>(i);
        cfg.output_dir.clear();
        RunResult r = run(cfg);
        if (r.report.curr_ua) {
            curr += *r.report.curr_ua;
            ++curr_n;
        }
        if (r.report.resp_ua) {
            resp += *r.report.resp_ua;
            ++resp_n;
        }
        mean.bleu += r.report.bleu;
        mean.malformed_rate += r.report.malformed_rate;
        mean.per_seed.push_back(r.report);
    }
    if (curr_n) mean.curr_ua = curr / curr_n;
    if (resp_n) mean.resp_ua = resp / resp_n;
    mean.bleu /= n_seeds;
    mean.malformed_rate /= n_seeds;
    return mean;
}

struct AblationRow {
    std::string value;
    SeededMean mean;
};

struct AblationResult {
    std::string axis;
    std::vector<AblationRow> rows;
};

inline ExperimentConfig apply_axis_value(ExperimentConfig cfg, const std::string& axis,
                                         const std::string& value) {
    if (axis == "ordering") {
        cfg.assembly.ordering = ordering_from_name(value);
    } else if (axis == "window") {
        int w = std::stoi(value);
        if (w < 0) throw ValidationError("window value must be >= 0");
        cfg.assembly.window = w;
        if (w == 0) cfg.assembly.use_context_text = false;
    } else if (axis == "modality") {
        if (value == "T") {
            cfg.assembly.use_current_speech = false;
            cfg.assembly.use_context_speech = false;
        } else if (value == "T+S") {
            cfg.assembly.use_current_speech = true;
            cfg.assembly.use_context_speech = true;
        } else {
            throw ValidationError("modality value must be T or T+S");
        }
    } else if (axis == "sentiment-context") {
        if (value == "on")
            cfg.assembly.use_context_sentiment = true;
        else if (value == "off")
            cfg.assembly.use_context_sentiment = false;
        else
            throw ValidationError("sentiment-context value must be on or off");
    } else {
        throw ValidationError("unknown ablation axis: " + axis);
    }
    return cfg;
}

inline AblationResult ablate(const ExperimentConfig& base, const std::string& axis,
                             const std::vector<std::string>& values, int n_seeds = 3) {
    if (values.empty()) throw ValidationError("ablate: no axis values");
    AblationResult result;
    result.axis = axis;
    for (const auto& value : values) {
        ExperimentConfig cfg = apply_axis_value(base, axis, value);
        result.rows.push_back({value, run_seeds(cfg, n_seeds)});
    }
    return result;
}

inline void to_json(nlohmann::json& j, const SeededMean& m) {
    j = nlohmann::json::object();
    if (m.curr_ua) j["curr_ua"] = *m.curr_ua;
    if (m.resp_ua) j["resp_ua"] = *m.resp_ua;
    j["bleu"] = m.bleu;
    j["malformed_rate"] = m.malformed_rate;
    j["per_seed"] = m.per_seed;
}

inline void to_json(nlohmann::json& j, const AblationResult& a) {
    j = {{"axis", a.axis}, {"rows", nlohmann::json::array()}};
    for (const auto& row : a.rows) j["rows"].push_back({{"value", row.value}, {"mean", row.mean}});
}

} // namespace sermux

#endif
