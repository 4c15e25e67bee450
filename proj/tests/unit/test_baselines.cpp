#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sermux/baselines.hpp"

using namespace sermux;

namespace {

ModelConfig tiny_config(int vocab, int feature_dim = 8) {
    ModelConfig cfg;
    cfg.vocab_size = vocab;
    cfg.model_dim = 8;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.mlp_ratio = 2;
    cfg.max_positions = 32;
    cfg.feature_dim = feature_dim;
    return cfg;
}

} // namespace

TEST_CASE("random baseline is seeded and roughly uniform") {
    auto a = random_baseline(3, 3000);
    auto b = random_baseline(3, 3000);
    REQUIRE(a == b);
    auto c = random_baseline(4, 3000);
    REQUIRE(a != c);
    std::array<long, 3> counts = {0, 0, 0};
    for (auto l : a) counts[code(l)]++;
    for (long n : counts) REQUIRE(std::abs(n - 1000L) < 150);
}

TEST_CASE("classifier input layout tracks the modality") {
    Corpus c;
    Dialogue d;
    d.id = "d0";
    Turn t;
    t.words = {"good", "game"};
    t.features_ref = "r0";
    t.frame_count = 2;
    d.turns = {t, t};
    c.dialogues.push_back(d);
    Vocabulary vocab = build_vocabulary(c);

    auto text = classifier_input(t, ClassifierSpec::Modality::Text, vocab);
    REQUIRE(text.size() == 3); // two words + <eot>
    REQUIRE(text[2].token == kEotId);
    for (const auto& e : text) REQUIRE_FALSE(e.is_slot());

    auto speech = classifier_input(t, ClassifierSpec::Modality::Speech, vocab);
    REQUIRE(speech.size() == 1);
    REQUIRE(speech[0].is_slot());
    REQUIRE(speech[0].slot_ref == "r0");

    auto both = classifier_input(t, ClassifierSpec::Modality::TextSpeech, vocab);
    REQUIRE(both.size() == 4);
    REQUIRE(both[3].is_slot());
}

TEST_CASE("classifier dataset mirrors the serialized example set") {
    GeneratorSpec spec;
    spec.n_dialogues = 40;
    spec.seed = 12;
    Corpus corpus = generate_synthetic_corpus(spec);
    Vocabulary vocab = build_vocabulary(corpus);
    ClassifierSpec cs;
    cs.target = ClassifierSpec::Target::Current;
    auto curr = classifier_dataset(corpus, Split::Train, cs, vocab);
    long expected = 0;
    for (const auto& dlg : corpus.dialogues)
        if (dlg.split == Split::Train) expected += static_cast<long>(dlg.turns.size()) - 1;
    REQUIRE(static_cast<long>(curr.size()) == expected);

    // response-target labels are the next turn's labels
    cs.target = ClassifierSpec::Target::Response;
    auto resp = classifier_dataset(corpus, Split::Train, cs, vocab);
    REQUIRE(resp.size() == curr.size());
    size_t k = 0;
    for (const auto& dlg : corpus.dialogues) {
        if (dlg.split != Split::Train) continue;
        for (int n = 0; n + 1 < static_cast<int>(dlg.turns.size()); ++n, ++k) {
            REQUIRE(curr[k].label == dlg.turns[n].label);
            REQUIRE(resp[k].label == dlg.turns[n + 1].label);
        }
    }
}

TEST_CASE("classifier gradients agree with central differences") {
    GeneratorSpec spec;
    spec.n_dialogues = 3;
    spec.seed = 8;
    Corpus corpus = generate_synthetic_corpus(spec);
    Vocabulary vocab = build_vocabulary(corpus);
    PooledCache cache(corpus);
    ClassifierSpec cs;
    cs.modality = ClassifierSpec::Modality::TextSpeech;
    Classifier c = init_classifier(cs, tiny_config(vocab.size(), spec.feature_dim), 5);
    ClassifierExample ex = classifier_dataset(corpus, corpus.dialogues[0].split, cs, vocab)[0];
    auto items = resolve_prompt(ex.input, cache);

    Classifier grads = c;
    grads.for_each_tensor([](const std::string&, Tensor& t) { t.fill(0.0); });
    detail::classifier_nll_and_grad(c, items, ex.label, &grads);

    std::vector<Tensor*> tensors;
    std::vector<const Tensor*> gtensors;
    c.for_each_tensor([&](const std::string&, Tensor& t) { tensors.push_back(&t); });
    grads.for_each_tensor([&](const std::string&, const Tensor& t) { gtensors.push_back(&t); });

    Rng rng(99);
    double eps = 1e-5, max_rel = 0.0;
    for (size_t k = 0; k < tensors.size(); ++k) {
        size_t i = std::uniform_int_distribution<size_t>(0, tensors[k]->v.size() - 1)(rng);
        double orig = tensors[k]->v[i];
        tensors[k]->v[i] = orig + eps;
        double lp = detail::classifier_nll_and_grad(c, items, ex.label, nullptr);
        tensors[k]->v[i] = orig - eps;
        double lm = detail::classifier_nll_and_grad(c, items, ex.label, nullptr);
        tensors[k]->v[i] = orig;
        double fd = (lp - lm) / (2.0 * eps);
        double an = gtensors[k]->v[i];
        max_rel = std::max(max_rel,
                           std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8}));
    }
    INFO("max relative gradient error " << max_rel);
    REQUIRE(max_rel < 1e-4);
}

TEST_CASE("a speech classifier learns well-separated clusters") {
    GeneratorSpec spec;
    spec.n_dialogues = 60;
    spec.min_turns = 2;
    spec.max_turns = 4;
    spec.feature_cluster_separation = 6.0;
    spec.seed = 19;
    Corpus corpus = generate_synthetic_corpus(spec);
    Vocabulary vocab = build_vocabulary(corpus);
    PooledCache cache(corpus);
    ClassifierSpec cs;
    cs.modality = ClassifierSpec::Modality::Speech;
    cs.target = ClassifierSpec::Target::Current;
    TrainConfig tcfg;
    tcfg.batch_size = 8;
    tcfg.learning_rate = 3e-3;
    tcfg.max_steps = 200;
    tcfg.eval_every = 50;
    tcfg.seed = 2;
    Classifier c = train_classifier(cs, corpus, vocab,
                                    tiny_config(vocab.size(), spec.feature_dim), tcfg, cache);
    long correct = 0, total = 0;
    for (const auto& dlg : corpus.dialogues) {
        if (dlg.split != Split::Test) continue;
        for (int n = 0; n + 1 < static_cast<int>(dlg.turns.size()); ++n) {
            if (classify(c, dlg, n, vocab, cache) == dlg.turns[n].label) ++correct;
            ++total;
        }
    }
    REQUIRE(total > 0);
    double acc = static_cast<double>(correct) / total;
    INFO("speech classifier test accuracy " << acc);
    REQUIRE(acc >= 0.85);
}

TEST_CASE("classifier training is deterministic given the seeds") {
    GeneratorSpec spec;
    spec.n_dialogues = 10;
    spec.seed = 27;
    Corpus corpus = generate_synthetic_corpus(spec);
    Vocabulary vocab = build_vocabulary(corpus);
    PooledCache cache(corpus);
    ClassifierSpec cs;
    TrainConfig tcfg;
    tcfg.batch_size = 4;
    tcfg.max_steps = 10;
    tcfg.eval_every = 5;
    ModelConfig mcfg = tiny_config(vocab.size(), spec.feature_dim);
    Classifier a = train_classifier(cs, corpus, vocab, mcfg, tcfg, cache);
    Classifier b = train_classifier(cs, corpus, vocab, mcfg, tcfg, cache);
    REQUIRE(a.head_w.v == b.head_w.v);
    REQUIRE(a.backbone.tok_emb.v == b.backbone.tok_emb.v);
}
