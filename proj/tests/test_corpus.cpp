#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "vocemo/corpus.hpp"
#include "vocemo/errors.hpp"
#include "vocemo/generator.hpp"

using namespace vocemo;
using testutil::TempDir;

namespace {

UtteranceRecord make_record(int i, const std::string& subject, TherapeuticStep step,
                            double center) {
    UtteranceRecord r;
    r.id = "utt_" + std::to_string(i);
    r.subject_id = subject;
    r.subject_age = 5 + i % 5;
    r.step = step;
    r.audio_path = "wav/" + r.id + ".wav";
    r.duration_s = 1.0;
    const double a = std::max(-2.0, center - 0.4);
    const double c = std::min(2.0, center + 0.4);
    r.labels = {FuzzyEmotionState(a, center, c)};
    return r;
}

Corpus stats_corpus(std::size_t negative, std::size_t neutral, std::size_t positive,
                    TherapeuticStep step) {
    Corpus c;
    int i = 0;
    for (std::size_t k = 0; k < negative; ++k)
        c.records.push_back(make_record(i++, "s0", step, -2.0));
    for (std::size_t k = 0; k < neutral; ++k)
        c.records.push_back(make_record(i++, "s0", step, 0.0));
    for (std::size_t k = 0; k < positive; ++k)
        c.records.push_back(make_record(i++, "s0", step, 2.0));
    return c;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("empty corpus saves to an empty manifest and loads back") {
    TempDir dir("manifest_empty");
    Corpus c;
    c.root = dir.path();
    save_manifest(c, dir / "manifest.jsonl");
    CHECK(testutil::read_file(dir / "manifest.jsonl").empty());
    Corpus back = load_manifest(dir / "manifest.jsonl", false);
    CHECK(back.records.empty());
}

TEST_CASE("ten-record manifest round-trips field for field") {
    TempDir dir("manifest_rt");
    Corpus c;
    c.root = dir.path();
    const TherapeuticStep steps[] = {TherapeuticStep::evaluation_exercises,
                                     TherapeuticStep::phonematic_hearing,
                                     TherapeuticStep::pronunciation_3d};
    for (int i = 0; i < 10; ++i) {
        UtteranceRecord r = make_record(i, "s" + std::to_string(i % 3), steps[i % 3],
                                        -2.0 + 0.37 * i);
        r.duration_s = 0.5 + 0.111 * i;
        r.labels.push_back(FuzzyEmotionState(-1.0, 0.0, 1.0));
        c.records.push_back(r);
    }
    save_manifest(c, dir / "manifest.jsonl");
    Corpus back = load_manifest(dir / "manifest.jsonl", false);
    REQUIRE(back.records.size() == c.records.size());
    for (std::size_t i = 0; i < c.records.size(); ++i) {
        CHECK(back.records[i] == c.records[i]);
    }
}

TEST_CASE("malformed manifest lines name the line number") {
    TempDir dir("manifest_bad");
    Corpus c;
    c.records.push_back(make_record(0, "s0", TherapeuticStep::evaluation_exercises, 0.0));
    save_manifest(c, dir / "ok.jsonl");

    std::string text = testutil::read_file(dir / "ok.jsonl");
    testutil::write_file(dir / "bad.jsonl", text + "this is not json\n");
    try {
        load_manifest(dir / "bad.jsonl", false);
        FAIL("expected MalformedManifest");
    } catch (const MalformedManifest& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("empty label arrays are rejected") {
    TempDir dir("manifest_labels");
    testutil::write_file(
        dir / "m.jsonl",
        R"({"id":"u0","subject_id":"s0","subject_age":6,"step":"evaluation_exercises",)"
        R"("audio_path":"wav/u0.wav","duration_s":1.0,"labels":[]})"
        "\n");
    CHECK_THROWS_AS(load_manifest(dir / "m.jsonl", false), MalformedManifest);
}

TEST_CASE("missing audio is reported when verification is on") {
    TempDir dir("manifest_audio");
    Corpus c;
    c.records.push_back(make_record(0, "s0", TherapeuticStep::evaluation_exercises, 0.0));
    save_manifest(c, dir / "m.jsonl");
    CHECK_THROWS_AS(load_manifest(dir / "m.jsonl", true), MissingAudio);
    CHECK_NOTHROW(load_manifest(dir / "m.jsonl", false));
}

TEST_CASE("stats reproduce hand-built proportions") {
    Corpus c = stats_corpus(11, 26, 63, TherapeuticStep::evaluation_exercises);
    CorpusStats s = corpus_stats(c);
    CHECK(s.total == 100);
    CHECK(s.overall.negative == doctest::Approx(0.11).epsilon(1e-12));
    CHECK(s.overall.neutral == doctest::Approx(0.26).epsilon(1e-12));
    CHECK(s.overall.positive == doctest::Approx(0.63).epsilon(1e-12));
    const auto& row = s.per_step.at(TherapeuticStep::evaluation_exercises);
    CHECK(row.negative == doctest::Approx(0.11).epsilon(1e-12));
    CHECK(s.step_counts.at(TherapeuticStep::evaluation_exercises) == 100);
}

TEST_CASE("stats on an all-neutral corpus") {
    Corpus c = stats_corpus(0, 100, 0, TherapeuticStep::phonematic_hearing);
    CorpusStats s = corpus_stats(c);
    CHECK(s.overall.negative == 0.0);
    CHECK(s.overall.neutral == 1.0);
    CHECK(s.overall.positive == 0.0);
}

TEST_CASE("stats count each record by its first label") {
    Corpus c;
    UtteranceRecord r = make_record(0, "s0", TherapeuticStep::pronunciation_3d, 2.0);
    r.labels.push_back(FuzzyEmotionState(-2.0, -2.0, -1.6));  // disagreeing second expert
    c.records.push_back(r);
    CorpusStats s = corpus_stats(c);
    CHECK(s.overall.positive == 1.0);
    CHECK(s.overall.negative == 0.0);
}

TEST_CASE("stats reject an empty corpus") {
    Corpus c;
    CHECK_THROWS_AS(corpus_stats(c), EmptyCorpus);
}

TEST_CASE("split fractions must lie strictly inside (0,1)") {
    Corpus c = stats_corpus(5, 5, 5, TherapeuticStep::evaluation_exercises);
    CHECK_THROWS_AS(split_corpus(c, SplitMode::speaker_dependent, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(split_corpus(c, SplitMode::speaker_dependent, 1.0, 1), ConfigError);
}

TEST_CASE("speaker-dependent split partitions the corpus exactly") {
    Corpus c;
    const TherapeuticStep steps[] = {TherapeuticStep::evaluation_exercises,
                                     TherapeuticStep::phonematic_hearing,
                                     TherapeuticStep::pronunciation_3d};
    for (int i = 0; i < 60; ++i) {
        c.records.push_back(make_record(i, "s" + std::to_string(i % 4), steps[i % 3],
                                        -2.0 + (i % 5)));
    }
    SplitResult r = split_corpus(c, SplitMode::speaker_dependent, 0.25, 7);
    CHECK(r.train.records.size() + r.test.records.size() == c.records.size());
    CHECK(!r.train.records.empty());
    CHECK(!r.test.records.empty());

    std::set<std::string> train_ids, test_ids;
    for (const auto& rec : r.train.records) train_ids.insert(rec.id);
    for (const auto& rec : r.test.records) test_ids.insert(rec.id);
    CHECK(train_ids.size() == r.train.records.size());
    CHECK(test_ids.size() == r.test.records.size());
    for (const auto& id : test_ids) CHECK(train_ids.count(id) == 0);

    // stratified: every step contributes about a quarter of its records
    for (TherapeuticStep s : all_steps()) {
        std::size_t n_test = 0, n_all = 0;
        for (const auto& rec : c.records) n_all += rec.step == s ? 1 : 0;
        for (const auto& rec : r.test.records) n_test += rec.step == s ? 1 : 0;
        CHECK(n_test == static_cast<std::size_t>(std::lround(0.25 * static_cast<double>(n_all))));
    }
}

TEST_CASE("speaker-independent split holds out whole subjects") {
    Corpus c;
    for (int i = 0; i < 100; ++i) {
        c.records.push_back(make_record(i, "s" + std::to_string(i % 10),
                                        TherapeuticStep::evaluation_exercises, 0.0));
    }
    SplitResult r = split_corpus(c, SplitMode::speaker_independent, 0.2, 3);

    std::set<std::string> train_subjects, test_subjects;
    for (const auto& rec : r.train.records) train_subjects.insert(rec.subject_id);
    for (const auto& rec : r.test.records) test_subjects.insert(rec.subject_id);
    CHECK(test_subjects.size() == 2);
    CHECK(train_subjects.size() == 8);
    for (const auto& s : test_subjects) CHECK(train_subjects.count(s) == 0);
    CHECK(r.train.records.size() + r.test.records.size() == c.records.size());
}

TEST_CASE("speaker-independent split needs two subjects") {
    Corpus c;
    for (int i = 0; i < 10; ++i) {
        c.records.push_back(
            make_record(i, "only", TherapeuticStep::evaluation_exercises, 0.0));
    }
    CHECK_THROWS_AS(split_corpus(c, SplitMode::speaker_independent, 0.2, 1), TooFewSubjects);
}

TEST_CASE("splits are seed-deterministic and seed-sensitive") {
    Corpus c;
    for (int i = 0; i < 40; ++i) {
        c.records.push_back(make_record(i, "s" + std::to_string(i % 8),
                                        TherapeuticStep::phonematic_hearing, 1.0));
    }
    auto ids_of = [](const Corpus& part) {
        std::vector<std::string> ids;
        for (const auto& r : part.records) ids.push_back(r.id);
        return ids;
    };

    for (SplitMode mode :
         {SplitMode::speaker_dependent, SplitMode::speaker_independent}) {
        SplitResult a = split_corpus(c, mode, 0.25, 11);
        SplitResult b = split_corpus(c, mode, 0.25, 11);
        CHECK(ids_of(a.test) == ids_of(b.test));

        std::set<std::vector<std::string>> distinct;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            distinct.insert(ids_of(split_corpus(c, mode, 0.25, seed).test));
        }
        CHECK(distinct.size() > 1);
    }
}

TEST_CASE("distribution targets defaults and normalization") {
    DistributionTargets t = DistributionTargets::defaults();
    CHECK(t.overall[0] == doctest::Approx(0.12).epsilon(1e-12));
    CHECK(t.overall[1] == doctest::Approx(0.22).epsilon(1e-12));
    CHECK(t.overall[2] == doctest::Approx(0.66).epsilon(1e-12));

    const auto& eval = t.per_step.at(TherapeuticStep::evaluation_exercises);
    CHECK(eval[0] == doctest::Approx(0.11).epsilon(1e-9));
    CHECK(eval[1] == doctest::Approx(0.26).epsilon(1e-9));
    CHECK(eval[2] == doctest::Approx(0.63).epsilon(1e-9));

    // the published phonematic-hearing row sums to 1.01 and is renormalized
    const auto& ph = t.per_step.at(TherapeuticStep::phonematic_hearing);
    CHECK(ph[0] == doctest::Approx(0.14 / 1.01).epsilon(1e-9));
    CHECK(ph[1] == doctest::Approx(0.17 / 1.01).epsilon(1e-9));
    CHECK(ph[2] == doctest::Approx(0.70 / 1.01).epsilon(1e-9));

    for (TherapeuticStep s : all_steps()) {
        const auto& row = t.per_step.at(s);
        CHECK(row[0] + row[1] + row[2] == doctest::Approx(1.0).epsilon(1e-9));
    }

    DistributionTargets zero = t;
    zero.overall = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(zero.normalize(), ConfigError);
}

TEST_CASE("step names round-trip") {
    for (TherapeuticStep s : all_steps()) {
        CHECK(step_from_name(step_name(s)) == s);
    }
    CHECK_THROWS_AS(step_from_name("recess"), ConfigError);
}

TEST_CASE("generated proportions converge to the targets at n=5000") {
    TempDir dir("converge");
    GeneratorConfig cfg;
    cfg.n_utterances = 5000;
    cfg.p_disagree = 0.0;  // isolates the assignment distribution from label flips
    cfg.duration_min_s = 0.5;
    cfg.duration_max_s = 0.5;
    cfg.seed = 17;
    Corpus c = synth_corpus(cfg, dir.path());
    CorpusStats s = corpus_stats(c);

    const DistributionTargets targets = DistributionTargets::defaults();
    CHECK(std::abs(s.overall.negative - targets.overall[0]) <= 0.02);
    CHECK(std::abs(s.overall.neutral - targets.overall[1]) <= 0.02);
    CHECK(std::abs(s.overall.positive - targets.overall[2]) <= 0.02);
    for (TherapeuticStep step : all_steps()) {
        const auto& row = targets.per_step.at(step);
        const auto& got = s.per_step.at(step);
        CHECK(std::abs(got.negative - row[0]) <= 0.02);
        CHECK(std::abs(got.neutral - row[1]) <= 0.02);
        CHECK(std::abs(got.positive - row[2]) <= 0.02);
    }

    for (const UtteranceRecord& r : c.records) {
        REQUIRE(!r.labels.empty());
        CHECK(r.subject_age >= 5);
        CHECK(r.subject_age <= 9);
    }
}

}  // TEST_SUITE
