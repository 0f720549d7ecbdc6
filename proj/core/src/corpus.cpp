#include "vocemo/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "vocemo/errors.hpp"
#include "vocemo/rng.hpp"

namespace vocemo {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kSplitStream = 0x73706c74;  // "splt"

}  // namespace

std::array<TherapeuticStep, kNumSteps> all_steps() {
    return {TherapeuticStep::evaluation_exercises, TherapeuticStep::phonematic_hearing,
            TherapeuticStep::pronunciation_3d};
}

std::string_view step_name(TherapeuticStep s) {
    switch (s) {
        case TherapeuticStep::evaluation_exercises: return "evaluation_exercises";
        case TherapeuticStep::phonematic_hearing: return "phonematic_hearing";
        case TherapeuticStep::pronunciation_3d: return "pronunciation_3d";
    }
    throw ConfigError("invalid therapeutic step");
}

TherapeuticStep step_from_name(std::string_view name) {
    for (TherapeuticStep s : all_steps()) {
        if (step_name(s) == name) return s;
    }
    throw ConfigError("unknown therapeutic step: " + std::string(name));
}

void save_manifest(const Corpus& c, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open manifest for writing: " + path.string());
    for (const UtteranceRecord& r : c.records) {
        ordered_json labels = ordered_json::array();
        for (const FuzzyEmotionState& l : r.labels) {
            labels.push_back({l.a(), l.b(), l.c()});
        }
        ordered_json line = {
            {"id", r.id},
            {"subject_id", r.subject_id},
            {"subject_age", r.subject_age},
            {"step", std::string(step_name(r.step))},
            {"audio_path", r.audio_path},
            {"duration_s", r.duration_s},
            {"labels", labels},
        };
        out << line.dump() << '\n';
    }
    if (!out) throw IoFailure("write failed: " + path.string());
}

namespace {

[[noreturn]] void bad_line(std::size_t lineno, const std::string& why) {
    throw MalformedManifest("line " + std::to_string(lineno) + ": " + why);
}

UtteranceRecord parse_record(const std::string& text, std::size_t lineno) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        bad_line(lineno, e.what());
    }
    if (!j.is_object()) bad_line(lineno, "record is not a JSON object");

    UtteranceRecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.subject_id = j.at("subject_id").get<std::string>();
        r.subject_age = j.at("subject_age").get<int>();
        r.step = step_from_name(j.at("step").get<std::string>());
        r.audio_path = j.at("audio_path").get<std::string>();
        r.duration_s = j.at("duration_s").get<double>();
        const auto& labels = j.at("labels");
        if (!labels.is_array()) bad_line(lineno, "labels is not an array");
        for (const auto& triple : labels) {
            if (!triple.is_array() || triple.size() != 3) {
                bad_line(lineno, "label is not an [a,b,c] triple");
            }
            r.labels.emplace_back(triple[0].get<double>(), triple[1].get<double>(),
                                  triple[2].get<double>());
        }
    } catch (const MalformedManifest&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        bad_line(lineno, e.what());
    } catch (const ConfigError& e) {
        bad_line(lineno, e.what());
    }
    if (r.id.empty()) bad_line(lineno, "empty id");
    if (r.subject_age < 5 || r.subject_age > 9) {
        bad_line(lineno, "subject_age outside 5..9");
    }
    if (r.labels.empty()) bad_line(lineno, "empty label set");
    if (!std::isfinite(r.duration_s) || r.duration_s < 0.0) {
        bad_line(lineno, "invalid duration");
    }
    return r;
}

}  // namespace

Corpus load_manifest(const std::filesystem::path& path, bool verify_audio) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open manifest: " + path.string());

    Corpus c;
    c.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) bad_line(lineno, "empty line");
        c.records.push_back(parse_record(line, lineno));
    }

    if (verify_audio) {
        for (const UtteranceRecord& r : c.records) {
            std::filesystem::path wav = c.root / r.audio_path;
            if (!std::filesystem::exists(wav)) {
                throw MissingAudio("record " + r.id + ": " + wav.string());
            }
        }
    }
    return c;
}

namespace {

ValenceGroup record_group(const UtteranceRecord& r) {
    return valence_group_of(r.labels.front());
}

ValenceProportions to_proportions(const std::array<std::size_t, 3>& counts) {
    double n = static_cast<double>(counts[0] + counts[1] + counts[2]);
    if (n <= 0.0) return {};
    return {counts[0] / n, counts[1] / n, counts[2] / n};
}

}  // namespace

CorpusStats corpus_stats(const Corpus& c) {
    if (c.records.empty()) throw EmptyCorpus("corpus has no records");

    std::array<std::size_t, 3> overall{};
    std::map<TherapeuticStep, std::array<std::size_t, 3>> per_step;
    for (const UtteranceRecord& r : c.records) {
        auto g = static_cast<std::size_t>(record_group(r));
        overall[g] += 1;
        per_step[r.step][g] += 1;
    }

    CorpusStats stats;
    stats.total = c.records.size();
    stats.overall = to_proportions(overall);
    for (const auto& [step, counts] : per_step) {
        stats.per_step[step] = to_proportions(counts);
        stats.step_counts[step] = counts[0] + counts[1] + counts[2];
    }
    return stats;
}

namespace {

Corpus subset(const Corpus& c, const std::vector<std::size_t>& indices) {
    Corpus out;
    out.root = c.root;
    out.records.reserve(indices.size());
    for (std::size_t i : indices) out.records.push_back(c.records[i]);
    return out;
}

SplitResult split_speaker_dependent(const Corpus& c, double test_fraction,
                                    std::uint64_t seed) {
    std::map<TherapeuticStep, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < c.records.size(); ++i) {
        strata[c.records[i].step].push_back(i);
    }

    std::vector<std::size_t> test_idx;
    std::vector<std::size_t> train_idx;
    std::size_t stratum = 0;
    for (auto& [step, indices] : strata) {
        rng::Engine g(rng::derive_seed(seed, stratum++, kSplitStream));
        rng::shuffle(indices, g);
        auto n_test = static_cast<std::size_t>(
            std::lround(test_fraction * static_cast<double>(indices.size())));
        for (std::size_t k = 0; k < indices.size(); ++k) {
            (k < n_test ? test_idx : train_idx).push_back(indices[k]);
        }
    }
    // Rounding can leave one side empty on tiny corpora; rebalance so both
    // sides are populated whenever the corpus has two or more records.
    if (test_idx.empty() && train_idx.size() >= 2) {
        test_idx.push_back(train_idx.back());
        train_idx.pop_back();
    } else if (train_idx.empty() && test_idx.size() >= 2) {
        train_idx.push_back(test_idx.back());
        test_idx.pop_back();
    }
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {subset(c, train_idx), subset(c, test_idx)};
}

SplitResult split_speaker_independent(const Corpus& c, double test_fraction,
                                      std::uint64_t seed) {
    std::vector<std::string> subjects;
    for (const UtteranceRecord& r : c.records) {
        if (std::find(subjects.begin(), subjects.end(), r.subject_id) == subjects.end()) {
            subjects.push_back(r.subject_id);
        }
    }
    if (subjects.size() < 2) {
        throw TooFewSubjects("speaker-independent split needs at least 2 subjects, got " +
                             std::to_string(subjects.size()));
    }

    auto n_hold = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(subjects.size())));
    n_hold = std::clamp<std::size_t>(n_hold, 1, subjects.size() - 1);

    rng::Engine g(rng::derive_seed(seed, 0, kSplitStream));
    rng::shuffle(subjects, g);
    std::vector<std::string> held(subjects.begin(),
                                  subjects.begin() + static_cast<std::ptrdiff_t>(n_hold));

    std::vector<std::size_t> test_idx;
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < c.records.size(); ++i) {
        bool in_test = std::find(held.begin(), held.end(), c.records[i].subject_id) !=
                       held.end();
        (in_test ? test_idx : train_idx).push_back(i);
    }
    return {subset(c, train_idx), subset(c, test_idx)};
}

}  // namespace

SplitResult split_corpus(const Corpus& c, SplitMode mode, double test_fraction,
                         std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test_fraction must lie strictly inside (0,1)");
    }
    if (c.records.empty()) throw EmptyCorpus("cannot split an empty corpus");
    if (mode == SplitMode::speaker_dependent) {
        return split_speaker_dependent(c, test_fraction, seed);
    }
    return split_speaker_independent(c, test_fraction, seed);
}

DistributionTargets DistributionTargets::defaults() {
    DistributionTargets t;
    t.overall = {0.12, 0.22, 0.66};
    t.per_step[TherapeuticStep::evaluation_exercises] = {0.11, 0.26, 0.63};
    // Raw row (0.14, 0.17, 0.70) sums to 1.01; normalize() rescales it.
    t.per_step[TherapeuticStep::phonematic_hearing] = {0.14, 0.17, 0.70};
    t.per_step[TherapeuticStep::pronunciation_3d] = {0.12, 0.20, 0.68};
    t.normalize();
    return t;
}

namespace {

void normalize_row(std::array<double, 3>& row, const char* what) {
    double sum = row[0] + row[1] + row[2];
    if (!(sum > 0.0) || row[0] < 0.0 || row[1] < 0.0 || row[2] < 0.0) {
        throw ConfigError(std::string("distribution row ") + what +
                          " must be non-negative with positive sum");
    }
    for (double& v : row) v /= sum;
}

}  // namespace

void DistributionTargets::normalize() {
    normalize_row(overall, "overall");
    for (auto& [step, row] : per_step) {
        normalize_row(row, step_name(step).data());
    }
}

}  // namespace vocemo
