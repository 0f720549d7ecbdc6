#include "vocemo/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "vocemo/errors.hpp"
#include "vocemo/rng.hpp"

namespace vocemo {

namespace {

constexpr std::uint64_t kStreamSubjectAge = 1;
constexpr std::uint64_t kStreamAssign = 2;
constexpr std::uint64_t kStreamRecord = 3;
constexpr std::uint64_t kStreamRender = 4;
constexpr std::uint64_t kStreamLabels = 5;

constexpr double kPi = std::numbers::pi;

// Instantaneous F0 is kept inside the pitch detector's reliable band.
constexpr double kF0Floor = 110.0;
constexpr double kF0Ceil = 580.0;

// Fixed vocal-tract resonances, child-like.
constexpr double kFormant1Hz = 700.0, kFormant1Bw = 280.0;
constexpr double kFormant2Hz = 1800.0, kFormant2Bw = 420.0;

constexpr double kSyllableDuty = 0.65;   // burst fraction of a syllable
constexpr double kEnvFloor = 0.35;       // keeps phonation running between bursts
constexpr double kVibratoSt = 1.1;       // slow modulation depth, semitones
constexpr double kDeclinationSt = 1.0;   // contour falls from +1 to -1 st
constexpr double kBaseRms = 0.05;        // target RMS at 0 dB offset
constexpr double kSnrAmplitude = 0.1;    // 20 dB SNR additive noise

struct Resonator {
    double c1, c2, y1 = 0.0, y2 = 0.0;

    Resonator(double freq_hz, double bw_hz, int rate) {
        double r = std::exp(-kPi * bw_hz / rate);
        c1 = 2.0 * r * std::cos(2.0 * kPi * freq_hz / rate);
        c2 = -r * r;
    }

    double step(double x) {
        double y = x + c1 * y1 + c2 * y2;
        y2 = y1;
        y1 = y;
        return y;
    }
};

}  // namespace

SubjectProfile make_subject(const std::string& id, int age, std::uint64_t seed) {
    if (age < 5 || age > 9) throw ConfigError("subject age outside 5..9");
    rng::Engine g(seed);
    SubjectProfile p;
    p.subject_id = id;
    p.age = age;
    double lo = 358.0 - 4.0 * (age - 5);  // younger children sit higher
    p.base_f0_hz = rng::uniform(g, lo, lo + 24.0);
    p.base_tempo_sps = rng::uniform(g, 2.6, 3.4);
    p.base_energy_db = rng::uniform(g, -2.0, 2.0);
    return p;
}

AcousticsTable default_acoustics() {
    //                nervousness  tenseness  neutral  contentment  happiness
    // f0 mean mult      0.95        0.97      1.00       1.06        1.12
    // f0 range mult     0.8         0.9       1.0        1.3         1.6
    // energy dB        -2          -1         0         +1.5        +3
    // tempo mult        0.9         0.95      1.0        1.1         1.2
    // jitter            high        med       low        low         low
    return AcousticsTable{{
        {0.95, 0.8, -2.0, 0.90, 0.090, 0.20, 0.18},
        {0.97, 0.9, -1.0, 0.95, 0.040, 0.12, 0.10},
        {1.00, 1.0, 0.0, 1.00, 0.012, 0.07, 0.06},
        {1.06, 1.3, 1.5, 1.10, 0.012, 0.05, 0.04},
        {1.12, 1.6, 3.0, 1.20, 0.012, 0.03, 0.02},
    }};
}

AcousticsTable boosted_acoustics() {
    return AcousticsTable{{
        {0.78, 0.5, -6.0, 0.60, 0.110, 0.30, 0.40},
        {0.90, 0.75, -3.0, 0.80, 0.050, 0.18, 0.20},
        {1.00, 1.0, 0.0, 1.00, 0.012, 0.08, 0.08},
        {1.12, 1.3, 3.0, 1.25, 0.012, 0.05, 0.04},
        {1.26, 1.5, 6.0, 1.55, 0.012, 0.03, 0.02},
    }};
}

AcousticsTable acoustics_by_name(const std::string& preset) {
    if (preset == "default") return default_acoustics();
    if (preset == "boosted") return boosted_acoustics();
    throw ConfigError("unknown acoustics preset: " + preset);
}

Utterance render_utterance(const SubjectProfile& profile, EmotionAnchor anchor,
                           double duration_s, std::uint64_t seed,
                           const AcousticsTable& table) {
    if (!(duration_s >= 0.5 && duration_s <= 2.0)) {
        throw ConfigError("render duration must lie in [0.5, 2.0] s");
    }
    const EmotionAcoustics& em = table[static_cast<std::size_t>(anchor)];
    const int rate = kCanonicalRate;
    const auto n = static_cast<std::size_t>(std::lround(duration_s * rate));

    rng::Engine g(seed);
    double f_mod = rng::uniform(g, 2.5, 3.5);
    double mod_phase = rng::uniform01(g);

    double f0_center = profile.base_f0_hz * em.f0_mean_mult;
    double syllable_s = 1.0 / (profile.base_tempo_sps * em.tempo_mult);

    Resonator r1(kFormant1Hz, kFormant1Bw, rate);
    Resonator r2(kFormant2Hz, kFormant2Bw, rate);

    double phase = 0.0;
    double jitter_mult = std::clamp(1.0 + em.f0_jitter * rng::normal(g), 0.7, 1.4);
    double amp_mult = std::clamp(1.0 + em.shimmer * rng::normal(g), 0.3, 1.7);

    // Lead-in samples flush the resonator transient and are dropped.
    const std::size_t warm = static_cast<std::size_t>(rate) * 3 / 100;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n + warm; ++i) {
        double t = (static_cast<double>(i) - static_cast<double>(warm)) / rate;
        double tc = std::max(t, 0.0);

        double u = std::fmod(tc, syllable_s) / syllable_s;
        double env = kEnvFloor;
        if (u < kSyllableDuty) {
            double s = std::sin(kPi * u / kSyllableDuty);
            env += (1.0 - kEnvFloor) * s * s;
        }

        // Triangle vibrato keeps |dF0/dt| away from zero so the true pitch
        // period always beats its integer multiples in the autocorrelation.
        double p = std::fmod(f_mod * tc + mod_phase, 1.0);
        double tri = 4.0 * std::abs(p - 0.5) - 1.0;
        double st = em.f0_range_mult *
                    (kDeclinationSt * (1.0 - 2.0 * tc / duration_s) +
                     kVibratoSt * tri);
        double f0 = std::clamp(f0_center * std::exp2(st / 12.0) * jitter_mult,
                               kF0Floor, kF0Ceil);

        phase += f0 / rate;
        if (phase >= 1.0) {
            phase -= std::floor(phase);
            jitter_mult = std::clamp(1.0 + em.f0_jitter * rng::normal(g), 0.7, 1.4);
            amp_mult = std::clamp(1.0 + em.shimmer * rng::normal(g), 0.3, 1.7);
        }
        double saw = 2.0 * phase - 1.0;
        double aspiration = em.breathiness * rng::normal(g);
        double excitation = env * (amp_mult * saw * (1.0 - 0.5 * em.breathiness) + aspiration);

        double y = r2.step(r1.step(excitation));
        if (i >= warm) x[i - warm] = y;
    }

    double power = 0.0;
    for (double v : x) power += v * v;
    double rms = std::sqrt(power / static_cast<double>(n));
    double target = kBaseRms * std::pow(10.0, (profile.base_energy_db + em.energy_db) / 20.0);
    double scale = rms > 0.0 ? target / rms : 0.0;
    for (double& v : x) v *= scale;

    for (double& v : x) v += kSnrAmplitude * target * rng::normal(g);

    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 0.98) {
        double trim = 0.98 / peak;
        for (double& v : x) v *= trim;
    }

    return Utterance{std::move(x), rate, ""};
}

namespace {

EmotionAnchor adjacent_anchor(EmotionAnchor a, rng::Engine& g) {
    int c = static_cast<int>(a);
    if (c == 0) return static_cast<EmotionAnchor>(1);
    if (c == kNumAnchors - 1) return static_cast<EmotionAnchor>(kNumAnchors - 2);
    return static_cast<EmotionAnchor>(rng::uniform_int(g, 0, 1) == 0 ? c - 1 : c + 1);
}

// Triangle with half-base s whose centroid equals t, feet clipped to the
// valence axis. When t sits too close to an edge for any such triangle, the
// construction saturates at centroid edge -/+ s/3, still within 0.3 of the
// edge anchor because s <= 0.75.
FuzzyEmotionState place_triangle(double t, double s) {
    double a = t - s, b = t, c = t + s;
    if (c > 2.0) {
        b = std::min((3.0 * t - 2.0 + s) / 2.0, 2.0);
        a = b - s;
        c = 2.0;
    } else if (a < -2.0) {
        b = std::max((3.0 * t + 2.0 - s) / 2.0, -2.0);
        c = b + s;
        a = -2.0;
    }
    return FuzzyEmotionState(a, b, c);
}

}  // namespace

LabelSet simulate_annotators(EmotionAnchor anchor, int k_experts, double p_disagree,
                             std::uint64_t seed) {
    if (k_experts < 1) throw ConfigError("k_experts must be >= 1");
    if (!(p_disagree >= 0.0 && p_disagree <= 1.0)) {
        throw ConfigError("p_disagree must lie in [0, 1]");
    }
    rng::Engine g(seed);
    LabelSet labels;
    labels.reserve(static_cast<std::size_t>(k_experts));
    for (int j = 0; j < k_experts; ++j) {
        EmotionAnchor target = anchor;
        if (rng::uniform01(g) < p_disagree) target = adjacent_anchor(anchor, g);
        double noise = rng::uniform(g, -0.3, 0.3);
        double spread = rng::uniform(g, 0.25, 0.75);
        double t = std::clamp(anchor_coordinate(target) + noise, -2.0, 2.0);
        labels.push_back(place_triangle(t, spread));
    }
    return labels;
}

void GeneratorConfig::validate() const {
    if (n_utterances < 1) throw ConfigError("n_utterances must be >= 1");
    if (n_subjects < 1) throw ConfigError("n_subjects must be >= 1");
    if (k_experts < 1) throw ConfigError("k_experts must be >= 1");
    if (!(p_disagree >= 0.0 && p_disagree <= 1.0)) {
        throw ConfigError("p_disagree must lie in [0, 1]");
    }
    if (!(duration_min_s >= 0.5 && duration_max_s <= 2.0 &&
          duration_min_s <= duration_max_s)) {
        throw ConfigError("durations must satisfy 0.5 <= min <= max <= 2.0");
    }
    double mix_sum = step_mix[0] + step_mix[1] + step_mix[2];
    if (!(mix_sum > 0.0) || step_mix[0] < 0.0 || step_mix[1] < 0.0 || step_mix[2] < 0.0) {
        throw ConfigError("step_mix must be non-negative with positive sum");
    }
    acoustics_by_name(acoustics);
}

std::string generator_config_to_json(const GeneratorConfig& cfg) {
    nlohmann::ordered_json per_step = nlohmann::ordered_json::object();
    for (TherapeuticStep s : all_steps()) {
        const auto& row = cfg.targets.per_step.at(s);
        per_step[std::string(step_name(s))] = {row[0], row[1], row[2]};
    }
    nlohmann::ordered_json j{
        {"n_utterances", cfg.n_utterances},
        {"n_subjects", cfg.n_subjects},
        {"k_experts", cfg.k_experts},
        {"p_disagree", cfg.p_disagree},
        {"seed", cfg.seed},
        {"step_mix", {cfg.step_mix[0], cfg.step_mix[1], cfg.step_mix[2]}},
        {"targets",
         {{"overall", {cfg.targets.overall[0], cfg.targets.overall[1], cfg.targets.overall[2]}},
          {"per_step", per_step}}},
        {"acoustics", cfg.acoustics},
        {"duration_min_s", cfg.duration_min_s},
        {"duration_max_s", cfg.duration_max_s},
    };
    return j.dump(2) + "\n";
}

namespace {

std::array<double, 3> parse_row(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError(std::string(what) + " must be an array of 3 numbers");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

GeneratorConfig generator_config_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("generator config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("generator config must be a JSON object");

    GeneratorConfig cfg;
    try {
        cfg.n_utterances = j.value("n_utterances", cfg.n_utterances);
        cfg.n_subjects = j.value("n_subjects", cfg.n_subjects);
        cfg.k_experts = j.value("k_experts", cfg.k_experts);
        cfg.p_disagree = j.value("p_disagree", cfg.p_disagree);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.acoustics = j.value("acoustics", cfg.acoustics);
        cfg.duration_min_s = j.value("duration_min_s", cfg.duration_min_s);
        cfg.duration_max_s = j.value("duration_max_s", cfg.duration_max_s);
        if (j.contains("step_mix")) cfg.step_mix = parse_row(j.at("step_mix"), "step_mix");
        if (j.contains("targets")) {
            const auto& t = j.at("targets");
            if (t.contains("overall")) {
                cfg.targets.overall = parse_row(t.at("overall"), "targets.overall");
            }
            if (t.contains("per_step")) {
                for (const auto& [key, row] : t.at("per_step").items()) {
                    cfg.targets.per_step[step_from_name(key)] = parse_row(row, key.c_str());
                }
            }
            cfg.targets.normalize();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("generator config: ") + e.what());
    }
    return cfg;
}

namespace {

// Largest-remainder apportionment of n slots over the given weights; exact
// cell counts keep small corpora on target instead of leaving them to
// sampling noise.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights) {
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> rema;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double exact = static_cast<double>(n) * weights[i] / total;
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        rema.emplace_back(exact - std::floor(exact), i);
    }
    std::sort(rema.begin(), rema.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;
    });
    for (std::size_t k = 0; assigned + k < n; ++k) {
        counts[rema[k % rema.size()].second] += 1;
    }
    return counts;
}

}  // namespace

Corpus synth_corpus(const GeneratorConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    AcousticsTable table = acoustics_by_name(cfg.acoustics);
    DistributionTargets targets = cfg.targets;
    targets.normalize();

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "wav", ec);
    if (ec) throw IoFailure("cannot create output directory: " + (out_dir / "wav").string());

    std::vector<SubjectProfile> subjects;
    for (int i = 0; i < cfg.n_subjects; ++i) {
        char sid[16];
        std::snprintf(sid, sizeof sid, "s%02d", i + 1);
        rng::Engine ga(rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(i),
                                        kStreamSubjectAge));
        int age = rng::uniform_int(ga, 5, 9);
        subjects.push_back(make_subject(sid, age, ga()));
    }

    std::vector<double> weights;
    std::vector<std::pair<TherapeuticStep, int>> cells;
    double mix_sum = cfg.step_mix[0] + cfg.step_mix[1] + cfg.step_mix[2];
    for (std::size_t si = 0; si < static_cast<std::size_t>(kNumSteps); ++si) {
        TherapeuticStep step = all_steps()[si];
        const auto& row = targets.per_step.at(step);
        for (int gi = 0; gi < 3; ++gi) {
            weights.push_back(cfg.step_mix[si] / mix_sum * row[static_cast<std::size_t>(gi)]);
            cells.emplace_back(step, gi);
        }
    }
    std::vector<std::size_t> counts = apportion(cfg.n_utterances, weights);
    std::vector<std::pair<TherapeuticStep, int>> assign;
    assign.reserve(cfg.n_utterances);
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        assign.insert(assign.end(), counts[ci], cells[ci]);
    }
    rng::Engine gshuf(rng::derive_seed(cfg.seed, 0, kStreamAssign));
    rng::shuffle(assign, gshuf);

    Corpus corpus;
    corpus.root = out_dir;
    corpus.records.reserve(cfg.n_utterances);
    for (std::size_t i = 0; i < cfg.n_utterances; ++i) {
        rng::Engine gr(rng::derive_seed(cfg.seed, i, kStreamRecord));
        auto [step, group] = assign[i];
        EmotionAnchor anchor;
        if (group == 0) {
            anchor = rng::uniform_int(gr, 0, 1) == 0 ? EmotionAnchor::nervousness
                                                     : EmotionAnchor::tenseness;
        } else if (group == 1) {
            anchor = EmotionAnchor::neutral;
        } else {
            anchor = rng::uniform_int(gr, 0, 1) == 0 ? EmotionAnchor::contentment
                                                     : EmotionAnchor::happiness;
        }
        const SubjectProfile& subject =
            subjects[static_cast<std::size_t>(rng::uniform_int(gr, 0, cfg.n_subjects - 1))];
        double dur = rng::uniform(gr, cfg.duration_min_s, cfg.duration_max_s);

        char uid[32];
        std::snprintf(uid, sizeof uid, "u%05zu", i + 1);
        Utterance u = render_utterance(subject, anchor, dur,
                                       rng::derive_seed(cfg.seed, i, kStreamRender), table);
        u.id = uid;
        std::string rel = std::string("wav/") + uid + ".wav";
        write_wav(u, out_dir / rel);

        UtteranceRecord rec;
        rec.id = uid;
        rec.subject_id = subject.subject_id;
        rec.subject_age = subject.age;
        rec.step = step;
        rec.audio_path = rel;
        rec.duration_s = static_cast<double>(u.samples.size()) / kCanonicalRate;
        rec.labels = simulate_annotators(anchor, cfg.k_experts, cfg.p_disagree,
                                         rng::derive_seed(cfg.seed, i, kStreamLabels));
        corpus.records.push_back(std::move(rec));
    }

    save_manifest(corpus, out_dir / "manifest.jsonl");
    std::ofstream cf(out_dir / "generator_config.json", std::ios::binary);
    if (!cf) throw IoFailure("cannot write generator config");
    cf << generator_config_to_json(cfg);
    return corpus;
}

}  // namespace vocemo
