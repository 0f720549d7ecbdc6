// vocemo: corpus synthesis, feature dumps, HMM training and evaluation for
// the child-speech emotion pipeline. One subcommand per pipeline stage.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vocemo/audio_io.hpp"
#include "vocemo/corpus.hpp"
#include "vocemo/errors.hpp"
#include "vocemo/features.hpp"
#include "vocemo/generator.hpp"
#include "vocemo/recognizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Defaults for everything a config file or flag can override.  The pipeline
// narrows the pitch search band to the child voice range so that subharmonic
// lags of the lowest expected F0 fall outside the autocorrelation window.
struct CliConfig {
    vocemo::GeneratorConfig generator;
    vocemo::FrameConfig frame{.pitch_fmin = 270.0};
    int states = 3;
    int iters = 20;
    int min_per_class = 5;
    double theta = vocemo::kDefaultTheta;
    std::string prior = "uniform";
    std::string split = "sd";
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

void reject_unknown(const json& section, const std::vector<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : section.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw UsageError("unknown config key: " + where + key);
        }
    }
}

CliConfig load_config(const std::string& path) {
    CliConfig cfg;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UsageError("config is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    reject_unknown(j, {"seed", "generator", "frame", "train", "eval"}, "");

    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("generator")) {
        const json& g = j.at("generator");
        reject_unknown(g,
                       {"n_utterances", "n_subjects", "k_experts", "p_disagree", "seed",
                        "step_mix", "targets", "acoustics", "duration_min_s",
                        "duration_max_s"},
                       "generator.");
        if (g.contains("targets")) {
            reject_unknown(g.at("targets"), {"overall", "per_step"}, "generator.targets.");
            if (g.at("targets").contains("per_step")) {
                reject_unknown(g.at("targets").at("per_step"),
                               {"evaluation_exercises", "phonematic_hearing",
                                "pronunciation_3d"},
                               "generator.targets.per_step.");
            }
        }
        cfg.generator = vocemo::generator_config_from_json(g.dump());
    }
    if (j.contains("frame")) {
        const json& f = j.at("frame");
        reject_unknown(f,
                       {"frame_len", "hop", "preemph", "n_fft", "n_mels", "n_mfcc", "fmin",
                        "fmax", "pitch_fmin", "pitch_fmax", "voicing_threshold"},
                       "frame.");
        cfg.frame.frame_len = f.value("frame_len", cfg.frame.frame_len);
        cfg.frame.hop = f.value("hop", cfg.frame.hop);
        cfg.frame.preemph = f.value("preemph", cfg.frame.preemph);
        cfg.frame.n_fft = f.value("n_fft", cfg.frame.n_fft);
        cfg.frame.n_mels = f.value("n_mels", cfg.frame.n_mels);
        cfg.frame.n_mfcc = f.value("n_mfcc", cfg.frame.n_mfcc);
        cfg.frame.fmin = f.value("fmin", cfg.frame.fmin);
        cfg.frame.fmax = f.value("fmax", cfg.frame.fmax);
        cfg.frame.pitch_fmin = f.value("pitch_fmin", cfg.frame.pitch_fmin);
        cfg.frame.pitch_fmax = f.value("pitch_fmax", cfg.frame.pitch_fmax);
        cfg.frame.voicing_threshold =
            f.value("voicing_threshold", cfg.frame.voicing_threshold);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        reject_unknown(t, {"states", "iters", "min_per_class"}, "train.");
        cfg.states = t.value("states", cfg.states);
        cfg.iters = t.value("iters", cfg.iters);
        cfg.min_per_class = t.value("min_per_class", cfg.min_per_class);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        reject_unknown(e, {"theta", "prior", "split", "test_fraction"}, "eval.");
        cfg.theta = e.value("theta", cfg.theta);
        cfg.prior = e.value("prior", cfg.prior);
        cfg.split = e.value("split", cfg.split);
        cfg.test_fraction = e.value("test_fraction", cfg.test_fraction);
    }
    return cfg;
}

vocemo::PriorMode parse_prior(const std::string& name) {
    if (name == "uniform") return vocemo::PriorMode::uniform;
    if (name == "empirical") return vocemo::PriorMode::empirical;
    throw UsageError("--prior must be uniform or empirical, got " + name);
}

vocemo::SplitMode parse_split(const std::string& name) {
    if (name == "sd") return vocemo::SplitMode::speaker_dependent;
    if (name == "si") return vocemo::SplitMode::speaker_independent;
    throw UsageError("--split must be sd or si, got " + name);
}

void check_fraction(double f) {
    if (!(f > 0.0 && f < 1.0)) {
        throw UsageError("--test-fraction must lie strictly inside (0,1)");
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw vocemo::IoFailure("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw vocemo::IoFailure("write failed: " + path.string());
}

std::string stats_json(const vocemo::CorpusStats& stats) {
    ordered_json per_step = ordered_json::object();
    ordered_json step_counts = ordered_json::object();
    for (vocemo::TherapeuticStep s : vocemo::all_steps()) {
        auto name = std::string(vocemo::step_name(s));
        auto it = stats.per_step.find(s);
        if (it == stats.per_step.end()) continue;
        per_step[name] = {it->second.negative, it->second.neutral, it->second.positive};
        step_counts[name] = stats.step_counts.at(s);
    }
    ordered_json j{
        {"total", stats.total},
        {"overall", {stats.overall.negative, stats.overall.neutral, stats.overall.positive}},
        {"per_step", per_step},
        {"step_counts", step_counts},
    };
    return j.dump(2) + "\n";
}

std::string features_csv(const vocemo::FeatureMatrix& f) {
    std::ostringstream out;
    out << "frame";
    for (int c = 0; c < 13; ++c) out << ",c" << c;
    for (int d = 0; d < 13; ++d) out << ",d" << d;
    out << ",loge,f0,voiced\n";
    char buf[32];
    for (std::size_t t = 0; t < f.mat.rows(); ++t) {
        out << t;
        for (std::size_t c = 0; c < f.mat.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.9g", f.mat(t, c));
            out << ',' << buf;
        }
        out << '\n';
    }
    return out.str();
}

int run_synth(const CliConfig& cfg, const std::string& out_dir) {
    vocemo::Corpus corpus = vocemo::synth_corpus(cfg.generator, out_dir);
    std::cout << "wrote " << corpus.records.size() << " records under " << out_dir << "\n";
    return 0;
}

int run_stats(const std::string& manifest, const std::string& out) {
    vocemo::Corpus corpus = vocemo::load_manifest(manifest, false);
    std::string text = stats_json(vocemo::corpus_stats(corpus));
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text(out, text);
    }
    return 0;
}

int run_features(const CliConfig& cfg, const std::string& wav, const std::string& out) {
    vocemo::Utterance u = vocemo::read_wav(wav);
    std::string csv = features_csv(vocemo::extract_features(u, cfg.frame));
    if (out.empty()) {
        std::cout << csv;
    } else {
        write_text(out, csv);
    }
    return 0;
}

// train and eval recompute the same deterministic split from (mode,
// fraction, seed), so a bank trained on the train half is never scored on
// its own data.
int run_train(const CliConfig& cfg, const std::string& manifest, const std::string& out,
              bool do_split) {
    vocemo::Corpus corpus = vocemo::load_manifest(manifest, true);
    vocemo::Corpus train_part = corpus;
    if (do_split) {
        check_fraction(cfg.test_fraction);
        train_part =
            vocemo::split_corpus(corpus, parse_split(cfg.split), cfg.test_fraction, cfg.seed)
                .train;
    }
    vocemo::TrainConfig tc;
    tc.n_states = cfg.states;
    tc.em.max_iters = cfg.iters;
    tc.min_per_class = cfg.min_per_class;
    tc.frame = cfg.frame;
    tc.seed = cfg.seed;
    vocemo::ModelBank bank = vocemo::train_bank(train_part, tc);
    vocemo::save_bank(bank, out);
    std::cout << "trained 5 models on " << train_part.records.size() << " records ("
              << bank.meta.n_excluded << " ambiguous excluded), bank at " << out << "\n";
    return 0;
}

int run_classify(const std::string& bank_path, const std::string& wav,
                 const std::string& prior) {
    vocemo::ModelBank bank = vocemo::load_bank(bank_path);
    vocemo::Utterance u = vocemo::read_wav(wav);
    auto posterior = vocemo::classify_posterior(bank, u, parse_prior(prior));
    vocemo::FuzzyEmotionState state = vocemo::from_posterior(posterior);
    ordered_json j{
        {"fuzzy", {state.a(), state.b(), state.c()}},
        {"crisp", std::string(vocemo::anchor_name(vocemo::crisp_label(state)))},
        {"posterior", std::vector<double>(posterior.begin(), posterior.end())},
    };
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_eval(const CliConfig& cfg, const std::string& bank_path, const std::string& manifest,
             const std::string& out, bool do_split) {
    vocemo::ModelBank bank = vocemo::load_bank(bank_path);
    vocemo::Corpus corpus = vocemo::load_manifest(manifest, true);
    vocemo::Corpus test_part = corpus;
    std::string descriptor = "all";
    std::vector<std::uint64_t> seeds;
    if (do_split) {
        check_fraction(cfg.test_fraction);
        test_part =
            vocemo::split_corpus(corpus, parse_split(cfg.split), cfg.test_fraction, cfg.seed)
                .test;
        char desc[64];
        std::snprintf(desc, sizeof desc, "%s:%g", cfg.split.c_str(), cfg.test_fraction);
        descriptor = desc;
        seeds.push_back(cfg.seed);
    }
    vocemo::EvalReport report =
        vocemo::evaluate(bank, test_part, cfg.theta, parse_prior(cfg.prior));
    report.split = descriptor;
    report.seeds = seeds;
    std::string text = vocemo::eval_report_json(report);
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text(out, text);
    }
    return 0;
}

vocemo::EvalReport report_from_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw vocemo::IoFailure("cannot open report: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw vocemo::MalformedModel("report is not valid JSON: " + std::string(e.what()));
    }
    vocemo::EvalReport r;
    try {
        for (std::size_t i = 0; i < r.confusion.size(); ++i) {
            for (std::size_t k = 0; k < r.confusion[i].size(); ++k) {
                r.confusion[i][k] = j.at("confusion").at(i).at(k).get<std::size_t>();
            }
            r.per_class_counts[i] = j.at("per_class_counts").at(i).get<std::size_t>();
        }
        r.accuracy_5 = j.at("accuracy_5").get<double>();
        r.accuracy_valence = j.at("accuracy_valence").get<double>();
        r.accuracy_within_one = j.at("accuracy_within_one").get<double>();
        r.fuzzy_match_rate = j.at("fuzzy_match_rate").get<double>();
        r.split = j.at("split").get<std::string>();
        r.theta = j.at("theta").get<double>();
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } catch (const json::exception& e) {
        throw vocemo::MalformedModel("report structure: " + std::string(e.what()));
    }
    return r;
}

int run_report(const std::string& in_path, std::string csv_path) {
    vocemo::EvalReport r = report_from_json(in_path);

    std::cout << "split: " << r.split << "   theta: " << r.theta << "\n\n";
    std::printf("%-14s", "true\\predicted");
    for (int j = 0; j < vocemo::kNumAnchors; ++j) {
        std::printf(" %12s", std::string(vocemo::anchor_name(static_cast<vocemo::EmotionAnchor>(j))).c_str());
    }
    std::printf(" %8s\n", "total");
    for (std::size_t i = 0; i < r.confusion.size(); ++i) {
        std::printf("%-14s", std::string(vocemo::anchor_name(static_cast<vocemo::EmotionAnchor>(i))).c_str());
        for (std::size_t j = 0; j < r.confusion[i].size(); ++j) {
            std::printf(" %12zu", r.confusion[i][j]);
        }
        std::printf(" %8zu\n", r.per_class_counts[i]);
    }
    std::printf("\naccuracy_5: %.4f\naccuracy_valence: %.4f\naccuracy_within_one: %.4f\nfuzzy_match_rate: %.4f\n",
                r.accuracy_5, r.accuracy_valence, r.accuracy_within_one, r.fuzzy_match_rate);

    if (csv_path.empty()) {
        csv_path = in_path + ".confusion.csv";
    }
    write_text(csv_path, vocemo::confusion_csv(r));
    std::cout << "\nconfusion data: " << csv_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"child-speech emotion pipeline: synthesis, features, HMM bank, evaluation"};
    app.require_subcommand(1);

    std::string config_path, out, manifest, wav, bank_path, in_path;
    std::string split_flag, prior_flag;
    std::uint64_t seed_flag = 0;
    std::size_t n_flag = 0;
    int subjects_flag = 0, states_flag = 0, iters_flag = 0;
    double tf_flag = 0.0, theta_flag = 0.0;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    auto* synth_n = synth->add_option("--n", n_flag, "number of utterances");
    auto* synth_subjects = synth->add_option("--subjects", subjects_flag, "number of subjects");
    auto* synth_seed = synth->add_option("--seed", seed_flag, "master seed");
    synth->add_option("--config", config_path, "JSON config file");
    synth->add_option("--out", out, "output directory")->required();

    CLI::App* stats = app.add_subcommand("stats", "valence distribution of a manifest");
    stats->add_option("manifest", manifest, "manifest.jsonl path")
        ->required()
        ->check(CLI::ExistingFile);
    stats->add_option("--out", out, "write JSON here instead of stdout");

    CLI::App* features = app.add_subcommand("features", "dump one utterance's features as CSV");
    features->add_option("wav", wav, "input WAV file")->required()->check(CLI::ExistingFile);
    features->add_option("--config", config_path, "JSON config file");
    features->add_option("--out", out, "write CSV here instead of stdout");

    CLI::App* train = app.add_subcommand("train", "train the per-emotion HMM bank");
    train->add_option("manifest", manifest, "manifest.jsonl path")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("--out", out, "model bank output path")->required();
    train->add_option("--config", config_path, "JSON config file");
    auto* train_split = train->add_option("--split", split_flag, "train on the split's train part {sd|si}");
    auto* train_tf = train->add_option("--test-fraction", tf_flag, "held-out fraction");
    auto* train_seed = train->add_option("--seed", seed_flag, "split seed");
    auto* train_states = train->add_option("--states", states_flag, "HMM states per model");
    auto* train_iters = train->add_option("--iters", iters_flag, "max EM iterations");

    CLI::App* classify = app.add_subcommand("classify", "classify one WAV into a fuzzy state");
    classify->add_option("--bank", bank_path, "model bank JSON")->required()->check(CLI::ExistingFile);
    classify->add_option("--wav", wav, "input WAV file")->required()->check(CLI::ExistingFile);
    classify->add_option("--prior", prior_flag, "{uniform|empirical}");

    CLI::App* evalc = app.add_subcommand("eval", "evaluate a bank against a manifest");
    evalc->add_option("--bank", bank_path, "model bank JSON")->required()->check(CLI::ExistingFile);
    evalc->add_option("--manifest", manifest, "manifest.jsonl path")
        ->required()
        ->check(CLI::ExistingFile);
    evalc->add_option("--config", config_path, "JSON config file");
    auto* eval_split = evalc->add_option("--split", split_flag, "evaluate the split's test part {sd|si}");
    auto* eval_tf = evalc->add_option("--test-fraction", tf_flag, "held-out fraction");
    auto* eval_seed = evalc->add_option("--seed", seed_flag, "split seed");
    auto* eval_theta = evalc->add_option("--theta", theta_flag, "fuzzy match threshold");
    auto* eval_prior = evalc->add_option("--prior", prior_flag, "{uniform|empirical}");
    evalc->add_option("--out", out, "write EvalReport JSON here instead of stdout");

    CLI::App* report = app.add_subcommand("report", "render an EvalReport as a table + CSV");
    report->add_option("--in", in_path, "EvalReport JSON")->required()->check(CLI::ExistingFile);
    report->add_option("--out", out, "confusion CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        CliConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);

        if (synth->parsed()) {
            if (*synth_n) cfg.generator.n_utterances = n_flag;
            if (*synth_subjects) cfg.generator.n_subjects = subjects_flag;
            if (*synth_seed) cfg.generator.seed = seed_flag;
            return run_synth(cfg, out);
        }
        if (stats->parsed()) return run_stats(manifest, out);
        if (features->parsed()) return run_features(cfg, wav, out);
        if (train->parsed()) {
            if (*train_seed) cfg.seed = seed_flag;
            if (*train_split) cfg.split = split_flag;
            if (*train_tf) cfg.test_fraction = tf_flag;
            if (*train_states) cfg.states = states_flag;
            if (*train_iters) cfg.iters = iters_flag;
            return run_train(cfg, manifest, out, static_cast<bool>(*train_split));
        }
        if (classify->parsed()) {
            return run_classify(bank_path, wav, prior_flag.empty() ? "uniform" : prior_flag);
        }
        if (evalc->parsed()) {
            if (*eval_seed) cfg.seed = seed_flag;
            if (*eval_split) cfg.split = split_flag;
            if (*eval_tf) cfg.test_fraction = tf_flag;
            if (*eval_theta) cfg.theta = theta_flag;
            if (*eval_prior) cfg.prior = prior_flag;
            return run_eval(cfg, bank_path, manifest, out, static_cast<bool>(*eval_split));
        }
        if (report->parsed()) return run_report(in_path, out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const vocemo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
