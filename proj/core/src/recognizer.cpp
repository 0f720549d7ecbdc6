#include "vocemo/recognizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "vocemo/audio_io.hpp"
#include "vocemo/errors.hpp"

namespace vocemo {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
}

void fnv_string(std::uint64_t& h, std::string_view s) {
    fnv_bytes(h, s.data(), s.size());
    fnv_bytes(h, "|", 1);
}

void fnv_double(std::uint64_t& h, double d) {
    auto bits = std::bit_cast<std::uint64_t>(d);
    fnv_bytes(h, &bits, sizeof bits);
}

}  // namespace

std::uint64_t corpus_hash(const Corpus& c) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const UtteranceRecord& r : c.records) {
        fnv_string(h, r.id);
        fnv_string(h, r.subject_id);
        fnv_double(h, r.subject_age);
        fnv_string(h, step_name(r.step));
        fnv_string(h, r.audio_path);
        fnv_double(h, r.duration_s);
        for (const FuzzyEmotionState& l : r.labels) {
            fnv_double(h, l.a());
            fnv_double(h, l.b());
            fnv_double(h, l.c());
        }
        fnv_string(h, ";");
    }
    return h;
}

void ModelBank::validate() const {
    std::size_t dim = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(kNumAnchors); ++i) {
        const Hmm& m = models[i];
        if (m.n_states < 1 || m.states.empty()) {
            throw MalformedModel("model missing for anchor " +
                                 std::string(anchor_name(static_cast<EmotionAnchor>(i))));
        }
        m.validate();
        if (dim == 0) dim = m.dim();
        if (m.dim() != dim) {
            throw MalformedModel("models disagree on feature dimension");
        }
    }
    double sum = 0.0;
    for (double lp : log_priors) sum += std::exp(lp);
    if (std::abs(sum - 1.0) > 1e-9) {
        throw MalformedModel("class priors do not sum to 1");
    }
}

namespace {

EmotionAnchor crisp_of_record(const UtteranceRecord& r) {
    return crisp_label(r.labels.front());
}

bool unambiguous(const UtteranceRecord& r, EmotionAnchor& out) {
    EmotionAnchor first = crisp_label(r.labels.front());
    for (std::size_t i = 1; i < r.labels.size(); ++i) {
        if (crisp_label(r.labels[i]) != first) return false;
    }
    out = first;
    return true;
}

}  // namespace

ModelBank train_bank(const Corpus& c, const TrainConfig& cfg) {
    if (c.records.empty()) throw EmptyCorpus("cannot train on an empty corpus");
    if (cfg.min_per_class < 1) throw ConfigError("min_per_class must be >= 1");
    cfg.frame.validate(kCanonicalRate);

    std::array<std::vector<const UtteranceRecord*>, kNumAnchors> buckets;
    std::size_t excluded = 0;
    for (const UtteranceRecord& r : c.records) {
        EmotionAnchor a;
        if (unambiguous(r, a)) {
            buckets[static_cast<std::size_t>(a)].push_back(&r);
        } else {
            ++excluded;
        }
    }
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        if (buckets[i].size() < static_cast<std::size_t>(cfg.min_per_class)) {
            throw InsufficientData(std::string(anchor_name(static_cast<EmotionAnchor>(i))));
        }
    }

    ModelBank bank;
    bank.frame = cfg.frame;
    bank.meta.corpus_hash = corpus_hash(c);
    bank.meta.seed = cfg.seed;
    bank.meta.n_excluded = excluded;

    std::size_t used_total = 0;
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        std::vector<Matrix> sequences;
        sequences.reserve(buckets[i].size());
        for (const UtteranceRecord* r : buckets[i]) {
            Utterance u = read_wav(c.root / r->audio_path);
            sequences.push_back(extract_features(u, cfg.frame).mat);
        }
        Hmm start = flat_start(sequences, cfg.n_states);
        TrainResult res = baum_welch(start, sequences, cfg.em);
        bank.models[i] = std::move(res.model);
        bank.meta.iterations[i] = static_cast<int>(res.loglik_history.size());
        bank.meta.train_counts[i] = buckets[i].size();
        used_total += buckets[i].size();
    }
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        bank.log_priors[i] = std::log(static_cast<double>(bank.meta.train_counts[i]) /
                                      static_cast<double>(used_total));
    }
    bank.validate();
    return bank;
}

std::array<double, kNumAnchors> classify_posterior(const ModelBank& bank, const Utterance& u,
                                                   PriorMode prior) {
    bank.validate();
    FeatureMatrix feats = extract_features(u, bank.frame);

    std::array<double, kNumAnchors> scores{};
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = avg_loglik(bank.models[i], feats.mat);
        if (prior == PriorMode::empirical) scores[i] += bank.log_priors[i];
    }
    double m = *std::max_element(scores.begin(), scores.end());
    std::array<double, kNumAnchors> posterior{};
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        posterior[i] = std::exp(scores[i] - m);
        sum += posterior[i];
    }
    for (double& p : posterior) p /= sum;
    return posterior;
}

FuzzyEmotionState recognize(const ModelBank& bank, const Utterance& u, PriorMode prior) {
    auto p = classify_posterior(bank, u, prior);
    return from_posterior(p);
}

EvalReport evaluate(const ModelBank& bank, const Corpus& test, double theta, PriorMode prior) {
    if (test.records.empty()) throw EmptyCorpus("evaluation needs a non-empty test corpus");

    EvalReport rep;
    rep.theta = theta;
    std::size_t hits5 = 0, hits_valence = 0, hits_within = 0, hits_fuzzy = 0;
    for (const UtteranceRecord& r : test.records) {
        Utterance u = read_wav(test.root / r.audio_path);
        auto posterior = classify_posterior(bank, u, prior);
        FuzzyEmotionState state = from_posterior(posterior);
        // The crisp prediction is the posterior argmax; the fuzzy state only
        // drives the label-set match. Ties break toward the lower index.
        std::size_t best = 0;
        for (std::size_t i = 1; i < posterior.size(); ++i) {
            if (posterior[i] > posterior[best]) best = i;
        }
        auto pred = static_cast<EmotionAnchor>(best);
        EmotionAnchor truth = crisp_of_record(r);

        rep.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)] += 1;
        if (pred == truth) ++hits5;
        if (group_of(pred) == group_of(truth)) ++hits_valence;
        if (std::abs(anchor_coordinate(pred) - anchor_coordinate(truth)) <= 1.0) ++hits_within;
        if (label_match(state, r.labels, theta)) ++hits_fuzzy;
    }

    auto total = static_cast<double>(test.records.size());
    rep.accuracy_5 = static_cast<double>(hits5) / total;
    rep.accuracy_valence = static_cast<double>(hits_valence) / total;
    rep.accuracy_within_one = static_cast<double>(hits_within) / total;
    rep.fuzzy_match_rate = static_cast<double>(hits_fuzzy) / total;
    for (std::size_t i = 0; i < rep.per_class_counts.size(); ++i) {
        std::size_t n = 0;
        for (std::size_t j = 0; j < rep.confusion[i].size(); ++j) n += rep.confusion[i][j];
        rep.per_class_counts[i] = n;
    }
    return rep;
}

std::string eval_report_json(const EvalReport& r) {
    ordered_json confusion = ordered_json::array();
    for (const auto& row : r.confusion) {
        confusion.push_back(std::vector<std::size_t>(row.begin(), row.end()));
    }
    ordered_json j{
        {"confusion", confusion},
        {"accuracy_5", r.accuracy_5},
        {"accuracy_valence", r.accuracy_valence},
        {"accuracy_within_one", r.accuracy_within_one},
        {"fuzzy_match_rate", r.fuzzy_match_rate},
        {"per_class_counts", std::vector<std::size_t>(r.per_class_counts.begin(),
                                                      r.per_class_counts.end())},
        {"split", r.split},
        {"theta", r.theta},
        {"seeds", r.seeds},
    };
    return j.dump(2) + "\n";
}

std::string confusion_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "true,predicted,count\n";
    for (std::size_t i = 0; i < r.confusion.size(); ++i) {
        for (std::size_t j = 0; j < r.confusion[i].size(); ++j) {
            out << anchor_name(static_cast<EmotionAnchor>(i)) << ','
                << anchor_name(static_cast<EmotionAnchor>(j)) << ',' << r.confusion[i][j]
                << '\n';
        }
    }
    return out.str();
}

namespace {

ordered_json frame_to_json(const FrameConfig& f) {
    return ordered_json{
        {"frame_len", f.frame_len},
        {"hop", f.hop},
        {"preemph", f.preemph},
        {"n_fft", f.n_fft},
        {"n_mels", f.n_mels},
        {"n_mfcc", f.n_mfcc},
        {"fmin", f.fmin},
        {"fmax", f.fmax},
        {"pitch_fmin", f.pitch_fmin},
        {"pitch_fmax", f.pitch_fmax},
        {"voicing_threshold", f.voicing_threshold},
    };
}

FrameConfig frame_from_json(const nlohmann::json& j) {
    FrameConfig f;
    f.frame_len = j.at("frame_len").get<int>();
    f.hop = j.at("hop").get<int>();
    f.preemph = j.at("preemph").get<double>();
    f.n_fft = j.at("n_fft").get<int>();
    f.n_mels = j.at("n_mels").get<int>();
    f.n_mfcc = j.at("n_mfcc").get<int>();
    f.fmin = j.at("fmin").get<double>();
    f.fmax = j.at("fmax").get<double>();
    f.pitch_fmin = j.at("pitch_fmin").get<double>();
    f.pitch_fmax = j.at("pitch_fmax").get<double>();
    f.voicing_threshold = j.at("voicing_threshold").get<double>();
    return f;
}

ordered_json hmm_to_json(const Hmm& m) {
    ordered_json init = ordered_json::array();
    for (double lp : m.log_init) init.push_back(std::exp(lp));
    ordered_json trans = ordered_json::array();
    for (std::size_t i = 0; i < static_cast<std::size_t>(m.n_states); ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t j = 0; j < static_cast<std::size_t>(m.n_states); ++j) {
            row.push_back(std::exp(m.log_trans(i, j)));
        }
        trans.push_back(row);
    }
    ordered_json states = ordered_json::array();
    for (const GaussianState& s : m.states) {
        states.push_back(ordered_json{{"mean", s.mean}, {"var", s.var}});
    }
    return ordered_json{
        {"n_states", m.n_states},
        {"left_to_right", m.left_to_right},
        {"init", init},
        {"trans", trans},
        {"states", states},
    };
}

Hmm hmm_from_json(const nlohmann::json& j) {
    Hmm m;
    m.n_states = j.at("n_states").get<int>();
    if (m.n_states < 1) throw MalformedModel("n_states must be >= 1");
    m.left_to_right = j.at("left_to_right").get<bool>();

    const auto& init = j.at("init");
    const auto& trans = j.at("trans");
    const auto& states = j.at("states");
    auto n = static_cast<std::size_t>(m.n_states);
    if (init.size() != n || trans.size() != n || states.size() != n) {
        throw MalformedModel("model arrays disagree with n_states");
    }
    for (const auto& p : init) m.log_init.push_back(std::log(p.get<double>()));
    m.log_trans = Matrix(n, n, kNegInf);
    for (std::size_t i = 0; i < n; ++i) {
        if (trans[i].size() != n) throw MalformedModel("transition row has wrong length");
        for (std::size_t k = 0; k < n; ++k) {
            m.log_trans(i, k) = std::log(trans[i][k].get<double>());
        }
    }
    for (const auto& s : states) {
        GaussianState gs;
        gs.mean = s.at("mean").get<std::vector<double>>();
        gs.var = s.at("var").get<std::vector<double>>();
        if (gs.mean.size() != gs.var.size() || gs.mean.empty()) {
            throw MalformedModel("state mean/var shapes disagree");
        }
        m.states.push_back(std::move(gs));
    }
    return m;
}

}  // namespace

void save_bank(const ModelBank& bank, const std::filesystem::path& path) {
    bank.validate();
    ordered_json models = ordered_json::object();
    ordered_json priors = ordered_json::object();
    ordered_json iterations = ordered_json::object();
    ordered_json counts = ordered_json::object();
    for (std::size_t i = 0; i < static_cast<std::size_t>(kNumAnchors); ++i) {
        auto name = std::string(anchor_name(static_cast<EmotionAnchor>(i)));
        models[name] = hmm_to_json(bank.models[i]);
        priors[name] = std::exp(bank.log_priors[i]);
        iterations[name] = bank.meta.iterations[i];
        counts[name] = bank.meta.train_counts[i];
    }
    ordered_json j{
        {"format_version", kBankFormatVersion},
        {"frame", frame_to_json(bank.frame)},
        {"priors", priors},
        {"models", models},
        {"meta",
         {{"corpus_hash", bank.meta.corpus_hash},
          {"seed", bank.meta.seed},
          {"iterations", iterations},
          {"train_counts", counts},
          {"excluded", bank.meta.n_excluded}}},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open bank for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoFailure("write failed: " + path.string());
}

ModelBank load_bank(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open bank: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedModel(std::string("bank is not valid JSON: ") + e.what());
    }

    if (!j.contains("format_version") || !j.at("format_version").is_number_integer()) {
        throw MalformedModel("missing format_version");
    }
    int version = j.at("format_version").get<int>();
    if (version != kBankFormatVersion) {
        throw VersionMismatch("bank format " + std::to_string(version) + ", expected " +
                              std::to_string(kBankFormatVersion));
    }

    ModelBank bank;
    try {
        bank.frame = frame_from_json(j.at("frame"));
        const auto& models = j.at("models");
        const auto& priors = j.at("priors");
        const auto& meta = j.at("meta");
        for (std::size_t i = 0; i < static_cast<std::size_t>(kNumAnchors); ++i) {
            auto name = std::string(anchor_name(static_cast<EmotionAnchor>(i)));
            if (!models.contains(name)) {
                throw MalformedModel("missing model for anchor " + name);
            }
            bank.models[i] = hmm_from_json(models.at(name));
            bank.log_priors[i] = std::log(priors.at(name).get<double>());
            bank.meta.iterations[i] = meta.at("iterations").at(name).get<int>();
            bank.meta.train_counts[i] = meta.at("train_counts").at(name).get<std::size_t>();
        }
        bank.meta.corpus_hash = meta.at("corpus_hash").get<std::uint64_t>();
        bank.meta.seed = meta.at("seed").get<std::uint64_t>();
        bank.meta.n_excluded = meta.at("excluded").get<std::size_t>();
    } catch (const MalformedModel&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedModel(std::string("bank structure: ") + e.what());
    }
    try {
        bank.validate();
    } catch (const MalformedModel&) {
        throw;
    } catch (const Error& e) {
        throw MalformedModel(std::string("bank fails validation: ") + e.what());
    }
    return bank;
}

}  // namespace vocemo
