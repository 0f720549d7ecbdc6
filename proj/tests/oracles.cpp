#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace oracles {

using vocemo::Hmm;
using vocemo::Matrix;

std::vector<double> naive_dft_power(std::span<const double> frame, int n_fft) {
    const auto n = static_cast<std::size_t>(n_fft);
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        long double re = 0.0L, im = 0.0L;
        for (std::size_t t = 0; t < frame.size(); ++t) {
            long double ang = -2.0L * std::numbers::pi_v<long double> *
                              static_cast<long double>(k) * static_cast<long double>(t) /
                              static_cast<long double>(n);
            re += static_cast<long double>(frame[t]) * std::cos(ang);
            im += static_cast<long double>(frame[t]) * std::sin(ang);
        }
        out[k] = static_cast<double>((re * re + im * im) / static_cast<long double>(n));
    }
    return out;
}

std::vector<double> naive_dct2(std::span<const double> v, int n_out) {
    const auto n = v.size();
    std::vector<double> out(static_cast<std::size_t>(n_out));
    for (std::size_t k = 0; k < out.size(); ++k) {
        long double acc = 0.0L;
        for (std::size_t t = 0; t < n; ++t) {
            acc += static_cast<long double>(v[t]) *
                   std::cos(std::numbers::pi_v<long double> * static_cast<long double>(k) *
                            (2.0L * static_cast<long double>(t) + 1.0L) /
                            (2.0L * static_cast<long double>(n)));
        }
        long double scale = k == 0 ? std::sqrt(1.0L / static_cast<long double>(n))
                                   : std::sqrt(2.0L / static_cast<long double>(n));
        out[k] = static_cast<double>(scale * acc);
    }
    return out;
}

namespace {

double path_logprob(const Hmm& h, const Matrix& obs, const std::vector<int>& path) {
    const auto s0 = static_cast<std::size_t>(path[0]);
    double lp = h.log_init[s0] + vocemo::gaussian_logpdf(obs.row(0), h.states[s0]);
    for (std::size_t t = 1; t < path.size(); ++t) {
        const auto a = static_cast<std::size_t>(path[t - 1]);
        const auto b = static_cast<std::size_t>(path[t]);
        lp += h.log_trans(a, b) + vocemo::gaussian_logpdf(obs.row(t), h.states[b]);
    }
    return lp;
}

template <typename Fn>
void for_each_path(int n_states, std::size_t frames, Fn&& fn) {
    std::vector<int> path(frames, 0);
    while (true) {
        fn(path);
        std::size_t i = frames;
        while (i > 0) {
            --i;
            if (++path[i] < n_states) break;
            path[i] = 0;
            if (i == 0) return;
        }
    }
}

}  // namespace

double enum_forward_loglik(const Hmm& h, const Matrix& obs) {
    std::vector<double> lps;
    for_each_path(h.n_states, obs.rows(), [&](const std::vector<int>& p) {
        lps.push_back(path_logprob(h, obs, p));
    });
    return vocemo::logsumexp(lps);
}

EnumPath enum_viterbi(const Hmm& h, const Matrix& obs) {
    EnumPath best{{}, -std::numeric_limits<double>::infinity()};
    for_each_path(h.n_states, obs.rows(), [&](const std::vector<int>& p) {
        double lp = path_logprob(h, obs, p);
        if (lp > best.score) best = {p, lp};
    });
    return best;
}

double numeric_centroid(const vocemo::FuzzyEmotionState& s, double step) {
    if (s.c() - s.a() < step) return s.b();
    const auto n = static_cast<std::size_t>(std::ceil((s.c() - s.a()) / step));
    long double num = 0.0L, den = 0.0L;
    double prev_x = s.a();
    double prev_mu = vocemo::membership(s, prev_x);
    for (std::size_t i = 1; i <= n; ++i) {
        double x = std::min(s.a() + static_cast<double>(i) * step, s.c());
        double mu = vocemo::membership(s, x);
        num += 0.5L * (static_cast<long double>(prev_x) * prev_mu +
                       static_cast<long double>(x) * mu) *
               (x - prev_x);
        den += 0.5L * (static_cast<long double>(prev_mu) + mu) * (x - prev_x);
        prev_x = x;
        prev_mu = mu;
    }
    return den > 0.0L ? static_cast<double>(num / den) : s.b();
}

double similarity_grid(const vocemo::FuzzyEmotionState& s1, const vocemo::FuzzyEmotionState& s2,
                       double step) {
    const double lo = vocemo::kValenceMin, hi = vocemo::kValenceMax;
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    long double inter = 0.0L, uni = 0.0L;
    double px = lo;
    double pmin = std::min(membership(s1, px), membership(s2, px));
    double pmax = std::max(membership(s1, px), membership(s2, px));
    for (std::size_t i = 1; i <= n; ++i) {
        double x = std::min(lo + static_cast<double>(i) * step, hi);
        double m1 = membership(s1, x), m2 = membership(s2, x);
        double cmin = std::min(m1, m2), cmax = std::max(m1, m2);
        inter += 0.5L * (static_cast<long double>(pmin) + cmin) * (x - px);
        uni += 0.5L * (static_cast<long double>(pmax) + cmax) * (x - px);
        px = x;
        pmin = cmin;
        pmax = cmax;
    }
    if (uni == 0.0L) return s1 == s2 ? 1.0 : 0.0;
    return static_cast<double>(inter / uni);
}

Hmm random_hmm(vocemo::rng::Engine& g, int n_states, int dim, bool left_to_right) {
    Hmm h;
    h.n_states = n_states;
    h.left_to_right = left_to_right;
    const auto ns = static_cast<std::size_t>(n_states);
    h.log_init.assign(ns, 0.0);
    h.log_trans = Matrix(ns, ns, -std::numeric_limits<double>::infinity());

    std::vector<double> init(ns);
    double init_sum = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
        init[i] = left_to_right ? (i == 0 ? 1.0 : 0.0) : vocemo::rng::uniform(g, 0.1, 1.0);
        init_sum += init[i];
    }
    for (std::size_t i = 0; i < ns; ++i)
        h.log_init[i] = init[i] > 0.0 ? std::log(init[i] / init_sum)
                                      : -std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < ns; ++i) {
        std::vector<double> row(ns, 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < ns; ++j) {
            bool allowed = !left_to_right || j == i || j == i + 1;
            if (i + 1 == ns && left_to_right) allowed = j == i;
            if (allowed) {
                row[j] = vocemo::rng::uniform(g, 0.1, 1.0);
                sum += row[j];
            }
        }
        for (std::size_t j = 0; j < ns; ++j)
            if (row[j] > 0.0) h.log_trans(i, j) = std::log(row[j] / sum);
    }

    h.states.resize(ns);
    for (auto& st : h.states) {
        st.mean.resize(static_cast<std::size_t>(dim));
        st.var.resize(static_cast<std::size_t>(dim));
        for (int d = 0; d < dim; ++d) {
            st.mean[static_cast<std::size_t>(d)] = vocemo::rng::uniform(g, -2.0, 2.0);
            st.var[static_cast<std::size_t>(d)] = vocemo::rng::uniform(g, 0.2, 2.0);
        }
    }
    return h;
}

Matrix random_obs(vocemo::rng::Engine& g, int frames, int dim) {
    Matrix m(static_cast<std::size_t>(frames), static_cast<std::size_t>(dim));
    for (std::size_t t = 0; t < m.rows(); ++t)
        for (std::size_t d = 0; d < m.cols(); ++d) m(t, d) = vocemo::rng::uniform(g, -3.0, 3.0);
    return m;
}

}  // namespace oracles
