#include "vocemo/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vocemo/errors.hpp"

namespace vocemo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_dims(const Hmm& h, const Matrix& obs) {
    if (obs.rows() == 0) throw TooShort("observation sequence is empty");
    if (obs.cols() != h.dim())
        throw DimensionMismatch("observation dim " + std::to_string(obs.cols()) +
                                " vs model dim " + std::to_string(h.dim()));
}

// log emission matrix, T x N
Matrix emission_logpdf(const Hmm& h, const Matrix& obs) {
    Matrix out(obs.rows(), static_cast<std::size_t>(h.n_states));
    for (std::size_t t = 0; t < obs.rows(); ++t)
        for (int i = 0; i < h.n_states; ++i)
            out(t, static_cast<std::size_t>(i)) =
                gaussian_logpdf(obs.row(t), h.states[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace

double gaussian_logpdf(std::span<const double> x, const GaussianState& s) {
    if (x.size() != s.mean.size() || s.mean.size() != s.var.size())
        throw DimensionMismatch("gaussian_logpdf: dimension mismatch");
    double acc = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double diff = x[d] - s.mean[d];
        acc += std::log(2.0 * std::numbers::pi * s.var[d]) + diff * diff / s.var[d];
    }
    return -0.5 * acc;
}

double logsumexp(std::span<const double> xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - m);
    return m + std::log(acc);
}

void Hmm::validate() const {
    if (n_states <= 0 || states.size() != static_cast<std::size_t>(n_states) ||
        log_init.size() != static_cast<std::size_t>(n_states) ||
        log_trans.rows() != static_cast<std::size_t>(n_states) ||
        log_trans.cols() != static_cast<std::size_t>(n_states))
        throw DimensionMismatch("hmm: inconsistent state count");
    const std::size_t d = dim();
    for (const auto& s : states) {
        if (s.mean.size() != d || s.var.size() != d)
            throw DimensionMismatch("hmm: inconsistent emission dimension");
        for (double v : s.var)
            if (!(v >= kVarianceFloor) || !std::isfinite(v))
                throw Degenerate("hmm: variance below floor");
        for (double m : s.mean)
            if (!std::isfinite(m)) throw Degenerate("hmm: non-finite mean");
    }
    double init_sum = 0.0;
    for (double li : log_init) init_sum += std::exp(li);
    if (std::abs(init_sum - 1.0) > 1e-9) throw Degenerate("hmm: init distribution not normalized");
    for (int i = 0; i < n_states; ++i) {
        double row = 0.0;
        for (int j = 0; j < n_states; ++j)
            row += std::exp(log_trans(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
        if (std::abs(row - 1.0) > 1e-9)
            throw Degenerate("hmm: transition row " + std::to_string(i) + " not normalized");
    }
    if (left_to_right) {
        for (int i = 0; i < n_states; ++i)
            for (int j = 0; j < n_states; ++j)
                if ((j < i || j > i + 1) &&
                    log_trans(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) != kNegInf)
                    throw Degenerate("hmm: left-to-right topology violated");
        if (log_init[0] != 0.0) throw Degenerate("hmm: left-to-right init must start in state 0");
    }
}

ForwardResult log_forward(const Hmm& h, const Matrix& obs) {
    check_dims(h, obs);
    const std::size_t T = obs.rows();
    const int N = h.n_states;
    const Matrix logb = emission_logpdf(h, obs);

    Matrix alpha(T, static_cast<std::size_t>(N), kNegInf);
    for (int i = 0; i < N; ++i)
        alpha(0, static_cast<std::size_t>(i)) =
            h.log_init[static_cast<std::size_t>(i)] + logb(0, static_cast<std::size_t>(i));
    std::vector<double> terms(static_cast<std::size_t>(N));
    for (std::size_t t = 1; t < T; ++t) {
        for (int j = 0; j < N; ++j) {
            for (int i = 0; i < N; ++i)
                terms[static_cast<std::size_t>(i)] =
                    alpha(t - 1, static_cast<std::size_t>(i)) +
                    h.log_trans(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            alpha(t, static_cast<std::size_t>(j)) =
                logsumexp(terms) + logb(t, static_cast<std::size_t>(j));
        }
    }
    return {logsumexp(alpha.row(T - 1)), std::move(alpha)};
}

Matrix log_backward(const Hmm& h, const Matrix& obs) {
    check_dims(h, obs);
    const std::size_t T = obs.rows();
    const int N = h.n_states;
    const Matrix logb = emission_logpdf(h, obs);

    Matrix beta(T, static_cast<std::size_t>(N), 0.0);  // last row = log 1
    std::vector<double> terms(static_cast<std::size_t>(N));
    for (std::size_t t = T - 1; t > 0; --t) {
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j)
                terms[static_cast<std::size_t>(j)] =
                    h.log_trans(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +
                    logb(t, static_cast<std::size_t>(j)) + beta(t, static_cast<std::size_t>(j));
            beta(t - 1, static_cast<std::size_t>(i)) = logsumexp(terms);
        }
    }
    return beta;
}

ViterbiResult viterbi(const Hmm& h, const Matrix& obs) {
    check_dims(h, obs);
    const std::size_t T = obs.rows();
    const int N = h.n_states;
    const Matrix logb = emission_logpdf(h, obs);

    Matrix delta(T, static_cast<std::size_t>(N), kNegInf);
    std::vector<std::vector<int>> psi(T, std::vector<int>(static_cast<std::size_t>(N), 0));
    for (int i = 0; i < N; ++i)
        delta(0, static_cast<std::size_t>(i)) =
            h.log_init[static_cast<std::size_t>(i)] + logb(0, static_cast<std::size_t>(i));
    for (std::size_t t = 1; t < T; ++t) {
        for (int j = 0; j < N; ++j) {
            double best = kNegInf;
            int arg = 0;
            for (int i = 0; i < N; ++i) {
                const double cand =
                    delta(t - 1, static_cast<std::size_t>(i)) +
                    h.log_trans(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                // strict > keeps the lowest index on ties
                if (cand > best) {
                    best = cand;
                    arg = i;
                }
            }
            delta(t, static_cast<std::size_t>(j)) = best + logb(t, static_cast<std::size_t>(j));
            psi[t][static_cast<std::size_t>(j)] = arg;
        }
    }

    double best = kNegInf;
    int last = 0;
    for (int i = 0; i < N; ++i) {
        if (delta(T - 1, static_cast<std::size_t>(i)) > best) {
            best = delta(T - 1, static_cast<std::size_t>(i));
            last = i;
        }
    }
    std::vector<int> path(T);
    path[T - 1] = last;
    for (std::size_t t = T - 1; t > 0; --t) path[t - 1] = psi[t][static_cast<std::size_t>(path[t])];
    return {std::move(path), best};
}

Hmm flat_start(const std::vector<Matrix>& sequences, int n_states) {
    if (n_states <= 0) throw ConfigError("flat_start: need n_states >= 1");
    std::size_t dim = 0;
    for (const auto& s : sequences)
        if (s.rows() > 0) dim = s.cols();

    std::vector<std::vector<double>> sum(static_cast<std::size_t>(n_states),
                                         std::vector<double>(dim, 0.0));
    std::vector<std::vector<double>> sumsq(static_cast<std::size_t>(n_states),
                                           std::vector<double>(dim, 0.0));
    std::vector<double> count(static_cast<std::size_t>(n_states), 0.0);
    std::size_t used = 0;
    double total_frames = 0.0;

    for (const auto& seq : sequences) {
        const std::size_t T = seq.rows();
        if (T < static_cast<std::size_t>(n_states)) continue;
        if (seq.cols() != dim) throw DimensionMismatch("flat_start: mixed feature dimensions");
        ++used;
        total_frames += static_cast<double>(T);
        for (int i = 0; i < n_states; ++i) {
            const std::size_t lo = T * static_cast<std::size_t>(i) / static_cast<std::size_t>(n_states);
            const std::size_t hi =
                T * (static_cast<std::size_t>(i) + 1) / static_cast<std::size_t>(n_states);
            for (std::size_t t = lo; t < hi; ++t) {
                const auto row = seq.row(t);
                for (std::size_t d = 0; d < dim; ++d) {
                    sum[static_cast<std::size_t>(i)][d] += row[d];
                    sumsq[static_cast<std::size_t>(i)][d] += row[d] * row[d];
                }
                count[static_cast<std::size_t>(i)] += 1.0;
            }
        }
    }
    if (used == 0)
        throw TooShort("flat_start: no sequence has at least " + std::to_string(n_states) +
                       " frames");

    Hmm h;
    h.n_states = n_states;
    h.left_to_right = true;
    h.states.resize(static_cast<std::size_t>(n_states));
    for (int i = 0; i < n_states; ++i) {
        auto& st = h.states[static_cast<std::size_t>(i)];
        st.mean.resize(dim);
        st.var.resize(dim);
        const double n = count[static_cast<std::size_t>(i)];
        for (std::size_t d = 0; d < dim; ++d) {
            const double m = sum[static_cast<std::size_t>(i)][d] / n;
            st.mean[d] = m;
            st.var[d] = std::max(sumsq[static_cast<std::size_t>(i)][d] / n - m * m, kVarianceFloor);
        }
    }

    h.log_init.assign(static_cast<std::size_t>(n_states), kNegInf);
    h.log_init[0] = 0.0;
    h.log_trans = Matrix(static_cast<std::size_t>(n_states), static_cast<std::size_t>(n_states),
                         kNegInf);
    const double seg_len = total_frames / static_cast<double>(used) / n_states;
    const double advance = std::clamp(1.0 / seg_len, 1e-6, 1.0 - 1e-6);
    for (int i = 0; i < n_states; ++i) {
        if (i + 1 < n_states) {
            h.log_trans(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) =
                std::log1p(-advance);
            h.log_trans(static_cast<std::size_t>(i), static_cast<std::size_t>(i) + 1) =
                std::log(advance);
        } else {
            h.log_trans(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 0.0;
        }
    }
    return h;
}

TrainResult baum_welch(const Hmm& start, const std::vector<Matrix>& sequences,
                       const TrainOptions& opts) {
    if (sequences.empty()) throw TooShort("baum_welch: no training sequences");
    Hmm h = start;
    h.validate();
    const int N = h.n_states;
    const std::size_t D = h.dim();

    std::vector<double> history;
    double prev_ll = kNegInf;

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        std::vector<double> init_acc(static_cast<std::size_t>(N), 0.0);
        Matrix trans_acc(static_cast<std::size_t>(N), static_cast<std::size_t>(N), 0.0);
        std::vector<double> occ(static_cast<std::size_t>(N), 0.0);
        std::vector<std::vector<double>> mean_acc(static_cast<std::size_t>(N),
                                                  std::vector<double>(D, 0.0));
        std::vector<std::vector<double>> sq_acc(static_cast<std::size_t>(N),
                                                std::vector<double>(D, 0.0));
        double total_ll = 0.0;

        for (const auto& obs : sequences) {
            const std::size_t T = obs.rows();
            const auto [ll, alpha] = log_forward(h, obs);
            const Matrix beta = log_backward(h, obs);
            const Matrix logb = emission_logpdf(h, obs);
            total_ll += ll;

            for (std::size_t t = 0; t < T; ++t) {
                for (int i = 0; i < N; ++i) {
                    const double g = std::exp(alpha(t, static_cast<std::size_t>(i)) +
                                              beta(t, static_cast<std::size_t>(i)) - ll);
                    if (g <= 0.0) continue;
                    if (t == 0) init_acc[static_cast<std::size_t>(i)] += g;
                    occ[static_cast<std::size_t>(i)] += g;
                    const auto row = obs.row(t);
                    auto& ma = mean_acc[static_cast<std::size_t>(i)];
                    auto& sa = sq_acc[static_cast<std::size_t>(i)];
                    for (std::size_t d = 0; d < D; ++d) {
                        ma[d] += g * row[d];
                        sa[d] += g * row[d] * row[d];
                    }
                }
            }
            for (std::size_t t = 0; t + 1 < T; ++t) {
                for (int i = 0; i < N; ++i) {
                    const double a_ti = alpha(t, static_cast<std::size_t>(i));
                    if (a_ti == kNegInf) continue;
                    for (int j = 0; j < N; ++j) {
                        const double la =
                            h.log_trans(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                        if (la == kNegInf) continue;
                        const double x = a_ti + la + logb(t + 1, static_cast<std::size_t>(j)) +
                                         beta(t + 1, static_cast<std::size_t>(j)) - ll;
                        trans_acc(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) +=
                            std::exp(x);
                    }
                }
            }
        }

        history.push_back(total_ll);

        // M-step
        for (int i = 0; i < N; ++i) {
            if (occ[static_cast<std::size_t>(i)] <= 0.0)
                throw Degenerate("baum_welch: state " + std::to_string(i) +
                                 " received zero occupancy");
        }

        double init_total = 0.0;
        for (double v : init_acc) init_total += v;
        for (int i = 0; i < N; ++i) {
            const double p = init_acc[static_cast<std::size_t>(i)] / init_total;
            h.log_init[static_cast<std::size_t>(i)] = p > 0.0 ? std::log(p) : kNegInf;
        }
        if (h.left_to_right) {  // keep the exact structural form
            h.log_init.assign(static_cast<std::size_t>(N), kNegInf);
            h.log_init[0] = 0.0;
        }

        for (int i = 0; i < N; ++i) {
            double row_total = 0.0;
            for (int j = 0; j < N; ++j)
                row_total += trans_acc(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (row_total <= 0.0) continue;  // state only seen at final frames: keep old row
            for (int j = 0; j < N; ++j) {
                const double p =
                    trans_acc(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) / row_total;
                h.log_trans(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                    p > 0.0 ? std::log(p) : kNegInf;
            }
        }

        for (int i = 0; i < N; ++i) {
            auto& st = h.states[static_cast<std::size_t>(i)];
            const double n = occ[static_cast<std::size_t>(i)];
            for (std::size_t d = 0; d < D; ++d) {
                const double m = mean_acc[static_cast<std::size_t>(i)][d] / n;
                st.mean[d] = m;
                st.var[d] =
                    std::max(sq_acc[static_cast<std::size_t>(i)][d] / n - m * m, kVarianceFloor);
            }
        }

        if (iter > 0) {
            const double denom = std::max(std::abs(prev_ll), 1.0);
            if ((total_ll - prev_ll) / denom < opts.rel_tol) break;
        }
        prev_ll = total_ll;
    }

    return {std::move(h), std::move(history)};
}

double avg_loglik(const Hmm& h, const Matrix& obs) {
    return log_forward(h, obs).loglik / static_cast<double>(obs.rows());
}

}  // namespace vocemo
