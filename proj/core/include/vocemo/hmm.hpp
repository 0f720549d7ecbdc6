#pragma once

#include <span>
#include <vector>

#include "vocemo/matrix.hpp"

namespace vocemo {

inline constexpr double kVarianceFloor = 1e-3;

/// Diagonal-covariance Gaussian emission.
struct GaussianState {
    std::vector<double> mean;
    std::vector<double> var;  // per-dimension, floored at kVarianceFloor
};

/// Left-to-right hidden Markov model with one Gaussian per state. All
/// probabilities are kept in the log domain; structural zeros are -inf.
struct Hmm {
    int n_states = 0;
    std::vector<double> log_init;  // n_states
    Matrix log_trans;              // n_states x n_states
    std::vector<GaussianState> states;
    bool left_to_right = true;

    std::size_t dim() const { return states.empty() ? 0 : states.front().mean.size(); }

    /// Checks row stochasticity (1e-9), the topology zeros and the variance
    /// floor; throws Degenerate / DimensionMismatch on violation.
    void validate() const;
};

/// log N(x; mean, diag var) = -0.5 sum_d [ln(2 pi var_d) + (x_d-mean_d)^2/var_d].
double gaussian_logpdf(std::span<const double> x, const GaussianState& s);

/// Numerically stable log(sum(exp(xs))); -inf for an empty or all--inf input.
double logsumexp(std::span<const double> xs);

struct ForwardResult {
    double loglik;
    Matrix alpha;  // T x N, log domain
};

ForwardResult log_forward(const Hmm& h, const Matrix& obs);

/// Backward trellis, T x N in the log domain; last row is all zeros.
Matrix log_backward(const Hmm& h, const Matrix& obs);

struct ViterbiResult {
    std::vector<int> path;  // length T
    double score;
};

/// Most likely state path; distance ties break toward the lower state index.
ViterbiResult viterbi(const Hmm& h, const Matrix& obs);

/// Uniform-segmentation initializer: each sequence is cut into n_states
/// equal spans and state statistics are pooled per span. Sequences shorter
/// than n_states frames are ignored; throws TooShort when none remain.
Hmm flat_start(const std::vector<Matrix>& sequences, int n_states);

struct TrainOptions {
    int max_iters = 20;
    double rel_tol = 1e-5;
};

struct TrainResult {
    Hmm model;
    std::vector<double> loglik_history;  // total loglik per EM iteration
};

/// Baum-Welch re-estimation over a set of observation sequences. Stops at
/// max_iters or when the relative log-likelihood improvement drops below
/// rel_tol. Variances are floored; a state with zero total occupancy
/// raises Degenerate rather than being repaired.
TrainResult baum_welch(const Hmm& h, const std::vector<Matrix>& sequences,
                       const TrainOptions& opts = {});

/// log_forward log-likelihood divided by the frame count.
double avg_loglik(const Hmm& h, const Matrix& obs);

}  // namespace vocemo
