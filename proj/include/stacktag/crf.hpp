#pragma once

#include <vector>

#include "stacktag/nn.hpp"

namespace stacktag::crf {

// Stand-in for -inf on forbidden transitions (into START, out of STOP).
inline constexpr double kForbidden = -1e4;

// Transition matrices are (L+2) x (L+2), indexed [from, to]. Row/column L is
// START, L+1 is STOP. Emissions are T x L.
inline int start_index(int num_tags) { return num_tags; }
inline int stop_index(int num_tags) { return num_tags + 1; }

Matrix init_transitions(int num_tags, Rng* rng = nullptr);
// Pins forbidden entries to kForbidden.
void mask_transitions(Matrix& transitions);
// Zeroes gradient entries for forbidden transitions.
void mask_transition_grad(Matrix& grad);

double path_score(const Matrix& emissions, const Matrix& transitions,
                  const std::vector<int>& tags);

// log Z by the forward algorithm with log-sum-exp stabilisation.
double log_partition(const Matrix& emissions, const Matrix& transitions);

// logZ - score(gold); throws InvalidTagIndex for tags outside [0, L).
double nll(const Matrix& emissions, const Matrix& transitions,
           const std::vector<int>& gold);

// Gradient of nll: marginals minus gold indicators. Accumulates into
// d_emissions (T x L) and d_transitions ((L+2) x (L+2)); returns the loss.
double nll_backward(const Matrix& emissions, const Matrix& transitions,
                    const std::vector<int>& gold, Matrix& d_emissions,
                    Matrix& d_transitions);

struct ViterbiResult {
  std::vector<int> tags;
  double score = 0.0;
};

// Ties resolve toward the lower tag index.
ViterbiResult viterbi(const Matrix& emissions, const Matrix& transitions);

}  // namespace stacktag::crf
