#include "stacktag/crf.hpp"

#include <cmath>
#include <string>

#include "stacktag/error.hpp"

namespace stacktag::crf {

Matrix init_transitions(int num_tags, Rng* rng) {
  const int n = num_tags + 2;
  Matrix trans = Matrix::Zero(n, n);
  if (rng != nullptr) {
    const double bound = std::sqrt(1.0 / n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) trans(i, j) = rng->uniform(-bound, bound);
  }
  mask_transitions(trans);
  return trans;
}

void mask_transitions(Matrix& transitions) {
  const int num_tags = static_cast<int>(transitions.rows()) - 2;
  transitions.col(start_index(num_tags)).setConstant(kForbidden);
  transitions.row(stop_index(num_tags)).setConstant(kForbidden);
}

void mask_transition_grad(Matrix& grad) {
  const int num_tags = static_cast<int>(grad.rows()) - 2;
  grad.col(start_index(num_tags)).setZero();
  grad.row(stop_index(num_tags)).setZero();
}

namespace {

void check_tags(const std::vector<int>& tags, Eigen::Index steps, int num_tags) {
  if (static_cast<Eigen::Index>(tags.size()) != steps) {
    throw Error(ErrorKind::InvalidTagIndex,
                "gold path length " + std::to_string(tags.size()) +
                    " != sequence length " + std::to_string(steps));
  }
  for (int y : tags) {
    if (y < 0 || y >= num_tags) {
      throw Error(ErrorKind::InvalidTagIndex, "tag index " + std::to_string(y) +
                                                  " outside [0, " +
                                                  std::to_string(num_tags) + ")");
    }
  }
}

// alpha(t, j): log-sum over prefixes ending in tag j at step t.
Matrix forward_table(const Matrix& emissions, const Matrix& transitions) {
  const Eigen::Index steps = emissions.rows();
  const int num_tags = static_cast<int>(emissions.cols());
  const int start = start_index(num_tags);
  Matrix alpha(steps, num_tags);
  Vector scratch(num_tags);
  for (int j = 0; j < num_tags; ++j) alpha(0, j) = transitions(start, j) + emissions(0, j);
  for (Eigen::Index t = 1; t < steps; ++t) {
    for (int j = 0; j < num_tags; ++j) {
      for (int i = 0; i < num_tags; ++i) scratch(i) = alpha(t - 1, i) + transitions(i, j);
      alpha(t, j) = log_sum_exp(scratch) + emissions(t, j);
    }
  }
  return alpha;
}

// beta(t, i): log-sum over suffixes after step t given tag i at t.
Matrix backward_table(const Matrix& emissions, const Matrix& transitions) {
  const Eigen::Index steps = emissions.rows();
  const int num_tags = static_cast<int>(emissions.cols());
  const int stop = stop_index(num_tags);
  Matrix beta(steps, num_tags);
  Vector scratch(num_tags);
  for (int i = 0; i < num_tags; ++i) beta(steps - 1, i) = transitions(i, stop);
  for (Eigen::Index t = steps - 2; t >= 0; --t) {
    for (int i = 0; i < num_tags; ++i) {
      for (int j = 0; j < num_tags; ++j) {
        scratch(j) = transitions(i, j) + emissions(t + 1, j) + beta(t + 1, j);
      }
      beta(t, i) = log_sum_exp(scratch);
    }
  }
  return beta;
}

double finish(const Matrix& alpha, const Matrix& transitions) {
  const int num_tags = static_cast<int>(alpha.cols());
  const int stop = stop_index(num_tags);
  Vector last(num_tags);
  for (int j = 0; j < num_tags; ++j) last(j) = alpha(alpha.rows() - 1, j) + transitions(j, stop);
  return log_sum_exp(last);
}

}  // namespace

double path_score(const Matrix& emissions, const Matrix& transitions,
                  const std::vector<int>& tags) {
  const int num_tags = static_cast<int>(emissions.cols());
  check_tags(tags, emissions.rows(), num_tags);
  if (tags.empty()) return transitions(start_index(num_tags), stop_index(num_tags));
  double s = transitions(start_index(num_tags), tags.front());
  for (std::size_t t = 0; t < tags.size(); ++t) {
    s += emissions(static_cast<Eigen::Index>(t), tags[t]);
    if (t > 0) s += transitions(tags[t - 1], tags[t]);
  }
  return s + transitions(tags.back(), stop_index(num_tags));
}

double log_partition(const Matrix& emissions, const Matrix& transitions) {
  if (emissions.rows() == 0) return 0.0;
  return finish(forward_table(emissions, transitions), transitions);
}

double nll(const Matrix& emissions, const Matrix& transitions,
           const std::vector<int>& gold) {
  const double gold_score = path_score(emissions, transitions, gold);
  if (emissions.rows() == 0) return 0.0;
  return log_partition(emissions, transitions) - gold_score;
}

double nll_backward(const Matrix& emissions, const Matrix& transitions,
                    const std::vector<int>& gold, Matrix& d_emissions,
                    Matrix& d_transitions) {
  const Eigen::Index steps = emissions.rows();
  const int num_tags = static_cast<int>(emissions.cols());
  check_tags(gold, steps, num_tags);
  if (steps == 0) return 0.0;
  const int start = start_index(num_tags);
  const int stop = stop_index(num_tags);

  const Matrix alpha = forward_table(emissions, transitions);
  const Matrix beta = backward_table(emissions, transitions);
  const double log_z = finish(alpha, transitions);

  // Unary marginals.
  for (Eigen::Index t = 0; t < steps; ++t) {
    for (int j = 0; j < num_tags; ++j) {
      d_emissions(t, j) += std::exp(alpha(t, j) + beta(t, j) - log_z);
    }
  }
  for (int j = 0; j < num_tags; ++j) {
    d_transitions(start, j) += std::exp(transitions(start, j) + emissions(0, j) +
                                        beta(0, j) - log_z);
    d_transitions(j, stop) += std::exp(alpha(steps - 1, j) + transitions(j, stop) - log_z);
  }
  // Pairwise marginals.
  for (Eigen::Index t = 1; t < steps; ++t) {
    for (int i = 0; i < num_tags; ++i) {
      for (int j = 0; j < num_tags; ++j) {
        d_transitions(i, j) += std::exp(alpha(t - 1, i) + transitions(i, j) +
                                        emissions(t, j) + beta(t, j) - log_z);
      }
    }
  }
  // Gold indicators.
  d_transitions(start, gold.front()) -= 1.0;
  d_transitions(gold.back(), stop) -= 1.0;
  for (Eigen::Index t = 0; t < steps; ++t) {
    d_emissions(t, gold[static_cast<std::size_t>(t)]) -= 1.0;
    if (t > 0) d_transitions(gold[t - 1], gold[t]) -= 1.0;
  }
  return log_z - path_score(emissions, transitions, gold);
}

ViterbiResult viterbi(const Matrix& emissions, const Matrix& transitions) {
  const Eigen::Index steps = emissions.rows();
  const int num_tags = static_cast<int>(emissions.cols());
  ViterbiResult result;
  if (steps == 0) return result;
  const int start = start_index(num_tags);
  const int stop = stop_index(num_tags);

  Matrix score(steps, num_tags);
  Eigen::MatrixXi back(steps, num_tags);
  for (int j = 0; j < num_tags; ++j) score(0, j) = transitions(start, j) + emissions(0, j);
  for (Eigen::Index t = 1; t < steps; ++t) {
    for (int j = 0; j < num_tags; ++j) {
      int best_i = 0;
      double best = score(t - 1, 0) + transitions(0, j);
      for (int i = 1; i < num_tags; ++i) {
        const double s = score(t - 1, i) + transitions(i, j);
        if (s > best) {
          best = s;
          best_i = i;
        }
      }
      score(t, j) = best + emissions(t, j);
      back(t, j) = best_i;
    }
  }
  int best_last = 0;
  double best = score(steps - 1, 0) + transitions(0, stop);
  for (int j = 1; j < num_tags; ++j) {
    const double s = score(steps - 1, j) + transitions(j, stop);
    if (s > best) {
      best = s;
      best_last = j;
    }
  }
  result.score = best;
  result.tags.assign(static_cast<std::size_t>(steps), 0);
  result.tags.back() = best_last;
  for (Eigen::Index t = steps - 1; t > 0; --t) {
    result.tags[t - 1] = back(t, result.tags[t]);
  }
  return result;
}

}  // namespace stacktag::crf
