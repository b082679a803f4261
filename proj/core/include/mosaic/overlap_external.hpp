#pragma once

#include <vector>

#include <Eigen/Core>

#include "mosaic/bundle_adjust.hpp"

namespace mosaic {

// Unit-norm nonnegative per-frame signatures, stored one column per frame.
class SignatureSet {
 public:
  SignatureSet() = default;

  // One row per frame. Rows are L2-normalized; zero rows, ragged rows and (unless allowed) negative
  // entries are rejected.
  static SignatureSet from_rows(const std::vector<std::vector<double>>& rows, bool allow_negative = false);
  // frames x D
  static SignatureSet from_matrix(const Eigen::MatrixXd& rows, bool allow_negative = false);
  bool has_negative() const { return (data_.array() < 0.0).any(); }

  int size() const { return static_cast<int>(data_.cols()); }
  int dimension() const { return static_cast<int>(data_.rows()); }
  bool empty() const { return data_.size() == 0; }
  auto signature(int n) const { return data_.col(n); }
  const Eigen::MatrixXd& data() const { return data_; }

 private:
  Eigen::MatrixXd data_;
};

inline constexpr double kDefaultBeta = 10.0;

struct ExternalModel {
  Eigen::VectorXd weights;
  double beta = kDefaultBeta;

  static ExternalModel uniform(int dimension, double beta = kDefaultBeta);
};

// h_beta(x) = 1 / (1 + exp(-beta x))
double generalized_logistic(double x, double beta);

Eigen::VectorXd squared_difference(const Eigen::Ref<const Eigen::VectorXd>& a,
                                   const Eigen::Ref<const Eigen::VectorXd>& b);

double similarity_probability(const ExternalModel& m, const Eigen::Ref<const Eigen::VectorXd>& si,
                              const Eigen::Ref<const Eigen::VectorXd>& sj);

// label +1: overlapping pair; -1: non-overlapping pair.
struct LabeledPair {
  FramePair pair;
  double label = 1.0;
  double weight = 1.0;
};

// Inverse-frequency class weights: 1/(2 |P+|) and 1/(2 |P-|).
std::vector<LabeledPair> make_labeled_pairs(const std::vector<FramePair>& positives,
                                            const std::vector<FramePair>& negatives);

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

LossGradient loss_and_gradient(const Eigen::VectorXd& w, double beta, const std::vector<LabeledPair>& pairs,
                               const SignatureSet& signatures);

struct LbfgsOptions {
  int memory = 10;
  double gradient_tolerance = 1e-6;
  int max_iterations = 200;
};

struct WeightUpdate {
  ExternalModel model;
  bool converged = false;
  int iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_trace;
};

// Minimizes the weighted log-loss over w >= 1 with w = 1 + exp(u).
WeightUpdate update_weights(const ExternalModel& m, const std::vector<FramePair>& positives,
                            const std::vector<FramePair>& negatives, const SignatureSet& signatures,
                            const LbfgsOptions& options = {});

}  // namespace mosaic
