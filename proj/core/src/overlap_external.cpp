#include "mosaic/overlap_external.hpp"

#include <cmath>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>
#include <spdlog/spdlog.h>

#include "mosaic/errors.hpp"

namespace mosaic {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

constexpr double kStartExcess = 1e-3;

class LogLoss final : public ceres::FirstOrderFunction {
 public:
  LogLoss(double beta, const std::vector<LabeledPair>& pairs, const SignatureSet& signatures)
      : beta_(beta), pairs_(pairs), signatures_(signatures) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::Map<const Eigen::VectorXd> u(parameters, NumParameters());
    const Eigen::VectorXd eu = u.array().exp().matrix();
    const Eigen::VectorXd w = (eu.array() + 1.0).matrix();
    const LossGradient lg = loss_and_gradient(w, beta_, pairs_, signatures_);
    *cost = lg.loss;
    if (gradient != nullptr) {
      Eigen::Map<Eigen::VectorXd>(gradient, NumParameters()) = lg.gradient.cwiseProduct(eu);
    }
    return std::isfinite(lg.loss);
  }

  int NumParameters() const override { return signatures_.dimension(); }

 private:
  double beta_;
  const std::vector<LabeledPair>& pairs_;
  const SignatureSet& signatures_;
};

}  // namespace

SignatureSet SignatureSet::from_rows(const std::vector<std::vector<double>>& rows, bool allow_negative) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw InvalidArgument("signature rows have different dimensions");
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return from_matrix(m, allow_negative);
}

SignatureSet SignatureSet::from_matrix(const Eigen::MatrixXd& rows, bool allow_negative) {
  if (rows.cols() == 0) throw InvalidArgument("signatures need at least one dimension");
  if (!rows.allFinite()) throw InvalidArgument("signatures contain non-finite entries");
  if (!allow_negative && (rows.array() < 0.0).any()) throw InvalidArgument("signatures must be nonnegative");
  SignatureSet s;
  s.data_ = rows.transpose();
  for (Eigen::Index n = 0; n < s.data_.cols(); ++n) {
    const double norm = s.data_.col(n).norm();
    if (!(norm > 0.0)) throw InvalidArgument("signature of frame " + std::to_string(n + 1) + " is zero");
    s.data_.col(n) /= norm;
  }
  return s;
}

ExternalModel ExternalModel::uniform(int dimension, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("logistic steepness must be positive");
  return {Eigen::VectorXd::Ones(dimension), beta};
}

double generalized_logistic(double x, double beta) { return sigmoid(beta * x); }

Eigen::VectorXd squared_difference(const Eigen::Ref<const Eigen::VectorXd>& a,
                                   const Eigen::Ref<const Eigen::VectorXd>& b) {
  return (a - b).array().square().matrix();
}

double similarity_probability(const ExternalModel& m, const Eigen::Ref<const Eigen::VectorXd>& si,
                              const Eigen::Ref<const Eigen::VectorXd>& sj) {
  return generalized_logistic(1.0 - m.weights.dot(squared_difference(si, sj)), m.beta);
}

std::vector<LabeledPair> make_labeled_pairs(const std::vector<FramePair>& positives,
                                            const std::vector<FramePair>& negatives) {
  std::vector<LabeledPair> out;
  out.reserve(positives.size() + negatives.size());
  for (const auto& p : positives) out.push_back({p, 1.0, 0.5 / static_cast<double>(positives.size())});
  for (const auto& p : negatives) out.push_back({p, -1.0, 0.5 / static_cast<double>(negatives.size())});
  return out;
}

LossGradient loss_and_gradient(const Eigen::VectorXd& w, double beta, const std::vector<LabeledPair>& pairs,
                               const SignatureSet& signatures) {
  LossGradient lg;
  lg.gradient = Eigen::VectorXd::Zero(w.size());
  for (const auto& p : pairs) {
    const Eigen::VectorXd delta = squared_difference(signatures.signature(p.pair.i), signatures.signature(p.pair.j));
    const double z = p.label * (w.dot(delta) - 1.0);
    lg.loss += p.weight * softplus(beta * z);
    lg.gradient += (p.weight * beta * sigmoid(beta * z) * p.label) * delta;
  }
  return lg;
}

WeightUpdate update_weights(const ExternalModel& m, const std::vector<FramePair>& positives,
                            const std::vector<FramePair>& negatives, const SignatureSet& signatures,
                            const LbfgsOptions& options) {
  if (m.weights.size() != signatures.dimension()) {
    throw InvalidArgument("external model dimension does not match the signatures");
  }
  const std::vector<LabeledPair> pairs = make_labeled_pairs(positives, negatives);

  WeightUpdate out;
  out.model = m;
  out.initial_loss = loss_and_gradient(m.weights, m.beta, pairs, signatures).loss;
  out.final_loss = out.initial_loss;
  if (pairs.empty()) {
    out.converged = true;
    return out;
  }

  std::vector<double> u(static_cast<std::size_t>(m.weights.size()));
  for (std::size_t d = 0; d < u.size(); ++d) {
    u[d] = std::log(std::max(m.weights[static_cast<Eigen::Index>(d)] - 1.0, kStartExcess));
  }

  ceres::GradientProblem problem(new LogLoss(m.beta, pairs, signatures));
  ceres::GradientProblemSolver::Options solver_options;
  solver_options.line_search_direction_type = ceres::LBFGS;
  solver_options.max_lbfgs_rank = options.memory;
  solver_options.max_num_iterations = options.max_iterations;
  solver_options.gradient_tolerance = options.gradient_tolerance;
  solver_options.function_tolerance = 1e-14;
  solver_options.parameter_tolerance = 1e-14;
  solver_options.logging_type = ceres::SILENT;
  solver_options.minimizer_progress_to_stdout = false;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(solver_options, problem, u.data(), &summary);

  Eigen::VectorXd w(m.weights.size());
  for (std::size_t d = 0; d < u.size(); ++d) w[static_cast<Eigen::Index>(d)] = 1.0 + std::exp(u[d]);
  const double loss = loss_and_gradient(w, m.beta, pairs, signatures).loss;
  for (const auto& it : summary.iterations) out.loss_trace.push_back(it.cost);
  out.iterations = static_cast<int>(summary.iterations.size()) - 1;
  out.converged = summary.termination_type == ceres::CONVERGENCE;
  if (loss <= out.initial_loss) {
    out.model.weights = w;
    out.final_loss = loss;
  }
  if (!out.converged) {
    spdlog::warn("external weight update stopped without convergence after {} iterations: {}", out.iterations,
                 summary.message);
  }
  return out;
}

}  // namespace mosaic
