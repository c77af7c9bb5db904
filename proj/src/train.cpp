#include "rvos/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rvos/errors.hpp"

namespace rvos {

void AdamW::update(ParamStore& params, const Gradients& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, t_);
  const double bc2 = 1.0 - std::pow(config_.beta2, t_);
  for (auto& [name, p] : params.entries()) {
    p *= 1.0 - config_.lr * config_.weight_decay;
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Matrix& g = git->second;
    auto [mit, m_new] = m_.try_emplace(name, Matrix::Zero(p.rows(), p.cols()));
    auto [vit, v_new] = v_.try_emplace(name, Matrix::Zero(p.rows(), p.cols()));
    Matrix& m = mit->second;
    Matrix& v = vit->second;
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.array() -= config_.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config_.eps);
  }
}

Matrix flatten_track(const MaskTrack& track) {
  Eigen::Index total = 0;
  for (const auto& m : track) total += m.size();
  Matrix row(1, total);
  Eigen::Index at = 0;
  for (const auto& m : track)
    for (Eigen::Index i = 0; i < m.size(); ++i) row(0, at++) = m.data()[i] ? 1.0 : 0.0;
  return row;
}

double dice_loss(const Eigen::RowVectorXd& prob, const Eigen::RowVectorXd& target) {
  return 1.0 - (2.0 * prob.dot(target) + 1.0) / (prob.sum() + target.sum() + 1.0);
}

namespace {

double bce(const Eigen::RowVectorXd& logits, const Eigen::RowVectorXd& target) {
  double total = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double z = logits(i);
    total += std::max(z, 0.0) - z * target(i) + std::log1p(std::exp(-std::abs(z)));
  }
  return total / static_cast<double>(logits.size());
}

void search(const Matrix& cost, std::size_t target, std::vector<bool>& used, std::vector<int>& current,
            double so_far, double& best, std::vector<int>& best_assign) {
  if (so_far >= best) return;
  if (target == static_cast<std::size_t>(cost.cols())) {
    best = so_far;
    best_assign = current;
    return;
  }
  const int free_queries = static_cast<int>(std::count(used.begin(), used.end(), false));
  const int remaining = static_cast<int>(cost.cols()) - static_cast<int>(target);
  bool placed = false;
  for (Eigen::Index n = 0; n < cost.rows(); ++n) {
    if (used[static_cast<std::size_t>(n)]) continue;
    used[static_cast<std::size_t>(n)] = true;
    current[target] = static_cast<int>(n);
    search(cost, target + 1, used, current, so_far + cost(n, static_cast<Eigen::Index>(target)), best, best_assign);
    used[static_cast<std::size_t>(n)] = false;
    placed = true;
  }
  // More targets than queries: some targets stay unmatched.
  if (!placed || remaining > free_queries) {
    current[target] = -1;
    search(cost, target + 1, used, current, so_far, best, best_assign);
  }
}

}  // namespace

std::vector<std::pair<int, int>> match_queries(const Matrix& mask_logits, const Matrix& score_logits,
                                               const std::vector<Matrix>& targets) {
  const Eigen::Index N = mask_logits.rows();
  Matrix cost(N, static_cast<Eigen::Index>(targets.size()));
  for (Eigen::Index n = 0; n < N; ++n) {
    const Eigen::RowVectorXd logits = mask_logits.row(n);
    const Eigen::RowVectorXd prob = logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
    Eigen::RowVectorXd one(1);
    one(0) = 1.0;
    const double score_cost = bce(score_logits.row(n), one);
    for (std::size_t m = 0; m < targets.size(); ++m) {
      const Eigen::RowVectorXd t = targets[m].row(0);
      cost(n, static_cast<Eigen::Index>(m)) = bce(logits, t) + dice_loss(prob, t) + score_cost;
    }
  }
  std::vector<bool> used(static_cast<std::size_t>(N), false);
  std::vector<int> current(targets.size(), -1), best_assign(targets.size(), -1);
  double best = std::numeric_limits<double>::infinity();
  search(cost, 0, used, current, 0.0, best, best_assign);
  std::vector<std::pair<int, int>> out;
  for (std::size_t m = 0; m < targets.size(); ++m)
    if (best_assign[m] >= 0) out.emplace_back(best_assign[m], static_cast<int>(m));
  return out;
}

Var segmentation_loss(const HeadOutput& head, const std::vector<Matrix>& targets, LossBreakdown* breakdown) {
  Graph& g = *head.mask_logits.graph();
  const auto matching = match_queries(head.mask_logits.value(), head.score_logits.value(), targets);
  const Eigen::Index N = head.mask_logits.rows();
  Matrix score_target = Matrix::Zero(N, 1);
  for (const auto& [n, m] : matching) score_target(n, 0) = 1.0;
  const Var score_loss = ad::bce_with_logits(head.score_logits, score_target);
  Var total = score_loss;
  double mask_bce = 0, dice = 0;
  if (!matching.empty()) {
    std::vector<Var> terms;
    for (const auto& [n, m] : matching) {
      const Matrix& target = targets[static_cast<std::size_t>(m)];
      const Var logits = ad::rows(head.mask_logits, n, 1);
      const Var b = ad::bce_with_logits(logits, target);
      const Var prob = ad::sigmoid(logits);
      const Var t = g.constant(target);
      const Var num = ad::add_scalar(ad::scale(ad::sum(ad::mul(prob, t)), 2.0), 1.0);
      const Var den = ad::add_scalar(ad::sum(prob), target.sum() + 1.0);
      const Var d = ad::add_scalar(ad::scale(ad::div(num, den), -1.0), 1.0);
      mask_bce += b.value()(0, 0);
      dice += d.value()(0, 0);
      terms.push_back(ad::add(b, d));
    }
    Var mask_sum = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) mask_sum = ad::add(mask_sum, terms[i]);
    total = ad::add(score_loss, ad::scale(mask_sum, 1.0 / static_cast<double>(matching.size())));
    mask_bce /= static_cast<double>(matching.size());
    dice /= static_cast<double>(matching.size());
  }
  if (breakdown) {
    breakdown->total = total.value()(0, 0);
    breakdown->mask_bce = mask_bce;
    breakdown->dice = dice;
    breakdown->score_bce = score_loss.value()(0, 0);
    breakdown->matching = matching;
  }
  return total;
}

Trainer::Trainer(ParamStore& params, ModelDims dims, InstanceInitConfig instance_init, TrainConfig config)
    : params_(params),
      dims_(std::move(dims)),
      instance_init_(std::move(instance_init)),
      config_(config),
      optimizer_(config) {
  if (config_.accumulation < 1) throw ValidationError("train.accumulation must be >= 1");
  if (config_.batch != 1) throw ValidationError("train.batch must be 1");
}

double Trainer::step(const TrainingExample& example, LossBreakdown* breakdown) {
  Graph g;
  Binder b(g, params_, true);
  PipelineInputs in{&example.clip, example.expression, &example.tracks};
  const HeadOutput head = forward_graph(b, in, dims_, instance_init_);
  std::vector<Matrix> targets;
  for (const auto& t : example.targets) targets.push_back(flatten_track(t));
  LossBreakdown local;
  const Var loss = segmentation_loss(head, targets, &local);
  const double value = loss.value()(0, 0);
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "non-finite loss at step " << steps_ << " (video " << example.clip.video_id << ", expression '"
        << example.expression << "'): mask_bce=" << local.mask_bce << " dice=" << local.dice
        << " score_bce=" << local.score_bce;
    throw NumericError(msg.str());
  }
  g.backward(loss);
  for (auto& [name, grad] : b.gradients()) {
    auto [it, inserted] = pending_.try_emplace(name, grad);
    if (!inserted) it->second += grad;
  }
  ++pending_count_;
  ++steps_;
  if (pending_count_ == config_.accumulation) {
    for (auto& [_, grad] : pending_) grad /= static_cast<double>(config_.accumulation);
    optimizer_.update(params_, pending_);
    pending_.clear();
    pending_count_ = 0;
  }
  if (breakdown) *breakdown = local;
  return value;
}

}  // namespace rvos
