// Adam optimizer and a small minibatch trainer for dense networks.
#pragma once

#include "nipa/net.hpp"

namespace nipa {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(Index dim, AdamConfig cfg = {})
      : cfg_(cfg), m_(Vector::Zero(dim)), v_(Vector::Zero(dim)) {}

  void step(Vector& params, const Vector& grad) {
    if (grad.size() != m_.size())
      throw std::invalid_argument("Adam::step: gradient dim mismatch");
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    params.array() -= cfg_.learning_rate * (m_.array() / bc1) /
                      ((v_.array() / bc2).sqrt() + cfg_.epsilon);
  }

 private:
  AdamConfig cfg_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

struct TrainOptions {
  int epochs = 100;
  int batch_size = 0;  // 0 = full batch
  AdamConfig adam;
  std::uint64_t seed = 0;  // minibatch shuffling
};

struct TrainReport {
  double final_loss = 0.0;           // full-data loss of the trained parameters
  std::vector<double> epoch_losses;  // per-epoch training loss (mean batch loss)
};

/// Trains `params` in place with Adam. Deterministic for a fixed seed.
inline TrainReport train_mlp(const NetSpec& spec, Vector& params, const Matrix& X,
                             const Matrix& Y, LossTag tag, const TrainOptions& opt,
                             double noise_var = 1.0) {
  if (X.rows() != Y.rows())
    throw std::invalid_argument("train_mlp: X and Y row counts differ");
  if (X.rows() == 0) throw std::invalid_argument("train_mlp: empty training set");

  Adam adam(spec.param_dim(), opt.adam);
  Rng rng = make_rng(opt.seed);
  const Index n = X.rows();
  const Index batch = (opt.batch_size <= 0 || opt.batch_size >= n)
                          ? n
                          : static_cast<Index>(opt.batch_size);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  TrainReport report;
  report.epoch_losses.reserve(static_cast<std::size_t>(opt.epochs));
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    double epoch_loss = 0.0;
    if (batch == n) {
      const auto res = loss_and_grad(spec, params, X, Y, tag, noise_var);
      adam.step(params, res.grad);
      epoch_loss = res.loss;
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      int batches = 0;
      for (Index start = 0; start < n; start += batch) {
        const Index len = std::min(batch, n - start);
        Matrix xb(len, X.cols()), yb(len, Y.cols());
        for (Index i = 0; i < len; ++i) {
          xb.row(i) = X.row(order[static_cast<std::size_t>(start + i)]);
          yb.row(i) = Y.row(order[static_cast<std::size_t>(start + i)]);
        }
        const auto res = loss_and_grad(spec, params, xb, yb, tag, noise_var);
        adam.step(params, res.grad);
        epoch_loss += res.loss;
        ++batches;
      }
      epoch_loss /= std::max(batches, 1);
    }
    if (!std::isfinite(epoch_loss))
      throw NonFiniteLossError("train_mlp: non-finite loss at epoch " + std::to_string(epoch),
                               params);
    report.epoch_losses.push_back(epoch_loss);
  }
  report.final_loss = loss_and_grad(spec, params, X, Y, tag, noise_var).loss;
  return report;
}

}  // namespace nipa
