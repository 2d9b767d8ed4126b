// Model-free apparatus: autoencoder latent embedding of the parameter space
// plus a regressor predicting the log posterior from latent codes. Trained
// from the pool, refitted on a fixed iteration cadence.
#pragma once

#include "nipa/pool.hpp"
#include "nipa/serialize.hpp"
#include "nipa/train.hpp"

namespace nipa {

struct SurrogateHyper {
  Index latent_dim = 0;  // 0 = min(32, D)
  int encoder_hidden = 256;
  std::vector<int> regressor_hidden = {64, 64};
  Activation autoencoder_activation = Activation::Tanh;
  Activation regressor_activation = Activation::ReLU;
  int autoencoder_epochs = 200;
  int regressor_epochs = 300;
  int refit_autoencoder_epochs = 20;   // warm-started refits
  int refit_regressor_epochs = 40;
  double learning_rate = 1e-3;
  Index full_batch_limit = 1024;  // larger pools train with minibatches
  int minibatch = 256;
  bool mb_only_targets = false;  // restrict regression targets to MB entries
  bool warm_start = true;
  std::uint64_t seed = 0;

  Index effective_latent_dim(Index dim) const {
    return latent_dim > 0 ? std::min(latent_dim, dim) : std::min<Index>(32, dim);
  }
};

class Surrogate {
 public:
  /// Trains the autoencoder on normalized pool parameters, then the latent
  /// regressor on (Encode(theta_i), normalized L_i) pairs. Deterministic for
  /// a fixed hyper seed; training order is canonicalized so the result does
  /// not depend on pool insertion order.
  static Surrogate fit(const MemoryPool& pool, const SurrogateHyper& hyper) {
    Surrogate s;
    s.hyper_ = hyper;
    s.dim_ = pool.dim();
    s.latent_dim_ = hyper.effective_latent_dim(pool.dim());
    const int h = hyper.encoder_hidden;
    s.ae_spec_ = NetSpec{{static_cast<int>(s.dim_), h, static_cast<int>(s.latent_dim_), h,
                          static_cast<int>(s.dim_)},
                         {hyper.autoencoder_activation, Activation::Identity,
                          hyper.autoencoder_activation, Activation::Identity}};
    s.enc_spec_ = NetSpec{{static_cast<int>(s.dim_), h, static_cast<int>(s.latent_dim_)},
                          {hyper.autoencoder_activation, Activation::Identity}};
    s.dec_spec_ = NetSpec{{static_cast<int>(s.latent_dim_), h, static_cast<int>(s.dim_)},
                          {hyper.autoencoder_activation, Activation::Identity}};
    std::vector<int> reg_widths = {static_cast<int>(s.latent_dim_)};
    for (int w : hyper.regressor_hidden) reg_widths.push_back(w);
    reg_widths.push_back(1);
    s.reg_spec_ = make_mlp_spec(reg_widths, hyper.regressor_activation);

    Rng init_rng = make_rng(derive_seed(hyper.seed, 1));
    s.ae_params_ = glorot_uniform_init(s.ae_spec_, init_rng);
    s.reg_params_ = glorot_uniform_init(s.reg_spec_, init_rng);
    s.train_from(pool, hyper.autoencoder_epochs, hyper.regressor_epochs,
                 derive_seed(hyper.seed, 2));
    return s;
  }

  /// Warm-started retrain on the current pool; returns the replacement model.
  Surrogate refit(const MemoryPool& pool) const {
    Surrogate s = *this;
    ++s.refit_count_;
    if (!hyper_.warm_start) {
      Rng init_rng = make_rng(derive_seed(hyper_.seed, 1));
      s.ae_params_ = glorot_uniform_init(s.ae_spec_, init_rng);
      s.reg_params_ = glorot_uniform_init(s.reg_spec_, init_rng);
      s.train_from(pool, hyper_.autoencoder_epochs, hyper_.regressor_epochs,
                   derive_seed(hyper_.seed, 2 + s.refit_count_));
    } else {
      s.train_from(pool, hyper_.refit_autoencoder_epochs, hyper_.refit_regressor_epochs,
                   derive_seed(hyper_.seed, 2 + s.refit_count_));
    }
    return s;
  }

  bool fitted() const { return dim_ > 0; }
  Index dim() const { return dim_; }
  Index latent_dim() const { return latent_dim_; }
  const SurrogateHyper& hyper() const { return hyper_; }

  Vector encode(const Vector& theta) const {
    check_fitted();
    if (theta.size() != dim_)
      throw std::invalid_argument("Surrogate::encode: theta has dim " +
                                  std::to_string(theta.size()) + ", expected " +
                                  std::to_string(dim_));
    const Matrix row = normalize_input(theta.transpose());
    return forward(enc_spec_, enc_params_, row).row(0).transpose();
  }

  Vector decode(const Vector& latent) const {
    check_fitted();
    if (latent.size() != latent_dim_)
      throw std::invalid_argument("Surrogate::decode: latent has dim " +
                                  std::to_string(latent.size()) + ", expected " +
                                  std::to_string(latent_dim_));
    const Matrix out = forward(dec_spec_, dec_params_, latent.transpose());
    return (out.row(0).transpose().cwiseProduct(in_std_) + in_mean_);
  }

  /// Denormalized prediction of log pi(theta).
  double predict_logpi(const Vector& theta) const {
    const Vector u = encode(theta);
    const Matrix z = forward(reg_spec_, reg_params_, u.transpose());
    return z(0, 0) * target_std_ + target_mean_;
  }

  double in_sample_rmse() const { return in_sample_rmse_; }
  double in_sample_max_abs_error() const { return in_sample_max_abs_; }
  double autoencoder_final_loss() const { return ae_final_loss_; }
  double regressor_final_loss() const { return reg_final_loss_; }
  const std::vector<double>& autoencoder_epoch_losses() const { return ae_epoch_losses_; }
  const std::vector<double>& regressor_epoch_losses() const { return reg_epoch_losses_; }
  int refit_count() const { return refit_count_; }

  void save(const std::string& path) const {
    check_fitted();
    auto os = io::open_out(path);
    io::write_magic(os, kMagic, 1);
    io::write_i64(os, dim_);
    io::write_i64(os, latent_dim_);
    io::write_net_spec(os, ae_spec_);
    io::write_net_spec(os, reg_spec_);
    io::write_vector(os, ae_params_);
    io::write_vector(os, reg_params_);
    io::write_vector(os, in_mean_);
    io::write_vector(os, in_std_);
    io::write_f64(os, target_mean_);
    io::write_f64(os, target_std_);
    io::write_f64(os, in_sample_rmse_);
    io::write_f64(os, in_sample_max_abs_);
    io::write_f64(os, ae_final_loss_);
    io::write_f64(os, reg_final_loss_);
    io::write_i64(os, refit_count_);
    write_hyper(os);
  }

  static Surrogate load(const std::string& path) {
    auto is = io::open_in(path);
    io::expect_magic(is, kMagic, 1, "surrogate file");
    Surrogate s;
    s.dim_ = io::read_i64(is);
    s.latent_dim_ = io::read_i64(is);
    s.ae_spec_ = io::read_net_spec(is);
    s.reg_spec_ = io::read_net_spec(is);
    s.ae_params_ = io::read_vector(is);
    s.reg_params_ = io::read_vector(is);
    s.in_mean_ = io::read_vector(is);
    s.in_std_ = io::read_vector(is);
    s.target_mean_ = io::read_f64(is);
    s.target_std_ = io::read_f64(is);
    s.in_sample_rmse_ = io::read_f64(is);
    s.in_sample_max_abs_ = io::read_f64(is);
    s.ae_final_loss_ = io::read_f64(is);
    s.reg_final_loss_ = io::read_f64(is);
    s.refit_count_ = static_cast<int>(io::read_i64(is));
    s.read_hyper(is);
    const int h = s.hyper_.encoder_hidden;
    s.enc_spec_ = NetSpec{{static_cast<int>(s.dim_), h, static_cast<int>(s.latent_dim_)},
                          {s.hyper_.autoencoder_activation, Activation::Identity}};
    s.dec_spec_ = NetSpec{{static_cast<int>(s.latent_dim_), h, static_cast<int>(s.dim_)},
                          {s.hyper_.autoencoder_activation, Activation::Identity}};
    s.split_autoencoder_params();
    return s;
  }

 private:
  static constexpr char kMagic[8] = {'N', 'I', 'P', 'S', 'R', 'G', 'T', '1'};

  void check_fitted() const {
    if (!fitted()) throw std::logic_error("Surrogate: not fitted");
  }

  // The encoder/decoder parameters are contiguous halves of the joint
  // autoencoder vector; materialized once per (re)fit so hot-path encode
  // calls do not copy slices.
  void split_autoencoder_params() {
    enc_params_ = ae_params_.head(enc_spec_.param_dim());
    dec_params_ = ae_params_.tail(dec_spec_.param_dim());
  }

  Matrix normalize_input(const Eigen::Ref<const Matrix>& raw) const {
    Matrix out = raw;
    out.rowwise() -= in_mean_.transpose();
    out.array().rowwise() /= in_std_.transpose().array();
    return out;
  }

  /// Canonical training order: sorted by cached log density, ties broken
  /// lexicographically on theta. Fits are then invariant to pool ordering.
  static std::vector<Index> canonical_order(const MemoryPool& pool) {
    std::vector<Index> idx(static_cast<std::size_t>(pool.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
      const auto& ea = pool.entry(a);
      const auto& eb = pool.entry(b);
      if (ea.log_density != eb.log_density) return ea.log_density < eb.log_density;
      return std::lexicographical_compare(ea.theta.data(), ea.theta.data() + ea.theta.size(),
                                          eb.theta.data(), eb.theta.data() + eb.theta.size());
    });
    return idx;
  }

  void train_from(const MemoryPool& pool, int ae_epochs, int reg_epochs, std::uint64_t seed) {
    const Index m = pool.size();
    const Index min_size = std::max<Index>(10, latent_dim_);
    if (m < min_size)
      throw std::invalid_argument("Surrogate::fit: pool has " + std::to_string(m) +
                                  " entries, need at least " + std::to_string(min_size));

    const auto order = canonical_order(pool);

    // Input normalization stats over all pool parameters (population std,
    // floored like the pool's own stats).
    Matrix thetas(m, dim_);
    for (Index i = 0; i < m; ++i)
      thetas.row(i) = pool.entry(order[static_cast<std::size_t>(i)]).theta.transpose();
    in_mean_ = thetas.colwise().mean().transpose();
    Matrix centered = thetas.rowwise() - in_mean_.transpose();
    in_std_ = (centered.colwise().squaredNorm() / static_cast<double>(m))
                  .cwiseSqrt()
                  .transpose()
                  .cwiseMax(1e-8);
    Matrix xn = centered;
    xn.array().rowwise() /= in_std_.transpose().array();

    TrainOptions ae_opt;
    ae_opt.epochs = ae_epochs;
    ae_opt.batch_size = m <= hyper_.full_batch_limit ? 0 : hyper_.minibatch;
    ae_opt.adam.learning_rate = hyper_.learning_rate;
    ae_opt.seed = derive_seed(seed, 11);
    const auto ae_report = train_mlp(ae_spec_, ae_params_, xn, xn, LossTag::Mse, ae_opt);
    ae_final_loss_ = ae_report.final_loss;
    ae_epoch_losses_ = ae_report.epoch_losses;

    // Regression pairs; optionally restricted to exact-valued MB entries.
    std::vector<Index> target_rows;
    target_rows.reserve(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
      const auto& e = pool.entry(order[static_cast<std::size_t>(i)]);
      if (!hyper_.mb_only_targets || e.origin == Origin::MB) target_rows.push_back(i);
    }
    if (target_rows.size() < 2)
      throw std::invalid_argument("Surrogate::fit: fewer than 2 regression targets in pool");

    Vector raw_l(static_cast<Index>(target_rows.size()));
    for (std::size_t i = 0; i < target_rows.size(); ++i)
      raw_l[static_cast<Index>(i)] =
          pool.entry(order[static_cast<std::size_t>(target_rows[i])]).log_density;
    target_mean_ = raw_l.mean();
    target_std_ = std::max(std::sqrt((raw_l.array() - target_mean_).square().mean()), 1e-8);

    split_autoencoder_params();
    const Matrix latents = forward(enc_spec_, enc_params_, xn);
    Matrix reg_x(static_cast<Index>(target_rows.size()), latent_dim_);
    Matrix reg_y(static_cast<Index>(target_rows.size()), 1);
    for (std::size_t i = 0; i < target_rows.size(); ++i) {
      reg_x.row(static_cast<Index>(i)) = latents.row(target_rows[i]);
      reg_y(static_cast<Index>(i), 0) = (raw_l[static_cast<Index>(i)] - target_mean_) / target_std_;
    }

    TrainOptions reg_opt;
    reg_opt.epochs = reg_epochs;
    reg_opt.batch_size = reg_x.rows() <= hyper_.full_batch_limit ? 0 : hyper_.minibatch;
    reg_opt.adam.learning_rate = hyper_.learning_rate;
    reg_opt.seed = derive_seed(seed, 12);
    const auto reg_report = train_mlp(reg_spec_, reg_params_, reg_x, reg_y, LossTag::Mse, reg_opt);
    reg_final_loss_ = reg_report.final_loss;
    reg_epoch_losses_ = reg_report.epoch_losses;

    const Matrix fitted_z = forward(reg_spec_, reg_params_, reg_x);
    double sq = 0.0, max_abs = 0.0;
    for (Index i = 0; i < fitted_z.rows(); ++i) {
      const double pred = fitted_z(i, 0) * target_std_ + target_mean_;
      const double err = pred - raw_l[i];
      sq += err * err;
      max_abs = std::max(max_abs, std::abs(err));
    }
    in_sample_rmse_ = std::sqrt(sq / static_cast<double>(fitted_z.rows()));
    in_sample_max_abs_ = max_abs;
  }

  void write_hyper(std::ostream& os) const {
    io::write_i64(os, hyper_.latent_dim);
    io::write_i64(os, hyper_.encoder_hidden);
    io::write_u64(os, hyper_.regressor_hidden.size());
    for (int w : hyper_.regressor_hidden) io::write_i64(os, w);
    io::write_u64(os, static_cast<std::uint64_t>(hyper_.autoencoder_activation));
    io::write_u64(os, static_cast<std::uint64_t>(hyper_.regressor_activation));
    io::write_i64(os, hyper_.autoencoder_epochs);
    io::write_i64(os, hyper_.regressor_epochs);
    io::write_i64(os, hyper_.refit_autoencoder_epochs);
    io::write_i64(os, hyper_.refit_regressor_epochs);
    io::write_f64(os, hyper_.learning_rate);
    io::write_i64(os, hyper_.full_batch_limit);
    io::write_i64(os, hyper_.minibatch);
    io::write_u64(os, hyper_.mb_only_targets ? 1 : 0);
    io::write_u64(os, hyper_.warm_start ? 1 : 0);
    io::write_u64(os, hyper_.seed);
  }

  void read_hyper(std::istream& is) {
    hyper_.latent_dim = io::read_i64(is);
    hyper_.encoder_hidden = static_cast<int>(io::read_i64(is));
    hyper_.regressor_hidden.resize(io::read_u64(is));
    for (auto& w : hyper_.regressor_hidden) w = static_cast<int>(io::read_i64(is));
    hyper_.autoencoder_activation = static_cast<Activation>(io::read_u64(is));
    hyper_.regressor_activation = static_cast<Activation>(io::read_u64(is));
    hyper_.autoencoder_epochs = static_cast<int>(io::read_i64(is));
    hyper_.regressor_epochs = static_cast<int>(io::read_i64(is));
    hyper_.refit_autoencoder_epochs = static_cast<int>(io::read_i64(is));
    hyper_.refit_regressor_epochs = static_cast<int>(io::read_i64(is));
    hyper_.learning_rate = io::read_f64(is);
    hyper_.full_batch_limit = io::read_i64(is);
    hyper_.minibatch = static_cast<int>(io::read_i64(is));
    hyper_.mb_only_targets = io::read_u64(is) != 0;
    hyper_.warm_start = io::read_u64(is) != 0;
    hyper_.seed = io::read_u64(is);
  }

  SurrogateHyper hyper_;
  Index dim_ = 0;
  Index latent_dim_ = 0;
  NetSpec ae_spec_, enc_spec_, dec_spec_, reg_spec_;
  Vector ae_params_, reg_params_;
  Vector enc_params_, dec_params_;
  Vector in_mean_, in_std_;
  double target_mean_ = 0.0, target_std_ = 1.0;
  double in_sample_rmse_ = 0.0, in_sample_max_abs_ = 0.0;
  double ae_final_loss_ = 0.0, reg_final_loss_ = 0.0;
  std::vector<double> ae_epoch_losses_, reg_epoch_losses_;
  int refit_count_ = 0;
};

/// Refit on iterations divisible by k, otherwise return the input unchanged.
inline Surrogate maybe_refit(const Surrogate& surrogate, const MemoryPool& pool, long t, int k) {
  if (k < 1) throw std::invalid_argument("maybe_refit: k must be >= 1");
  if (t % k != 0) return surrogate;
  return surrogate.refit(pool);
}

}  // namespace nipa
