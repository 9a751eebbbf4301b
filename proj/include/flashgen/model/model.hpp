#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flashgen/core/grid.hpp"
#include "flashgen/core/types.hpp"
#include "flashgen/nn/adam.hpp"
#include "flashgen/nn/networks.hpp"
#include "flashgen/rng/philox.hpp"

namespace flashgen::model {

inline constexpr int kLatentDim = 6;
inline constexpr int kCondDim = 6;

struct model_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double alpha = 10.0;    // reconstruction weight
  double beta = 0.01;     // KL weight
  double lr = 2e-4;
  int epochs = 7;
  int batch = 2;
  PECycle pe_max{10000};
  std::uint64_t seed = 0;
  double width_scale = 1.0;

  void validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(lr >= 0.0))
      throw std::invalid_argument("train config: alpha, beta must be positive and lr >= 0");
    if (epochs < 0 || batch < 1) throw std::invalid_argument("train config: bad epochs/batch");
    if (!(width_scale > 0.0) || width_scale > 1.0)
      throw std::invalid_argument("train config: width_scale must be in (0,1]");
    if (pe_max.count == 0) throw std::invalid_argument("train config: pe_max must be positive");
  }
};

// Six fixed powers of the normalized cycle count p = pe/pe_max.
inline std::array<double, kCondDim> pe_embed(PECycle pe, PECycle pe_max) {
  if (pe.count > pe_max.count)
    throw std::out_of_range("pe_embed: pe " + std::to_string(pe.count) + " exceeds pe_max " +
                            std::to_string(pe_max.count));
  const double p = static_cast<double>(pe.count) / static_cast<double>(pe_max.count);
  return {std::pow(p, 0.25), std::sqrt(p), p, p * p, p * p * p, p * p * p * p};
}

// Value normalization maps both discrete ranges onto [-1,1] for tanh heads.
inline double normalize_level(int level) { return static_cast<double>(level) / 3.5 - 1.0; }
inline double normalize_bin(int bin) { return static_cast<double>(bin) / 511.5 - 1.0; }
inline int denormalize_bin(double y) {
  const long b = std::lround((y + 1.0) * 511.5);
  if (b < 0) return 0;
  if (b >= kVoltageBins) return kVoltageBins - 1;
  return static_cast<int>(b);
}

struct EncoderOut {
  std::array<double, kLatentDim> mu{};
  std::array<double, kLatentDim> logvar{};
};

inline std::array<double, kLatentDim> reparameterize(const EncoderOut& out,
                                                     const std::array<double, kLatentDim>& eps) {
  std::array<double, kLatentDim> z{};
  for (int i = 0; i < kLatentDim; ++i)
    z[i] = out.mu[i] + std::exp(0.5 * out.logvar[i]) * eps[i];
  return z;
}

// Closed-form D_KL(N(mu, diag e^logvar) || N(0, I)) summed over all elements
// of a flat (batch x latent) posterior, accumulated in A.
template <typename A, typename S>
A kl_standard_normal(const std::vector<S>& mu, const std::vector<S>& logvar) {
  if (mu.size() != logvar.size())
    throw std::invalid_argument("kl_standard_normal: mu/logvar sizes differ");
  A acc = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const A m = static_cast<A>(mu[i]), lv = static_cast<A>(logvar[i]);
    acc += A(0.5) * (m * m + std::exp(lv) - A(1) - lv);
  }
  return acc;
}

// Loss components in the model's accumulator precision (double for float and
// double models, long double for extended-precision gradient verification).
template <typename S>
struct LossComponentsT {
  S l_kl = 0;
  S l_recon = 0;
  S l_gan_g = 0;
  S l_gan_d = 0;
  S total = 0;  // generator objective: l_gan_g + alpha*l_recon + beta*l_kl
};
using LossComponents = LossComponentsT<double>;

struct EpochLog {
  int epoch = 0;
  int steps = 0;
  double mean_total = 0.0;
  double mean_recon = 0.0;
  double mean_kl = 0.0;
  double mean_g = 0.0;
  double mean_d = 0.0;
};

namespace detail {

template <typename S>
S softplus(S x) {
  return std::max(x, S(0)) + std::log1p(std::exp(-std::abs(x)));
}
template <typename S>
S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

template <typename T>
void check_finite_grads(const std::vector<nn::Param<T>*>& params, const char* context) {
  for (const nn::Param<T>* p : params)
    for (const T g : p->g.v)
      if (!std::isfinite(g))
        throw model_error(std::string("non-finite gradient in tensor '") + p->name + "' during " +
                          context);
}

}  // namespace detail

// Conditional VAE-GAN over paired (program, voltage) grids with a P/E-cycle
// condition. Owns the three networks and their optimizers; non-copyable so
// optimizer parameter pointers stay valid.
template <typename T>
class GenerativeModel {
 public:
  GenerativeModel(const TrainConfig& cfg, int spatial_size = kTileSize)
      : cfg_(cfg),
        size_(spatial_size),
        encoder_(kCondDim, kLatentDim, cfg.width_scale),
        generator_(spatial_size, kCondDim, kLatentDim, cfg.width_scale),
        discriminator_(cfg.width_scale) {
    cfg_.validate();
    rng::SequentialStream init_stream(cfg_.seed,
                                      rng::stream_id(rng::StreamPurpose::weight_init));
    encoder_.init(init_stream);
    generator_.init(init_stream);
    discriminator_.init(init_stream);
    encoder_.collect(eg_params_);
    generator_.collect(eg_params_);
    discriminator_.collect(d_params_);
    // beta1 = 0.5: heavy first-moment momentum destabilizes the adversarial
    // game at batch size 2; the reduced setting is the usual choice for
    // image-to-image GAN training.
    const nn::AdamConfig adam{cfg_.lr, 0.5, 0.999, 1e-8};
    opt_eg_ = nn::Adam<T>(eg_params_, adam);
    opt_d_ = nn::Adam<T>(d_params_, adam);
  }

  GenerativeModel(const GenerativeModel&) = delete;
  GenerativeModel& operator=(const GenerativeModel&) = delete;

  const TrainConfig& config() const { return cfg_; }

  // Epoch budget for the next train() call; everything else in the config is
  // structural and stays fixed for the model's lifetime.
  void set_epochs(int epochs) {
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    cfg_.epochs = epochs;
  }
  int spatial_size() const { return size_; }
  std::int64_t step_count() const { return step_count_; }
  void set_step_count(std::int64_t s) { step_count_ = s; }

  nn::Encoder<T>& encoder() { return encoder_; }
  nn::UnetGenerator<T>& generator() { return generator_; }
  nn::PatchDiscriminator<T>& discriminator() { return discriminator_; }
  nn::Adam<T>& optimizer_eg() { return opt_eg_; }
  nn::Adam<T>& optimizer_d() { return opt_d_; }
  const std::vector<nn::Param<T>*>& params_eg() const { return eg_params_; }
  const std::vector<nn::Param<T>*>& params_d() const { return d_params_; }

  std::vector<nn::Param<T>*> all_params() const {
    std::vector<nn::Param<T>*> all = eg_params_;
    all.insert(all.end(), d_params_.begin(), d_params_.end());
    return all;
  }

  std::vector<std::pair<std::string, nn::Tensor<T>*>> buffers() {
    std::vector<std::pair<std::string, nn::Tensor<T>*>> out;
    auto& g = generator_;
    for (int i = 0; i < g.depth; ++i)
      if (g.down_has_bn[i]) collect_bn_buffers(g.down_bn[i], "gen.down" + std::to_string(i), out);
    for (int j = 0; j < g.depth; ++j)
      if (g.up_has_bn[j]) collect_bn_buffers(g.up_bn[j], "gen.up" + std::to_string(j), out);
    collect_bn_buffers(discriminator_.bn2, "disc.c2", out);
    return out;
  }

  // --- typed public ops -------------------------------------------------

  EncoderOut encode(const VoltageGrid& vl, PECycle pe) {
    if (!vl.same_shape(size_, size_))
      throw std::invalid_argument("encode: grid must be " + std::to_string(size_) + "x" +
                                  std::to_string(size_));
    nn::Tensor<T> x(1, 1, size_, size_);
    for (int r = 0; r < size_; ++r)
      for (int c = 0; c < size_; ++c)
        x.at(0, 0, r, c) = static_cast<T>(normalize_bin(vl.at(r, c).bin));
    auto [mu_t, lv_t] = encoder_.forward(x, cond_tensor({pe}));
    EncoderOut out;
    for (int i = 0; i < kLatentDim; ++i) {
      out.mu[i] = mu_t.at(0, i, 0, 0);
      out.logvar[i] = lv_t.at(0, i, 0, 0);
    }
    return out;
  }

  VoltageGrid generate(const ProgramGrid& pl, PECycle pe,
                             const std::array<double, kLatentDim>& z) {
    require_full_tile(pl);
    nn::Tensor<T> zt(1, kLatentDim, 1, 1);
    for (int i = 0; i < kLatentDim; ++i) zt.at(0, i, 0, 0) = static_cast<T>(z[i]);
    nn::Tensor<T> y =
        generator_.forward(pl_tensor(std::span(&pl, 1)), cond_tensor({pe}), zt, false);
    return to_voltage_grid(y, 0);
  }

  // Patch logits (1,1,S/8,S/8) for one grid pair; inference-mode statistics.
  nn::Tensor<T> discriminate(const ProgramGrid& pl, const VoltageGrid& vl) {
    require_full_tile(pl);
    if (!vl.same_shape(size_, size_)) throw std::invalid_argument("discriminate: shape mismatch");
    nn::Tensor<T> v(1, 1, size_, size_);
    for (int r = 0; r < size_; ++r)
      for (int c = 0; c < size_; ++c)
        v.at(0, 0, r, c) = static_cast<T>(normalize_bin(vl.at(r, c).bin));
    return discriminator_.forward(pl_tensor(std::span(&pl, 1)), v, false);
  }

  // n independent N(0,I) latent draws through the generator.
  std::vector<VoltageGrid> sample_voltages(const ProgramGrid& pl, PECycle pe,
                                                 int n, std::uint64_t seed) {
    require_full_tile(pl);
    std::vector<VoltageGrid> out;
    if (n <= 0) return out;
    rng::SequentialStream zs(seed, rng::stream_id(rng::StreamPurpose::latent_sample));
    nn::Tensor<T> z(n, kLatentDim, 1, 1);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < kLatentDim; ++d) z.at(i, d, 0, 0) = static_cast<T>(zs.normal());
    nn::Tensor<T> pl1 = pl_tensor(std::span(&pl, 1));
    nn::Tensor<T> pln(n, 1, size_, size_);
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < size_; ++r)
        for (int c = 0; c < size_; ++c) pln.at(i, 0, r, c) = pl1.at(0, 0, r, c);
    std::vector<PECycle> pes(static_cast<std::size_t>(n), pe);
    nn::Tensor<T> y = generator_.forward(pln, cond_tensor(pes), z, false);
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(to_voltage_grid(y, i));
    return out;
  }

  // --- losses and training ----------------------------------------------

  // Pure evaluation of all loss components on a batch with supplied latent
  // noise (N x kLatentDim); no parameter updates. `training` selects
  // batch-statistics normalization (matching train_step's forward pass).
  LossComponentsT<nn::acc_t<T>> loss_components(std::span<const ChannelRecord> batch,
                                                const nn::Tensor<T>& eps,
                                                bool training = false) {
    BatchTensors bt = to_tensors(batch);
    return run_losses(bt, eps, training, /*with_grads=*/false, /*apply_updates=*/false);
  }

  // Computes loss components and fills parameter gradient buffers without
  // stepping the optimizers. After the call, params_d() holds d(L_GAN_d)/dw
  // and params_eg() holds the gradient of the generator objective; the fake
  // batch stays detached in the discriminator loss, matching train_step.
  LossComponentsT<nn::acc_t<T>> loss_with_grads(std::span<const ChannelRecord> batch,
                                                const nn::Tensor<T>& eps) {
    BatchTensors bt = to_tensors(batch);
    return run_losses(bt, eps, /*training=*/true, /*with_grads=*/true,
                      /*apply_updates=*/false);
  }

  // One adversarial update: discriminator step on real/fake pairs, then a
  // joint encoder+generator step on the full objective.
  LossComponentsT<nn::acc_t<T>> train_step(std::span<const ChannelRecord> batch) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    BatchTensors bt = to_tensors(batch);
    rng::SequentialStream es(
        cfg_.seed, rng::stream_id(rng::StreamPurpose::train_eps,
                                  static_cast<std::uint64_t>(step_count_)));
    nn::Tensor<T> eps(static_cast<int>(batch.size()), kLatentDim, 1, 1);
    for (auto& v : eps.v) v = static_cast<T>(es.normal());
    auto lc = run_losses(bt, eps, /*training=*/true, /*with_grads=*/true,
                         /*apply_updates=*/true);
    ++step_count_;
    return lc;
  }

  // Seeded-epoch training driver; on_epoch (optional) observes the loss log.
  std::vector<EpochLog> train(const std::vector<ChannelRecord>& dataset,
                              const std::function<void(const EpochLog&)>& on_epoch = {}) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    for (const auto& rec : dataset) require_full_tile(rec.pl);
    const int n = static_cast<int>(dataset.size());
    std::vector<int> order(dataset.size());
    std::vector<EpochLog> log;
    log.reserve(static_cast<std::size_t>(cfg_.epochs));
    std::vector<ChannelRecord> batch;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
      rng::SequentialStream ss(
          cfg_.seed,
          rng::stream_id(rng::StreamPurpose::shuffle, static_cast<std::uint64_t>(epoch)));
      for (int i = n - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(ss.below(static_cast<std::uint64_t>(i) + 1))]);
      EpochLog el;
      el.epoch = epoch;
      for (int start = 0; start < n; start += cfg_.batch) {
        batch.clear();
        for (int i = start; i < std::min(n, start + cfg_.batch); ++i)
          batch.push_back(dataset[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        const auto lc = train_step(batch);
        ++el.steps;
        el.mean_total += static_cast<double>(lc.total);
        el.mean_recon += static_cast<double>(lc.l_recon);
        el.mean_kl += static_cast<double>(lc.l_kl);
        el.mean_g += static_cast<double>(lc.l_gan_g);
        el.mean_d += static_cast<double>(lc.l_gan_d);
      }
      if (el.steps > 0) {
        el.mean_total /= el.steps;
        el.mean_recon /= el.steps;
        el.mean_kl /= el.steps;
        el.mean_g /= el.steps;
        el.mean_d /= el.steps;
      }
      log.push_back(el);
      if (on_epoch) on_epoch(el);
    }
    return log;
  }

 private:
  struct BatchTensors {
    nn::Tensor<T> pl, vl, cond;
    BatchTensors(int n, int s, int d) : pl(n, 1, s, s), vl(n, 1, s, s), cond(n, d, 1, 1) {}
  };

  void require_full_tile(const ProgramGrid& pl) const {
    if (!pl.same_shape(size_, size_))
      throw std::invalid_argument("model expects " + std::to_string(size_) + "x" +
                                  std::to_string(size_) + " grids, got " +
                                  std::to_string(pl.rows) + "x" + std::to_string(pl.cols));
  }

  nn::Tensor<T> pl_tensor(std::span<const ProgramGrid> grids) const {
    nn::Tensor<T> x(static_cast<int>(grids.size()), 1, size_, size_);
    for (int n = 0; n < x.n; ++n)
      for (int r = 0; r < size_; ++r)
        for (int c = 0; c < size_; ++c)
          x.at(n, 0, r, c) =
              static_cast<T>(normalize_level(grids[static_cast<std::size_t>(n)].at(r, c).value));
    return x;
  }

  nn::Tensor<T> cond_tensor(const std::vector<PECycle>& pes) const {
    nn::Tensor<T> c(static_cast<int>(pes.size()), kCondDim, 1, 1);
    for (int n = 0; n < c.n; ++n) {
      const auto f = pe_embed(pes[static_cast<std::size_t>(n)], cfg_.pe_max);
      for (int d = 0; d < kCondDim; ++d) c.at(n, d, 0, 0) = static_cast<T>(f[d]);
    }
    return c;
  }

  BatchTensors to_tensors(std::span<const ChannelRecord> batch) const {
    const int n = static_cast<int>(batch.size());
    BatchTensors bt(n, size_, kCondDim);
    std::vector<PECycle> pes;
    pes.reserve(batch.size());
    for (int i = 0; i < n; ++i) {
      const auto& rec = batch[static_cast<std::size_t>(i)];
      require_full_tile(rec.pl);
      if (!rec.vl.same_shape(size_, size_))
        throw std::invalid_argument("train batch: voltage grid shape mismatch");
      for (int r = 0; r < size_; ++r)
        for (int c = 0; c < size_; ++c) {
          bt.pl.at(i, 0, r, c) = static_cast<T>(normalize_level(rec.pl.at(r, c).value));
          bt.vl.at(i, 0, r, c) = static_cast<T>(normalize_bin(rec.vl.at(r, c).bin));
        }
      pes.push_back(rec.pe);
    }
    bt.cond = cond_tensor(pes);
    return bt;
  }

  VoltageGrid to_voltage_grid(const nn::Tensor<T>& y, int n) const {
    VoltageGrid g(size_, size_);
    for (int r = 0; r < size_; ++r)
      for (int c = 0; c < size_; ++c)
        g.at(r, c) = VoltageLevel(denormalize_bin(static_cast<double>(y.at(n, 0, r, c))));
    return g;
  }

  // Shared loss pipeline. With gradients enabled this runs the discriminator
  // phase first (real/fake passes) and then the joint encoder+generator
  // phase. Without apply_updates, discriminator gradients are snapshotted so
  // the generator phase's adversarial backward does not pollute them.
  LossComponentsT<nn::acc_t<T>> run_losses(BatchTensors& bt, const nn::Tensor<T>& eps,
                                           bool training, bool with_grads, bool apply_updates) {
    using A = nn::acc_t<T>;
    const int n = bt.pl.n;
    if (eps.n != n || eps.c != kLatentDim)
      throw std::invalid_argument("latent noise tensor must be (N," +
                                  std::to_string(kLatentDim) + ",1,1)");

    // Encoder forward and reparameterization.
    auto [mu, logvar] = encoder_.forward(bt.vl, bt.cond);
    nn::Tensor<T> z(n, kLatentDim, 1, 1);
    for (std::size_t i = 0; i < z.v.size(); ++i)
      z.v[i] = mu.v[i] +
               static_cast<T>(std::exp(A(0.5) * static_cast<A>(logvar.v[i]))) * eps.v[i];

    // Generator forward (the single fake batch reused by both phases).
    nn::Tensor<T> fake = generator_.forward(bt.pl, bt.cond, z, training);

    LossComponentsT<A> lc;

    // KL of the diagonal posterior against N(0, I), averaged over the batch.
    lc.l_kl = kl_standard_normal<A>(mu.v, logvar.v);
    lc.l_kl /= n;

    // Mean squared reconstruction error in normalized value space.
    const A inv_elems = A(1) / static_cast<A>(fake.size());
    for (std::size_t i = 0; i < fake.v.size(); ++i) {
      const A d = static_cast<A>(fake.v[i]) - static_cast<A>(bt.vl.v[i]);
      lc.l_recon += d * d;
    }
    lc.l_recon *= inv_elems;

    // --- discriminator phase ---
    if (with_grads) opt_d_.zero_grad();
    {
      nn::Tensor<T> logit_r = discriminator_.forward(bt.pl, bt.vl, training);
      const A inv_m = A(1) / static_cast<A>(logit_r.size());
      for (const T l : logit_r.v) lc.l_gan_d += detail::softplus(-static_cast<A>(l));
      if (with_grads) {
        nn::Tensor<T> dl(logit_r.n, logit_r.c, logit_r.h, logit_r.w);
        for (std::size_t i = 0; i < dl.v.size(); ++i)
          dl.v[i] = static_cast<T>(-detail::sigmoid(-static_cast<A>(logit_r.v[i])) * inv_m);
        discriminator_.backward(dl);
      }
      nn::Tensor<T> logit_f = discriminator_.forward(bt.pl, fake, training);
      for (const T l : logit_f.v) lc.l_gan_d += detail::softplus(static_cast<A>(l));
      lc.l_gan_d *= inv_m;
      if (with_grads) {
        nn::Tensor<T> dl(logit_f.n, logit_f.c, logit_f.h, logit_f.w);
        for (std::size_t i = 0; i < dl.v.size(); ++i)
          dl.v[i] = static_cast<T>(detail::sigmoid(static_cast<A>(logit_f.v[i])) * inv_m);
        discriminator_.backward(dl);  // fake is detached: input grads dropped
        detail::check_finite_grads(d_params_, "discriminator step");
        if (apply_updates) opt_d_.step();
      }
    }
    std::vector<std::vector<T>> d_grad_snapshot;
    if (with_grads && !apply_updates) {
      d_grad_snapshot.reserve(d_params_.size());
      for (const nn::Param<T>* p : d_params_) d_grad_snapshot.push_back(p->g.v);
    }

    // --- encoder+generator phase ---
    if (with_grads) opt_eg_.zero_grad();
    nn::Tensor<T> logit_g = discriminator_.forward(bt.pl, fake, training);
    const A inv_m = A(1) / static_cast<A>(logit_g.size());
    for (const T l : logit_g.v) lc.l_gan_g += detail::softplus(-static_cast<A>(l));
    lc.l_gan_g *= inv_m;
    lc.total = lc.l_gan_g + static_cast<A>(cfg_.alpha) * lc.l_recon +
               static_cast<A>(cfg_.beta) * lc.l_kl;
    if (!std::isfinite(lc.total) || !std::isfinite(lc.l_gan_d))
      throw model_error("non-finite loss: kl=" + std::to_string(static_cast<double>(lc.l_kl)) +
                        " recon=" + std::to_string(static_cast<double>(lc.l_recon)) +
                        " g=" + std::to_string(static_cast<double>(lc.l_gan_g)) +
                        " d=" + std::to_string(static_cast<double>(lc.l_gan_d)));
    if (!with_grads) return lc;

    nn::Tensor<T> dlogit(logit_g.n, logit_g.c, logit_g.h, logit_g.w);
    for (std::size_t i = 0; i < dlogit.v.size(); ++i)
      dlogit.v[i] = static_cast<T>(-detail::sigmoid(-static_cast<A>(logit_g.v[i])) * inv_m);
    nn::Tensor<T> d_fake = discriminator_.backward(dlogit).second;
    for (std::size_t i = 0; i < d_fake.v.size(); ++i) {
      const A dr = A(2) * (static_cast<A>(fake.v[i]) - static_cast<A>(bt.vl.v[i])) * inv_elems;
      d_fake.v[i] += static_cast<T>(static_cast<A>(cfg_.alpha) * dr);
    }
    nn::Tensor<T> dz = generator_.backward(d_fake);

    nn::Tensor<T> dmu(n, kLatentDim, 1, 1), dlogvar(n, kLatentDim, 1, 1);
    for (std::size_t i = 0; i < dz.v.size(); ++i) {
      const A m = mu.v[i], lv = logvar.v[i];
      dmu.v[i] = dz.v[i] + static_cast<T>(static_cast<A>(cfg_.beta) * m / n);
      dlogvar.v[i] = static_cast<T>(static_cast<A>(dz.v[i]) * A(0.5) *
                                        (static_cast<A>(z.v[i]) - m) +
                                    static_cast<A>(cfg_.beta) * A(0.5) * (std::exp(lv) - A(1)) / n);
    }
    encoder_.backward(dmu, dlogvar);
    detail::check_finite_grads(eg_params_, "encoder/generator step");
    if (apply_updates) {
      opt_eg_.step();
    } else {
      for (std::size_t i = 0; i < d_params_.size(); ++i)
        d_params_[i]->g.v = std::move(d_grad_snapshot[i]);
    }
    return lc;
  }

  static void collect_bn_buffers(nn::BatchNorm2d<T>& bn, const std::string& name,
                                 std::vector<std::pair<std::string, nn::Tensor<T>*>>& out) {
    out.emplace_back(name + ".bn.running_mean", &bn.running_mean);
    out.emplace_back(name + ".bn.running_var", &bn.running_var);
  }

  TrainConfig cfg_;
  int size_;
  nn::Encoder<T> encoder_;
  nn::UnetGenerator<T> generator_;
  nn::PatchDiscriminator<T> discriminator_;
  std::vector<nn::Param<T>*> eg_params_, d_params_;
  nn::Adam<T> opt_eg_, opt_d_;
  std::int64_t step_count_ = 0;
};

}  // namespace flashgen::model
