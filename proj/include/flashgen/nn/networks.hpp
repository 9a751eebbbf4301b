#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flashgen/nn/layers.hpp"

namespace flashgen::nn {

inline int scaled_width(int base, double width_scale) {
  const int w = static_cast<int>(std::lround(base * width_scale));
  return w < 1 ? 1 : w;
}

// Pre-activation-free residual block: y = relu(conv2(relu(conv1(x))) + x).
template <typename T>
struct ResidualBlock {
  Conv2d<T> conv1, conv2;
  ReLU<T> act_mid, act_out;

  ResidualBlock() = default;
  ResidualBlock(const std::string& name, int channels)
      : conv1(name + ".conv1", channels, channels, 3, 1, 1),
        conv2(name + ".conv2", channels, channels, 3, 1, 1) {}

  void init(rng::SequentialStream& s) {
    conv1.init(s);
    conv2.init(s);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> h = conv2.forward(act_mid.forward(conv1.forward(x)));
    h += x;
    return act_out.forward(h);
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> d = act_out.backward(dy);
    Tensor<T> dx = conv1.backward(act_mid.backward(conv2.backward(d)));
    dx += d;  // skip path
    return dx;
  }

  void collect(std::vector<Param<T>*>& out) {
    conv1.collect(out);
    conv2.collect(out);
  }
};

// Posterior encoder: voltage map plus replicated condition channels through
// a small residual trunk to per-sample (mu, logvar) latent moments. The
// logvar head passes through a softplus, flooring the posterior scale at
// unit variance so the latent values seen during training cover the same
// range as the standard-normal draws used at generation time.
template <typename T>
struct Encoder {
  int d_cond = 0, d_z = 0, width = 0;
  Conv2d<T> stem;
  ReLU<T> stem_act;
  ResidualBlock<T> block1, block2;
  GlobalAvgPool<T> pool;
  Linear<T> head_mu, head_logvar;
  Softplus<T> logvar_floor;
  int cond_channels_cache = 0;

  Encoder() = default;
  Encoder(int d_cond_, int d_z_, double width_scale)
      : d_cond(d_cond_),
        d_z(d_z_),
        width(scaled_width(64, width_scale)),
        stem("enc.stem", 1 + d_cond_, scaled_width(64, width_scale), 3, 1, 1),
        block1("enc.rb1", scaled_width(64, width_scale)),
        block2("enc.rb2", scaled_width(64, width_scale)),
        head_mu("enc.mu", scaled_width(64, width_scale), d_z_),
        head_logvar("enc.logvar", scaled_width(64, width_scale), d_z_) {}

  void init(rng::SequentialStream& s) {
    stem.init(s);
    block1.init(s);
    block2.init(s);
    head_mu.init(s);
    head_logvar.init(s);
  }

  // x: (N,1,S,S) normalized voltages; cond: (N,d_cond,1,1).
  std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& x, const Tensor<T>& cond) {
    if (x.c != 1) throw std::invalid_argument("encoder: expected 1-channel input");
    cond_channels_cache = cond.c;
    Tensor<T> h = append_vector_channels(x, cond);
    h = stem_act.forward(stem.forward(h));
    h = block1.forward(h);
    h = block2.forward(h);
    h = pool.forward(h);
    return {head_mu.forward(h), logvar_floor.forward(head_logvar.forward(h))};
  }

  // Accumulates parameter gradients; input gradients are discarded since the
  // encoder consumes observed data only.
  void backward(const Tensor<T>& dmu, const Tensor<T>& dlogvar) {
    Tensor<T> dh = head_mu.backward(dmu);
    dh += head_logvar.backward(logvar_floor.backward(dlogvar));
    dh = pool.backward(dh);
    dh = block2.backward(dh);
    dh = block1.backward(dh);
    dh = stem.backward(stem_act.backward(dh));
    Tensor<T> dcond(dh.n, cond_channels_cache, 1, 1);
    dcond.zero();
    (void)split_vector_channels_grad(dh, 1, dcond);
  }

  void collect(std::vector<Param<T>*>& out) {
    stem.collect(out);
    block1.collect(out);
    block2.collect(out);
    head_mu.collect(out);
    head_logvar.collect(out);
  }
};

// U-Net generator. Every downsampling layer sees [features | cond | z] and
// every upsampling layer sees [features | cond], with cond and z spatially
// replicated. Skip connections concatenate mirrored downsampling outputs.
template <typename T>
struct UnetGenerator {
  int depth = 0, d_cond = 0, d_z = 0;
  std::vector<int> widths;

  std::vector<Conv2d<T>> down_conv;
  std::vector<BatchNorm2d<T>> down_bn;  // slot i unused when !down_has_bn[i]
  std::vector<char> down_has_bn;
  std::vector<LeakyReLU<T>> down_act;

  std::vector<ConvTranspose2d<T>> up_conv;
  std::vector<BatchNorm2d<T>> up_bn;
  std::vector<char> up_has_bn;
  std::vector<ReLU<T>> up_act;
  Tanh<T> out_act;

  // caches for backward
  std::vector<Tensor<T>> down_out;
  std::vector<int> up_concat_channels;  // channels of the up-path operand at stage j

  UnetGenerator() = default;
  UnetGenerator(int spatial_size, int d_cond_, int d_z_, double width_scale)
      : d_cond(d_cond_), d_z(d_z_) {
    if (spatial_size < 8 || (spatial_size & (spatial_size - 1)) != 0)
      throw std::invalid_argument("generator: spatial size must be a power of two >= 8");
    for (int s = spatial_size; s > 1; s >>= 1) ++depth;
    widths.resize(depth);
    for (int i = 0; i < depth; ++i) {
      const int base = std::min(512, 64 << std::min(i, 3));
      widths[i] = scaled_width(base, width_scale);
    }
    down_has_bn.resize(depth);
    up_has_bn.resize(depth);
    down_conv.reserve(depth);
    down_bn.resize(depth);
    down_act.resize(depth, LeakyReLU<T>(0.2));
    up_conv.reserve(depth);
    up_bn.resize(depth);
    up_act.resize(depth);
    for (int i = 0; i < depth; ++i) {
      const int in_c = (i == 0 ? 1 : widths[i - 1]) + d_cond + d_z;
      down_conv.emplace_back("gen.down" + std::to_string(i), in_c, widths[i], 4, 2, 1);
      down_has_bn[i] = (i != 0 && i != depth - 1) ? 1 : 0;
      if (down_has_bn[i]) down_bn[i] = BatchNorm2d<T>("gen.down" + std::to_string(i) + ".bn", widths[i]);
    }
    for (int j = 0; j < depth; ++j) {
      const int prev_c = (j == 0) ? widths[depth - 1] : out_width(j - 1);
      const int skip_c = (j == 0) ? 0 : widths[depth - 1 - j];
      const int in_c = prev_c + skip_c + d_cond;
      up_conv.emplace_back("gen.up" + std::to_string(j), in_c, out_width(j), 4, 2, 1);
      up_has_bn[j] = (j != depth - 1) ? 1 : 0;
      if (up_has_bn[j]) up_bn[j] = BatchNorm2d<T>("gen.up" + std::to_string(j) + ".bn", out_width(j));
    }
  }

  int out_width(int j) const { return j == depth - 1 ? 1 : widths[depth - 2 - j]; }

  void init(rng::SequentialStream& s) {
    for (int i = 0; i < depth; ++i) {
      down_conv[i].init(s);
      if (down_has_bn[i]) down_bn[i].init(s);
    }
    for (int j = 0; j < depth; ++j) {
      up_conv[j].init(s);
      if (up_has_bn[j]) up_bn[j].init(s);
    }
  }

  // x: (N,1,S,S) normalized program levels; cond: (N,d_cond,1,1);
  // z: (N,d_z,1,1). Returns (N,1,S,S) in (-1,1).
  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& cond, const Tensor<T>& z,
                    bool training) {
    if (x.c != 1) throw std::invalid_argument("generator: expected 1-channel input");
    if (x.h != (1 << depth) || x.w != (1 << depth))
      throw std::invalid_argument("generator: input must be " + std::to_string(1 << depth) +
                                  "x" + std::to_string(1 << depth) + ", got " + x.shape_str());
    down_out.clear();
    down_out.reserve(depth);
    up_concat_channels.assign(depth, 0);
    Tensor<T> cur = x;
    for (int i = 0; i < depth; ++i) {
      Tensor<T> in = append_vector_channels(append_vector_channels(cur, cond), z);
      cur = down_conv[i].forward(in);
      if (down_has_bn[i]) cur = down_bn[i].forward(cur, training);
      cur = down_act[i].forward(cur);
      down_out.push_back(cur);
    }
    for (int j = 0; j < depth; ++j) {
      Tensor<T> in = (j == 0) ? cur : concat_channels(cur, down_out[depth - 1 - j]);
      up_concat_channels[j] = cur.c;
      in = append_vector_channels(in, cond);
      cur = up_conv[j].forward(in);
      if (up_has_bn[j]) cur = up_bn[j].forward(cur, training);
      cur = (j == depth - 1) ? out_act.forward(cur) : up_act[j].forward(cur);
    }
    return cur;
  }

  // Returns the gradient with respect to z, accumulated over every injection
  // point. Gradients for x and cond are computed and discarded.
  Tensor<T> backward(const Tensor<T>& dy) {
    const int n = dy.n;
    Tensor<T> dz(n, d_z, 1, 1);
    dz.zero();
    Tensor<T> dcond(n, d_cond, 1, 1);
    dcond.zero();

    std::vector<Tensor<T>> d_down(depth);  // accumulated grads of down_out[i]
    for (int i = 0; i < depth; ++i) {
      d_down[i] = Tensor<T>(down_out[i].n, down_out[i].c, down_out[i].h, down_out[i].w);
      d_down[i].zero();
    }

    Tensor<T> d_cur = dy;
    for (int j = depth - 1; j >= 0; --j) {
      d_cur = (j == depth - 1) ? out_act.backward(d_cur) : up_act[j].backward(d_cur);
      if (up_has_bn[j]) d_cur = up_bn[j].backward(d_cur);
      Tensor<T> d_in = up_conv[j].backward(d_cur);
      d_in = split_vector_channels_grad(d_in, d_in.c - d_cond, dcond);
      if (j == 0) {
        d_down[depth - 1] += d_in;
      } else {
        auto [d_prev, d_skip] = split_channels_grad(d_in, up_concat_channels[j]);
        d_down[depth - 1 - j] += d_skip;
        d_cur = std::move(d_prev);
      }
    }

    Tensor<T> d_next = std::move(d_down[depth - 1]);
    for (int i = depth - 1; i >= 0; --i) {
      Tensor<T> d = down_act[i].backward(d_next);
      if (down_has_bn[i]) d = down_bn[i].backward(d);
      Tensor<T> d_full = down_conv[i].backward(d);
      Tensor<T> d_xc = split_vector_channels_grad(d_full, d_full.c - d_z, dz);
      Tensor<T> d_x = split_vector_channels_grad(d_xc, d_xc.c - d_cond, dcond);
      if (i > 0) {
        d_next = std::move(d_x);
        d_next += d_down[i - 1];
      }
    }
    return dz;
  }

  void collect(std::vector<Param<T>*>& out) {
    for (int i = 0; i < depth; ++i) {
      down_conv[i].collect(out);
      if (down_has_bn[i]) down_bn[i].collect(out);
    }
    for (int j = 0; j < depth; ++j) {
      up_conv[j].collect(out);
      if (up_has_bn[j]) up_bn[j].collect(out);
    }
  }
};

// Patch discriminator over stacked (program, voltage) channel pairs.
// Three stride-2 stages map SxS input to (S/8)x(S/8) patch logits.
template <typename T>
struct PatchDiscriminator {
  Conv2d<T> conv1, conv2, conv3;
  BatchNorm2d<T> bn2;
  LeakyReLU<T> act1{0.2}, act2{0.2};

  PatchDiscriminator() = default;
  explicit PatchDiscriminator(double width_scale)
      : conv1("disc.c1", 2, scaled_width(64, width_scale), 4, 2, 1),
        conv2("disc.c2", scaled_width(64, width_scale), scaled_width(128, width_scale), 4, 2, 1),
        conv3("disc.c3", scaled_width(128, width_scale), 1, 4, 2, 1),
        bn2("disc.c2.bn", scaled_width(128, width_scale)) {}

  void init(rng::SequentialStream& s) {
    conv1.init(s);
    conv2.init(s);
    bn2.init(s);
    conv3.init(s);
  }

  // pl, vl: (N,1,S,S) normalized maps. Returns (N,1,S/8,S/8) logits.
  Tensor<T> forward(const Tensor<T>& pl, const Tensor<T>& vl, bool training) {
    Tensor<T> h = concat_channels(pl, vl);
    h = act1.forward(conv1.forward(h));
    h = act2.forward(bn2.forward(conv2.forward(h), training));
    return conv3.forward(h);
  }

  // Returns gradients (d_pl, d_vl) with respect to the two input maps.
  std::pair<Tensor<T>, Tensor<T>> backward(const Tensor<T>& dlogits) {
    Tensor<T> d = conv3.backward(dlogits);
    d = conv2.backward(bn2.backward(act2.backward(d)));
    d = conv1.backward(act1.backward(d));
    return split_channels_grad(d, 1);
  }

  void collect(std::vector<Param<T>*>& out) {
    conv1.collect(out);
    conv2.collect(out);
    bn2.collect(out);
    conv3.collect(out);
  }
};

}  // namespace flashgen::nn
