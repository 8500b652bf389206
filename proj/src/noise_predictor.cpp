#include "cpdm/noise_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpdm/rng.hpp"

namespace cpdm {

void ArchitectureConfig::validate() const {
  if (channels.size() < 2) throw DomainError("architecture needs at least one layer");
  if (channels.front() != 1 || channels.back() != 1) {
    throw DomainError("architecture must map one channel to one channel");
  }
  for (int c : channels) {
    if (c < 1) throw DomainError("channel widths must be positive");
  }
  if (kernel < 1 || kernel % 2 == 0) throw DomainError("kernel size must be odd and positive");
  if (time_embedding_dim < 2 || time_embedding_dim % 2 != 0) {
    throw DomainError("time embedding dimension must be even and >= 2");
  }
}

namespace {

std::string conv_weight(int l) { return "conv" + std::to_string(l) + ".weight"; }
std::string conv_bias(int l) { return "conv" + std::to_string(l) + ".bias"; }
std::string film_name(int l, const char* part) {
  return "film" + std::to_string(l) + "." + part;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

int reflect(int q, int n) {
  if (q < 0) return -q;
  if (q >= n) return 2 * (n - 1) - q;
  return q;
}

// Per-layer views into a parameter vector.
struct LayerView {
  int cin = 0;
  int cout = 0;
  const double* weight = nullptr;
  const double* bias = nullptr;
  const double* scale_w = nullptr;
  const double* scale_b = nullptr;
  const double* shift_w = nullptr;
  const double* shift_b = nullptr;
};

struct LayerGrad {
  double* weight = nullptr;
  double* bias = nullptr;
  double* scale_w = nullptr;
  double* scale_b = nullptr;
  double* shift_w = nullptr;
  double* shift_b = nullptr;
};

bool is_hidden(const ArchitectureConfig& arch, int l) { return l + 1 < arch.layers(); }

LayerView layer_view(const PredictorParams& p, int l) {
  const auto& arch = p.arch();
  LayerView v;
  v.cin = arch.channels[l];
  v.cout = arch.channels[l + 1];
  v.weight = p.tensor(conv_weight(l)).data();
  v.bias = p.tensor(conv_bias(l)).data();
  if (is_hidden(arch, l)) {
    v.scale_w = p.tensor(film_name(l, "scale.weight")).data();
    v.scale_b = p.tensor(film_name(l, "scale.bias")).data();
    v.shift_w = p.tensor(film_name(l, "shift.weight")).data();
    v.shift_b = p.tensor(film_name(l, "shift.bias")).data();
  }
  return v;
}

LayerGrad layer_grad(PredictorParams& g, int l) {
  LayerGrad v;
  v.weight = g.tensor(conv_weight(l)).data();
  v.bias = g.tensor(conv_bias(l)).data();
  if (is_hidden(g.arch(), l)) {
    v.scale_w = g.tensor(film_name(l, "scale.weight")).data();
    v.scale_b = g.tensor(film_name(l, "scale.bias")).data();
    v.shift_w = g.tensor(film_name(l, "shift.weight")).data();
    v.shift_b = g.tensor(film_name(l, "shift.bias")).data();
  }
  return v;
}

// Activations of one forward pass, kept for the backward pass.
struct ForwardCache {
  int width = 0;
  int height = 0;
  int pad = 0;
  std::vector<double> embedding;
  std::vector<std::vector<double>> padded_in;  // per layer: cin x (H+2p) x (W+2p)
  std::vector<std::vector<double>> conv_out;   // per layer: cout x H x W (pre-FiLM)
  std::vector<std::vector<double>> film_out;   // per hidden layer: cout x H x W (pre-SiLU)
  std::vector<std::vector<double>> scale;      // per hidden layer: cout
  std::vector<double> output;                  // H x W
};

void pad_reflect(const double* src, int channels, int w, int h, int pad, double* dst) {
  const int pw = w + 2 * pad;
  const int ph = h + 2 * pad;
  for (int c = 0; c < channels; ++c) {
    const double* s = src + static_cast<std::size_t>(c) * w * h;
    double* d = dst + static_cast<std::size_t>(c) * pw * ph;
    for (int y = 0; y < ph; ++y) {
      const int sy = reflect(y - pad, h);
      for (int x = 0; x < pw; ++x) d[y * pw + x] = s[sy * w + reflect(x - pad, w)];
    }
  }
}

// Adjoint of pad_reflect: accumulates padded gradients onto their sources.
void unpad_reflect_add(const double* padded, int channels, int w, int h, int pad, double* dst) {
  const int pw = w + 2 * pad;
  const int ph = h + 2 * pad;
  for (int c = 0; c < channels; ++c) {
    const double* s = padded + static_cast<std::size_t>(c) * pw * ph;
    double* d = dst + static_cast<std::size_t>(c) * w * h;
    for (int y = 0; y < ph; ++y) {
      const int sy = reflect(y - pad, h);
      for (int x = 0; x < pw; ++x) d[sy * w + reflect(x - pad, w)] += s[y * pw + x];
    }
  }
}

void conv_forward(const LayerView& L, int k, const double* padded, int w, int h, double* out) {
  const int pw = w + k - 1;
  const int ph = h + k - 1;
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  for (int o = 0; o < L.cout; ++o) {
    double* dst = out + o * plane;
    std::fill(dst, dst + plane, L.bias[o]);
    for (int i = 0; i < L.cin; ++i) {
      const double* src_plane = padded + static_cast<std::size_t>(i) * pw * ph;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = L.weight[((o * L.cin + i) * k + ky) * k + kx];
          for (int y = 0; y < h; ++y) {
            const double* s = src_plane + (y + ky) * pw + kx;
            double* d = dst + y * w;
            for (int x = 0; x < w; ++x) d[x] += wv * s[x];
          }
        }
      }
    }
  }
}

// Given dL/d(conv_out), accumulates weight/bias gradients and dL/d(padded input).
void conv_backward(const LayerView& L, const LayerGrad& G, int k, const double* padded, int w,
                   int h, const double* grad_out, double* grad_padded) {
  const int pw = w + k - 1;
  const int ph = h + k - 1;
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  for (int o = 0; o < L.cout; ++o) {
    const double* go = grad_out + o * plane;
    double bsum = 0.0;
    for (std::size_t p = 0; p < plane; ++p) bsum += go[p];
    G.bias[o] += bsum;
    for (int i = 0; i < L.cin; ++i) {
      const double* src_plane = padded + static_cast<std::size_t>(i) * pw * ph;
      double* gsrc_plane = grad_padded ? grad_padded + static_cast<std::size_t>(i) * pw * ph : nullptr;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t widx = ((o * L.cin + i) * k + ky) * k + kx;
          const double wv = L.weight[widx];
          double wsum = 0.0;
          for (int y = 0; y < h; ++y) {
            const double* s = src_plane + (y + ky) * pw + kx;
            const double* g = go + y * w;
            for (int x = 0; x < w; ++x) wsum += g[x] * s[x];
            if (gsrc_plane) {
              double* gs = gsrc_plane + (y + ky) * pw + kx;
              for (int x = 0; x < w; ++x) gs[x] += wv * g[x];
            }
          }
          G.weight[widx] += wsum;
        }
      }
    }
  }
}

void check_input(const Grid& x_t, int t, int pad) {
  if (t < 1) throw DomainError("predict: timestep must be >= 1");
  if (x_t.width() < 8 || x_t.height() < 8) throw ShapeError("predict: grid must be at least 8x8");
  if (x_t.width() <= pad || x_t.height() <= pad) throw ShapeError("predict: grid too small");
  const auto bad = first_non_finite(x_t.values());
  if (bad >= 0) {
    throw DomainError("predict: non-finite input at pixel " + std::to_string(bad));
  }
}

void forward(const PredictorParams& params, const Grid& x_t, int t, ForwardCache& cache) {
  const auto& arch = params.arch();
  const int k = arch.kernel;
  const int pad = k / 2;
  check_input(x_t, t, pad);
  const int w = x_t.width();
  const int h = x_t.height();
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  const std::size_t pplane = static_cast<std::size_t>(w + 2 * pad) * (h + 2 * pad);
  const int layers = arch.layers();
  const int emb_dim = arch.time_embedding_dim;

  cache.width = w;
  cache.height = h;
  cache.pad = pad;
  cache.embedding = time_embedding(t, emb_dim);
  cache.padded_in.resize(layers);
  cache.conv_out.resize(layers);
  cache.film_out.resize(layers);
  cache.scale.resize(layers);

  std::vector<double> act(x_t.storage());
  for (int l = 0; l < layers; ++l) {
    const LayerView L = layer_view(params, l);
    cache.padded_in[l].assign(L.cin * pplane, 0.0);
    pad_reflect(act.data(), L.cin, w, h, pad, cache.padded_in[l].data());
    cache.conv_out[l].assign(L.cout * plane, 0.0);
    conv_forward(L, k, cache.padded_in[l].data(), w, h, cache.conv_out[l].data());
    if (!is_hidden(arch, l)) break;

    auto& scale = cache.scale[l];
    scale.assign(L.cout, 0.0);
    std::vector<double> shift(L.cout, 0.0);
    for (int c = 0; c < L.cout; ++c) {
      double s = L.scale_b[c];
      double b = L.shift_b[c];
      for (int e = 0; e < emb_dim; ++e) {
        s += L.scale_w[c * emb_dim + e] * cache.embedding[e];
        b += L.shift_w[c * emb_dim + e] * cache.embedding[e];
      }
      scale[c] = s;
      shift[c] = b;
    }
    auto& film = cache.film_out[l];
    film.resize(L.cout * plane);
    act.resize(L.cout * plane);
    for (int c = 0; c < L.cout; ++c) {
      const double gain = 1.0 + scale[c];
      for (std::size_t p = 0; p < plane; ++p) {
        const double y = cache.conv_out[l][c * plane + p] * gain + shift[c];
        film[c * plane + p] = y;
        act[c * plane + p] = y * sigmoid(y);
      }
    }
  }
  cache.output = cache.conv_out[layers - 1];
}

// Backward pass from dL/d(output); accumulates into grads.
void backward(const PredictorParams& params, const ForwardCache& cache,
              std::vector<double> grad_act, PredictorParams& grads) {
  const auto& arch = params.arch();
  const int k = arch.kernel;
  const int pad = cache.pad;
  const int w = cache.width;
  const int h = cache.height;
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  const std::size_t pplane = static_cast<std::size_t>(w + 2 * pad) * (h + 2 * pad);
  const int emb_dim = arch.time_embedding_dim;

  std::vector<double> grad_conv;
  std::vector<double> grad_padded;
  for (int l = arch.layers() - 1; l >= 0; --l) {
    const LayerView L = layer_view(params, l);
    const LayerGrad G = layer_grad(grads, l);
    if (is_hidden(arch, l)) {
      grad_conv.assign(L.cout * plane, 0.0);
      for (int c = 0; c < L.cout; ++c) {
        const double gain = 1.0 + cache.scale[l][c];
        double dscale = 0.0;
        double dshift = 0.0;
        for (std::size_t p = 0; p < plane; ++p) {
          const std::size_t idx = c * plane + p;
          const double y = cache.film_out[l][idx];
          const double sg = sigmoid(y);
          const double gy = grad_act[idx] * sg * (1.0 + y * (1.0 - sg));
          dscale += gy * cache.conv_out[l][idx];
          dshift += gy;
          grad_conv[idx] = gy * gain;
        }
        G.scale_b[c] += dscale;
        G.shift_b[c] += dshift;
        for (int e = 0; e < emb_dim; ++e) {
          G.scale_w[c * emb_dim + e] += dscale * cache.embedding[e];
          G.shift_w[c * emb_dim + e] += dshift * cache.embedding[e];
        }
      }
    } else {
      grad_conv = grad_act;
    }
    const bool need_input_grad = l > 0;
    if (need_input_grad) grad_padded.assign(L.cin * pplane, 0.0);
    conv_backward(L, G, k, cache.padded_in[l].data(), w, h, grad_conv.data(),
                  need_input_grad ? grad_padded.data() : nullptr);
    if (need_input_grad) {
      grad_act.assign(L.cin * plane, 0.0);
      unpad_reflect_add(grad_padded.data(), L.cin, w, h, pad, grad_act.data());
    }
  }
}

}  // namespace

PredictorParams::PredictorParams(ArchitectureConfig arch) : arch_(std::move(arch)) {
  arch_.validate();
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<int> shape) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    layout_.push_back({std::move(name), std::move(shape), offset, count});
    offset += count;
  };
  const int k = arch_.kernel;
  const int e = arch_.time_embedding_dim;
  for (int l = 0; l < arch_.layers(); ++l) {
    const int cin = arch_.channels[l];
    const int cout = arch_.channels[l + 1];
    add(conv_weight(l), {cout, cin, k, k});
    add(conv_bias(l), {cout});
    if (is_hidden(arch_, l)) {
      add(film_name(l, "scale.weight"), {cout, e});
      add(film_name(l, "scale.bias"), {cout});
      add(film_name(l, "shift.weight"), {cout, e});
      add(film_name(l, "shift.bias"), {cout});
    }
  }
  values_.assign(offset, 0.0);
}

const TensorInfo& PredictorParams::tensor_info(const std::string& name) const {
  for (const auto& info : layout_) {
    if (info.name == name) return info;
  }
  throw Error("unknown parameter tensor '" + name + "'");
}

std::span<double> PredictorParams::tensor(const std::string& name) {
  const auto& info = tensor_info(name);
  return std::span<double>(values_).subspan(info.offset, info.count);
}

std::span<const double> PredictorParams::tensor(const std::string& name) const {
  const auto& info = tensor_info(name);
  return std::span<const double>(values_).subspan(info.offset, info.count);
}

bool PredictorParams::all_finite() const { return first_non_finite(values_) < 0; }

PredictorParams init_params(const ArchitectureConfig& arch, std::uint64_t seed) {
  PredictorParams params(arch);
  Rng rng(seed, 0x1417);
  const int k = arch.kernel;
  for (int l = 0; l < arch.layers(); ++l) {
    if (!is_hidden(arch, l)) continue;  // output layer stays zero
    const int fan_in = arch.channels[l] * k * k;
    const double bound = std::sqrt(6.0 / fan_in);
    for (double& v : params.tensor(conv_weight(l))) v = bound * (2.0 * rng.uniform() - 1.0);
    const double film_bound = 1.0 / std::sqrt(static_cast<double>(arch.time_embedding_dim));
    for (const char* part : {"scale.weight", "shift.weight"}) {
      for (double& v : params.tensor(film_name(l, part))) {
        v = film_bound * (2.0 * rng.uniform() - 1.0);
      }
    }
  }
  return params;
}

std::vector<double> time_embedding(int t, int dim) {
  const int half = dim / 2;
  std::vector<double> e(static_cast<std::size_t>(dim));
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    e[i] = std::sin(t * freq);
    e[i + half] = std::cos(t * freq);
  }
  return e;
}

Grid predict(const PredictorParams& params, const Grid& x_t, int t) {
  ForwardCache cache;
  forward(params, x_t, t, cache);
  return Grid(x_t.width(), x_t.height(), std::move(cache.output));
}

Grid oracle_predict(const GaussianOracleSpec& spec, const Grid& x_t, int t,
                    const NoiseSchedule& sched) {
  if (t < 1) throw DomainError("oracle_predict: timestep must be >= 1");
  const double ab = sched.alpha_bar(t);
  const double gain =
      std::sqrt(1.0 - ab) / (ab * spec.sigma0 * spec.sigma0 + 1.0 - ab);
  const double center = std::sqrt(ab) * spec.mu0;
  Grid out(x_t.width(), x_t.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gain * (x_t[i] - center);
  return out;
}

std::vector<NoiseDraw> sample_noise_draws(std::span<const Grid> batch, const NoiseSchedule& sched,
                                          Rng& rng) {
  std::vector<NoiseDraw> draws;
  draws.reserve(batch.size());
  for (const auto& x0 : batch) {
    NoiseDraw d;
    d.t = rng.uniform_int(1, sched.steps());
    d.eps = Grid(x0.width(), x0.height());
    for (double& v : d.eps) v = rng.normal();
    draws.push_back(std::move(d));
  }
  return draws;
}

LossAndGradients loss_and_gradients(const PredictorParams& params, std::span<const Grid> batch,
                                    std::span<const NoiseDraw> draws, const NoiseSchedule& sched) {
  if (batch.empty()) throw DomainError("loss_and_gradients: empty batch");
  if (batch.size() != draws.size()) throw ShapeError("loss_and_gradients: one draw per sample");
  LossAndGradients result{0.0, PredictorParams(params.arch())};

  std::size_t total_pixels = 0;
  for (const auto& x0 : batch) total_pixels += x0.size();
  const double norm = 1.0 / static_cast<double>(total_pixels);

  ForwardCache cache;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Grid x_t = forward_sample(batch[b], draws[b].t, draws[b].eps, sched);
    forward(params, x_t, draws[b].t, cache);
    std::vector<double> grad_out(cache.output.size());
    for (std::size_t p = 0; p < grad_out.size(); ++p) {
      const double diff = cache.output[p] - draws[b].eps[p];
      result.loss += diff * diff * norm;
      grad_out[p] = 2.0 * diff * norm;
    }
    backward(params, cache, std::move(grad_out), result.grads);
  }
  return result;
}

LossAndGradients loss_and_gradients(const PredictorParams& params, std::span<const Grid> batch,
                                    const NoiseSchedule& sched, Rng& rng) {
  const auto draws = sample_noise_draws(batch, sched, rng);
  return loss_and_gradients(params, batch, draws, sched);
}

LogAffine fit_log_affine(std::span<const LogImage> dataset) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& img : dataset) {
    for (double v : img) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw DomainError("fit_log_affine: empty dataset");
  if (hi - lo < 1e-12) return {1.0, -lo};
  const double scale = 2.0 / (hi - lo);
  return {scale, -1.0 - scale * lo};
}

}  // namespace cpdm
