#include "specpipe/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "specpipe/error.hpp"
#include "specpipe/rng.hpp"

namespace specpipe {

namespace {

constexpr double kNormEps = 1e-12;
constexpr int kKernel = 3;
constexpr int kStride = 2;
constexpr int kPad = 1;

struct Grid {
  std::size_t c = 0, h = 0, w = 0;
  std::vector<double> v;

  void resize(std::size_t c_, std::size_t h_, std::size_t w_) {
    c = c_; h = h_; w = w_;
    v.assign(c * h * w, 0.0);
  }
  double& at(std::size_t ci, std::size_t y, std::size_t x) {
    return v[(ci * h + y) * w + x];
  }
  double at(std::size_t ci, std::size_t y, std::size_t x) const {
    return v[(ci * h + y) * w + x];
  }
};

std::size_t conv_out(std::size_t in) { return (in + 2 * kPad - kKernel) / kStride + 1; }

// out[oc][y][x] = b[oc] + sum_{ic,ky,kx} W[oc][ic][ky][kx] * in[ic][2y+ky-1][2x+kx-1]
void conv_forward(const Grid& in, const double* W, const double* b,
                  std::size_t out_ch, Grid& out) {
  out.resize(out_ch, conv_out(in.h), conv_out(in.w));
  const long H = static_cast<long>(in.h), Wd = static_cast<long>(in.w);
  for (std::size_t oc = 0; oc < out_ch; ++oc) {
    for (std::size_t y = 0; y < out.h; ++y) {
      for (std::size_t x = 0; x < out.w; ++x) {
        double acc = b[oc];
        for (std::size_t ic = 0; ic < in.c; ++ic) {
          const double* wk = W + ((oc * in.c + ic) * kKernel) * kKernel;
          for (int ky = 0; ky < kKernel; ++ky) {
            const long iy = kStride * static_cast<long>(y) + ky - kPad;
            if (iy < 0 || iy >= H) continue;
            const double* row = &in.v[(ic * in.h + iy) * in.w];
            for (int kx = 0; kx < kKernel; ++kx) {
              const long ix = kStride * static_cast<long>(x) + kx - kPad;
              if (ix < 0 || ix >= Wd) continue;
              acc += wk[ky * kKernel + kx] * row[ix];
            }
          }
        }
        out.at(oc, y, x) = acc;
      }
    }
  }
}

void conv_backward(const Grid& in, const double* W, std::size_t out_ch,
                   const Grid& dout, Grid& din, double* dW, double* db) {
  din.resize(in.c, in.h, in.w);
  const long H = static_cast<long>(in.h), Wd = static_cast<long>(in.w);
  for (std::size_t oc = 0; oc < out_ch; ++oc) {
    for (std::size_t y = 0; y < dout.h; ++y) {
      for (std::size_t x = 0; x < dout.w; ++x) {
        const double g = dout.at(oc, y, x);
        if (g == 0.0) continue;
        db[oc] += g;
        for (std::size_t ic = 0; ic < in.c; ++ic) {
          const double* wk = W + ((oc * in.c + ic) * kKernel) * kKernel;
          double* dwk = dW + ((oc * in.c + ic) * kKernel) * kKernel;
          for (int ky = 0; ky < kKernel; ++ky) {
            const long iy = kStride * static_cast<long>(y) + ky - kPad;
            if (iy < 0 || iy >= H) continue;
            const double* row = &in.v[(ic * in.h + iy) * in.w];
            double* drow = &din.v[(ic * in.h + iy) * in.w];
            for (int kx = 0; kx < kKernel; ++kx) {
              const long ix = kStride * static_cast<long>(x) + kx - kPad;
              if (ix < 0 || ix >= Wd) continue;
              dwk[ky * kKernel + kx] += g * row[ix];
              drow[ix] += g * wk[ky * kKernel + kx];
            }
          }
        }
      }
    }
  }
}

void tanh_inplace(Grid& g) {
  for (double& x : g.v) x = std::tanh(x);
}

struct Cache {
  Grid a0, a1, a2, a3;         // input and post-activation maps
  std::vector<double> gap;     // pooled features
  std::vector<double> z;       // projection output, pre-normalisation
  double norm = 0.0;
  std::vector<double> e;       // unit embedding
  std::array<double, 2> logits{};
};

struct Spans {
  const ParamGroup *c1w, *c1b, *c2w, *c2b, *c3w, *c3b, *pw, *pb, *hw, *hb;
};

Spans spans_of(const ModelParams& p) {
  return {&p.group("conv1.w"), &p.group("conv1.b"), &p.group("conv2.w"),
          &p.group("conv2.b"), &p.group("conv3.w"), &p.group("conv3.b"),
          &p.group("proj.w"),  &p.group("proj.b"),  &p.group("head.w"),
          &p.group("head.b")};
}

void forward_cached(const ModelParams& p, const SpectrogramTensor& x, Cache& c) {
  const ModelConfig& mc = p.config;
  if (x.channels != mc.in_channels) {
    throw Error(ErrorCode::ShapeMismatch,
                "input has " + std::to_string(x.channels) + " channels, model expects " +
                    std::to_string(mc.in_channels));
  }
  if (x.bands == 0 || x.frames == 0 || x.data.size() != x.size()) {
    throw Error(ErrorCode::ShapeMismatch, "empty or inconsistent input tensor");
  }
  const Spans s = spans_of(p);
  const double* V = p.values.data();

  c.a0.c = x.channels; c.a0.h = x.bands; c.a0.w = x.frames;
  c.a0.v = x.data;

  conv_forward(c.a0, V + s.c1w->offset, V + s.c1b->offset, mc.conv_widths[0], c.a1);
  tanh_inplace(c.a1);
  conv_forward(c.a1, V + s.c2w->offset, V + s.c2b->offset, mc.conv_widths[1], c.a2);
  tanh_inplace(c.a2);
  conv_forward(c.a2, V + s.c3w->offset, V + s.c3b->offset, mc.conv_widths[2], c.a3);
  tanh_inplace(c.a3);

  const std::size_t spatial = c.a3.h * c.a3.w;
  c.gap.assign(mc.conv_widths[2], 0.0);
  for (std::size_t ch = 0; ch < mc.conv_widths[2]; ++ch) {
    double acc = 0.0;
    const double* base = &c.a3.v[ch * spatial];
    for (std::size_t i = 0; i < spatial; ++i) acc += base[i];
    c.gap[ch] = acc / static_cast<double>(spatial);
  }

  c.z.assign(mc.embed_dim, 0.0);
  const double* PW = V + s.pw->offset;
  const double* PB = V + s.pb->offset;
  for (std::size_t i = 0; i < mc.embed_dim; ++i) {
    double acc = PB[i];
    const double* row = PW + i * mc.conv_widths[2];
    for (std::size_t j = 0; j < mc.conv_widths[2]; ++j) acc += row[j] * c.gap[j];
    c.z[i] = acc;
  }

  double sq = kNormEps;
  for (double zi : c.z) sq += zi * zi;
  c.norm = std::sqrt(sq);
  c.e.assign(mc.embed_dim, 0.0);
  for (std::size_t i = 0; i < mc.embed_dim; ++i) c.e[i] = c.z[i] / c.norm;

  const double* HW = V + s.hw->offset;
  const double* HB = V + s.hb->offset;
  for (std::size_t k = 0; k < 2; ++k) {
    double acc = HB[k];
    const double* row = HW + k * mc.embed_dim;
    for (std::size_t i = 0; i < mc.embed_dim; ++i) acc += row[i] * c.e[i];
    c.logits[k] = acc;
  }
}

void backward_cached(const ModelParams& p, const Cache& c,
                     const std::array<double, 2>& dlogits,
                     const std::vector<double>& demb_in, std::vector<double>& grads) {
  const ModelConfig& mc = p.config;
  const Spans s = spans_of(p);
  const double* V = p.values.data();
  double* G = grads.data();

  // head
  std::vector<double> de = demb_in;
  de.resize(mc.embed_dim, 0.0);
  const double* HW = V + s.hw->offset;
  double* dHW = G + s.hw->offset;
  double* dHB = G + s.hb->offset;
  for (std::size_t k = 0; k < 2; ++k) {
    dHB[k] += dlogits[k];
    for (std::size_t i = 0; i < mc.embed_dim; ++i) {
      dHW[k * mc.embed_dim + i] += dlogits[k] * c.e[i];
      de[i] += HW[k * mc.embed_dim + i] * dlogits[k];
    }
  }

  // normalisation: dz = (de - e (e . de)) / norm
  double dot = 0.0;
  for (std::size_t i = 0; i < mc.embed_dim; ++i) dot += de[i] * c.e[i];
  std::vector<double> dz(mc.embed_dim);
  for (std::size_t i = 0; i < mc.embed_dim; ++i) {
    dz[i] = (de[i] - c.e[i] * dot) / c.norm;
  }

  // projection
  const double* PW = V + s.pw->offset;
  double* dPW = G + s.pw->offset;
  double* dPB = G + s.pb->offset;
  std::vector<double> dgap(mc.conv_widths[2], 0.0);
  for (std::size_t i = 0; i < mc.embed_dim; ++i) {
    dPB[i] += dz[i];
    for (std::size_t j = 0; j < mc.conv_widths[2]; ++j) {
      dPW[i * mc.conv_widths[2] + j] += dz[i] * c.gap[j];
      dgap[j] += PW[i * mc.conv_widths[2] + j] * dz[i];
    }
  }

  // pooling
  const std::size_t spatial = c.a3.h * c.a3.w;
  Grid da3;
  da3.resize(c.a3.c, c.a3.h, c.a3.w);
  for (std::size_t ch = 0; ch < c.a3.c; ++ch) {
    const double g = dgap[ch] / static_cast<double>(spatial);
    double* base = &da3.v[ch * spatial];
    for (std::size_t i = 0; i < spatial; ++i) base[i] = g;
  }

  // conv stack, tanh' = 1 - a^2
  auto tanh_back = [](const Grid& a, Grid& da) {
    for (std::size_t i = 0; i < da.v.size(); ++i) da.v[i] *= 1.0 - a.v[i] * a.v[i];
  };
  tanh_back(c.a3, da3);
  Grid da2;
  conv_backward(c.a2, V + s.c3w->offset, mc.conv_widths[2], da3, da2,
                G + s.c3w->offset, G + s.c3b->offset);
  tanh_back(c.a2, da2);
  Grid da1;
  conv_backward(c.a1, V + s.c2w->offset, mc.conv_widths[1], da2, da1,
                G + s.c2w->offset, G + s.c2b->offset);
  tanh_back(c.a1, da1);
  Grid da0;
  conv_backward(c.a0, V + s.c1w->offset, mc.conv_widths[0], da1, da0,
                G + s.c1w->offset, G + s.c1b->offset);
}

std::array<double, 2> softmax2(const std::array<double, 2>& l) {
  const double mx = std::max(l[0], l[1]);
  const double e0 = std::exp(l[0] - mx), e1 = std::exp(l[1] - mx);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config) {
  ModelParams p;
  p.config = config;
  const std::size_t C = config.in_channels;
  const auto [w1, w2, w3] = config.conv_widths;
  const std::size_t E = config.embed_dim;

  auto add = [&p](const std::string& name, std::size_t size) {
    p.groups.push_back({name, p.values.size(), size});
    p.values.resize(p.values.size() + size, 0.0);
  };
  add("conv1.w", w1 * C * 9);
  add("conv1.b", w1);
  add("conv2.w", w2 * w1 * 9);
  add("conv2.b", w2);
  add("conv3.w", w3 * w2 * 9);
  add("conv3.b", w3);
  add("proj.w", E * w3);
  add("proj.b", E);
  add("head.w", 2 * E);
  add("head.b", 2);

  Rng rng(config.seed);
  auto fill = [&](const std::string& name, std::size_t fan_in) {
    const ParamGroup& g = p.group(name);
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < g.size; ++i) {
      p.values[g.offset + i] = rng.uniform(-s, s);
    }
  };
  fill("conv1.w", C * 9);
  fill("conv2.w", w1 * 9);
  fill("conv3.w", w2 * 9);
  fill("proj.w", w3);
  fill("head.w", E);
  return p;
}

const ParamGroup& ModelParams::group(const std::string& name) const {
  for (const ParamGroup& g : groups) {
    if (g.name == name) return g;
  }
  throw Error(ErrorCode::ConfigError, "unknown parameter group '" + name + "'");
}

ForwardResult forward(const ModelParams& params, const SpectrogramTensor& x) {
  Cache c;
  forward_cached(params, x, c);
  return {c.logits, std::move(c.e)};
}

double predict_clip(const ModelParams& params, const SpectrogramTensor& x) {
  Cache c;
  forward_cached(params, x, c);
  return softmax2(c.logits)[1];
}

std::vector<double> class_weights(const std::vector<std::size_t>& counts) {
  if (counts.empty()) throw Error(ErrorCode::EmptyClass, "no classes");
  std::size_t total = 0;
  for (std::size_t c : counts) {
    if (c == 0) throw Error(ErrorCode::EmptyClass, "a class has zero examples");
    total += c;
  }
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w[i] = static_cast<double>(total) /
           (static_cast<double>(counts.size()) * static_cast<double>(counts[i]));
  }
  return w;
}

LossResult hybrid_loss(const std::vector<std::array<double, 2>>& logits,
                       const std::vector<std::vector<double>>& embeddings,
                       const std::vector<int>& labels,
                       const std::vector<double>& weights, double lambda,
                       double margin) {
  const std::size_t n = logits.size();
  if (embeddings.size() != n || labels.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "batch arrays disagree in length");
  }
  if (n == 0) throw Error(ErrorCode::DegenerateBatch, "empty batch");
  if (lambda < 0.0 || lambda > 1.0) {
    throw Error(ErrorCode::ConfigError, "lambda must lie in [0, 1]");
  }
  if (n < 2 && lambda < 1.0) {
    throw Error(ErrorCode::DegenerateBatch,
                "contrastive term needs at least 2 samples");
  }
  const std::size_t dim = embeddings.front().size();
  for (const auto& e : embeddings) {
    if (e.size() != dim) throw Error(ErrorCode::ShapeMismatch, "embedding dims differ");
  }

  LossResult r;
  r.dlogits.assign(n, {0.0, 0.0});
  r.dembeddings.assign(n, std::vector<double>(dim, 0.0));

  if (lambda > 0.0) {
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] < 0 || labels[i] >= 2) {
        throw Error(ErrorCode::ConfigError,
                    "cross-entropy needs binary labels (lambda > 0)");
      }
      if (static_cast<std::size_t>(labels[i]) >= weights.size()) {
        throw Error(ErrorCode::ShapeMismatch, "missing class weight for a label");
      }
      weight_sum += weights[labels[i]];
    }
    double ce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::array<double, 2> p = softmax2(logits[i]);
      const int y = labels[i];
      const double wi = weights[y] / weight_sum;
      // numerically stable -log softmax
      const double mx = std::max(logits[i][0], logits[i][1]);
      const double lse = mx + std::log(std::exp(logits[i][0] - mx) +
                                       std::exp(logits[i][1] - mx));
      ce += weights[y] * (lse - logits[i][y]);
      for (int k = 0; k < 2; ++k) {
        r.dlogits[i][k] += lambda * wi * (p[k] - (k == y ? 1.0 : 0.0));
      }
    }
    r.ce = ce / weight_sum;
  }

  if (lambda < 1.0) {
    const double pairs = static_cast<double>(n) * (n - 1) / 2.0;
    double con = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          const double d = embeddings[i][k] - embeddings[j][k];
          sq += d * d;
        }
        const double d = std::sqrt(sq);
        if (labels[i] == labels[j]) {
          con += sq;
          const double scale = (1.0 - lambda) * 2.0 / pairs;
          for (std::size_t k = 0; k < dim; ++k) {
            const double diff = embeddings[i][k] - embeddings[j][k];
            r.dembeddings[i][k] += scale * diff;
            r.dembeddings[j][k] -= scale * diff;
          }
        } else if (d < margin) {
          const double gap = margin - d;
          con += gap * gap;
          if (d > 1e-12) {
            const double scale = (1.0 - lambda) * (-2.0) * gap / (d * pairs);
            for (std::size_t k = 0; k < dim; ++k) {
              const double diff = embeddings[i][k] - embeddings[j][k];
              r.dembeddings[i][k] += scale * diff;
              r.dembeddings[j][k] -= scale * diff;
            }
          }
        }
      }
    }
    r.contrastive = con / pairs;
  }

  r.loss = lambda * r.ce + (1.0 - lambda) * r.contrastive;
  return r;
}

AdamState AdamState::init(std::size_t n_params) {
  AdamState s;
  s.m.assign(n_params, 0.0);
  s.v.assign(n_params, 0.0);
  return s;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, double lr,
               const std::vector<std::uint8_t>& frozen) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n ||
      (!frozen.empty() && frozen.size() != n)) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer buffers disagree in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!frozen.empty() && frozen[i]) continue;
    if (!std::isfinite(grads[i])) {
      throw Error(ErrorCode::NonFiniteGradient,
                  "gradient " + std::to_string(i) + " is not finite");
    }
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < n; ++i) {
    if (!frozen.empty() && frozen[i]) continue;
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

BatchGradient batch_gradient(const ModelParams& params,
                             const std::vector<const SpectrogramTensor*>& inputs,
                             const std::vector<int>& labels,
                             const std::vector<double>& weights, double lambda,
                             double margin) {
  const std::size_t n = inputs.size();
  std::vector<Cache> caches(n);
  std::vector<std::array<double, 2>> logits(n);
  std::vector<std::vector<double>> embeddings(n);
  for (std::size_t i = 0; i < n; ++i) {
    forward_cached(params, *inputs[i], caches[i]);
    logits[i] = caches[i].logits;
    embeddings[i] = caches[i].e;
  }
  LossResult loss = hybrid_loss(logits, embeddings, labels, weights, lambda, margin);
  BatchGradient out;
  out.loss = loss.loss;
  out.grads.assign(params.values.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    backward_cached(params, caches[i], loss.dlogits[i], loss.dembeddings[i],
                    out.grads);
  }
  return out;
}

TrainResult train(const std::map<std::string, Dataset>& datasets,
                  const TrainConfig& cfg) {
  if (cfg.stages.empty()) throw Error(ErrorCode::ConfigError, "no training stages");
  TrainResult result{ModelParams::init(cfg.model), {}};
  ModelParams& params = result.params;

  for (std::size_t si = 0; si < cfg.stages.size(); ++si) {
    const TrainStage& stage = cfg.stages[si];
    const auto it = datasets.find(stage.dataset_id);
    if (it == datasets.end() || it->second.samples.empty()) {
      throw Error(ErrorCode::EmptyDataset,
                  "stage " + std::to_string(si) + " dataset '" + stage.dataset_id +
                      "' is missing or empty");
    }
    const Dataset& ds = it->second;
    if (stage.epochs == 0 || stage.batch_size == 0) {
      throw Error(ErrorCode::ConfigError, "epochs and batch_size must be >= 1");
    }
    if (stage.lambda < 0.0 || stage.lambda > 1.0 || !(stage.margin > 0.0)) {
      throw Error(ErrorCode::ConfigError, "need lambda in [0,1] and margin > 0");
    }

    std::vector<std::uint8_t> frozen(params.values.size(), 0);
    for (const std::string& name : stage.freeze) {
      const ParamGroup& g = params.group(name);
      std::fill(frozen.begin() + g.offset, frozen.begin() + g.offset + g.size, 1);
    }

    std::vector<double> weights;
    if (stage.lambda > 0.0) {
      std::vector<std::size_t> counts(2, 0);
      for (const Sample& s : ds.samples) {
        if (s.label < 0 || s.label >= 2) {
          throw Error(ErrorCode::ConfigError,
                      "stage " + std::to_string(si) +
                          " mixes cross-entropy with non-binary labels");
        }
        counts[s.label] += 1;
      }
      weights = class_weights(counts);
    }

    AdamState adam = AdamState::init(params.values.size());
    StageLog log;
    log.dataset_id = stage.dataset_id;

    const std::size_t n = ds.samples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < stage.epochs; ++epoch) {
      Rng rng(derive_seed(cfg.seed, si, epoch));
      rng.shuffle(order);
      double epoch_loss = 0.0;
      std::size_t start = 0;
      while (start < n) {
        std::size_t end = std::min(n, start + stage.batch_size);
        // a size-1 trailing batch cannot feed the contrastive term
        if (stage.lambda < 1.0 && n - end == 1) end = n;
        std::vector<const SpectrogramTensor*> inputs;
        std::vector<int> labels;
        inputs.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
          inputs.push_back(&ds.samples[order[i]].tensor);
          labels.push_back(ds.samples[order[i]].label);
        }
        BatchGradient bg = batch_gradient(params, inputs, labels, weights,
                                          stage.lambda, stage.margin);
        adam_step(params.values, bg.grads, adam, stage.learning_rate, frozen);
        epoch_loss += bg.loss * static_cast<double>(end - start);
        start = end;
      }
      log.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
    }

    if (!stage.val_dataset_id.empty()) {
      const auto vit = datasets.find(stage.val_dataset_id);
      if (vit == datasets.end() || vit->second.samples.empty()) {
        throw Error(ErrorCode::EmptyDataset,
                    "validation dataset '" + stage.val_dataset_id + "' is missing or empty");
      }
      if (vit->second.n_classes == 2) {
        std::size_t hits = 0;
        for (const Sample& s : vit->second.samples) {
          const double p_fail = predict_clip(params, s.tensor);
          const int pred = p_fail >= 0.5 ? 1 : 0;
          hits += pred == s.label ? 1 : 0;
        }
        log.val_accuracy = static_cast<double>(hits) /
                           static_cast<double>(vit->second.samples.size());
      }
    }
    result.log.stages.push_back(std::move(log));
  }
  return result;
}

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& meta_json) {
  nlohmann::json config = {
      {"in_channels", params.config.in_channels},
      {"conv_widths", params.config.conv_widths},
      {"embed_dim", params.config.embed_dim},
      {"seed", params.config.seed},
  };
  const std::string config_str = config.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot open '" + path + "' for writing");
  auto put_u32 = [&out](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  out.write("SPCK", 4);
  put_u32(1);  // version
  put_u32(static_cast<std::uint32_t>(config_str.size()));
  out.write(config_str.data(), static_cast<std::streamsize>(config_str.size()));
  put_u32(static_cast<std::uint32_t>(meta_json.size()));
  out.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
  put_u32(static_cast<std::uint32_t>(params.values.size()));
  for (double v : params.values) {
    const float f = static_cast<float>(v);
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  if (!out) throw Error(ErrorCode::TruncatedFile, "short write to '" + path + "'");
}

ModelParams load_checkpoint(const std::string& path, std::string* meta_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SPCK", 4) != 0) {
    throw Error(ErrorCode::UnsupportedEncoding, "'" + path + "' is not a checkpoint");
  }
  auto get_u32 = [&in, &path]() {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw Error(ErrorCode::TruncatedFile, "checkpoint '" + path + "' is truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  };
  const std::uint32_t version = get_u32();
  if (version != 1) {
    throw Error(ErrorCode::UnsupportedEncoding,
                "checkpoint version " + std::to_string(version) + " not supported");
  }
  auto get_blob = [&in, &path, &get_u32]() {
    const std::uint32_t len = get_u32();
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw Error(ErrorCode::TruncatedFile, "checkpoint '" + path + "' is truncated");
    return s;
  };
  const std::string config_str = get_blob();
  const std::string meta = get_blob();
  if (meta_json != nullptr) *meta_json = meta;

  nlohmann::json config = nlohmann::json::parse(config_str, nullptr, false);
  if (config.is_discarded()) {
    throw Error(ErrorCode::TruncatedFile, "checkpoint config block is not valid JSON");
  }
  ModelConfig mc;
  mc.in_channels = config.at("in_channels").get<std::size_t>();
  const auto widths = config.at("conv_widths").get<std::vector<std::size_t>>();
  if (widths.size() != 3) {
    throw Error(ErrorCode::UnsupportedEncoding, "checkpoint expects 3 conv widths");
  }
  std::copy(widths.begin(), widths.end(), mc.conv_widths.begin());
  mc.embed_dim = config.at("embed_dim").get<std::size_t>();
  mc.seed = config.at("seed").get<std::uint64_t>();

  ModelParams params = ModelParams::init(mc);
  const std::uint32_t n = get_u32();
  if (n != params.values.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                "checkpoint holds " + std::to_string(n) + " parameters, layout expects " +
                    std::to_string(params.values.size()));
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    float f;
    in.read(reinterpret_cast<char*>(&f), 4);
    if (!in) throw Error(ErrorCode::TruncatedFile, "checkpoint '" + path + "' is truncated");
    params.values[i] = static_cast<double>(f);
  }
  return params;
}

}  // namespace specpipe
