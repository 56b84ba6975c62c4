#include "qppo/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qppo::nn {

namespace {

double interval_draw(double lo, double hi, Rng& rng) {
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return sign * rng.uniform(lo, hi);
}

double safe_atanh(double u) {
  // Clamp away from +/-1; uniform(-1, 1) can graze the endpoint.
  u = std::clamp(u, -1.0 + 1e-12, 1.0 - 1e-12);
  return std::atanh(u);
}

}  // namespace

std::vector<double> init_params(int count, InitStrategy strategy, Rng& rng) {
  std::vector<double> values(count);
  for (double& v : values) {
    switch (strategy) {
      case InitStrategy::Standard:
        v = safe_atanh(rng.uniform(-1.0, 1.0));
        break;
      case InitStrategy::Small:
        v = safe_atanh(interval_draw(0.01, 0.11, rng));
        break;
      case InitStrategy::Medium:
        v = safe_atanh(interval_draw(0.25, 0.75, rng));
        break;
      case InitStrategy::Large:
        v = safe_atanh(interval_draw(0.59, 0.99, rng));
        break;
      case InitStrategy::Gaussian:
        v = rng.normal();
        break;
      case InitStrategy::ClippedGaussian: {
        const double g = rng.normal();
        v = std::copysign(std::clamp(std::abs(g), 0.01, 0.99), g);
        break;
      }
      case InitStrategy::Orthogonal:
      case InitStrategy::ZeroBias:
        throw std::invalid_argument("orthogonal/zero-bias initialize MLP layers, not flat vectors");
    }
  }
  return values;
}

Mlp Mlp::make(std::vector<int> sizes) {
  if (sizes.size() < 2) {
    throw std::invalid_argument("an MLP needs at least input and output sizes");
  }
  Mlp net;
  net.sizes = std::move(sizes);
  std::size_t total = 0;
  for (int l = 0; l + 1 < static_cast<int>(net.sizes.size()); ++l) {
    total += static_cast<std::size_t>(net.sizes[l + 1]) * net.sizes[l] + net.sizes[l + 1];
  }
  net.params.assign(total, 0.0);
  return net;
}

std::size_t Mlp::weight_offset(int layer) const {
  std::size_t offset = 0;
  for (int l = 0; l < layer; ++l) {
    offset += static_cast<std::size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
  }
  return offset;
}

std::size_t Mlp::bias_offset(int layer) const {
  return weight_offset(layer) + static_cast<std::size_t>(sizes[layer + 1]) * sizes[layer];
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Trace trace;
  return forward(input, trace);
}

std::vector<double> Mlp::forward(std::span<const double> input, Trace& trace) const {
  if (static_cast<int>(input.size()) != input_dim()) {
    throw std::invalid_argument("MLP input size mismatch");
  }
  trace.post.clear();
  trace.post.emplace_back(input.begin(), input.end());

  std::vector<double> current(input.begin(), input.end());
  for (int l = 0; l < layer_count(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double* w = params.data() + weight_offset(l);
    const double* b = params.data() + bias_offset(l);
    std::vector<double> next(out);
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * current[i];
      next[o] = acc;
    }
    if (l + 1 < layer_count()) {
      for (double& v : next) v = std::tanh(v);
    }
    trace.post.push_back(next);
    current = std::move(next);
  }
  return current;
}

void Mlp::backward(const Trace& trace, std::span<const double> upstream,
                   std::span<double> grad, double scale) const {
  if (trace.post.size() != static_cast<std::size_t>(layer_count()) + 1) {
    throw std::invalid_argument("trace does not match network depth");
  }
  if (static_cast<int>(upstream.size()) != output_dim() ||
      grad.size() != params.size()) {
    throw std::invalid_argument("MLP backward shape mismatch");
  }

  std::vector<double> delta(upstream.begin(), upstream.end());
  for (int l = layer_count() - 1; l >= 0; --l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const auto& a_in = trace.post[l];
    double* gw = grad.data() + weight_offset(l);
    double* gb = grad.data() + bias_offset(l);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o] * scale;
      gb[o] += d;
      double* row = gw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) row[i] += d * a_in[i];
    }
    if (l == 0) break;
    const double* w = params.data() + weight_offset(l);
    std::vector<double> prev(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
    }
    // chain through the tanh that produced a_in
    for (int i = 0; i < in; ++i) prev[i] *= 1.0 - a_in[i] * a_in[i];
    delta = std::move(prev);
  }
}

namespace {

// Orthonormalizes `count` vectors of length `dim` stored contiguously,
// via modified Gram-Schmidt with a second pass for stability.
void gram_schmidt(std::vector<double>& vecs, int count, int dim) {
  auto row = [&](int r) { return vecs.data() + static_cast<std::size_t>(r) * dim; };
  for (int pass = 0; pass < 2; ++pass) {
    for (int r = 0; r < count; ++r) {
      double* v = row(r);
      for (int p = 0; p < r; ++p) {
        const double* u = row(p);
        double dot = 0.0;
        for (int i = 0; i < dim; ++i) dot += v[i] * u[i];
        for (int i = 0; i < dim; ++i) v[i] -= dot * u[i];
      }
      double norm = 0.0;
      for (int i = 0; i < dim; ++i) norm += v[i] * v[i];
      norm = std::sqrt(norm);
      if (norm < 1e-12) norm = 1.0;
      for (int i = 0; i < dim; ++i) v[i] /= norm;
    }
  }
}

}  // namespace

void Mlp::init_orthogonal(Rng& rng, double hidden_gain, double output_gain) {
  for (int l = 0; l < layer_count(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double gain = l + 1 == layer_count() ? output_gain : hidden_gain;

    // Orthonormalize along the smaller dimension: rows when out <= in,
    // columns otherwise.
    const bool by_rows = out <= in;
    const int count = by_rows ? out : in;
    const int dim = by_rows ? in : out;
    std::vector<double> vecs(static_cast<std::size_t>(count) * dim);
    for (double& v : vecs) v = rng.normal();
    gram_schmidt(vecs, count, dim);

    double* w = params.data() + weight_offset(l);
    for (int o = 0; o < out; ++o) {
      for (int i = 0; i < in; ++i) {
        const double v = by_rows ? vecs[static_cast<std::size_t>(o) * in + i]
                                 : vecs[static_cast<std::size_t>(i) * out + o];
        w[static_cast<std::size_t>(o) * in + i] = gain * v;
      }
    }
    double* b = params.data() + bias_offset(l);
    std::fill(b, b + out, 0.0);
  }
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) {
      throw std::domain_error("adam_step: non-finite gradient, update aborted");
    }
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void clip_grad_norm(std::span<const std::span<double>> groups, double max_norm) {
  double total = 0.0;
  for (const auto& g : groups) {
    for (double v : g) total += v * v;
  }
  total = std::sqrt(total);
  if (total <= max_norm || total == 0.0) return;
  const double scale = max_norm / total;
  for (const auto& g : groups) {
    for (double& v : g) v *= scale;
  }
}

}  // namespace qppo::nn
