#include "modarc/neural.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "modarc/error.hpp"

namespace modarc {

namespace {

DenseLayer make_layer(int in, int out, Activation act) {
  return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out), act};
}

NetParams make_params(const Topology& t) {
  if (t.inputs < 1) throw ShapeError("topology needs at least one input");
  if (t.heads.empty()) throw ShapeError("topology needs at least one head");
  NetParams p;
  int width = t.inputs;
  for (int w : t.trunk) {
    if (w < 1) throw ShapeError("trunk widths must be positive");
    p.trunk.push_back(make_layer(width, w, Activation::relu));
    width = w;
  }
  for (const auto& h : t.heads) {
    if (h.outputs < 1 || h.hidden < 0) throw ShapeError("bad head '" + h.name + "'");
    std::vector<DenseLayer> layers;
    int in = width;
    if (h.hidden > 0) {
      layers.push_back(make_layer(in, h.hidden, Activation::relu));
      in = h.hidden;
    }
    layers.push_back(make_layer(in, h.outputs, Activation::identity));
    p.heads.push_back(std::move(layers));
  }
  return p;
}

void check_same_shape(const NetParams& a, const NetParams& b) {
  std::vector<std::pair<long, long>> sa, sb;
  a.for_each_layer([&](const DenseLayer& l) { sa.emplace_back(l.weight.rows(), l.weight.cols()); });
  b.for_each_layer([&](const DenseLayer& l) { sb.emplace_back(l.weight.rows(), l.weight.cols()); });
  if (sa != sb) throw ShapeError("parameter shapes do not match topology");
}

Eigen::MatrixXd apply(const DenseLayer& l, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = l.weight * x;
  z.colwise() += l.bias;
  if (l.activation == Activation::relu) z = z.cwiseMax(0.0);
  return z;
}

void check_finite(const Eigen::MatrixXd& m, int layer) {
  if (!m.allFinite()) throw NumericError("non-finite activation", layer);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = char((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

std::uint64_t get_uint(std::istream& in, int bytes) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), bytes)) throw ParseError("truncated checkpoint", 0);
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

NetParams NetParams::zeros_like() const {
  NetParams z = *this;
  z.for_each_layer([](DenseLayer& l) {
    l.weight.setZero();
    l.bias.setZero();
  });
  return z;
}

DenseNet::DenseNet(Topology topology, std::uint64_t seed)
    : topology_(std::move(topology)), params_(make_params(topology_)) {
  std::mt19937_64 rng(seed);
  params_.for_each_layer([&](DenseLayer& l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = dist(rng);
  });
}

DenseNet::DenseNet(Topology topology, NetParams params)
    : topology_(std::move(topology)), params_(make_params(topology_)) {
  check_same_shape(params_, params);
  params_ = std::move(params);
}

std::size_t DenseNet::head_index(const std::string& name) const {
  for (std::size_t i = 0; i < topology_.heads.size(); ++i)
    if (topology_.heads[i].name == name) return i;
  throw ShapeError("no head named '" + name + "'");
}

std::vector<Eigen::MatrixXd> DenseNet::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != topology_.inputs) {
    throw ShapeError("input width " + std::to_string(inputs.cols()) + " != " +
                     std::to_string(topology_.inputs));
  }
  Eigen::MatrixXd x = inputs.transpose();
  for (const auto& l : params_.trunk) x = apply(l, x);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(params_.heads.size());
  for (const auto& head : params_.heads) {
    Eigen::MatrixXd h = x;
    for (const auto& l : head) h = apply(l, h);
    out.push_back(h.transpose());
  }
  return out;
}

std::map<std::string, Eigen::VectorXd> DenseNet::forward(const Eigen::VectorXd& input) const {
  auto outs = forward_batch(input.transpose());
  std::map<std::string, Eigen::VectorXd> result;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    result[topology_.heads[i].name] = outs[i].row(0).transpose();
  }
  return result;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  params_.for_each_layer([&](const DenseLayer& l) { n += l.weight.size() + l.bias.size(); });
  return n;
}

std::uint64_t DenseNet::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](double d) {
    auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  params_.for_each_layer([&](const DenseLayer& l) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) mix(l.weight.data()[i]);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) mix(l.bias[i]);
  });
  return h;
}

BackwardResult backward(const DenseNet& net, const TrainBatch& batch) {
  const auto& topo = net.topology();
  const auto& P = net.params();
  const Eigen::Index n = batch.inputs.rows();
  if (n < 1) throw ShapeError("empty batch");
  if (batch.inputs.cols() != topo.inputs) throw ShapeError("batch input width mismatch");
  if (batch.targets.size() != topo.heads.size()) throw ShapeError("one target matrix per head");
  if (!batch.weights.empty() && batch.weights.size() != topo.heads.size()) {
    throw ShapeError("one weight mask per head");
  }

  // Forward pass keeping every activation (features x batch).
  std::vector<Eigen::MatrixXd> trunk_acts{batch.inputs.transpose()};
  int layer_index = 0;
  check_finite(trunk_acts.back(), layer_index);
  for (const auto& l : P.trunk) {
    trunk_acts.push_back(apply(l, trunk_acts.back()));
    check_finite(trunk_acts.back(), layer_index++);
  }

  BackwardResult result;
  result.gradients = P.zeros_like();
  Eigen::MatrixXd trunk_delta = Eigen::MatrixXd::Zero(trunk_acts.back().rows(), n);

  for (std::size_t h = 0; h < P.heads.size(); ++h) {
    const auto& layers = P.heads[h];
    std::vector<Eigen::MatrixXd> acts{trunk_acts.back()};
    for (const auto& l : layers) {
      acts.push_back(apply(l, acts.back()));
      check_finite(acts.back(), layer_index++);
    }
    const Eigen::MatrixXd target = batch.targets[h].transpose();
    if (target.rows() != acts.back().rows() || target.cols() != n) {
      throw ShapeError("target shape mismatch for head '" + topo.heads[h].name + "'");
    }
    Eigen::MatrixXd weight = batch.weights.empty()
                                 ? Eigen::MatrixXd::Ones(target.rows(), n)
                                 : Eigen::MatrixXd(batch.weights[h].transpose());
    if (weight.rows() != target.rows() || weight.cols() != n) {
      throw ShapeError("weight mask shape mismatch");
    }
    if (!target.allFinite()) throw NumericError("non-finite target", layer_index - 1);
    const double denom = std::max(weight.sum(), 1e-12);
    const Eigen::MatrixXd resid = acts.back() - target;
    result.loss += (weight.array() * resid.array().square()).sum() / denom;
    Eigen::MatrixXd delta = (2.0 / denom) * (weight.array() * resid.array()).matrix();

    auto& grads = result.gradients.heads[h];
    for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li) {
      grads[li].weight = delta * acts[li].transpose();
      grads[li].bias = delta.rowwise().sum();
      delta = layers[li].weight.transpose() * delta;
      if (li > 0) delta = (acts[li].array() > 0.0).cast<double>().matrix().cwiseProduct(delta);
    }
    trunk_delta += delta;
  }

  Eigen::MatrixXd delta = trunk_delta;
  for (int li = static_cast<int>(P.trunk.size()) - 1; li >= 0; --li) {
    // Trunk outputs are ReLU; acts[li+1] holds the post-activation values.
    delta = (trunk_acts[li + 1].array() > 0.0).cast<double>().matrix().cwiseProduct(delta);
    result.gradients.trunk[li].weight = delta * trunk_acts[li].transpose();
    result.gradients.trunk[li].bias = delta.rowwise().sum();
    delta = P.trunk[li].weight.transpose() * delta;
  }
  return result;
}

AdamState AdamState::for_net(const DenseNet& net) {
  return {net.params().zeros_like(), net.params().zeros_like(), 0};
}

void apply_update(DenseNet& net, const NetParams& gradients, AdamState& state,
                  const AdamConfig& cfg) {
  check_same_shape(net.params(), gradients);
  ++state.steps;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.steps));

  std::vector<DenseLayer*> p, m, v;
  std::vector<const DenseLayer*> g;
  net.params().for_each_layer([&](DenseLayer& l) { p.push_back(&l); });
  state.first_moment.for_each_layer([&](DenseLayer& l) { m.push_back(&l); });
  state.second_moment.for_each_layer([&](DenseLayer& l) { v.push_back(&l); });
  gradients.for_each_layer([&](const DenseLayer& l) { g.push_back(&l); });

  auto step = [&](auto& param, auto& m1, auto& m2, const auto& grad) {
    m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grad;
    m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    param.array() -= cfg.learning_rate * (m1.array() / c1) /
                     ((m2.array() / c2).sqrt() + cfg.epsilon);
  };
  for (std::size_t i = 0; i < p.size(); ++i) {
    step(p[i]->weight, m[i]->weight, v[i]->weight, g[i]->weight);
    step(p[i]->bias, m[i]->bias, v[i]->bias, g[i]->bias);
  }
}

void save_checkpoint(const std::filesystem::path& path, const DenseNet& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  const auto& t = net.topology();
  out.write("MDNN", 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(t.inputs));
  put_u32(out, static_cast<std::uint32_t>(t.trunk.size()));
  for (int w : t.trunk) put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(t.heads.size()));
  for (const auto& h : t.heads) {
    put_u32(out, static_cast<std::uint32_t>(h.name.size()));
    out.write(h.name.data(), static_cast<std::streamsize>(h.name.size()));
    put_u32(out, static_cast<std::uint32_t>(h.hidden));
    put_u32(out, static_cast<std::uint32_t>(h.outputs));
  }
  put_u64(out, net.parameter_count());
  net.params().for_each_layer([&](const DenseLayer& l) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put_f64(out, l.weight(r, c));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) put_f64(out, l.bias[i]);
  });
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

DenseNet load_checkpoint(const std::filesystem::path& path,
                         const std::optional<Topology>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MDNN", 4) != 0) {
    throw ParseError("bad checkpoint magic in " + path.string(), 0);
  }
  if (get_uint(in, 4) != 1) throw ParseError("unsupported checkpoint version", 0);
  Topology t;
  t.inputs = static_cast<int>(get_uint(in, 4));
  const auto trunk_n = get_uint(in, 4);
  if (trunk_n > 64) throw ParseError("implausible trunk depth", 0);
  for (std::uint64_t i = 0; i < trunk_n; ++i) t.trunk.push_back(static_cast<int>(get_uint(in, 4)));
  const auto head_n = get_uint(in, 4);
  if (head_n > 64) throw ParseError("implausible head count", 0);
  for (std::uint64_t i = 0; i < head_n; ++i) {
    HeadSpec h;
    const auto len = get_uint(in, 4);
    if (len > 256) throw ParseError("implausible head name", 0);
    h.name.resize(len);
    if (!in.read(h.name.data(), static_cast<std::streamsize>(len))) {
      throw ParseError("truncated checkpoint", 0);
    }
    h.hidden = static_cast<int>(get_uint(in, 4));
    h.outputs = static_cast<int>(get_uint(in, 4));
    t.heads.push_back(h);
  }
  if (expected && !(*expected == t)) throw ShapeError("checkpoint topology mismatch");
  NetParams params = make_params(t);
  std::size_t count = 0;
  params.for_each_layer([&](const DenseLayer& l) { count += l.weight.size() + l.bias.size(); });
  if (get_uint(in, 8) != count) throw ParseError("checkpoint parameter count mismatch", 0);
  params.for_each_layer([&](DenseLayer& l) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        l.weight(r, c) = std::bit_cast<double>(get_uint(in, 8));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i)
      l.bias[i] = std::bit_cast<double>(get_uint(in, 8));
  });
  return DenseNet(std::move(t), std::move(params));
}

}  // namespace modarc
