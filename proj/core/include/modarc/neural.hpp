#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace modarc {

enum class Activation { relu, identity };

struct DenseLayer {
  Eigen::MatrixXd weight;  // outputs x inputs
  Eigen::VectorXd bias;
  Activation activation = Activation::relu;
};

struct HeadSpec {
  std::string name;
  int hidden = 0;  // 0: the head is a single linear layer on the trunk output
  int outputs = 1;

  friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

// Shared ReLU trunk followed by named heads. Each head has an optional ReLU
// hidden layer and an identity output layer.
struct Topology {
  int inputs = 0;
  std::vector<int> trunk;
  std::vector<HeadSpec> heads;

  friend bool operator==(const Topology&, const Topology&) = default;
};

// Parameters (or gradients, or optimizer moments) laid out like the net.
struct NetParams {
  std::vector<DenseLayer> trunk;
  std::vector<std::vector<DenseLayer>> heads;

  template <typename F>
  void for_each_layer(F&& f) {
    for (auto& l : trunk) f(l);
    for (auto& h : heads)
      for (auto& l : h) f(l);
  }
  template <typename F>
  void for_each_layer(F&& f) const {
    for (const auto& l : trunk) f(l);
    for (const auto& h : heads)
      for (const auto& l : h) f(l);
  }

  NetParams zeros_like() const;
};

class DenseNet {
 public:
  // Uniform fan-in scaled weights, zero biases.
  DenseNet(Topology topology, std::uint64_t seed);
  DenseNet(Topology topology, NetParams params);

  const Topology& topology() const { return topology_; }
  const NetParams& params() const { return params_; }
  NetParams& params() { return params_; }
  int input_width() const { return topology_.inputs; }
  std::size_t head_index(const std::string& name) const;

  std::map<std::string, Eigen::VectorXd> forward(const Eigen::VectorXd& input) const;
  // Rows of `inputs` are samples; returns one (batch x outputs) matrix per head.
  std::vector<Eigen::MatrixXd> forward_batch(const Eigen::MatrixXd& inputs) const;

  std::size_t parameter_count() const;
  std::uint64_t hash() const;

 private:
  Topology topology_;
  NetParams params_;
};

// Per-head targets, rows aligned with `inputs`. `weights` is either empty or
// one 0/1 mask per head selecting which outputs carry a target.
struct TrainBatch {
  Eigen::MatrixXd inputs;
  std::vector<Eigen::MatrixXd> targets;
  std::vector<Eigen::MatrixXd> weights;
};

struct BackwardResult {
  double loss = 0.0;
  NetParams gradients;
};

// Mean squared error per head (over weighted entries), summed across heads.
BackwardResult backward(const DenseNet& net, const TrainBatch& batch);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  NetParams first_moment;
  NetParams second_moment;
  long steps = 0;

  static AdamState for_net(const DenseNet& net);
};

void apply_update(DenseNet& net, const NetParams& gradients, AdamState& state,
                  const AdamConfig& config = {});

// Flat binary checkpoint: "MDNN", u32 version, topology header, u64 count,
// little-endian f64 parameters (row-major weights then bias, layer order).
void save_checkpoint(const std::filesystem::path& path, const DenseNet& net);
DenseNet load_checkpoint(const std::filesystem::path& path,
                         const std::optional<Topology>& expected = std::nullopt);

}  // namespace modarc
