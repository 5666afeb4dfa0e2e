#pragma once

#include <cstdint>
#include <vector>

#include "falris/dataset.hpp"

namespace falris {

enum class Activation { Relu, Sigmoid };

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
  Activation activation = Activation::Relu;
};

struct MlpModel {
  std::vector<DenseLayer> layers;
  std::vector<double> loss_history;  // mean training BCE at init and after each epoch

  Eigen::Index input_width() const { return layers.front().weights.cols(); }
  std::vector<Eigen::Index> widths() const;
};

struct MlpOptions {
  std::vector<int> hidden{15, 80};
  int epochs = 125;
  int batch = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Glorot-uniform weights, zero biases; ReLU hidden layers and a sigmoid output.
MlpModel make_mlp(Eigen::Index input_width, const std::vector<int>& hidden, std::uint64_t seed);

double mlp_forward(const MlpModel& model, const Vector& x);
Vector mlp_forward(const MlpModel& model, const Matrix& x);

struct MlpGradient {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  double loss = 0.0;
};

// Mean binary cross-entropy over the rows of x and its exact gradient.
MlpGradient mlp_loss_gradient(const MlpModel& model, const Matrix& x, const Labels& y);
double mlp_loss(const MlpModel& model, const Matrix& x, const Labels& y);

MlpModel mlp_train(const DataSet& train, const MlpOptions& opt, std::uint64_t seed);

}  // namespace falris
