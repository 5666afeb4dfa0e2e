#include "falris/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "falris/error.hpp"
#include "falris/random.hpp"

namespace falris {

std::vector<Eigen::Index> MlpModel::widths() const {
  std::vector<Eigen::Index> w{input_width()};
  for (const auto& l : layers) w.push_back(l.weights.rows());
  return w;
}

MlpModel make_mlp(Eigen::Index input_width, const std::vector<int>& hidden, std::uint64_t seed) {
  if (input_width < 1) throw std::invalid_argument("input width must be positive");
  Rng rng = make_rng(seed, {0x3e7});
  MlpModel m;
  Eigen::Index in = input_width;
  std::vector<int> outs(hidden);
  outs.push_back(1);
  for (std::size_t k = 0; k < outs.size(); ++k) {
    if (outs[k] < 1) throw std::invalid_argument("layer widths must be positive");
    const Eigen::Index out = outs[k];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = u(rng);
    layer.bias = Vector::Zero(out);
    layer.activation = k + 1 == outs.size() ? Activation::Sigmoid : Activation::Relu;
    m.layers.push_back(std::move(layer));
    in = out;
  }
  return m;
}

namespace {

// Columns are samples. Returns pre-activations and activations per layer;
// the output layer's activation slot holds the logit.
void forward_batch(const MlpModel& m, const Matrix& xt, std::vector<Matrix>& pre, std::vector<Matrix>& act) {
  pre.clear();
  act.assign(1, xt);
  for (const auto& l : m.layers) {
    Matrix z = (l.weights * act.back()).colwise() + l.bias;
    pre.push_back(z);
    act.push_back(l.activation == Activation::Relu ? Matrix(z.cwiseMax(0.0)) : z);
  }
}

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

Vector mlp_forward(const MlpModel& m, const Matrix& x) {
  if (x.cols() != m.input_width())
    throw DataError("shape mismatch: network expects " + std::to_string(m.input_width()) + " inputs, got " +
                    std::to_string(x.cols()));
  std::vector<Matrix> pre, act;
  forward_batch(m, x.transpose(), pre, act);
  return act.back().row(0).transpose().unaryExpr([](double t) { return sigmoid(t); });
}

double mlp_forward(const MlpModel& m, const Vector& x) { return mlp_forward(m, Matrix(x.transpose()))(0); }

MlpGradient mlp_loss_gradient(const MlpModel& m, const Matrix& x, const Labels& y) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()) || x.rows() == 0)
    throw DataError("MLP batch needs one label per row");
  if (x.cols() != m.input_width()) throw DataError("shape mismatch in MLP batch");
  std::vector<Matrix> pre, act;
  forward_batch(m, x.transpose(), pre, act);
  const double nb = static_cast<double>(x.rows());
  const Eigen::Index L = static_cast<Eigen::Index>(m.layers.size());
  MlpGradient g;
  g.weights.resize(m.layers.size());
  g.biases.resize(m.layers.size());
  // BCE on a logit t: softplus(t) - y t, derivative sigmoid(t) - y.
  Matrix delta(1, x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double t = act.back()(0, i), yi = y[static_cast<std::size_t>(i)];
    g.loss += softplus(t) - yi * t;
    delta(0, i) = (sigmoid(t) - yi) / nb;
  }
  g.loss /= nb;
  for (Eigen::Index k = L - 1; k >= 0; --k) {
    const auto uk = static_cast<std::size_t>(k);
    g.weights[uk] = delta * act[uk].transpose();
    g.biases[uk] = delta.rowwise().sum();
    if (k > 0) {
      delta = m.layers[uk].weights.transpose() * delta;
      delta = delta.cwiseProduct((pre[uk - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

double mlp_loss(const MlpModel& m, const Matrix& x, const Labels& y) { return mlp_loss_gradient(m, x, y).loss; }

MlpModel mlp_train(const DataSet& train, const MlpOptions& opt, std::uint64_t seed) {
  if (!has_both_classes(train.labels())) throw DataError("degenerate labels: network needs both classes");
  if (opt.epochs < 0 || opt.batch < 1) throw std::invalid_argument("epochs must be >= 0 and batch >= 1");
  MlpModel m = make_mlp(train.p(), opt.hidden, seed);
  const Matrix& x = train.states();
  const Labels& y = train.labels();
  const Eigen::Index n = train.n();

  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  for (const auto& l : m.layers) {
    mw.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    vw.push_back(mw.back());
    mb.push_back(Vector::Zero(l.bias.size()));
    vb.push_back(mb.back());
  }
  Rng rng = make_rng(seed, {0x5f1e});
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  long step = 0;
  m.loss_history.push_back(mlp_loss(m, x, y));
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += opt.batch) {
      const Eigen::Index len = std::min<Eigen::Index>(opt.batch, n - start);
      Matrix xb(len, x.cols());
      Labels yb(static_cast<std::size_t>(len));
      for (Eigen::Index r = 0; r < len; ++r) {
        Eigen::Index src = order[static_cast<std::size_t>(start + r)];
        xb.row(r) = x.row(src);
        yb[static_cast<std::size_t>(r)] = y[static_cast<std::size_t>(src)];
      }
      MlpGradient g = mlp_loss_gradient(m, xb, yb);
      if (!std::isfinite(g.loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch starting at " << start;
        throw NumericalError(msg.str());
      }
      ++step;
      const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < m.layers.size(); ++k) {
        mw[k] = opt.beta1 * mw[k] + (1.0 - opt.beta1) * g.weights[k];
        vw[k] = opt.beta2 * vw[k] + (1.0 - opt.beta2) * g.weights[k].cwiseAbs2();
        mb[k] = opt.beta1 * mb[k] + (1.0 - opt.beta1) * g.biases[k];
        vb[k] = opt.beta2 * vb[k] + (1.0 - opt.beta2) * g.biases[k].cwiseAbs2();
        m.layers[k].weights.array() -=
            opt.learning_rate * (mw[k].array() / c1) / ((vw[k].array() / c2).sqrt() + opt.epsilon);
        m.layers[k].bias.array() -=
            opt.learning_rate * (mb[k].array() / c1) / ((vb[k].array() / c2).sqrt() + opt.epsilon);
      }
    }
    m.loss_history.push_back(mlp_loss(m, x, y));
    if (!std::isfinite(m.loss_history.back()))
      throw NumericalError("non-finite training loss after epoch " + std::to_string(epoch));
  }
  return m;
}

}  // namespace falris
