#include <cmath>
#include <numbers>

#include "opvi/models.hpp"

namespace opvi {

namespace {
using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct Layout {
  Eigen::Index in, hid, out;
  Eigen::Index w1, b1, w2, b2, log_prec;
  explicit Layout(const BnnArchitecture& a)
      : in(static_cast<Eigen::Index>(a.inputs)),
        hid(static_cast<Eigen::Index>(a.hidden)),
        out(static_cast<Eigen::Index>(a.outputs)),
        w1(0),
        b1(hid * in),
        w2(b1 + hid),
        b2(w2 + out * hid),
        log_prec(b2 + out) {}
  [[nodiscard]] Eigen::Index weight_count() const { return log_prec; }
};

void activate(Activation act, Eigen::VectorXd& z) {
  switch (act) {
    case Activation::tanh: z = z.array().tanh(); break;
    case Activation::sigmoid: z = (1.0 / (1.0 + (-z.array()).exp())).matrix(); break;
    case Activation::relu: z = z.array().max(0.0); break;
    case Activation::identity: break;
  }
}

// Derivative expressed through the activation value a (and pre-activation for relu).
double activation_slope(Activation act, double a) {
  switch (act) {
    case Activation::tanh: return 1.0 - a * a;
    case Activation::sigmoid: return a * (1.0 - a);
    case Activation::relu: return a > 0.0 ? 1.0 : 0.0;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}
}  // namespace

std::size_t BnnArchitecture::param_count() const {
  const std::size_t weights = hidden * inputs + hidden + outputs * hidden + outputs;
  return weights + (task == BnnTask::regression ? 1 : 0);
}

void BnnArchitecture::validate() const {
  if (inputs < 1 || hidden < 1 || outputs < 1) throw ConfigError("BNN layer sizes must be >= 1");
  if (task == BnnTask::regression && outputs != 1) throw ConfigError("BNN regression needs one output");
  if (task == BnnTask::classification && outputs < 2) throw ConfigError("BNN classification needs >= 2 classes");
}

BnnModel::BnnModel(BnnArchitecture arch, Dataset train, BnnPrior prior, double target_mean,
                   double target_scale)
    : arch_(arch), train_(std::move(train)), prior_(prior), target_mean_(target_mean), target_scale_(target_scale) {
  arch_.validate();
  if (train_.size() < 1) throw ConfigError("BNN needs training data");
  if (train_.n_features() != arch_.inputs) throw ConfigError("BNN input width does not match dataset features");
  if (!(prior_.weight_var > 0.0 && prior_.gamma_shape > 0.0 && prior_.gamma_rate > 0.0)) {
    throw ConfigError("BNN prior parameters must be > 0");
  }
  if (!(target_scale_ > 0.0)) throw ConfigError("target scale must be > 0");
  if (arch_.task == BnnTask::classification) {
    for (double y : train_.targets) {
      if (y < 0.0 || y >= static_cast<double>(arch_.outputs)) throw ConfigError("class label out of range");
    }
  }
}

double BnnModel::log_prior(const Vector& w) const {
  const Layout l(arch_);
  const auto weights = w.head(l.weight_count());
  double lp = -0.5 * weights.squaredNorm() / prior_.weight_var -
              0.5 * static_cast<double>(l.weight_count()) * std::log(2.0 * std::numbers::pi * prior_.weight_var);
  if (arch_.task == BnnTask::regression) {
    const double s = w(l.log_prec);
    const double a = prior_.gamma_shape;
    const double b = prior_.gamma_rate;
    // Gamma(a, b) density on exp(s) times the Jacobian exp(s).
    lp += a * s - b * std::exp(s) + a * std::log(b) - std::lgamma(a);
  }
  return lp;
}

Vector BnnModel::grad_log_prior(const Vector& w) const {
  const Layout l(arch_);
  Vector g(w.size());
  g.head(l.weight_count()) = -w.head(l.weight_count()) / prior_.weight_var;
  if (arch_.task == BnnTask::regression) {
    g(l.log_prec) = prior_.gamma_shape - prior_.gamma_rate * std::exp(w(l.log_prec));
  }
  return g;
}

Vector BnnModel::forward(const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input) const {
  if (static_cast<std::size_t>(w.size()) != arch_.param_count()) {
    throw ConfigError("BNN parameter vector has wrong length");
  }
  if (static_cast<std::size_t>(input.size()) != arch_.inputs) throw ConfigError("BNN input has wrong width");
  const Layout l(arch_);
  const RowMajorMap w1(w.data() + l.w1, l.hid, l.in);
  const RowMajorMap w2(w.data() + l.w2, l.out, l.hid);
  Eigen::VectorXd hidden = w1 * input.transpose() + w.segment(l.b1, l.hid);
  activate(arch_.activation, hidden);
  Eigen::VectorXd out = w2 * hidden + w.segment(l.b2, l.out);
  if (arch_.task == BnnTask::classification) {
    const double lse = log_sum_exp(out);
    out = (out.array() - lse).exp().matrix();
  }
  return out;
}

Vector bnn_forward(const BnnModel& model, const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input) {
  return model.forward(w, input);
}

double BnnModel::datum_log_lik(const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input,
                               double target) const {
  const Layout l(arch_);
  const RowMajorMap w1(w.data() + l.w1, l.hid, l.in);
  const RowMajorMap w2(w.data() + l.w2, l.out, l.hid);
  Eigen::VectorXd hidden = w1 * input.transpose() + w.segment(l.b1, l.hid);
  activate(arch_.activation, hidden);
  const Eigen::VectorXd out = w2 * hidden + w.segment(l.b2, l.out);
  if (arch_.task == BnnTask::regression) {
    const double s = w(l.log_prec);
    const double r = target - out(0);
    return 0.5 * s - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::exp(s) * r * r;
  }
  return out(static_cast<Eigen::Index>(target)) - log_sum_exp(out);
}

void BnnModel::datum_grad(const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input, double target,
                          Vector& g) const {
  const Layout l(arch_);
  const RowMajorMap w1(w.data() + l.w1, l.hid, l.in);
  const RowMajorMap w2(w.data() + l.w2, l.out, l.hid);
  Eigen::VectorXd hidden = w1 * input.transpose() + w.segment(l.b1, l.hid);
  activate(arch_.activation, hidden);
  Eigen::VectorXd out = w2 * hidden + w.segment(l.b2, l.out);

  // d log p / d output
  Eigen::VectorXd d_out(l.out);
  if (arch_.task == BnnTask::regression) {
    const double prec = std::exp(w(l.log_prec));
    const double r = target - out(0);
    d_out(0) = prec * r;
    g(l.log_prec) += 0.5 - 0.5 * prec * r * r;
  } else {
    const double lse = log_sum_exp(out);
    d_out = -(out.array() - lse).exp().matrix();
    d_out(static_cast<Eigen::Index>(target)) += 1.0;
  }

  RowMajorMutMap g_w2(g.data() + l.w2, l.out, l.hid);
  g_w2.noalias() += d_out * hidden.transpose();
  g.segment(l.b2, l.out) += d_out;

  Eigen::VectorXd d_hidden = w2.transpose() * d_out;
  for (Eigen::Index j = 0; j < l.hid; ++j) d_hidden(j) *= activation_slope(arch_.activation, hidden(j));
  RowMajorMutMap g_w1(g.data() + l.w1, l.hid, l.in);
  g_w1.noalias() += d_hidden * input;
  g.segment(l.b1, l.hid) += d_hidden;
}

double BnnModel::log_lik(const Vector& w, std::size_t k) const {
  const auto row = static_cast<Eigen::Index>(k);
  return datum_log_lik(w, train_.features.row(row), train_.targets(row));
}

Vector BnnModel::grad_log_lik(const Vector& w, std::size_t k) const {
  Vector g = Vector::Zero(w.size());
  const auto row = static_cast<Eigen::Index>(k);
  datum_grad(w, train_.features.row(row), train_.targets(row), g);
  return g;
}

void BnnModel::accumulate_grad_log_lik(const Vector& w, std::span<const std::size_t> indices, Vector& out) const {
  for (std::size_t k : indices) {
    const auto row = static_cast<Eigen::Index>(k);
    datum_grad(w, train_.features.row(row), train_.targets(row), out);
  }
}

double BnnModel::log_predictive(const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input,
                                double target) const {
  if (arch_.task == BnnTask::regression) {
    const double normalized = (target - target_mean_) / target_scale_;
    return datum_log_lik(w, input, normalized) - std::log(target_scale_);
  }
  return datum_log_lik(w, input, target);
}

double BnnModel::predict_mean(const Vector& w, const Eigen::Ref<const Eigen::RowVectorXd>& input) const {
  return target_mean_ + target_scale_ * forward(w, input)(0);
}

}  // namespace opvi
