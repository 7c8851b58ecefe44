#include "da/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "da/error.hpp"
#include "da/rng.hpp"

namespace da::baselines {

namespace {

constexpr double kSmallAngle = 1e-8;

Vector binary_labels(const LabeledDataset& data, int cls) {
  Vector y(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    y(i) = data.labels[static_cast<std::size_t>(i)] == cls ? 1.0 : -1.0;
  }
  return y;
}

double mean_hinge(const Matrix& x, const Vector& y, const Vector& w, double b) {
  Vector scores = x * w;
  scores.array() += b;
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    total += std::max(0.0, 1.0 - y(i) * scores(i));
  }
  return total / static_cast<double>(x.rows());
}

// Subgradient of the mean hinge with respect to (w, b).
void mean_hinge_subgrad(const Matrix& x, const Vector& y, const Vector& w,
                        double b, Vector& gw, double& gb) {
  Vector scores = x * w;
  scores.array() += b;
  gw.setZero();
  gb = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (y(i) * scores(i) < 1.0) {
      gw -= y(i) * x.row(i).transpose();
      gb -= y(i);
    }
  }
  const double n = static_cast<double>(x.rows());
  gw /= n;
  gb /= n;
}

void check_labeled(const LabeledDataset& data, const char* op) {
  if (data.rows() < 1) {
    throw InvalidArgumentError(std::string(op) + ": empty dataset");
  }
  if (static_cast<Eigen::Index>(data.labels.size()) != data.rows()) {
    throw InvalidArgumentError(std::string(op) + ": labels/rows mismatch");
  }
}

}  // namespace

GfkFactors gfk_factors(const numerics::Subspace& u,
                       const numerics::Subspace& v) {
  if (u.ambient_dim() != v.ambient_dim() || u.k() != v.k()) {
    throw InvalidArgumentError("gfk: dimension mismatch");
  }
  if (u.k() >= u.ambient_dim()) {
    throw InvalidArgumentError("gfk: needs k < ambient_dim");
  }

  const Eigen::Index k = u.k();
  Matrix cross = u.basis.transpose() * v.basis;  // k x k
  Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& p1 = svd.matrixU();
  const Matrix& q = svd.matrixV();

  GfkFactors f;
  f.theta.resize(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    f.theta[static_cast<std::size_t>(i)] =
        std::acos(std::clamp(svd.singularValues()(i), 0.0, 1.0));
  }

  Matrix complement = numerics::orthonormal_complement(u);
  Matrix bq = (complement.transpose() * v.basis) * q;  // (d-k) x k

  Matrix p2(complement.cols(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double th = f.theta[static_cast<std::size_t>(i)];
    if (th < kSmallAngle) {
      p2.col(i).setZero();  // sin(t theta) vanishes on [0,1]
    } else {
      p2.col(i) = -bq.col(i) / std::sin(th);
    }
  }

  f.up1 = u.basis * p1;
  f.rp2 = complement * p2;
  return f;
}

Matrix LinearClassifier::scores(const Matrix& x) const {
  if (x.cols() != trained_dim()) {
    throw InvalidArgumentError("classifier: input has " +
                               std::to_string(x.cols()) +
                               " columns, trained on " +
                               std::to_string(trained_dim()));
  }
  return (x * weights.transpose()).rowwise() + bias.transpose();
}

std::vector<int> LinearClassifier::predict(const Matrix& x) const {
  Matrix s = scores(x);
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c) {
      if (s(i, c) > s(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const LinearClassifier& clf, const LabeledDataset& test) {
  check_labeled(test, "accuracy");
  std::vector<int> pred = clf.predict(test.features);
  int correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

LinearClassifier svm_train(const LabeledDataset& data, double c_reg, int epochs,
                           std::uint64_t seed) {
  check_labeled(data, "svm_train");
  if (!(c_reg > 0.0)) throw InvalidArgumentError("svm_train: c_reg must be > 0");
  if (epochs < 1) throw InvalidArgumentError("svm_train: epochs must be >= 1");

  std::vector<bool> present(static_cast<std::size_t>(data.n_classes), false);
  for (int y : data.labels) present[static_cast<std::size_t>(y)] = true;
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw InvalidArgumentError("svm_train: needs at least 2 classes present");
  }

  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  const double radius = 1.0 / std::sqrt(c_reg);

  LinearClassifier clf;
  clf.weights = Matrix::Zero(data.n_classes, d);
  clf.bias = Vector::Zero(data.n_classes);

  for (int c = 0; c < data.n_classes; ++c) {
    Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(c)));
    Vector y = binary_labels(data, c);

    Vector w = Vector::Zero(d);
    double b = 0.0;
    Vector best_w = w;
    double best_b = b;
    double best_obj = 0.5 * c_reg * w.squaredNorm() + mean_hinge(data.features, y, w, b);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    long t = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
      rng.shuffle(order);
      for (Eigen::Index i : order) {
        ++t;
        const double eta = 1.0 / (c_reg * static_cast<double>(t));
        const double margin = y(i) * (w.dot(data.features.row(i)) + b);
        w *= (1.0 - eta * c_reg);
        if (margin < 1.0) {
          w += eta * y(i) * data.features.row(i).transpose();
          // The unregularized bias has no curvature of its own; a 1/sqrt(t)
          // step lets it keep moving long after the 1/t weight steps have
          // shrunk.
          b += y(i) / std::sqrt(static_cast<double>(t));
        }
        const double norm = w.norm();
        if (norm > radius) w *= radius / norm;
      }
      const double obj =
          0.5 * c_reg * w.squaredNorm() + mean_hinge(data.features, y, w, b);
      if (obj < best_obj) {
        best_obj = obj;
        best_w = w;
        best_b = b;
      }
    }
    clf.weights.row(c) = best_w.transpose();
    clf.bias(c) = best_b;
  }
  return clf;
}

double svm_objective(const LinearClassifier& clf, const LabeledDataset& data,
                     double c_reg) {
  check_labeled(data, "svm_objective");
  double total = 0.0;
  for (int c = 0; c < data.n_classes; ++c) {
    Vector y = binary_labels(data, c);
    Vector w = clf.weights.row(c).transpose();
    total += 0.5 * c_reg * w.squaredNorm() +
             mean_hinge(data.features, y, w, clf.bias(c));
  }
  return total;
}

Vector late_fusion(const Vector& v_source, const Vector& v_target,
                   FusionMode mode, const FusionConfig& cfg) {
  if (v_source.size() != v_target.size()) {
    throw InvalidArgumentError("late_fusion: score length mismatch");
  }
  if (mode == FusionMode::Max) return v_source.cwiseMax(v_target);

  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) {
    throw InvalidArgumentError("late_fusion: alpha must be in [0, 1]");
  }
  return (1.0 - cfg.alpha) * v_source + cfg.alpha * v_target;
}

Matrix daume_augment(const Matrix& x, bool is_source) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Matrix out = Matrix::Zero(n, 3 * d);
  out.block(0, 0, n, d) = x;  // shared block
  if (is_source) {
    out.block(0, d, n, d) = x;
  } else {
    out.block(0, 2 * d, n, d) = x;
  }
  return out;
}

Matrix sa_align(const numerics::Subspace& u, const numerics::Subspace& v) {
  if (u.ambient_dim() != v.ambient_dim() || u.k() != v.k()) {
    throw InvalidArgumentError("sa_align: dimension mismatch");
  }
  return u.basis.transpose() * v.basis;
}

namespace {

double map_and_classify(const LabeledDataset& source, const Matrix& target_map,
                        const LabeledDataset& target_test,
                        const SvmParams& svm) {
  LinearClassifier clf = svm_train(source, svm.c_reg, svm.epochs, svm.seed);
  LabeledDataset mapped = target_test;
  mapped.features = target_test.features * target_map.transpose();
  return accuracy(clf, mapped);
}

}  // namespace

double sa_adapt_and_classify(const LabeledDataset& source,
                             const Matrix& target_unlabeled,
                             const LabeledDataset& target_test, Eigen::Index k,
                             const SvmParams& svm) {
  if (source.cols() != target_unlabeled.cols() ||
      source.cols() != target_test.cols()) {
    throw InvalidArgumentError("sa_adapt_and_classify: dimension mismatch");
  }
  numerics::Subspace u = numerics::pca(source.features, k);
  numerics::Subspace v = numerics::pca(target_unlabeled, k);
  Matrix m = sa_align(u, v);
  Matrix target_map = u.basis * m * v.basis.transpose();  // d x d
  return map_and_classify(source, target_map, target_test, svm);
}

Matrix gfk_flow(const numerics::Subspace& u, const numerics::Subspace& v,
                double t) {
  GfkFactors f = gfk_factors(u, v);
  const Eigen::Index k = u.k();
  Matrix phi(u.ambient_dim(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double th = f.theta[static_cast<std::size_t>(i)];
    phi.col(i) = f.up1.col(i) * std::cos(t * th) - f.rp2.col(i) * std::sin(t * th);
  }
  return phi;
}

GeodesicKernel gfk_compute(const numerics::Subspace& u,
                           const numerics::Subspace& v) {
  GfkFactors f = gfk_factors(u, v);
  const Eigen::Index k = u.k();

  // Entrywise integrals over t in [0,1]; zero-angle limits are 1, 0, 0.
  Vector cos2(k), sin2(k), cross(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double th = f.theta[static_cast<std::size_t>(i)];
    if (th < kSmallAngle) {
      cos2(i) = 1.0;
      sin2(i) = 0.0;
      cross(i) = 0.0;
    } else {
      cos2(i) = 0.5 + std::sin(2.0 * th) / (4.0 * th);
      sin2(i) = 0.5 - std::sin(2.0 * th) / (4.0 * th);
      cross(i) = (1.0 - std::cos(2.0 * th)) / (4.0 * th);
    }
  }

  Matrix g = f.up1 * cos2.asDiagonal() * f.up1.transpose() -
             f.up1 * cross.asDiagonal() * f.rp2.transpose() -
             f.rp2 * cross.asDiagonal() * f.up1.transpose() +
             f.rp2 * sin2.asDiagonal() * f.rp2.transpose();
  g = 0.5 * (g + g.transpose()).eval();
  return {std::move(g)};
}

double gfk_adapt_and_classify(const LabeledDataset& source,
                              const Matrix& target_unlabeled,
                              const LabeledDataset& target_test,
                              Eigen::Index k, const SvmParams& svm) {
  if (source.cols() != target_unlabeled.cols() ||
      source.cols() != target_test.cols()) {
    throw InvalidArgumentError("gfk_adapt_and_classify: dimension mismatch");
  }
  numerics::Subspace u = numerics::pca(source.features, k);
  numerics::Subspace v = numerics::pca(target_unlabeled, k);
  GeodesicKernel gk = gfk_compute(u, v);
  return map_and_classify(source, gk.g, target_test, svm);
}

LinearClassifier pmt_train(const LinearClassifier& theta_source,
                           const LabeledDataset& target, double gamma,
                           int epochs, std::uint64_t /*seed*/) {
  check_labeled(target, "pmt_train");
  if (gamma < 0.0) throw InvalidArgumentError("pmt_train: gamma must be >= 0");
  if (epochs < 1) throw InvalidArgumentError("pmt_train: epochs must be >= 1");
  if (theta_source.trained_dim() != target.cols()) {
    throw InvalidArgumentError("pmt_train: dimension mismatch");
  }
  if (theta_source.n_classes() < target.n_classes) {
    throw InvalidArgumentError("pmt_train: source classifier covers fewer classes");
  }

  LinearClassifier out;
  out.weights = Matrix::Zero(target.n_classes, target.cols());
  out.bias = Vector::Zero(target.n_classes);

  for (int c = 0; c < target.n_classes; ++c) {
    Vector w_src = theta_source.weights.row(c).transpose();
    const double src_norm = w_src.norm();
    if (src_norm < 1e-12) {
      throw InvalidArgumentError("pmt_train: zero source hyperplane for class " +
                                 std::to_string(c) + ", angle undefined");
    }
    Vector unit = w_src / src_norm;
    Vector y = binary_labels(target, c);

    auto objective = [&](const Vector& w, double b) {
      const double along = unit.dot(w);
      return 0.5 * w.squaredNorm() +
             0.5 * gamma * (w.squaredNorm() - along * along) +
             mean_hinge(target.features, y, w, b);
    };

    // Warm start at the source hyperplane.
    Vector w = w_src;
    double b = theta_source.bias(c);
    Vector best_w = w;
    double best_b = b;
    double best_obj = objective(w, b);

    Vector hinge_gw(target.cols());
    double hinge_gb = 0.0;
    for (int t = 1; t <= epochs; ++t) {
      mean_hinge_subgrad(target.features, y, w, b, hinge_gw, hinge_gb);
      Vector grad = w + gamma * (w - unit * unit.dot(w)) + hinge_gw;

      // The quadratic has curvature 1 along the source direction and 1+gamma
      // orthogonal to it; scale the orthogonal step accordingly so large
      // gamma stays stable.
      Vector g_par = unit * unit.dot(grad);
      Vector g_perp = grad - g_par;
      const double eta = 2.0 / (static_cast<double>(t) + 2.0);
      w -= eta * g_par + (eta / (1.0 + gamma)) * g_perp;
      b -= eta * hinge_gb;

      const double obj = objective(w, b);
      if (obj < best_obj) {
        best_obj = obj;
        best_w = w;
        best_b = b;
      }
    }
    out.weights.row(c) = best_w.transpose();
    out.bias(c) = best_b;
  }
  return out;
}

double pmt_objective(const LinearClassifier& theta_tilde,
                     const LinearClassifier& theta_source,
                     const LabeledDataset& target, double gamma) {
  check_labeled(target, "pmt_objective");
  double total = 0.0;
  for (int c = 0; c < target.n_classes; ++c) {
    Vector w = theta_tilde.weights.row(c).transpose();
    Vector w_src = theta_source.weights.row(c).transpose();
    const double src_norm2 = w_src.squaredNorm();
    if (src_norm2 <= 0.0) {
      throw InvalidArgumentError("pmt_objective: zero source hyperplane");
    }
    const double along2 = w_src.dot(w) * w_src.dot(w) / src_norm2;
    Vector y = binary_labels(target, c);
    total += 0.5 * w.squaredNorm() + 0.5 * gamma * (w.squaredNorm() - along2) +
             mean_hinge(target.features, y, w, theta_tilde.bias(c));
  }
  return total;
}

double mmdt_objective(const LinearClassifier& clf, const Matrix& transform,
                      const LabeledDataset& source, const LabeledDataset& target,
                      const MmdtConfig& cfg) {
  const Eigen::Index d = source.cols();
  Matrix mapped = target.features * transform.transpose();
  double total = 0.5 * (transform - Matrix::Identity(d, d)).squaredNorm();
  for (int c = 0; c < source.n_classes; ++c) {
    Vector w = clf.weights.row(c).transpose();
    total += 0.5 * w.squaredNorm();
    total += cfg.c_source *
             mean_hinge(source.features, binary_labels(source, c), w, clf.bias(c));
    total += cfg.c_target *
             mean_hinge(mapped, binary_labels(target, c), w, clf.bias(c));
  }
  return total;
}

MmdtResult mmdt_train(const LabeledDataset& source, const LabeledDataset& target,
                      const MmdtConfig& cfg, int outer_iters,
                      std::uint64_t /*seed*/) {
  check_labeled(source, "mmdt_train");
  check_labeled(target, "mmdt_train");
  if (source.cols() != target.cols()) {
    throw InvalidArgumentError("mmdt_train: dimension mismatch");
  }
  if (source.n_classes != target.n_classes) {
    throw InvalidArgumentError("mmdt_train: class spaces differ");
  }
  if (cfg.c_source < 0.0 || cfg.c_target < 0.0) {
    throw InvalidArgumentError("mmdt_train: weights must be >= 0");
  }
  if (outer_iters < 1) {
    throw InvalidArgumentError("mmdt_train: outer_iters must be >= 1");
  }

  const Eigen::Index d = source.cols();
  const int n_classes = source.n_classes;
  const Matrix identity = Matrix::Identity(d, d);

  MmdtResult res;
  res.transform = identity;
  res.classifier.weights = Matrix::Zero(n_classes, d);
  res.classifier.bias = Vector::Zero(n_classes);
  res.losses.reserve(static_cast<std::size_t>(outer_iters));

  std::vector<Vector> ys, yt;
  for (int c = 0; c < n_classes; ++c) {
    ys.push_back(binary_labels(source, c));
    yt.push_back(binary_labels(target, c));
  }

  for (int outer = 0; outer < outer_iters; ++outer) {
    Matrix mapped = target.features * res.transform.transpose();

    // Classifier step: fix A, descend on each one-vs-rest problem, keeping
    // the best iterate so the sub-objective cannot increase.
    for (int c = 0; c < n_classes; ++c) {
      auto objective = [&](const Vector& w, double b) {
        return 0.5 * w.squaredNorm() +
               cfg.c_source * mean_hinge(source.features, ys[static_cast<std::size_t>(c)], w, b) +
               cfg.c_target * mean_hinge(mapped, yt[static_cast<std::size_t>(c)], w, b);
      };

      Vector w = res.classifier.weights.row(c).transpose();
      double b = res.classifier.bias(c);
      Vector best_w = w;
      double best_b = b;
      double best_obj = objective(w, b);

      Vector gs(d), gt(d);
      double gsb = 0.0, gtb = 0.0;
      for (int t = 1; t <= cfg.theta_epochs; ++t) {
        mean_hinge_subgrad(source.features, ys[static_cast<std::size_t>(c)], w, b, gs, gsb);
        mean_hinge_subgrad(mapped, yt[static_cast<std::size_t>(c)], w, b, gt, gtb);
        Vector grad = w + cfg.c_source * gs + cfg.c_target * gt;
        const double gb = cfg.c_source * gsb + cfg.c_target * gtb;
        const double eta = 2.0 / (static_cast<double>(t) + 2.0);
        w -= eta * grad;
        b -= eta * gb;
        const double obj = objective(w, b);
        if (obj < best_obj) {
          best_obj = obj;
          best_w = w;
          best_b = b;
        }
      }
      res.classifier.weights.row(c) = best_w.transpose();
      res.classifier.bias(c) = best_b;
    }

    // Transform step: fix the classifier, descend on A.
    auto transform_objective = [&](const Matrix& a) {
      Matrix m = target.features * a.transpose();
      double obj = 0.5 * (a - identity).squaredNorm();
      for (int c = 0; c < n_classes; ++c) {
        obj += cfg.c_target * mean_hinge(m, yt[static_cast<std::size_t>(c)],
                                         res.classifier.weights.row(c).transpose(),
                                         res.classifier.bias(c));
      }
      return obj;
    };

    Matrix a = res.transform;
    Matrix best_a = a;
    double best_obj = transform_objective(a);
    const double nt = static_cast<double>(target.rows());
    for (int t = 1; t <= cfg.transform_epochs; ++t) {
      Matrix m = target.features * a.transpose();
      Matrix grad = a - identity;
      for (int c = 0; c < n_classes; ++c) {
        Vector w = res.classifier.weights.row(c).transpose();
        Vector active_sum = Vector::Zero(d);
        for (Eigen::Index i = 0; i < target.rows(); ++i) {
          const double y = yt[static_cast<std::size_t>(c)](i);
          if (y * (w.dot(m.row(i)) + res.classifier.bias(c)) < 1.0) {
            active_sum -= y * target.features.row(i).transpose();
          }
        }
        grad.noalias() += (cfg.c_target / nt) * (w * active_sum.transpose());
      }
      const double eta = 2.0 / (static_cast<double>(t) + 2.0);
      a -= eta * grad;
      const double obj = transform_objective(a);
      if (obj < best_obj) {
        best_obj = obj;
        best_a = a;
      }
    }
    res.transform = best_a;

    res.losses.push_back(
        mmdt_objective(res.classifier, res.transform, source, target, cfg));
  }
  return res;
}

}  // namespace da::baselines
