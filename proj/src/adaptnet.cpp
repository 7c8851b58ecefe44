#include "da/adaptnet.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "da/error.hpp"
#include "da/mmd.hpp"
#include "da/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight serialization assumes a little-endian host");

namespace da::net {

namespace {

constexpr double kBackboneLr = 1.0;
constexpr double kAdaptLr = 10.0;
constexpr double kClassifierLr = 10.0;

// He-style Gaussian fill, row-major order so the stream layout is documented.
void gaussian_init(Matrix& w, Rng& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(w.cols()));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      w(r, c) = sd * rng.next_gaussian();
    }
  }
}

Matrix affine(const Matrix& x, const AffineLayer& layer) {
  return (x * layer.w.transpose()).rowwise() + layer.b.transpose();
}

// Row-wise log-sum-exp with max subtraction.
Vector logsumexp_rows(const Matrix& scores) {
  Vector row_max = scores.rowwise().maxCoeff();
  return row_max.array() +
         (scores.colwise() - row_max).array().exp().rowwise().sum().log();
}

struct LabeledForward {
  Matrix hidden;   // backbone output
  Matrix preact;   // adapt pre-activation
  Matrix act;      // adapt post-ReLU
  Matrix scores;   // classifier logits
};

LabeledForward run_to_scores(const AdaptationNet& net, const Matrix& x) {
  LabeledForward f;
  f.hidden = affine(x, net.backbone);
  f.preact = affine(f.hidden, net.adapt);
  f.act = f.preact.cwiseMax(0.0);
  f.scores = affine(f.act, net.classifier);
  return f;
}

void check_input(const AdaptationNet& net, const Matrix& x, const char* op) {
  if (x.cols() != net.input_dim()) {
    throw InvalidArgumentError(std::string(op) + ": input has " +
                               std::to_string(x.cols()) + " columns, net expects " +
                               std::to_string(net.input_dim()));
  }
}

void check_batches(const AdaptationNet& net, const LabeledDataset& labeled,
                   const Matrix& source_pool, const Matrix& target_pool,
                   const char* op) {
  if (labeled.rows() < 1) {
    throw InvalidArgumentError(std::string(op) + ": empty labeled batch");
  }
  if (source_pool.rows() < 1 || target_pool.rows() < 1) {
    throw InvalidArgumentError(std::string(op) + ": empty pool batch");
  }
  check_input(net, labeled.features, op);
  check_input(net, source_pool, op);
  check_input(net, target_pool, op);
  for (int y : labeled.labels) {
    if (y < 0 || y >= net.n_classes()) {
      throw InvalidArgumentError(std::string(op) + ": label out of range");
    }
  }
  if (static_cast<Eigen::Index>(labeled.labels.size()) != labeled.rows()) {
    throw InvalidArgumentError(std::string(op) + ": labels/rows mismatch");
  }
}

double cross_entropy(const LabeledForward& f, const std::vector<int>& labels) {
  Vector lse = logsumexp_rows(f.scores);
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.scores.rows(); ++i) {
    total += lse(i) - f.scores(i, labels[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(f.scores.rows());
}

// Shared loss+gradient so the trainer pays for one pass per step.
struct LossAndGrads {
  double loss = 0.0;
  NetGrads grads;
};

LossAndGrads loss_and_gradient(const AdaptationNet& net,
                               const LabeledDataset& labeled,
                               const Matrix& source_pool,
                               const Matrix& target_pool,
                               const JointLossConfig& cfg) {
  check_batches(net, labeled, source_pool, target_pool, "joint_loss");

  NetGrads g;
  g.backbone = {Matrix::Zero(net.backbone.w.rows(), net.backbone.w.cols()),
                Vector::Zero(net.backbone.b.size())};
  g.adapt = {Matrix::Zero(net.adapt.w.rows(), net.adapt.w.cols()),
             Vector::Zero(net.adapt.b.size())};
  g.classifier = {Matrix::Zero(net.classifier.w.rows(), net.classifier.w.cols()),
                  Vector::Zero(net.classifier.b.size())};

  // Backprop an adapt-activation gradient through ReLU, adapt and backbone.
  auto backprop_lower = [&](const Matrix& x, const LabeledForward& f,
                            const Matrix& d_act) {
    Matrix d_pre = (f.preact.array() > 0.0).select(d_act, 0.0);
    g.adapt.w.noalias() += d_pre.transpose() * f.hidden;
    g.adapt.b += d_pre.colwise().sum().transpose();
    Matrix d_hidden = d_pre * net.adapt.w;
    g.backbone.w.noalias() += d_hidden.transpose() * x;
    g.backbone.b += d_hidden.colwise().sum().transpose();
  };

  // Classification term.
  LabeledForward lf = run_to_scores(net, labeled.features);
  const double ce = cross_entropy(lf, labeled.labels);
  {
    const auto n = static_cast<double>(lf.scores.rows());
    Vector lse = logsumexp_rows(lf.scores);
    Matrix probs = (lf.scores.colwise() - lse).array().exp();
    Matrix d_scores = probs;
    for (Eigen::Index i = 0; i < d_scores.rows(); ++i) {
      d_scores(i, labeled.labels[static_cast<std::size_t>(i)]) -= 1.0;
    }
    d_scores /= n;
    g.classifier.w.noalias() = d_scores.transpose() * lf.act;
    g.classifier.b = d_scores.colwise().sum().transpose();
    backprop_lower(labeled.features, lf, d_scores * net.classifier.w);
  }

  // Domain-confusion term: lambda * ||mean(a_s) - mean(a_t)||^2.
  LabeledForward sf = run_to_scores(net, source_pool);
  LabeledForward tf = run_to_scores(net, target_pool);
  Vector mean_diff = (sf.act.colwise().mean() - tf.act.colwise().mean());
  const double mmd2 = mean_diff.squaredNorm();
  if (cfg.lambda != 0.0) {
    const auto ns = static_cast<double>(source_pool.rows());
    const auto nt = static_cast<double>(target_pool.rows());
    Matrix d_as = (2.0 * cfg.lambda / ns) *
                  (Matrix::Ones(sf.act.rows(), 1) * mean_diff.transpose());
    Matrix d_at = (-2.0 * cfg.lambda / nt) *
                  (Matrix::Ones(tf.act.rows(), 1) * mean_diff.transpose());
    backprop_lower(source_pool, sf, d_as);
    backprop_lower(target_pool, tf, d_at);
  }

  return {ce + cfg.lambda * mmd2, std::move(g)};
}

void step_layer(AffineLayer& layer, LayerGrads& velocity,
                const LayerGrads& grad, double base_lr, double momentum) {
  const double lr = base_lr * layer.lr_multiplier;
  velocity.w = momentum * velocity.w - lr * grad.w;
  velocity.b = momentum * velocity.b - lr * grad.b;
  layer.w += velocity.w;
  layer.b += velocity.b;
}

void write_raw(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void write_u32(std::ofstream& out, std::uint32_t v) { write_raw(out, &v, 4); }

void write_matrix_rowmajor(std::ofstream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      write_raw(out, &v, 8);
    }
  }
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) {
    throw DataError("truncated weight file " + path);
  }
  return v;
}

void read_matrix_rowmajor(std::ifstream& in, Matrix& m,
                          const std::string& path) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = 0.0;
      if (!in.read(reinterpret_cast<char*>(&v), 8)) {
        throw DataError("truncated weight file " + path);
      }
      m(r, c) = v;
    }
  }
}

}  // namespace

AdaptationNet init_net(Eigen::Index input_dim, Eigen::Index width,
                       Eigen::Index n_classes, std::uint64_t seed) {
  if (input_dim < 1 || width < 1 || n_classes < 1) {
    throw InvalidArgumentError("init_net: dimensions must be >= 1");
  }

  AdaptationNet net;
  net.backbone = {Matrix::Identity(input_dim, input_dim),
                  Vector::Zero(input_dim), kBackboneLr};

  Rng rng(seed);
  net.adapt = {Matrix(width, input_dim), Vector::Zero(width), kAdaptLr};
  gaussian_init(net.adapt.w, rng);
  net.classifier = {Matrix(n_classes, width), Vector::Zero(n_classes),
                    kClassifierLr};
  gaussian_init(net.classifier.w, rng);
  return net;
}

ForwardResult forward(const AdaptationNet& net, const Matrix& x) {
  check_input(net, x, "forward");
  LabeledForward f = run_to_scores(net, x);

  Vector lse = logsumexp_rows(f.scores);
  Matrix probs = (f.scores.colwise() - lse).array().exp();
  return {std::move(f.act), std::move(probs)};
}

double joint_loss(const AdaptationNet& net, const LabeledDataset& labeled_batch,
                  const Matrix& source_pool_batch,
                  const Matrix& target_pool_batch, const JointLossConfig& cfg) {
  check_batches(net, labeled_batch, source_pool_batch, target_pool_batch,
                "joint_loss");
  LabeledForward lf = run_to_scores(net, labeled_batch.features);
  const double ce = cross_entropy(lf, labeled_batch.labels);
  const double m = mmd::mmd_linear(run_to_scores(net, source_pool_batch).act,
                                   run_to_scores(net, target_pool_batch).act);
  return ce + cfg.lambda * m * m;
}

NetGrads gradient(const AdaptationNet& net, const LabeledDataset& labeled_batch,
                  const Matrix& source_pool_batch,
                  const Matrix& target_pool_batch, const JointLossConfig& cfg) {
  return loss_and_gradient(net, labeled_batch, source_pool_batch,
                           target_pool_batch, cfg)
      .grads;
}

double grad_check(const AdaptationNet& net, const LabeledDataset& labeled_batch,
                  const Matrix& source_pool_batch,
                  const Matrix& target_pool_batch, const JointLossConfig& cfg,
                  double step) {
  if (!(step > 0.0)) throw InvalidArgumentError("grad_check: step must be > 0");

  NetGrads analytic = gradient(net, labeled_batch, source_pool_batch,
                               target_pool_batch, cfg);
  AdaptationNet work = net;

  struct Block {
    double* p;
    const double* g;
    Eigen::Index n;
  };
  const Block blocks[] = {
      {work.backbone.w.data(), analytic.backbone.w.data(),
       work.backbone.w.size()},
      {work.backbone.b.data(), analytic.backbone.b.data(),
       work.backbone.b.size()},
      {work.adapt.w.data(), analytic.adapt.w.data(), work.adapt.w.size()},
      {work.adapt.b.data(), analytic.adapt.b.data(), work.adapt.b.size()},
      {work.classifier.w.data(), analytic.classifier.w.data(),
       work.classifier.w.size()},
      {work.classifier.b.data(), analytic.classifier.b.data(),
       work.classifier.b.size()},
  };

  double worst = 0.0;
  for (const Block& blk : blocks) {
    for (Eigen::Index i = 0; i < blk.n; ++i) {
      const double orig = blk.p[i];
      blk.p[i] = orig + step;
      const double up = joint_loss(work, labeled_batch, source_pool_batch,
                                   target_pool_batch, cfg);
      blk.p[i] = orig - step;
      const double down = joint_loss(work, labeled_batch, source_pool_batch,
                                     target_pool_batch, cfg);
      blk.p[i] = orig;

      const double fd = (up - down) / (2.0 * step);
      const double a = blk.g[i];
      const double rel =
          std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

TrainReport train(AdaptationNet& net, const LabeledDataset& source,
                  const LabeledDataset* target_labeled,
                  const Matrix& target_unlabeled, const JointLossConfig& cfg,
                  const OptimizerConfig& opt, std::uint64_t seed,
                  const LabeledDataset* eval_test) {
  const bool have_target_labels = target_labeled && target_labeled->rows() > 0;
  if (cfg.supervised && !have_target_labels) {
    throw InvalidArgumentError(
        "train: supervised regime requires labeled target examples");
  }
  if (!cfg.supervised && have_target_labels) {
    throw InvalidArgumentError(
        "train: labeled target examples supplied in unsupervised regime");
  }
  if (cfg.batch_size < 2 || cfg.batch_size % 2 != 0) {
    throw InvalidArgumentError("train: batch_size must be even and >= 2");
  }
  if (cfg.lambda < 0.0) {
    throw InvalidArgumentError("train: lambda must be >= 0");
  }
  if (source.rows() < 1) throw InvalidArgumentError("train: empty source");
  check_input(net, source.features, "train");
  check_input(net, target_unlabeled, "train");

  // The MMD regularizer sees all target data; labels are not needed for it.
  Matrix target_pool(target_unlabeled.rows() +
                         (have_target_labels ? target_labeled->rows() : 0),
                     net.input_dim());
  if (have_target_labels) {
    target_pool << target_unlabeled, target_labeled->features;
  } else {
    target_pool = target_unlabeled;
  }
  if (target_pool.rows() < 1) {
    throw InvalidArgumentError("train: empty target pool");
  }

  // Full labeled set used for the reported classification loss.
  LabeledDataset full_labeled;
  if (cfg.supervised) {
    full_labeled.features.resize(source.rows() + target_labeled->rows(),
                                 source.cols());
    full_labeled.features << source.features, target_labeled->features;
    full_labeled.labels = source.labels;
    full_labeled.labels.insert(full_labeled.labels.end(),
                               target_labeled->labels.begin(),
                               target_labeled->labels.end());
  } else {
    full_labeled.features = source.features;
    full_labeled.labels = source.labels;
  }

  const int half = cfg.batch_size / 2;
  Rng rng(seed);

  NetGrads velocity;
  velocity.backbone = {Matrix::Zero(net.backbone.w.rows(), net.backbone.w.cols()),
                       Vector::Zero(net.backbone.b.size())};
  velocity.adapt = {Matrix::Zero(net.adapt.w.rows(), net.adapt.w.cols()),
                    Vector::Zero(net.adapt.b.size())};
  velocity.classifier = {
      Matrix::Zero(net.classifier.w.rows(), net.classifier.w.cols()),
      Vector::Zero(net.classifier.b.size())};

  TrainReport report;
  report.seed = seed;

  auto record = [&](int iteration) {
    TrainRecord rec;
    rec.iteration = iteration;
    LabeledForward lf = run_to_scores(net, full_labeled.features);
    rec.cls_loss = cross_entropy(lf, full_labeled.labels);
    rec.mmd = mmd::mmd_linear(run_to_scores(net, source.features).act,
                              run_to_scores(net, target_pool).act);
    if (eval_test) rec.test_accuracy = evaluate(net, *eval_test);
    if (!std::isfinite(rec.cls_loss) || !std::isfinite(rec.mmd)) {
      throw NumericError("training diverged at iteration " +
                         std::to_string(iteration));
    }
    report.records.push_back(std::move(rec));
  };

  record(0);

  // Without replacement when the pool covers the draw; smaller pools fall
  // back to replacement so the halves stay equal.
  auto sample_rows = [&](const Matrix& pool, int count) {
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(count));
    if (pool.rows() >= count) {
      std::vector<Eigen::Index> all(static_cast<std::size_t>(pool.rows()));
      for (Eigen::Index i = 0; i < pool.rows(); ++i) {
        all[static_cast<std::size_t>(i)] = i;
      }
      rng.shuffle(all);
      idx.assign(all.begin(), all.begin() + count);
    } else {
      for (int i = 0; i < count; ++i) {
        idx.push_back(static_cast<Eigen::Index>(
            rng.next_below(static_cast<std::uint64_t>(pool.rows()))));
      }
    }
    Matrix out(count, pool.cols());
    for (int i = 0; i < count; ++i) {
      out.row(i) = pool.row(idx[static_cast<std::size_t>(i)]);
    }
    return std::make_pair(out, idx);
  };

  for (int t = 1; t <= opt.iterations; ++t) {
    auto [src_batch, src_idx] = sample_rows(source.features, half);
    auto [tgt_batch, tgt_idx] = sample_rows(target_pool, half);

    LabeledDataset labeled;
    if (cfg.supervised) {
      auto [tl_batch, tl_idx] = sample_rows(target_labeled->features, half);
      labeled.features.resize(2 * half, source.cols());
      labeled.features << src_batch, tl_batch;
      labeled.labels.reserve(static_cast<std::size_t>(2 * half));
      for (Eigen::Index i : src_idx) {
        labeled.labels.push_back(source.labels[static_cast<std::size_t>(i)]);
      }
      for (Eigen::Index i : tl_idx) {
        labeled.labels.push_back(
            target_labeled->labels[static_cast<std::size_t>(i)]);
      }
    } else {
      labeled.features = src_batch;
      labeled.labels.reserve(static_cast<std::size_t>(half));
      for (Eigen::Index i : src_idx) {
        labeled.labels.push_back(source.labels[static_cast<std::size_t>(i)]);
      }
    }

    LossAndGrads lg =
        loss_and_gradient(net, labeled, src_batch, tgt_batch, cfg);
    if (!std::isfinite(lg.loss)) {
      throw NumericError("training diverged at iteration " + std::to_string(t));
    }

    step_layer(net.backbone, velocity.backbone, lg.grads.backbone, opt.base_lr,
               opt.momentum);
    step_layer(net.adapt, velocity.adapt, lg.grads.adapt, opt.base_lr,
               opt.momentum);
    step_layer(net.classifier, velocity.classifier, lg.grads.classifier,
               opt.base_lr, opt.momentum);

    if (t % opt.eval_interval == 0 || t == opt.iterations) record(t);
  }

  return report;
}

double evaluate(const AdaptationNet& net, const LabeledDataset& test) {
  if (test.rows() < 1) throw InvalidArgumentError("evaluate: empty test set");
  check_input(net, test.features, "evaluate");

  ForwardResult f = forward(net, test.features);
  int correct = 0;
  for (Eigen::Index i = 0; i < f.class_probabilities.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < f.class_probabilities.cols(); ++c) {
      if (f.class_probabilities(i, c) > f.class_probabilities(i, best)) {
        best = c;
      }
    }
    if (static_cast<int>(best) == test.labels[static_cast<std::size_t>(i)]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.rows());
}

double grad_check_sweep(std::uint64_t seed, int n_configs, double step) {
  if (n_configs < 1) {
    throw InvalidArgumentError("grad_check_sweep: n_configs must be >= 1");
  }

  constexpr double lambdas[] = {0.0, 0.25, 2.0};
  double worst = 0.0;
  int done = 0;
  std::uint64_t attempt = 0;
  while (done < n_configs) {
    const std::uint64_t sub_seed = Rng::mix(seed, attempt++);
    Rng rng(sub_seed);

    const auto dim = static_cast<Eigen::Index>(2 + rng.next_below(5));
    const auto width = static_cast<Eigen::Index>(1 + rng.next_below(4));
    const auto classes = static_cast<Eigen::Index>(2 + rng.next_below(3));

    AdaptationNet net = init_net(dim, width, classes, sub_seed);
    // Perturb away from the structured identity/zero init so the check
    // covers generic weights.
    for (AffineLayer* layer : {&net.backbone, &net.adapt, &net.classifier}) {
      for (Eigen::Index r = 0; r < layer->w.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer->w.cols(); ++c) {
          layer->w(r, c) += 0.3 * rng.next_gaussian();
        }
      }
      for (Eigen::Index r = 0; r < layer->b.size(); ++r) {
        layer->b(r) = 0.1 * rng.next_gaussian();
      }
    }

    auto random_rows = [&](Eigen::Index rows) {
      Matrix m(rows, dim);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = rng.next_gaussian();
      }
      return m;
    };

    LabeledDataset labeled;
    labeled.features = random_rows(static_cast<Eigen::Index>(2 + rng.next_below(4)));
    for (Eigen::Index i = 0; i < labeled.features.rows(); ++i) {
      labeled.labels.push_back(static_cast<int>(
          rng.next_below(static_cast<std::uint64_t>(classes))));
    }
    Matrix source_pool = random_rows(static_cast<Eigen::Index>(2 + rng.next_below(3)));
    Matrix target_pool = random_rows(static_cast<Eigen::Index>(2 + rng.next_below(3)));

    // Central differences are only trustworthy away from the ReLU kink;
    // resample configurations that land too close to it.
    auto min_abs_preact = [&](const Matrix& x) {
      Matrix hidden = (x * net.backbone.w.transpose()).rowwise() +
                      net.backbone.b.transpose();
      Matrix pre = (hidden * net.adapt.w.transpose()).rowwise() +
                   net.adapt.b.transpose();
      return pre.cwiseAbs().minCoeff();
    };
    const double closest = std::min({min_abs_preact(labeled.features),
                                     min_abs_preact(source_pool),
                                     min_abs_preact(target_pool)});
    if (closest < 1e-3) continue;

    JointLossConfig cfg;
    cfg.lambda = lambdas[done % 3];
    worst = std::max(worst, grad_check(net, labeled, source_pool, target_pool,
                                       cfg, step));
    ++done;
  }
  return worst;
}

void save_weights(const AdaptationNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weight file " + path);

  out.write("DBNT", 4);
  write_u32(out, 1);  // format version
  write_u32(out, static_cast<std::uint32_t>(net.input_dim()));
  write_u32(out, static_cast<std::uint32_t>(net.width()));
  write_u32(out, static_cast<std::uint32_t>(net.n_classes()));
  for (const AffineLayer* layer :
       {&net.backbone, &net.adapt, &net.classifier}) {
    write_matrix_rowmajor(out, layer->w);
    write_matrix_rowmajor(out, layer->b);
  }
  if (!out) throw IoError("write failed for " + path);
}

AdaptationNet load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open weight file " + path);

  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, "DBNT", 4) != 0) {
    throw DataError("bad magic in weight file " + path);
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != 1) {
    throw DataError("unsupported weight format version " +
                    std::to_string(version) + " in " + path);
  }
  const auto input_dim = static_cast<Eigen::Index>(read_u32(in, path));
  const auto width = static_cast<Eigen::Index>(read_u32(in, path));
  const auto n_classes = static_cast<Eigen::Index>(read_u32(in, path));
  if (input_dim < 1 || width < 1 || n_classes < 1) {
    throw DataError("bad dimensions in weight file " + path);
  }

  AdaptationNet net;
  net.backbone = {Matrix(input_dim, input_dim), Vector(input_dim), kBackboneLr};
  net.adapt = {Matrix(width, input_dim), Vector(width), kAdaptLr};
  net.classifier = {Matrix(n_classes, width), Vector(n_classes), kClassifierLr};
  for (AffineLayer* layer : {&net.backbone, &net.adapt, &net.classifier}) {
    read_matrix_rowmajor(in, layer->w, path);
    Matrix b(layer->b.size(), 1);
    read_matrix_rowmajor(in, b, path);
    layer->b = b.col(0);
  }
  if (!net.backbone.w.allFinite() || !net.adapt.w.allFinite() ||
      !net.classifier.w.allFinite()) {
    throw DataError("non-finite weights in " + path);
  }
  return net;
}

}  // namespace da::net
