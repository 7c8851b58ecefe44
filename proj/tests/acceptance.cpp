// Acceptance suite: one self-contained check per criterion, each printed as a
// single PASS/FAIL line with its runtime. Exits nonzero if any criterion
// fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "da/adaptnet.hpp"
#include "da/baselines.hpp"
#include "da/data.hpp"
#include "da/error.hpp"
#include "da/harness.hpp"
#include "da/mmd.hpp"
#include "da/numerics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using da::LabeledDataset;
using da::Matrix;
using da::Vector;
namespace bl = da::baselines;

namespace {

struct CheckFailure {
  std::string what;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure{what};
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---- 1. MMD oracle equivalence ------------------------------------------

void criterion_mmd_oracle() {
  std::mt19937_64 gen(101);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rows_a = Eigen::Index(5 + gen() % 16);  // 5..20
    const auto rows_b = Eigen::Index(5 + gen() % 16);
    const auto dim = Eigen::Index(2 + gen() % 7);  // 2..8
    Matrix a = test_util::random_matrix(rows_a, dim, gen());
    Matrix b = test_util::random_matrix(rows_b, dim, gen());
    const double gamma = da::mmd::rbf_median_gamma(a, b);

    for (bool unbiased : {false, true}) {
      const double lin = da::mmd::mmd2_kernel(
          a, b, {da::mmd::KernelKind::Linear, 1.0}, unbiased);
      const double lin_oracle =
          oracles::mmd2_bruteforce(a, b, oracles::Kernel::Linear, 1.0, unbiased);
      require(std::abs(lin - lin_oracle) < 1e-10,
              "linear kernel off by " + fmt(std::abs(lin - lin_oracle)) +
                  " at trial " + std::to_string(trial));

      const double rbf = da::mmd::mmd2_kernel(
          a, b, {da::mmd::KernelKind::Rbf, gamma}, unbiased);
      const double rbf_oracle =
          oracles::mmd2_bruteforce(a, b, oracles::Kernel::Rbf, gamma, unbiased);
      require(std::abs(rbf - rbf_oracle) < 1e-10,
              "rbf kernel off by " + fmt(std::abs(rbf - rbf_oracle)) +
                  " at trial " + std::to_string(trial));
    }
  }
}

// ---- 2. Gradient fidelity ------------------------------------------------

void criterion_gradient_fidelity() {
  const double worst = da::net::grad_check_sweep(424242, 50, 1e-5);
  require(worst < 1e-4, "max relative error " + fmt(worst) + " >= 1e-4");
}

// ---- 3. Domain-confusion effect -----------------------------------------

void criterion_domain_confusion() {
  double mmd_on = 0.0, mmd_off = 0.0, acc_on = 0.0, acc_off = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    da::data::SynthSpec spec;
    spec.n_classes = 5;
    spec.dim = 16;
    spec.n_per_class_source = 40;
    spec.n_per_class_target = 40;
    spec.noise_sd = 0.8;
    spec.seed = 1000 + seed;
    spec.shift.rotation_angle = 30.0 * std::numbers::pi / 180.0;
    spec.shift.mean_offset = Vector::Zero(16);
    spec.shift.mean_offset(0) = 2.0;  // offset norm 2
    auto [source, target] = da::data::synth_domains(spec);

    for (double lambda : {0.0, 0.25}) {
      auto net = da::net::init_net(16, 64, 5, seed);
      da::net::JointLossConfig cfg;
      cfg.lambda = lambda;
      cfg.batch_size = 64;
      da::net::OptimizerConfig opt;  // 1000 iterations, lr 1e-3, momentum 0.9
      opt.eval_interval = 100;
      auto report =
          da::net::train(net, source, nullptr, target.features, cfg, opt, seed);
      const double final_mmd = report.records.back().mmd;
      const double accuracy = da::net::evaluate(net, target);
      if (lambda == 0.0) {
        mmd_off += final_mmd / 5.0;
        acc_off += accuracy / 5.0;
      } else {
        mmd_on += final_mmd / 5.0;
        acc_on += accuracy / 5.0;
      }
    }
  }

  require(mmd_on <= 0.5 * mmd_off,
          "final MMD ratio " + fmt(mmd_on / mmd_off) + " > 0.5 (on=" +
              fmt(mmd_on) + ", off=" + fmt(mmd_off) + ")");
  require(acc_on >= acc_off - 0.02,
          "regularized accuracy " + fmt(acc_on) + " < unregularized " +
              fmt(acc_off) + " - 0.02");
}

// ---- 4. Width selection consistency --------------------------------------

void criterion_width_selection() {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    da::data::SynthSpec spec;
    spec.n_classes = 4;
    spec.dim = 8;
    spec.n_per_class_source = 25;
    spec.n_per_class_target = 25;
    spec.noise_sd = 0.6;
    spec.seed = 300 + seed;
    spec.shift.rotation_angle = 0.4;
    spec.shift.mean_offset = Vector::Zero(8);
    spec.shift.mean_offset(0) = 1.5;
    auto [source, target] = da::data::synth_domains(spec);

    std::vector<da::mmd::WidthCandidate> candidates;
    for (int width : {4, 8, 16, 32}) {
      auto net = da::net::init_net(8, width, 4, seed * 97 + width);
      da::net::JointLossConfig cfg;
      cfg.batch_size = 32;
      da::net::OptimizerConfig opt;
      opt.iterations = 250;
      opt.eval_interval = 50;
      da::net::train(net, source, nullptr, target.features, cfg, opt,
                     seed * 31 + width);
      candidates.push_back(
          {width, da::net::forward(net, source.features).adapt_activations,
           da::net::forward(net, target.features).adapt_activations});
    }

    // independent recomputation with the scalar-loop oracle
    int best_width = candidates.front().width;
    double best = oracles::mmd_linear_bruteforce(candidates[0].source_repr,
                                                 candidates[0].target_repr);
    for (const auto& c : candidates) {
      const double v =
          oracles::mmd_linear_bruteforce(c.source_repr, c.target_repr);
      if (v < best || (v == best && c.width < best_width)) {
        best = v;
        best_width = c.width;
      }
    }

    const int selected = da::mmd::select_width(candidates);
    require(selected == best_width,
            "seed " + std::to_string(seed) + ": selected " +
                std::to_string(selected) + ", oracle argmin " +
                std::to_string(best_width));
  }
}

// ---- 5. GFK closed form ---------------------------------------------------

void criterion_gfk_closed_form() {
  std::mt19937_64 gen(505);
  for (int pair = 0; pair < 20; ++pair) {
    const auto d = Eigen::Index(4 + gen() % 5);  // 4..8
    const auto k = Eigen::Index(1 + gen() % 3);  // 1..3
    auto u = test_util::random_subspace(d, k, gen());
    auto v = test_util::random_subspace(d, k, gen());

    bl::GfkFactors f = bl::gfk_factors(u, v);
    const int steps = 100000;
    Matrix quad = Matrix::Zero(d, d);
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      Matrix phi(d, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        const double th = f.theta[static_cast<std::size_t>(i)];
        phi.col(i) = f.up1.col(i) * std::cos(t * th) -
                     f.rp2.col(i) * std::sin(t * th);
      }
      quad += ((s == 0 || s == steps) ? 0.5 : 1.0) * phi * phi.transpose();
    }
    quad /= steps;

    const double gap =
        (bl::gfk_compute(u, v).g - quad).cwiseAbs().maxCoeff();
    require(gap < 1e-6,
            "pair " + std::to_string(pair) + ": closed form vs quadrature " +
                fmt(gap));
  }

  auto u = test_util::random_subspace(6, 2, 7777);
  const double self_gap = (bl::gfk_compute(u, u).g -
                           u.basis * u.basis.transpose())
                              .cwiseAbs()
                              .maxCoeff();
  require(self_gap < 1e-8, "equal-subspace case off by " + fmt(self_gap));
}

// ---- 6. SA optimality -----------------------------------------------------

void criterion_sa_optimality() {
  std::mt19937_64 gen(606);
  for (int pair = 0; pair < 20; ++pair) {
    const auto d = Eigen::Index(5 + gen() % 4);
    const auto k = Eigen::Index(2 + gen() % 2);
    auto u = test_util::random_subspace(d, k, gen());
    auto v = test_util::random_subspace(d, k, gen());

    Matrix m_star = bl::sa_align(u, v);
    const double at_star = (u.basis * m_star - v.basis).squaredNorm();
    for (int trial = 0; trial < 100; ++trial) {
      Matrix p = test_util::random_matrix(k, k, gen());
      p *= 0.1 / p.norm();
      const double perturbed = (u.basis * (m_star + p) - v.basis).squaredNorm();
      require(at_star <= perturbed + 1e-12,
              "pair " + std::to_string(pair) + ": perturbation beat M* by " +
                  fmt(at_star - perturbed));
    }

    const double first_order =
        (u.basis.transpose() * (u.basis * m_star - v.basis))
            .cwiseAbs()
            .maxCoeff();
    require(first_order < 1e-10,
            "first-order residual " + fmt(first_order) + " at pair " +
                std::to_string(pair));
  }
}

// ---- 7. PMT limits --------------------------------------------------------

LabeledDataset acceptance_blobs(int per_class, std::uint64_t seed,
                                double rotation) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  LabeledDataset ds;
  ds.features = Matrix::Zero(2 * per_class, 2);
  ds.n_classes = 2;
  const double c = std::cos(rotation), s = std::sin(rotation);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i < per_class ? 0 : 1;
    const double x0 = (label == 0 ? -2.0 : 2.0) + noise(gen);
    const double x1 = noise(gen);
    ds.features(i, 0) = c * x0 - s * x1;
    ds.features(i, 1) = s * x0 + c * x1;
    ds.labels.push_back(label);
  }
  return ds;
}

void criterion_pmt_limits() {
  LabeledDataset target = acceptance_blobs(20, 701, 0.0);
  LabeledDataset source = acceptance_blobs(20, 702, 0.15);

  // gamma = 0 reduces to the plain svm objective (c_reg = 1 scaling)
  auto src_clf = bl::svm_train(source, 1.0, 3000, 1);
  auto svm_clf = bl::svm_train(target, 1.0, 3000, 2);
  auto pmt0 = bl::pmt_train(src_clf, target, 0.0, 6000, 0);
  const double gap = std::abs(bl::svm_objective(pmt0, target, 1.0) -
                              bl::svm_objective(svm_clf, target, 1.0));
  require(gap < 1e-3, "gamma=0 objective gap " + fmt(gap));

  // gamma = 1e6 pins the angle
  auto src_strong = bl::svm_train(source, 0.05, 500, 1);
  auto pmt_inf = bl::pmt_train(src_strong, target, 1e6, 2000, 0);
  for (int c = 0; c < 2; ++c) {
    Vector w_src = src_strong.weights.row(c).transpose();
    Vector w = pmt_inf.weights.row(c).transpose();
    const double cos_a = w_src.dot(w) / (w_src.norm() * w.norm());
    const double sin2 = 1.0 - cos_a * cos_a;
    require(sin2 < 1e-3,
            "class " + std::to_string(c) + ": sin^2(angle) = " + fmt(sin2));
  }

  // orthogonal-component identity vs the trigonometric form
  std::mt19937_64 gen(707);
  for (int trial = 0; trial < 100; ++trial) {
    Vector theta = test_util::random_matrix(6, 1, gen()).col(0);
    Vector tilde = test_util::random_matrix(6, 1, gen()).col(0);
    const double cos_a = theta.dot(tilde) / (theta.norm() * tilde.norm());
    const double trig =
        tilde.squaredNorm() *
        std::pow(std::sin(std::acos(std::clamp(cos_a, -1.0, 1.0))), 2);
    const double ortho = tilde.squaredNorm() -
                         std::pow(theta.dot(tilde), 2) / theta.squaredNorm();
    require(std::abs(trig - ortho) < 1e-12,
            "identity gap " + fmt(std::abs(trig - ortho)) + " at trial " +
                std::to_string(trial));
  }
}

// ---- 8. MMDT monotonicity -------------------------------------------------

void criterion_mmdt_monotonicity() {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    da::data::SynthSpec spec;
    spec.n_classes = 3;
    spec.dim = 4;
    spec.n_per_class_source = 15;
    spec.n_per_class_target = 10;
    spec.noise_sd = 0.5;
    spec.seed = 800 + seed;
    spec.shift.rotation_angle = 0.4;
    auto [source, target] = da::data::synth_domains(spec);

    bl::MmdtConfig cfg;
    auto res = bl::mmdt_train(source, target, cfg, 10, seed);
    require(res.losses.size() == 10, "expected 10 recorded losses");
    for (std::size_t i = 1; i < res.losses.size(); ++i) {
      require(res.losses[i] <= res.losses[i - 1] + 1e-6,
              "seed " + std::to_string(seed) + ": loss rose by " +
                  fmt(res.losses[i] - res.losses[i - 1]) + " at outer " +
                  std::to_string(i));
    }

    bl::MmdtConfig no_target = cfg;
    no_target.c_target = 0.0;
    auto frozen = bl::mmdt_train(source, target, no_target, 5, seed);
    require(frozen.transform == Matrix::Identity(4, 4),
            "seed " + std::to_string(seed) + ": A left the identity");
  }
}

// ---- 9. Daume identities --------------------------------------------------

void criterion_daume() {
  // exact block structure and inner-product identities
  std::mt19937_64 gen(909);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix x = test_util::random_matrix(1, 6, gen());
    Matrix z = test_util::random_matrix(1, 6, gen());

    Matrix xs = bl::daume_augment(x, true);
    Matrix xt = bl::daume_augment(x, false);
    require(xs.cols() == 18 && xt.cols() == 18, "augmented width != 3d");
    for (Eigen::Index j = 0; j < 6; ++j) {
      require(xs(0, j) == x(0, j) && xs(0, 6 + j) == x(0, j) &&
                  xs(0, 12 + j) == 0.0,
              "source block layout broken at column " + std::to_string(j));
      require(xt(0, j) == x(0, j) && xt(0, 6 + j) == 0.0 &&
                  xt(0, 12 + j) == x(0, j),
              "target block layout broken at column " + std::to_string(j));
    }

    // block-wise dots: exact by construction of the blocks
    auto block_dot = [](const Matrix& a, const Matrix& b) {
      double total = 0.0;
      for (int blk = 0; blk < 3; ++blk) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < 6; ++j) {
          s += a(0, blk * 6 + j) * b(0, blk * 6 + j);
        }
        total += s;
      }
      return total;
    };
    double dot = 0.0;
    for (Eigen::Index j = 0; j < 6; ++j) dot += x(0, j) * z(0, j);
    require(block_dot(bl::daume_augment(x, true), bl::daume_augment(z, true)) ==
                2.0 * dot,
            "same-domain inner product != 2<x,z>");
    require(block_dot(bl::daume_augment(x, true),
                      bl::daume_augment(z, false)) == dot,
            "cross-domain inner product != <x,z>");
  }

  // supervised synthetic task: daume must not trail the source-only svm
  const std::string config_text =
      "task = daume-acceptance\n"
      "seed = 7\n"
      "synth.n_classes = 5\n"
      "synth.dim = 16\n"
      "synth.n_source_per_class = 30\n"
      "synth.n_target_per_class = 20\n"
      "synth.noise_sd = 0.9\n"
      "synth.rotation_deg = 30\n"
      "synth.offset = 2\n"
      "split.n_source_per_class = 20\n"
      "split.n_target_labeled_per_class = 3\n"
      "split.n_splits = 5\n";
  auto cfg = da::harness::parse_config_text(config_text, "daume");
  auto daume = da::harness::run_experiment(cfg, "daume");
  auto plain = da::harness::run_experiment(cfg, "svm_source_only");
  require(daume.mean_accuracy >= plain.mean_accuracy,
          "daume " + fmt(daume.mean_accuracy) + " < source-only " +
              fmt(plain.mean_accuracy));
}

// ---- 10. Protocol fidelity ------------------------------------------------

void criterion_protocol() {
  for (int n_source : {20, 8}) {
    da::data::SynthSpec spec;
    spec.n_classes = 31;
    spec.dim = 8;
    spec.n_per_class_source = n_source + 5;
    spec.n_per_class_target = 10;
    spec.noise_sd = 0.5;
    spec.seed = 1010;
    auto [source, target] = da::data::synth_domains(spec);

    da::data::SplitSpec split_spec;
    split_spec.n_source_per_class = n_source;
    split_spec.n_target_labeled_per_class = 3;
    split_spec.n_splits = 5;
    split_spec.seed = 2020;

    auto splits = da::data::make_splits(source, target, split_spec);
    auto again = da::data::make_splits(source, target, split_spec);
    require(splits.size() == 5, "expected 5 splits");

    for (std::size_t s = 0; s < splits.size(); ++s) {
      std::vector<int> src_count(31, 0), lab_count(31, 0);
      for (int y : splits[s].source_train.labels) ++src_count[y];
      for (int y : splits[s].target_train_labeled.labels) ++lab_count[y];
      for (int c = 0; c < 31; ++c) {
        require(src_count[c] == n_source,
                "split " + std::to_string(s) + " class " + std::to_string(c) +
                    ": " + std::to_string(src_count[c]) + " source examples");
        require(lab_count[c] == 3, "labeled target count off");
      }

      std::set<std::string> labeled(splits[s].target_train_labeled.ids.begin(),
                                    splits[s].target_train_labeled.ids.end());
      for (const auto& id : splits[s].target_test.ids) {
        require(labeled.count(id) == 0, "id " + id + " in both target sets");
      }

      require(da::data::to_csv(splits[s].source_train) ==
                      da::data::to_csv(again[s].source_train) &&
                  da::data::to_csv(splits[s].target_train_labeled) ==
                      da::data::to_csv(again[s].target_train_labeled) &&
                  da::data::to_csv(splits[s].target_test) ==
                      da::data::to_csv(again[s].target_test),
              "repeat run differed at split " + std::to_string(s));
    }
  }
}

// ---- 11. End-to-end determinism -------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_bench_determinism() {
  test_util::TempDir dir_a("acc_bench_a");
  test_util::TempDir dir_b("acc_bench_b");

  auto cfg = da::harness::parse_config_text(
      "task = acceptance-bench\n"
      "seed = 21\n"
      "method = confusion_finetune\n"
      "synth.n_classes = 4\n"
      "synth.dim = 8\n"
      "synth.n_source_per_class = 30\n"
      "synth.n_target_per_class = 20\n"
      "synth.noise_sd = 0.6\n"
      "synth.rotation_deg = 25\n"
      "synth.offset = 1.5\n"
      "split.n_source_per_class = 20\n"
      "split.n_target_labeled_per_class = 3\n"
      "split.n_splits = 5\n"
      "net.width = 16\n"
      "net.iterations = 400\n"
      "net.batch_size = 32\n",
      "bench");

  da::harness::run_experiment(cfg, "", dir_a.str());
  da::harness::run_experiment(cfg, "", dir_b.str());

  require(read_file(dir_a.file("report.kv")) ==
              read_file(dir_b.file("report.kv")),
          "report.kv differs between runs");

  auto strip_footer = [](const std::string& text) {
    const auto pos = text.find("# --- timing ---");
    require(pos != std::string::npos, "timing footer missing");
    return text.substr(0, pos);
  };
  require(strip_footer(read_file(dir_a.file("report.txt"))) ==
              strip_footer(read_file(dir_b.file("report.txt"))),
          "report.txt differs above the timing footer");

  for (int s = 0; s < 5; ++s) {
    const std::string name = "curve_split" + std::to_string(s) + ".csv";
    require(read_file(dir_a.file(name)) == read_file(dir_b.file(name)),
            name + " differs between runs");
  }
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<void()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "MMD oracle equivalence", 5.0, criterion_mmd_oracle},
      {2, "gradient fidelity", 30.0, criterion_gradient_fidelity},
      {3, "domain-confusion effect", 120.0, criterion_domain_confusion},
      {4, "width selection consistency", 120.0, criterion_width_selection},
      {5, "GFK closed form", 30.0, criterion_gfk_closed_form},
      {6, "SA optimality", 10.0, criterion_sa_optimality},
      {7, "PMT limits", 30.0, criterion_pmt_limits},
      {8, "MMDT monotonicity", 60.0, criterion_mmdt_monotonicity},
      {9, "Daume identities", 60.0, criterion_daume},
      {10, "protocol fidelity", 5.0, criterion_protocol},
      {11, "end-to-end determinism", 180.0, criterion_bench_determinism},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string failure;
    try {
      criterion.run();
    } catch (const CheckFailure& f) {
      failure = f.what;
    } catch (const std::exception& e) {
      failure = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (failure.empty() && elapsed >= criterion.budget_seconds) {
      failure = "runtime " + fmt(elapsed) + "s exceeded the " +
                fmt(criterion.budget_seconds) + "s budget";
    }

    if (failure.empty()) {
      std::printf("PASS criterion %2d (%s) [%.2fs]\n", criterion.id,
                  criterion.name, elapsed);
    } else {
      ++failures;
      std::printf("FAIL criterion %2d (%s) [%.2fs]: %s\n", criterion.id,
                  criterion.name, elapsed, failure.c_str());
    }
    std::fflush(stdout);
  }

  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
