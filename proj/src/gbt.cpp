#include "bbcal/gbt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "bbcal/error.hpp"

namespace bbcal {

namespace {

constexpr int kMaxBins = 64;

// tau-quantile with linear interpolation on a scratch copy
double quantile_interp(std::vector<double>& v, double tau) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = tau * (static_cast<double>(v.size()) - 1.0);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(i);
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

struct BinnedFeatures {
  // per feature: ascending candidate thresholds (bin upper edges)
  std::vector<std::vector<double>> edges;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> codes;  // n x p

  void build(const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    edges.assign(p, {});
    codes.resize(n, p);
    std::vector<double> col(n);
    for (int j = 0; j < p; ++j) {
      for (int i = 0; i < n; ++i) col[i] = X(i, j);
      std::sort(col.begin(), col.end());
      auto& e = edges[j];
      for (int b = 1; b < kMaxBins; ++b) {
        const double q = static_cast<double>(b) / kMaxBins;
        const double val = col[static_cast<std::size_t>(q * (n - 1))];
        if (e.empty() || val > e.back()) e.push_back(val);
      }
      for (int i = 0; i < n; ++i) {
        const double x = X(i, j);
        const auto it = std::upper_bound(e.begin(), e.end(), x);
        codes(i, j) = static_cast<std::uint8_t>(it - e.begin());
      }
    }
  }
};

}  // namespace

void GradientBoostedQuantile::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& z, double tau,
                                  const GbtHyper& hyper) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n == 0 || z.size() != n) throw Error("gbt: bad training data");
  lr_ = hyper.learning_rate;
  trees_.clear();

  {
    std::vector<double> zs(z.data(), z.data() + n);
    base_ = quantile_interp(zs, tau);
  }
  Eigen::VectorXd f = Eigen::VectorXd::Constant(n, base_);

  BinnedFeatures bins;
  bins.build(X);

  std::vector<int> index(n);
  std::vector<double> grad(n);
  std::vector<int> node_of(n);
  std::vector<double> leaf_scratch;

  for (int stage = 0; stage < hyper.stages; ++stage) {
    for (int i = 0; i < n; ++i) grad[i] = (z[i] > f[i]) ? tau : tau - 1.0;

    Tree tree;
    tree.nodes.push_back({});
    std::iota(index.begin(), index.end(), 0);

    // frontier of (node id, [lo, hi) range into index) grown breadth-first
    struct Span {
      int node, lo, hi, depth;
    };
    std::vector<Span> frontier{{0, 0, n, 0}};

    while (!frontier.empty()) {
      std::vector<Span> next;
      for (const Span& sp : frontier) {
        const int cnt = sp.hi - sp.lo;
        bool make_leaf = sp.depth >= hyper.depth || cnt < hyper.min_split;

        int best_feat = -1, best_bin = -1;
        double best_gain = 0.0;
        if (!make_leaf) {
          // split maximizing sum_L^2/n_L + sum_R^2/n_R of the gradients
          double total_sum = 0.0;
          for (int ii = sp.lo; ii < sp.hi; ++ii) total_sum += grad[index[ii]];
          const double base_score = total_sum * total_sum / cnt;

          for (int j = 0; j < p; ++j) {
            const int nb = static_cast<int>(bins.edges[j].size()) + 1;
            if (nb < 2) continue;
            double hsum[kMaxBins + 1];
            int hcnt[kMaxBins + 1];
            std::fill(hsum, hsum + nb, 0.0);
            std::fill(hcnt, hcnt + nb, 0);
            for (int ii = sp.lo; ii < sp.hi; ++ii) {
              const int row = index[ii];
              const int b = bins.codes(row, j);
              hsum[b] += grad[row];
              ++hcnt[b];
            }
            double lsum = 0.0;
            int lcnt = 0;
            for (int b = 0; b < nb - 1; ++b) {
              lsum += hsum[b];
              lcnt += hcnt[b];
              const int rcnt = cnt - lcnt;
              if (lcnt < hyper.min_leaf || rcnt < hyper.min_leaf) continue;
              const double rsum = total_sum - lsum;
              const double gain = lsum * lsum / lcnt + rsum * rsum / rcnt - base_score;
              if (gain > best_gain + 1e-12) {
                best_gain = gain;
                best_feat = j;
                best_bin = b;
              }
            }
          }
          if (best_feat < 0) make_leaf = true;
        }

        if (make_leaf) {
          tree.nodes[sp.node].feature = -1;
          for (int ii = sp.lo; ii < sp.hi; ++ii) node_of[index[ii]] = sp.node;
          continue;
        }

        // partition the index range by the chosen bin boundary
        const double thr = bins.edges[best_feat][best_bin];
        int mid = sp.lo;
        for (int ii = sp.lo; ii < sp.hi; ++ii) {
          if (bins.codes(index[ii], best_feat) <= best_bin) {
            std::swap(index[ii], index[mid]);
            ++mid;
          }
        }
        Node& nd = tree.nodes[sp.node];
        nd.feature = best_feat;
        nd.threshold = thr;
        nd.left = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        nd.right = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        next.push_back({tree.nodes[sp.node].left, sp.lo, mid, sp.depth + 1});
        next.push_back({tree.nodes[sp.node].right, mid, sp.hi, sp.depth + 1});
      }
      frontier = std::move(next);
    }

    // leaf values: tau-quantile of residuals in each leaf
    std::vector<std::vector<int>> members(tree.nodes.size());
    for (int i = 0; i < n; ++i) members[node_of[i]].push_back(i);
    for (std::size_t nid = 0; nid < tree.nodes.size(); ++nid) {
      if (tree.nodes[nid].feature >= 0 || members[nid].empty()) continue;
      leaf_scratch.clear();
      for (int i : members[nid]) leaf_scratch.push_back(z[i] - f[i]);
      tree.nodes[nid].value = quantile_interp(leaf_scratch, tau);
    }
    for (int i = 0; i < n; ++i) f[i] += lr_ * tree.nodes[node_of[i]].value;

    trees_.push_back(std::move(tree));
  }
  fitted_ = true;
}

double GradientBoostedQuantile::predict(const Eigen::VectorXd& x) const {
  double out = base_;
  for (const Tree& tree : trees_) {
    int nid = 0;
    while (tree.nodes[nid].feature >= 0) {
      const Node& nd = tree.nodes[nid];
      nid = (x[nd.feature] <= nd.threshold) ? nd.left : nd.right;
    }
    out += lr_ * tree.nodes[nid].value;
  }
  return out;
}

Eigen::VectorXd GradientBoostedQuantile::predict_many(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (int i = 0; i < X.rows(); ++i) out[i] = predict(X.row(i).transpose());
  return out;
}

long GradientBoostedQuantile::total_nodes() const {
  long total = 0;
  for (const Tree& t : trees_) total += static_cast<long>(t.nodes.size());
  return total;
}

std::vector<GbtHyper> default_hyper_grid() {
  std::vector<GbtHyper> grid;
  for (int depth : {2, 3, 4}) {
    for (double lr : {0.05, 0.1}) {
      for (int stages : {100, 300}) {
        for (int min_leaf : {10, 30}) {
          for (int min_split : {20, 60}) {
            grid.push_back({depth, lr, stages, min_leaf, min_split});
          }
        }
      }
    }
  }
  return grid;
}

GbtHyper select_hyper_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& z, double tau,
                         const std::vector<GbtHyper>& grid, int folds, Rng& rng,
                         std::vector<double>* cv_losses) {
  const int n = static_cast<int>(X.rows());
  if (grid.empty()) throw Error("gbt: empty hyperparameter grid");
  if (folds < 2 || n < 2 * folds) throw Error("gbt: not enough data for cross-validation");

  // deterministic shuffled fold assignment
  std::vector<int> fold_of(n);
  for (int i = 0; i < n; ++i) fold_of[i] = i % folds;
  for (int i = n - 1; i > 0; --i) {
    std::swap(fold_of[i], fold_of[static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
  }

  const auto pinball = [tau](double zz, double q) {
    return (zz < q) ? (1.0 - tau) * (q - zz) : tau * (zz - q);
  };

  // per-fold training views, shared by every grid setting
  std::vector<Eigen::MatrixXd> Xtr(folds);
  std::vector<Eigen::VectorXd> ztr(folds);
  std::vector<std::vector<int>> test_idx(folds);
  for (int fold = 0; fold < folds; ++fold) {
    std::vector<int> train;
    for (int i = 0; i < n; ++i) (fold_of[i] == fold ? test_idx[fold] : train).push_back(i);
    Xtr[fold].resize(train.size(), X.cols());
    ztr[fold].resize(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      Xtr[fold].row(i) = X.row(train[i]);
      ztr[fold][i] = z[train[i]];
    }
  }

  std::vector<double> losses(grid.size(), 0.0);
  std::atomic<std::size_t> next{0};
  const auto eval_config = [&]() {
    for (;;) {
      const std::size_t gi = next.fetch_add(1);
      if (gi >= grid.size()) return;
      double loss_sum = 0.0;
      long loss_count = 0;
      for (int fold = 0; fold < folds; ++fold) {
        GradientBoostedQuantile model;
        model.fit(Xtr[fold], ztr[fold], tau, grid[gi]);
        for (int i : test_idx[fold]) {
          loss_sum += pinball(z[i], model.predict(X.row(i).transpose()));
          ++loss_count;
        }
      }
      losses[gi] = loss_sum / std::max(1L, loss_count);
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < std::min<unsigned>(hw, grid.size()); ++w) pool.emplace_back(eval_config);
  eval_config();
  for (auto& th : pool) th.join();

  double best_loss = std::numeric_limits<double>::infinity();
  long best_size = std::numeric_limits<long>::max();
  GbtHyper best = grid.front();
  if (cv_losses) *cv_losses = losses;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const GbtHyper& hy = grid[gi];
    const long size_proxy = static_cast<long>(hy.stages) * (1L << hy.depth);
    if (losses[gi] < best_loss - 1e-12 ||
        (std::abs(losses[gi] - best_loss) <= 1e-12 && size_proxy < best_size)) {
      best_loss = losses[gi];
      best_size = size_proxy;
      best = hy;
    }
  }
  return best;
}

}  // namespace bbcal
