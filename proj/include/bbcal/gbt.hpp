#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bbcal/rng.hpp"

namespace bbcal {

struct GbtHyper {
  int depth = 3;
  double learning_rate = 0.1;
  int stages = 100;
  int min_leaf = 10;
  int min_split = 20;
};

// Gradient-boosted regression trees minimizing the pinball loss at level tau
// (predicting the tau-quantile of z | x). Trees are grown on histogrammed
// features with MSE splits on the pinball gradient; leaf values are the
// tau-quantile of the residuals in the leaf.
class GradientBoostedQuantile {
 public:
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& z, double tau, const GbtHyper& hyper);

  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict_many(const Eigen::MatrixXd& X) const;

  bool fitted() const { return fitted_; }
  long total_nodes() const;

 private:
  struct Node {
    int feature = -1;  // -1 => leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  double base_ = 0.0;
  double lr_ = 0.1;
  std::vector<Tree> trees_;
  bool fitted_ = false;
};

std::vector<GbtHyper> default_hyper_grid();

// Mean k-fold cross-validated pinball loss per hyper setting; returns the
// winner (ties broken toward the smaller model).
GbtHyper select_hyper_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& z, double tau,
                         const std::vector<GbtHyper>& grid, int folds, Rng& rng,
                         std::vector<double>* cv_losses = nullptr);

}  // namespace bbcal
