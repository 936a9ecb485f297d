#pragma once

#include <map>

#include <Eigen/Core>

#include "llrl/common.hpp"
#include "llrl/env.hpp"
#include "llrl/policy.hpp"

namespace llrl {

struct TaskRecord {
  Task task;                   // discovered tuple; avar is not observable
  Eigen::VectorXd s;           // sparse code, length h
  Eigen::VectorXd alpha_vec;   // policy parameters after the one-step update
  Eigen::MatrixXd gamma_mat;   // d x d curvature estimate
  int device_id = -1;
  int visits = 0;
};

// Shared latent basis L (d x h) plus the running accumulators of the
// regularized least-squares problem it solves:
//   A = sum_j (s_j s_j^T) (x) Gamma_j          ((dh) x (dh))
//   b = sum_j vec(Gamma_j alpha_j s_j^T)       (dh, column-major vec)
// so that vec(L) = ((1/M) A + eta2 I)^-1 (1/M) b.
struct KnowledgeBase {
  int d = kFeatureDim;
  int h = 4;
  double eta1 = 1.0;
  double eta2 = 0.1;
  Eigen::MatrixXd L;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  int M = 0;
  std::map<int, TaskRecord> registry;

  static KnowledgeBase init(int d, int h, double eta1, double eta2);
};

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Minimize ||alpha_vec - L s||^2_Gamma + eta1 ||s||_1 by cyclic coordinate
// descent with soft thresholding.
Eigen::VectorXd lasso_solve(const Eigen::MatrixXd& L, const Eigen::VectorXd& alpha_vec,
                            const Eigen::MatrixXd& gamma_mat, double eta1);

void add_task_contribution(KnowledgeBase& kb, const Eigen::VectorXd& s,
                           const Eigen::MatrixXd& gamma_mat,
                           const Eigen::VectorXd& alpha_vec);

// Exact inverse of add_task_contribution with the stored old quantities.
void remove_task_contribution(KnowledgeBase& kb, const Eigen::VectorXd& s,
                              const Eigen::MatrixXd& gamma_mat,
                              const Eigen::VectorXd& alpha_vec);

// Solve the SPD system above and reshape column-major to d x h.
Eigen::MatrixXd update_L(const KnowledgeBase& kb);

// All-zero columns are redrawn from N(0, 0.01^2); others are untouched.
Eigen::MatrixXd reinit_zero_columns(Eigen::MatrixXd L, Rng& rng);

// theta = L s
GaussianPolicy compose_policy(const Eigen::MatrixXd& L, const Eigen::VectorXd& s,
                              double sigma);

}  // namespace llrl
