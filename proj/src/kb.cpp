#include "llrl/kb.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace llrl {

KnowledgeBase KnowledgeBase::init(int d, int h, double eta1, double eta2) {
  if (d < 1 || h < 1) throw std::invalid_argument("KnowledgeBase: d, h must be >= 1");
  if (!(eta1 > 0.0) || !(eta2 > 0.0))
    throw std::invalid_argument("KnowledgeBase: eta1, eta2 must be > 0");
  KnowledgeBase kb;
  kb.d = d;
  kb.h = h;
  kb.eta1 = eta1;
  kb.eta2 = eta2;
  kb.L = Eigen::MatrixXd::Zero(d, h);
  kb.A = Eigen::MatrixXd::Zero(d * h, d * h);
  kb.b = Eigen::VectorXd::Zero(d * h);
  return kb;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::VectorXd lasso_solve(const Eigen::MatrixXd& L, const Eigen::VectorXd& alpha_vec,
                            const Eigen::MatrixXd& gamma_mat, double eta1) {
  const Eigen::Index d = L.rows();
  const Eigen::Index h = L.cols();
  if (alpha_vec.size() != d || gamma_mat.rows() != d || gamma_mat.cols() != d)
    throw std::invalid_argument("lasso_solve: dimension mismatch");
  if (eta1 < 0.0) throw std::invalid_argument("lasso_solve: eta1 must be >= 0");

  const Eigen::MatrixXd H = L.transpose() * gamma_mat * L;
  const Eigen::VectorXd c = L.transpose() * gamma_mat * alpha_vec;

  constexpr int kMaxSweeps = 10000;
  constexpr double kTol = 1e-10;

  Eigen::VectorXd s = Eigen::VectorXd::Zero(h);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index k = 0; k < h; ++k) {
      const double hkk = H(k, k);
      double next = 0.0;
      if (hkk > 0.0) {
        // Partial derivative of the quadratic at s_k = 0, halved; the
        // coordinate minimizer is a soft threshold at eta1/2.
        const double z = c(k) - (H.row(k).dot(s) - hkk * s(k));
        const double mag = std::abs(z) - 0.5 * eta1;
        if (mag > 0.0) next = std::copysign(mag, z) / hkk;
      }
      max_delta = std::max(max_delta, std::abs(next - s(k)));
      s(k) = next;
    }
    if (max_delta < kTol) break;
  }
  return s;
}

namespace {

void check_contribution_dims(const KnowledgeBase& kb, const Eigen::VectorXd& s,
                             const Eigen::MatrixXd& gamma_mat,
                             const Eigen::VectorXd& alpha_vec) {
  if (s.size() != kb.h || gamma_mat.rows() != kb.d || gamma_mat.cols() != kb.d ||
      alpha_vec.size() != kb.d)
    throw std::invalid_argument("task contribution: dimension mismatch");
}

}  // namespace

void add_task_contribution(KnowledgeBase& kb, const Eigen::VectorXd& s,
                           const Eigen::MatrixXd& gamma_mat,
                           const Eigen::VectorXd& alpha_vec) {
  check_contribution_dims(kb, s, gamma_mat, alpha_vec);
  kb.A += kron(s * s.transpose(), gamma_mat);
  const Eigen::MatrixXd outer = gamma_mat * alpha_vec * s.transpose();  // d x h
  kb.b += Eigen::Map<const Eigen::VectorXd>(outer.data(), outer.size());
}

void remove_task_contribution(KnowledgeBase& kb, const Eigen::VectorXd& s,
                              const Eigen::MatrixXd& gamma_mat,
                              const Eigen::VectorXd& alpha_vec) {
  check_contribution_dims(kb, s, gamma_mat, alpha_vec);
  kb.A -= kron(s * s.transpose(), gamma_mat);
  const Eigen::MatrixXd outer = gamma_mat * alpha_vec * s.transpose();
  kb.b -= Eigen::Map<const Eigen::VectorXd>(outer.data(), outer.size());
}

Eigen::MatrixXd update_L(const KnowledgeBase& kb) {
  if (kb.M < 1) throw std::invalid_argument("update_L: no tasks observed");
  const double inv_m = 1.0 / static_cast<double>(kb.M);
  Eigen::MatrixXd lhs = inv_m * kb.A;
  lhs.diagonal().array() += kb.eta2;
  const Eigen::LLT<Eigen::MatrixXd> llt(lhs);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("update_L: factorization failed");
  const Eigen::VectorXd v = llt.solve(inv_m * kb.b);
  if (!v.allFinite()) throw std::runtime_error("update_L: non-finite solution");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), kb.d, kb.h);
}

Eigen::MatrixXd reinit_zero_columns(Eigen::MatrixXd L, Rng& rng) {
  std::normal_distribution<double> entry(0.0, 0.01);
  for (Eigen::Index j = 0; j < L.cols(); ++j) {
    if ((L.col(j).array() == 0.0).all()) {
      for (Eigen::Index i = 0; i < L.rows(); ++i) L(i, j) = entry(rng);
    }
  }
  return L;
}

GaussianPolicy compose_policy(const Eigen::MatrixXd& L, const Eigen::VectorXd& s,
                              double sigma) {
  if (L.rows() != kFeatureDim || L.cols() != s.size())
    throw std::invalid_argument("compose_policy: dimension mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("compose_policy: sigma must be > 0");
  GaussianPolicy policy;
  policy.theta = L * s;
  policy.sigma = sigma;
  return policy;
}

}  // namespace llrl
