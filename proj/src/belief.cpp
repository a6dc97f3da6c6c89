// Copyright 2026 The prosthestim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prosthestim/belief.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "prosthestim/error.hpp"

namespace prosthestim::filters {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& p) { return 0.5 * (p + p.transpose()); }

Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& p) {
  if (!p.allFinite())
    throw CovarianceNotPsd("covariance contains non-finite entries", p);
  const Eigen::MatrixXd sym = symmetrized(p);
  const auto n = sym.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

  // A positive definite matrix is factored as is; jitter only enters as repair.
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  llt.compute(sym + kCholeskyJitter * eye);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double scale = std::max(1.0, sym.diagonal().cwiseAbs().maxCoeff());
  llt.compute(sym + (kCholeskyJitter + 1e-9 * scale) * eye);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  throw CovarianceNotPsd(
      fmt::format("covariance is not positive semidefinite (min diagonal {})",
                  sym.diagonal().minCoeff()),
      p);
}

Eigen::LLT<Eigen::MatrixXd> factor_innovation(const Eigen::MatrixXd& s) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (llt.info() != Eigen::Success || !(cond < 1e15))
    throw SingularInnovation(
        fmt::format("innovation covariance is singular (condition number {:.3g})", cond), cond);
  return llt;
}

void check_health(const GaussianBelief& belief) {
  if (!belief.mean.allFinite())
    throw InvalidArgument(fmt::format("belief mean is not finite: [{}, {}, {}]", belief.mean(0),
                                      belief.mean(1), belief.mean(2)));
  const double asym = (belief.cov - belief.cov.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-10))
    throw CovarianceNotPsd(fmt::format("covariance asymmetry {} exceeds 1e-10", asym),
                           belief.cov);
  robust_cholesky(belief.cov);
}

}  // namespace prosthestim::filters
