#pragma once

#include <Eigen/Dense>

namespace opmdp {

/// Euclidean projection onto the probability simplex (sort-and-threshold).
Eigen::VectorXd project_to_simplex(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Projection onto the face of the simplex supported on `mask` (entries outside
/// the mask are zero in the result). `mask` must have at least one true entry.
Eigen::VectorXd project_to_simplex(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::Array<bool, Eigen::Dynamic, 1>& mask);

/// KL(p || q) = sum_a p_a log(p_a / q_a); infinite if p is not absolutely continuous w.r.t. q.
double kl_divergence(const Eigen::Ref<const Eigen::VectorXd>& p,
                     const Eigen::Ref<const Eigen::VectorXd>& q);

}  // namespace opmdp
