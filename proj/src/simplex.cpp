#include "opmdp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "opmdp/errors.hpp"

namespace opmdp {

Eigen::VectorXd project_to_simplex(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return project_to_simplex(x, Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(x.size(), true));
}

Eigen::VectorXd project_to_simplex(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::Array<bool, Eigen::Dynamic, 1>& mask) {
  require(x.size() > 0 && mask.size() == x.size(), "projection input and mask sizes differ");
  require(x.allFinite(), "projection input must be finite");
  std::vector<double> sorted;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (mask(i)) sorted.push_back(x(i));
  }
  require(!sorted.empty(), "projection mask selects no coordinates");
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / double(k + 1);
    if (sorted[k] - candidate > 0.0) threshold = candidate;
  }

  Eigen::VectorXd p = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (mask(i)) p(i) = std::max(0.0, x(i) - threshold);
  }
  return p / p.sum();
}

double kl_divergence(const Eigen::Ref<const Eigen::VectorXd>& p,
                     const Eigen::Ref<const Eigen::VectorXd>& q) {
  require(p.size() == q.size(), "KL arguments differ in length");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    if (q(i) <= 0.0) return std::numeric_limits<double>::infinity();
    total += p(i) * std::log(p(i) / q(i));
  }
  return std::max(0.0, total);
}

}  // namespace opmdp
