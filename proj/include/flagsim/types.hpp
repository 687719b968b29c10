#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flagsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Thrown when a caller violates an operation's preconditions.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when the time integrator cannot produce an acceptable step.
class SolverFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Generalized coordinates of a discrete rod with N nodes:
/// [x0 y0 z0 theta0  x1 y1 z1 theta1 ... x_{N-1} y_{N-1} z_{N-1}].
class DofVector {
public:
  DofVector() = default;
  explicit DofVector(int node_count)
      : values_(VecX::Zero(size_for(node_count))) {}
  explicit DofVector(VecX values) : values_(std::move(values)) {
    if (values_.size() < 3 || (values_.size() + 1) % 4 != 0)
      throw InvalidInput("DofVector length must be 4N-1");
  }

  static constexpr Eigen::Index size_for(int node_count) {
    return 4 * static_cast<Eigen::Index>(node_count) - 1;
  }
  static constexpr Eigen::Index node_index(int k) { return 4 * static_cast<Eigen::Index>(k); }
  static constexpr Eigen::Index twist_index(int k) { return 4 * static_cast<Eigen::Index>(k) + 3; }

  int node_count() const { return static_cast<int>((values_.size() + 1) / 4); }
  int edge_count() const { return node_count() - 1; }
  Eigen::Index size() const { return values_.size(); }

  Vec3 node(int k) const { return values_.segment<3>(node_index(k)); }
  void set_node(int k, const Vec3& x) { values_.segment<3>(node_index(k)) = x; }
  double theta(int k) const { return values_[twist_index(k)]; }
  void set_theta(int k, double v) { values_[twist_index(k)] = v; }
  Vec3 edge(int k) const { return node(k + 1) - node(k); }

  const VecX& values() const { return values_; }
  VecX& values() { return values_; }

private:
  VecX values_;
};

} // namespace flagsim
