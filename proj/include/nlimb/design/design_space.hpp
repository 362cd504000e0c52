#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace nlimb {

struct DesignParameter {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

// Box-bounded domain of physical design parameters.
class DesignSpace {
 public:
  DesignSpace() = default;
  explicit DesignSpace(std::vector<DesignParameter> parameters);

  Eigen::Index dimension() const {
    return static_cast<Eigen::Index>(parameters_.size());
  }
  const std::vector<DesignParameter>& parameters() const { return parameters_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  Eigen::VectorXd range() const { return upper_ - lower_; }

  // Index of the named parameter, or -1.
  Eigen::Index find(const std::string& name) const;
  void set_bounds(Eigen::Index i, double lower, double upper);

  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower_).cwiseMin(upper_);
  }
  bool contains(const Eigen::VectorXd& x) const {
    return x.size() == dimension() && (x.array() >= lower_.array()).all() &&
           (x.array() <= upper_.array()).all();
  }

  // Affine map of the box onto [-1, 1]^d and back.
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const {
    return (2.0 * (x - lower_).array() / (upper_ - lower_).array() - 1.0)
        .matrix();
  }
  Eigen::VectorXd denormalize(const Eigen::VectorXd& u) const {
    return (lower_.array() + 0.5 * (u.array() + 1.0) * (upper_ - lower_).array())
        .matrix();
  }
  // Maps the box onto [0, 1]^d and back.
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const {
    return ((x - lower_).array() / (upper_ - lower_).array()).matrix();
  }
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const {
    return (lower_.array() + u.array() * (upper_ - lower_).array()).matrix();
  }

  bool operator==(const DesignSpace& other) const;

 private:
  void validate() const;

  std::vector<DesignParameter> parameters_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

}  // namespace nlimb
