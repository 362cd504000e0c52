#include "nlimb/design/design_space.hpp"

#include <set>

#include "nlimb/errors.hpp"

namespace nlimb {

DesignSpace::DesignSpace(std::vector<DesignParameter> parameters)
    : parameters_(std::move(parameters)) {
  validate();
  lower_.resize(dimension());
  upper_.resize(dimension());
  for (Eigen::Index i = 0; i < dimension(); ++i) {
    lower_[i] = parameters_[i].lower;
    upper_[i] = parameters_[i].upper;
  }
}

Eigen::Index DesignSpace::find(const std::string& name) const {
  for (Eigen::Index i = 0; i < dimension(); ++i)
    if (parameters_[i].name == name) return i;
  return -1;
}

void DesignSpace::set_bounds(Eigen::Index i, double lower, double upper) {
  if (i < 0 || i >= dimension())
    throw ContractError("DesignSpace::set_bounds: index out of range");
  if (!(lower < upper))
    throw ConfigError("lower bound must be below upper bound",
                      parameters_[i].name);
  parameters_[i].lower = lower;
  parameters_[i].upper = upper;
  lower_[i] = lower;
  upper_[i] = upper;
}

bool DesignSpace::operator==(const DesignSpace& other) const {
  if (dimension() != other.dimension()) return false;
  for (Eigen::Index i = 0; i < dimension(); ++i) {
    const auto& a = parameters_[i];
    const auto& b = other.parameters_[i];
    if (a.name != b.name || a.lower != b.lower || a.upper != b.upper)
      return false;
  }
  return true;
}

void DesignSpace::validate() const {
  std::set<std::string> names;
  for (const auto& p : parameters_) {
    if (!(p.lower < p.upper))
      throw ConfigError("lower bound must be below upper bound", p.name);
    if (!names.insert(p.name).second)
      throw ConfigError("duplicate design parameter name", p.name);
  }
}

}  // namespace nlimb
