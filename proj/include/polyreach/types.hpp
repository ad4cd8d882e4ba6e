#pragma once

#include <Eigen/Dense>

namespace polyreach {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Eigen::Index;

}  // namespace polyreach
