#pragma once

#include <Eigen/Dense>

namespace orfnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace orfnet
