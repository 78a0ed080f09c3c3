#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace copra {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace copra
