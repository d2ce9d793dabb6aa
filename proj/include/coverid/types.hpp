#ifndef COVERID_TYPES_HPP
#define COVERID_TYPES_HPP

#include <Eigen/Dense>

namespace coverid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Index = Eigen::Index;

} // namespace coverid

#endif
