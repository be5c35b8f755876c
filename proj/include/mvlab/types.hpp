#pragma once

#include <Eigen/Dense>

namespace mvlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
// Particle clouds are stored one particle per row.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VecRef = Eigen::Ref<Vec>;
using ConstVecRef = Eigen::Ref<const Vec>;
using MatRef = Eigen::Ref<Mat>;
using ConstMatRef = Eigen::Ref<const Mat>;

}  // namespace mvlab
