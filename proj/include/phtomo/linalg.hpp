#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace phtomo {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FlagMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Converts a frequency quoted in MHz to angular frequency in rad/s.
constexpr double mhz_to_rad_s(double mhz) { return kTwoPi * mhz * 1e6; }

}  // namespace phtomo
