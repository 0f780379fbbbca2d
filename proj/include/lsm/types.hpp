#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lsm {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Column j holds the outgoing weights of source j (row = target).
template <typename Scalar>
using SparseWeights = Eigen::SparseMatrix<Scalar, Eigen::ColMajor>;

using SpikeFlags = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;

using Seed = std::uint64_t;

/// Invalid parameters, mismatched shapes, malformed files.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite values produced during simulation or training.
class NumericalFault : public std::runtime_error {
 public:
  explicit NumericalFault(const std::string& what) : std::runtime_error(what) {}
};

/// Inconsistent or unusable sample data.
class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lsm
