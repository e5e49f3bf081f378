#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rwl1df {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sparse synthesis coefficients z (signal is x = W z).
using CoefficientVector = Vector;
/// Per-coefficient inverse scales driving the weighted l1 penalty.
using WeightVector = Vector;

using Rng = std::mt19937_64;

/// Independent stream for (master seed, index); used to give every trial or
/// frame its own generator so results do not depend on scheduling.
Rng substream(std::uint64_t master_seed, std::uint64_t index);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class InvalidSubset : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class IngestionError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

inline bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace rwl1df
