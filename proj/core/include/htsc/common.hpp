#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace htsc {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Eigen::VectorXi;

constexpr double kPi = 3.14159265358979323846;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic fan-out over [0, n). Work item i always lands in slot i, so
// results are identical for any worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int num_threads = 0);

// Per-job RNG seed so sweep jobs are reproducible independent of scheduling.
std::uint64_t job_seed(std::uint64_t base_seed, const std::string& job_id);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least-squares line through (x_i, y_i); used for log-log convergence fits.
FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y);
FitResult loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace htsc
