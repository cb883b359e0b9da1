#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace decodekit {

using Matrix = Eigen::MatrixXd;

/// Dense matrix with one uniquely labelled row per stimulus.
///
/// Immutable after construction; copies share storage, so passing a
/// LabeledMatrix by value is cheap and safe across threads. The constructor
/// enforces the structural invariants: at least one row and one column, one
/// id per row, unique ids, finite values. Consumers that need more rows (the
/// solvers require n >= 2) check that themselves.
class LabeledMatrix {
 public:
  LabeledMatrix(std::vector<std::string> stimulus_ids, Matrix values);

  const std::vector<std::string>& stimulus_ids() const noexcept { return *ids_; }
  const Matrix& values() const noexcept { return *values_; }
  Eigen::Index rows() const noexcept { return values_->rows(); }
  Eigen::Index cols() const noexcept { return values_->cols(); }

  /// Row index of `id`, or -1.
  Eigen::Index find(const std::string& id) const;

  friend bool operator==(const LabeledMatrix& a, const LabeledMatrix& b);

 private:
  std::shared_ptr<const std::vector<std::string>> ids_;
  std::shared_ptr<const Matrix> values_;
};

/// Throws ValidationError describing the first violated invariant.
void validate_matrix(std::span<const std::string> stimulus_ids, const Matrix& values);

/// Reorders rows so that they follow `canonical_ids`. Fails naming every
/// missing and extra id when `canonical_ids` is not a permutation of the
/// matrix's ids.
LabeledMatrix align(const LabeledMatrix& m, std::span<const std::string> canonical_ids);

}  // namespace decodekit
