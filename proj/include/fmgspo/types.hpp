#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fmgspo {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Binary per-sensor mask. Bit i set means sensor i is kept.
///
/// An all-zero mask is representable (masking with it yields zero features),
/// but operations that need at least one sensor reject it.
class SelectionVector {
 public:
  SelectionVector() = default;
  explicit SelectionVector(std::vector<std::uint8_t> bits);

  static SelectionVector all(std::size_t n);
  static SelectionVector none(std::size_t n);
  static SelectionVector from_indices(std::size_t n, const std::vector<int>& kept);
  /// Parses a string of '0'/'1' characters, sensor 0 first.
  static SelectionVector from_string(const std::string& bits);

  std::size_t size() const { return bits_.size(); }
  std::size_t count() const;
  bool test(std::size_t i) const { return bits_.at(i) != 0; }

  SelectionVector without(std::size_t i) const;
  std::vector<int> indices() const;
  std::string to_string() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  /// Column vector of 0/1 doubles, usable as a row scaling.
  VectorXd as_weights() const;

  friend bool operator==(const SelectionVector&, const SelectionVector&) = default;
  /// Lexicographic on the bit string.
  friend bool operator<(const SelectionVector& a, const SelectionVector& b) {
    return a.bits_ < b.bits_;
  }

 private:
  std::vector<std::uint8_t> bits_;
};

}  // namespace fmgspo
