#include "fmgspo/types.hpp"

#include <algorithm>

#include "fmgspo/errors.hpp"

namespace fmgspo {

SelectionVector::SelectionVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) b = b ? 1 : 0;
}

SelectionVector SelectionVector::all(std::size_t n) {
  return SelectionVector(std::vector<std::uint8_t>(n, 1));
}

SelectionVector SelectionVector::none(std::size_t n) {
  return SelectionVector(std::vector<std::uint8_t>(n, 0));
}

SelectionVector SelectionVector::from_indices(std::size_t n, const std::vector<int>& kept) {
  std::vector<std::uint8_t> bits(n, 0);
  for (int i : kept) {
    if (i < 0 || static_cast<std::size_t>(i) >= n) {
      throw SelectionError("sensor index " + std::to_string(i) + " out of range");
    }
    bits[i] = 1;
  }
  return SelectionVector(std::move(bits));
}

SelectionVector SelectionVector::from_string(const std::string& s) {
  std::vector<std::uint8_t> bits;
  bits.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw ParseError("selection bitstring may only hold 0/1: '" + s + "'");
    bits.push_back(c == '1');
  }
  return SelectionVector(std::move(bits));
}

std::size_t SelectionVector::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

SelectionVector SelectionVector::without(std::size_t i) const {
  auto bits = bits_;
  bits.at(i) = 0;
  return SelectionVector(std::move(bits));
}

std::vector<int> SelectionVector::indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::string SelectionVector::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = bits_[i] ? '1' : '0';
  return s;
}

VectorXd SelectionVector::as_weights() const {
  VectorXd w(bits_.size());
  for (std::size_t i = 0; i < bits_.size(); ++i) w[static_cast<Eigen::Index>(i)] = bits_[i];
  return w;
}

}  // namespace fmgspo
