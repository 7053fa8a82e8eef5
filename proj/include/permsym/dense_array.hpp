#ifndef PERMSYM_DENSE_ARRAY_HPP
#define PERMSYM_DENSE_ARRAY_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace permsym {

/// Error for requests that exceed the enumeration/canonization size limits.
class FeasibilityError : public std::exception {
public:
  explicit FeasibilityError(std::string what) : what_(std::move(what)) {}
  const char* what() const noexcept override { return what_.c_str(); }

private:
  std::string what_;
};

/// Dense d-dimensional array of 64-bit floats in row-major order.
///
/// Entries are validated to be finite at construction; NaN/Inf are rejected.
class DenseArray {
public:
  DenseArray() = default;
  DenseArray(std::vector<std::size_t> shape, std::vector<double> data);

  static DenseArray zeros(std::vector<std::size_t> shape);
  static DenseArray scalar(double v);
  /// Rank-1 array from a flat vector.
  static DenseArray vector(std::vector<double> values);
  /// Rank-2 array from nested rows (all rows must have equal length).
  static DenseArray matrix(const std::vector<std::vector<double>>& rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double& operator[](std::size_t flat) { return data_[flat]; }

  double at(std::span<const std::size_t> idx) const;
  double& at(std::span<const std::size_t> idx);
  double at2(std::size_t i, std::size_t j) const;
  double& at2(std::size_t i, std::size_t j);

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  /// True for rank-2 square arrays with x[i][j] == x[j][i] exactly.
  bool is_symmetric() const;

  bool operator==(const DenseArray& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }
  bool operator!=(const DenseArray& other) const { return !(*this == other); }

private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t flat_index(std::span<const std::size_t> idx,
                       std::span<const std::size_t> shape);
std::vector<std::size_t> unflatten_index(std::size_t flat,
                                         std::span<const std::size_t> shape);

/// Largest |a-b| / max(1, |a|, |b|) over paired entries; shapes must agree.
double max_rel_deviation(const DenseArray& a, const DenseArray& b);
double max_rel_deviation(double a, double b);

}  // namespace permsym

#endif
