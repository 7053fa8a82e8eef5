#include "permsym/dense_array.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace permsym {

namespace {

std::size_t checked_volume(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("DenseArray: zero-sized dimension");
    n *= d;
  }
  return n;
}

}  // namespace

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (checked_volume(shape_) != data_.size())
    throw std::invalid_argument("DenseArray: shape does not match data length");
  for (double v : data_)
    if (!std::isfinite(v))
      throw std::invalid_argument("DenseArray: non-finite entry");
}

DenseArray DenseArray::zeros(std::vector<std::size_t> shape) {
  std::size_t n = checked_volume(shape);
  return DenseArray(std::move(shape), std::vector<double>(n, 0.0));
}

DenseArray DenseArray::scalar(double v) { return DenseArray({1}, {v}); }

DenseArray DenseArray::vector(std::vector<double> values) {
  std::size_t n = values.size();
  return DenseArray({n}, std::move(values));
}

DenseArray DenseArray::matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("DenseArray::matrix: empty");
  std::size_t ncol = rows[0].size();
  std::vector<double> flat;
  flat.reserve(rows.size() * ncol);
  for (const auto& r : rows) {
    if (r.size() != ncol)
      throw std::invalid_argument("DenseArray::matrix: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return DenseArray({rows.size(), ncol}, std::move(flat));
}

double DenseArray::at(std::span<const std::size_t> idx) const {
  return data_[flat_index(idx, shape_)];
}

double& DenseArray::at(std::span<const std::size_t> idx) {
  return data_[flat_index(idx, shape_)];
}

double DenseArray::at2(std::size_t i, std::size_t j) const {
  const std::size_t idx[2] = {i, j};
  return at(idx);
}

double& DenseArray::at2(std::size_t i, std::size_t j) {
  const std::size_t idx[2] = {i, j};
  return at(idx);
}

bool DenseArray::is_symmetric() const {
  if (rank() != 2 || shape_[0] != shape_[1]) return false;
  std::size_t n = shape_[0];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (data_[i * n + j] != data_[j * n + i]) return false;
  return true;
}

std::size_t flat_index(std::span<const std::size_t> idx,
                       std::span<const std::size_t> shape) {
  if (idx.size() != shape.size())
    throw std::invalid_argument("flat_index: rank mismatch");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= shape[k]) throw std::out_of_range("flat_index: out of range");
    flat = flat * shape[k] + idx[k];
  }
  return flat;
}

std::vector<std::size_t> unflatten_index(std::size_t flat,
                                         std::span<const std::size_t> shape) {
  std::vector<std::size_t> idx(shape.size());
  for (std::size_t k = shape.size(); k-- > 0;) {
    idx[k] = flat % shape[k];
    flat /= shape[k];
  }
  return idx;
}

double max_rel_deviation(double a, double b) {
  double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / scale;
}

double max_rel_deviation(const DenseArray& a, const DenseArray& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("max_rel_deviation: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, max_rel_deviation(a[i], b[i]));
  return worst;
}

}  // namespace permsym
