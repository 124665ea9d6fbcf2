/*
 * tensor.hpp
 *
 * Dense third-order tensor (location x time x day) with the unfold/fold,
 * mode-2 product, norm and masked projection primitives.
 *
 * Storage is a flat buffer with the first index fastest:
 *   offset(i1, i2, i3) = i1 + n1 * (i2 + n2 * i3)      (0-based)
 *
 * Mode-i unfolding puts coordinate i on the rows; columns run over the two
 * remaining coordinates in ascending mode order, the lower mode fastest:
 *   mode 1: col = i2 + n2 * i3
 *   mode 2: col = i1 + n1 * i3
 *   mode 3: col = i1 + n1 * i2
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtc {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Dims {
  std::size_t n1 = 1;
  std::size_t n2 = 1;
  std::size_t n3 = 1;

  std::size_t size() const { return n1 * n2 * n3; }
  std::size_t operator[](int mode) const {
    return mode == 1 ? n1 : mode == 2 ? n2 : n3;
  }
  bool operator==(const Dims&) const = default;

  std::string str() const {
    return std::to_string(n1) + "x" + std::to_string(n2) + "x" + std::to_string(n3);
  }
};

inline void check_dims(const Dims& d) {
  if (d.n1 == 0 || d.n2 == 0 || d.n3 == 0)
    throw ShapeError("tensor dims must be >= 1, got " + d.str());
}

inline void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b))
    throw ShapeError(std::string(what) + ": dims " + a.str() + " vs " + b.str());
}

class Tensor3 {
 public:
  using VectorMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  Tensor3() : Tensor3(Dims{1, 1, 1}) {}

  explicit Tensor3(Dims dims, double fill = 0.0) : dims_(dims) {
    check_dims(dims_);
    data_.assign(dims_.size(), fill);
  }

  Tensor3(Dims dims, std::vector<double> values) : dims_(dims), data_(std::move(values)) {
    check_dims(dims_);
    if (data_.size() != dims_.size())
      throw ShapeError("buffer length " + std::to_string(data_.size()) +
                       " does not match dims " + dims_.str());
  }

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  std::size_t offset(std::size_t i1, std::size_t i2, std::size_t i3) const {
    return i1 + dims_.n1 * (i2 + dims_.n2 * i3);
  }
  double& operator()(std::size_t i1, std::size_t i2, std::size_t i3) {
    return data_[offset(i1, i2, i3)];
  }
  double operator()(std::size_t i1, std::size_t i2, std::size_t i3) const {
    return data_[offset(i1, i2, i3)];
  }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& buffer() const { return data_; }

  VectorMap vec() { return VectorMap(data_.data(), static_cast<Eigen::Index>(data_.size())); }
  ConstVectorMap vec() const {
    return ConstVectorMap(data_.data(), static_cast<Eigen::Index>(data_.size()));
  }

  // Frontal slice k viewed as an n1 x n2 column-major matrix.
  Eigen::Map<Eigen::MatrixXd> slice(std::size_t k) {
    return {data_.data() + k * dims_.n1 * dims_.n2, static_cast<Eigen::Index>(dims_.n1),
            static_cast<Eigen::Index>(dims_.n2)};
  }
  Eigen::Map<const Eigen::MatrixXd> slice(std::size_t k) const {
    return {data_.data() + k * dims_.n1 * dims_.n2, static_cast<Eigen::Index>(dims_.n1),
            static_cast<Eigen::Index>(dims_.n2)};
  }

  Tensor3& operator+=(const Tensor3& o) {
    require_same_dims(dims_, o.dims_, "tensor +=");
    vec() += o.vec();
    return *this;
  }
  Tensor3& operator-=(const Tensor3& o) {
    require_same_dims(dims_, o.dims_, "tensor -=");
    vec() -= o.vec();
    return *this;
  }
  Tensor3& operator*=(double a) {
    vec() *= a;
    return *this;
  }
  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Tensor3 a, double s) { return a *= s; }
  friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }
  friend Tensor3 operator/(Tensor3 a, double s) { return a *= (1.0 / s); }

  bool operator==(const Tensor3&) const = default;

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  Dims dims_;
  std::vector<double> data_;
};

// Sampling set: true = observed.
class ObservationMask {
 public:
  ObservationMask() : ObservationMask(Dims{1, 1, 1}) {}
  explicit ObservationMask(Dims dims, bool fill = true) : dims_(dims) {
    check_dims(dims_);
    flags_.assign(dims_.size(), fill ? 1 : 0);
  }

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return flags_.size(); }

  bool operator[](std::size_t k) const { return flags_[k] != 0; }
  void set(std::size_t k, bool observed) { flags_[k] = observed ? 1 : 0; }
  bool operator()(std::size_t i1, std::size_t i2, std::size_t i3) const {
    return flags_[i1 + dims_.n1 * (i2 + dims_.n2 * i3)] != 0;
  }
  void set(std::size_t i1, std::size_t i2, std::size_t i3, bool observed) {
    set(i1 + dims_.n1 * (i2 + dims_.n2 * i3), observed);
  }

  std::size_t observed_count() const {
    return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
  }
  double observation_rate() const {
    return static_cast<double>(observed_count()) / static_cast<double>(flags_.size());
  }

  ObservationMask complement() const {
    ObservationMask out(dims_);
    for (std::size_t k = 0; k < flags_.size(); ++k) out.flags_[k] = flags_[k] ? 0 : 1;
    return out;
  }

  bool operator==(const ObservationMask&) const = default;

 private:
  Dims dims_;
  std::vector<std::uint8_t> flags_;
};

struct UnfoldedMatrix {
  int mode = 1;
  Eigen::MatrixXd values;
};

inline void check_mode(int mode) {
  if (mode < 1 || mode > 3) throw ShapeError("mode must be 1, 2 or 3, got " + std::to_string(mode));
}

inline Eigen::MatrixXd unfold_matrix(const Tensor3& t, int mode) {
  check_mode(mode);
  const auto [n1, n2, n3] = t.dims();
  const auto* src = t.values().data();
  switch (mode) {
    case 1:
      // The buffer already is the mode-1 unfolding in column-major order.
      return Eigen::Map<const Eigen::MatrixXd>(src, static_cast<Eigen::Index>(n1),
                                               static_cast<Eigen::Index>(n2 * n3));
    case 2: {
      Eigen::MatrixXd m(static_cast<Eigen::Index>(n2), static_cast<Eigen::Index>(n1 * n3));
      for (std::size_t k = 0; k < n3; ++k)
        m.middleCols(static_cast<Eigen::Index>(k * n1), static_cast<Eigen::Index>(n1)) =
            t.slice(k).transpose();
      return m;
    }
    default:
      return Eigen::Map<const Eigen::MatrixXd>(src, static_cast<Eigen::Index>(n1 * n2),
                                               static_cast<Eigen::Index>(n3))
          .transpose();
  }
}

inline UnfoldedMatrix unfold(const Tensor3& t, int mode) { return {mode, unfold_matrix(t, mode)}; }

inline Tensor3 fold(const Eigen::MatrixXd& m, int mode, const Dims& dims) {
  check_mode(mode);
  check_dims(dims);
  const auto rows = static_cast<std::size_t>(m.rows());
  const auto cols = static_cast<std::size_t>(m.cols());
  if (rows != dims[mode] || cols != dims.size() / dims[mode])
    throw ShapeError("fold: mode-" + std::to_string(mode) + " matrix " + std::to_string(rows) +
                     "x" + std::to_string(cols) + " does not match dims " + dims.str());
  Tensor3 t(dims);
  const auto [n1, n2, n3] = dims;
  switch (mode) {
    case 1:
      t.vec() = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
      break;
    case 2:
      for (std::size_t k = 0; k < n3; ++k)
        t.slice(k) = m.middleCols(static_cast<Eigen::Index>(k * n1), static_cast<Eigen::Index>(n1))
                         .transpose();
      break;
    default:
      Eigen::Map<Eigen::MatrixXd>(t.values().data(), static_cast<Eigen::Index>(n1 * n2),
                                  static_cast<Eigen::Index>(n3)) = m.transpose();
  }
  return t;
}

inline Tensor3 fold(const UnfoldedMatrix& m, const Dims& dims) { return fold(m.values, m.mode, dims); }

// t x_2 m, i.e. fold_2(m * unfold_2(t)). Slice-wise: Y_k = X_k * m^T.
inline Tensor3 mode2_product(const Tensor3& t, const Eigen::MatrixXd& m) {
  const auto n2 = static_cast<Eigen::Index>(t.dims().n2);
  if (m.rows() != n2 || m.cols() != n2)
    throw ShapeError("mode2_product: matrix must be " + std::to_string(n2) + "x" +
                     std::to_string(n2));
  Tensor3 out(t.dims());
  const Eigen::MatrixXd mt = m.transpose();
  for (std::size_t k = 0; k < t.dims().n3; ++k) out.slice(k).noalias() = t.slice(k) * mt;
  return out;
}

inline Tensor3 project(const Tensor3& t, const ObservationMask& mask) {
  require_same_dims(t.dims(), mask.dims(), "project");
  Tensor3 out(t.dims());
  for (std::size_t k = 0; k < t.size(); ++k)
    if (mask[k]) out[k] = t[k];
  return out;
}

// Zeroes every observed entry in place (projection onto the complement of the mask).
inline void zero_observed(Tensor3& t, const ObservationMask& mask) {
  require_same_dims(t.dims(), mask.dims(), "zero_observed");
  for (std::size_t k = 0; k < t.size(); ++k)
    if (mask[k]) t[k] = 0.0;
}

struct Norms {
  double l1 = 0.0;
  double fro = 0.0;
  double linf = 0.0;
};

inline Norms norms(const Tensor3& t) {
  const auto v = t.vec();
  if (v.size() == 0) return {};
  return {v.lpNorm<1>(), v.norm(), v.lpNorm<Eigen::Infinity>()};
}

inline double frobenius(const Tensor3& t) { return t.vec().norm(); }

inline double inner(const Tensor3& a, const Tensor3& b) {
  require_same_dims(a.dims(), b.dims(), "inner");
  return a.vec().dot(b.vec());
}

inline void validate_finite(const Tensor3& t, const std::string& what) {
  for (std::size_t k = 0; k < t.size(); ++k)
    if (!std::isfinite(t[k]))
      throw NonFiniteError(what + ": non-finite value at flat index " + std::to_string(k));
}

}  // namespace rtc
