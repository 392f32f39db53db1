/*
 * Copyright 2026 The STFL Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef STFL_NN_MATRIX_HPP_
#define STFL_NN_MATRIX_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace stfl {

// Dense row-major matrix of doubles.
class Matrix2D {
 public:
  Matrix2D() = default;
  Matrix2D(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix2D(std::size_t rows, std::size_t cols, std::vector<double> data);
  // Matrix2D m = {{1, 2}, {3, 4}};
  Matrix2D(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix2D Identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool SameShape(const Matrix2D& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string ShapeString() const;

  bool AllFinite() const;

  Matrix2D Transposed() const;
  // Columns [begin, begin + count).
  Matrix2D Columns(std::size_t begin, std::size_t count) const;
  Matrix2D SelectRows(std::span<const std::size_t> indices) const;

  Matrix2D& operator+=(const Matrix2D& other);
  Matrix2D& operator-=(const Matrix2D& other);
  Matrix2D& operator*=(double scale);

  friend bool operator==(const Matrix2D&, const Matrix2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix2D operator+(Matrix2D a, const Matrix2D& b);
Matrix2D operator-(Matrix2D a, const Matrix2D& b);
Matrix2D operator*(Matrix2D a, double scale);

// a * b
Matrix2D MatMul(const Matrix2D& a, const Matrix2D& b);
// a * b^T
Matrix2D MatMulTransB(const Matrix2D& a, const Matrix2D& b);
// a^T * b
Matrix2D MatMulTransA(const Matrix2D& a, const Matrix2D& b);
// Elementwise product.
Matrix2D Hadamard(const Matrix2D& a, const Matrix2D& b);
// [a | b | ...] along columns; all parts must have the same row count.
Matrix2D HConcat(std::span<const Matrix2D> parts);

double MaxAbsDiff(const Matrix2D& a, const Matrix2D& b);

}  // namespace stfl

#endif  // STFL_NN_MATRIX_HPP_
