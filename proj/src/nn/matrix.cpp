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

#include "stfl/nn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "stfl/errors.hpp"

namespace stfl {
namespace {

void RequireSameShape(const Matrix2D& a, const Matrix2D& b, const char* op) {
  if (!a.SameShape(b)) {
    throw ShapeError(std::string(op) + ": " + a.ShapeString() + " vs " +
                     b.ShapeString());
  }
}

}  // namespace

Matrix2D::Matrix2D(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix2D: data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix2D::Matrix2D(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix2D: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix2D Matrix2D::Identity(std::size_t n) {
  Matrix2D m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix2D::ShapeString() const {
  std::ostringstream out;
  out << rows_ << "x" << cols_;
  return out.str();
}

bool Matrix2D::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix2D Matrix2D::Transposed() const {
  Matrix2D t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

Matrix2D Matrix2D::Columns(std::size_t begin, std::size_t count) const {
  if (begin + count > cols_) {
    throw ShapeError("Matrix2D::Columns: range exceeds " + ShapeString());
  }
  Matrix2D out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r) {
    std::copy_n(data_.begin() + r * cols_ + begin, count, out.row(r).begin());
  }
  return out;
}

Matrix2D Matrix2D::SelectRows(std::span<const std::size_t> indices) const {
  Matrix2D out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw ShapeError("Matrix2D::SelectRows: bad index");
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix2D& Matrix2D::operator+=(const Matrix2D& other) {
  RequireSameShape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix2D& Matrix2D::operator-=(const Matrix2D& other) {
  RequireSameShape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix2D& Matrix2D::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

Matrix2D operator+(Matrix2D a, const Matrix2D& b) { return a += b; }
Matrix2D operator-(Matrix2D a, const Matrix2D& b) { return a -= b; }
Matrix2D operator*(Matrix2D a, double scale) { return a *= scale; }

Matrix2D MatMul(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("MatMul: " + a.ShapeString() + " * " + b.ShapeString());
  }
  Matrix2D out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Matrix2D MatMulTransB(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("MatMulTransB: " + a.ShapeString() + " * (" +
                     b.ShapeString() + ")^T");
  }
  Matrix2D out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto bj = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < ai.size(); ++k) acc += ai[k] * bj[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix2D MatMulTransA(const Matrix2D& a, const Matrix2D& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("MatMulTransA: (" + a.ShapeString() + ")^T * " +
                     b.ShapeString());
  }
  Matrix2D out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ak = a.row(k);
    auto bk = b.row(k);
    for (std::size_t i = 0; i < ak.size(); ++i) {
      const double aki = ak[i];
      auto dst = out.row(i);
      for (std::size_t j = 0; j < bk.size(); ++j) dst[j] += aki * bk[j];
    }
  }
  return out;
}

Matrix2D Hadamard(const Matrix2D& a, const Matrix2D& b) {
  RequireSameShape(a, b, "Hadamard");
  Matrix2D out = a;
  auto dst = out.values();
  auto src = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= src[i];
  return out;
}

Matrix2D HConcat(std::span<const Matrix2D> parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError("HConcat: row counts differ");
    cols += p.cols();
  }
  Matrix2D out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r).begin();
    for (const auto& p : parts) dst = std::copy(p.row(r).begin(), p.row(r).end(), dst);
  }
  return out;
}

double MaxAbsDiff(const Matrix2D& a, const Matrix2D& b) {
  RequireSameShape(a, b, "MaxAbsDiff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  }
  return worst;
}

}  // namespace stfl
