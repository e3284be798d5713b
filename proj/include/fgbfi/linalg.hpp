#pragma once

#include <vector>

#include "fgbfi/real.hpp"

namespace fgbfi {

using RVec = std::vector<Real>;

/// n-vector of exact zeros at ctx precision.
RVec make_vec(long n, const PrecisionContext& ctx);

/// Parse a list of decimal strings into a vector.
RVec parse_vec(const std::vector<std::string>& items, const PrecisionContext& ctx);

Real norm1(const RVec& x);
Real norm2(const RVec& x);
Real dot(const RVec& a, const RVec& b);

/// Euclidean distance between a and b over the first dims coordinates
/// (dims <= 0 means all).
Real dist2(const RVec& a, const RVec& b, long dims = 0);

void copy_into(RVec& dst, const RVec& src);

bool bitwise_equal(const RVec& a, const RVec& b);

/// Dense row-major matrix of Reals.
struct RMat {
  long rows = 0, cols = 0;
  std::vector<Real> a;

  Real& at(long i, long j) { return a[static_cast<size_t>(i) * cols + j]; }
  const Real& at(long i, long j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

RMat make_mat(long rows, long cols, const PrecisionContext& ctx);

/// Induced 1-norm: maximum absolute column sum.
Real colsum_norm(const RMat& m);

}  // namespace fgbfi
