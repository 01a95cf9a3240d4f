#pragma once

#include <memory>
#include <vector>

#include "htsc/common.hpp"

namespace htsc {

/**
 * Truncated tensor-Hermite basis of L^2(R^d): all multi-indices alpha with
 * |alpha| <= A in graded lexicographic order, so the band-n block
 * {|alpha| = n} occupies a contiguous index range for every n <= A.
 */
class HermiteFrame {
 public:
  HermiteFrame(int d, int A);

  int d() const { return d_; }
  int cutoff() const { return A_; }
  int size() const { return static_cast<int>(alphas_.size()); }

  const std::vector<int>& alpha(int i) const { return alphas_[i]; }
  int degree(int i) const { return degrees_[i]; }

  // Index of a multi-index, or -1 when outside the cutoff.
  int index_of(const std::vector<int>& alpha) const;

  // [first, last) index range of band n.
  std::pair<int, int> band_range(int n) const;
  int band_dim(int n) const;

  // Diagonal 0/1 selector of indices with |alpha| <= A - guard.
  VectorXd interior_mask(int guard) const;

  bool operator==(const HermiteFrame& o) const { return d_ == o.d_ && A_ == o.A_; }

 private:
  int d_;
  int A_;
  std::vector<std::vector<int>> alphas_;
  std::vector<int> degrees_;
  std::vector<int> band_first_;
};

using FramePtr = std::shared_ptr<const HermiteFrame>;

FramePtr make_frame(int d, int A);

}  // namespace htsc
