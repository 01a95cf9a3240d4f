#include "htsc/frame.hpp"

#include <algorithm>

namespace htsc {

namespace {
// Multi-indices of fixed total degree n in lexicographic order.
void emit_degree(int d, int n, std::vector<int>& cur,
                 std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == d - 1) {
    cur.push_back(n);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = n; k >= 0; --k) {
    cur.push_back(k);
    emit_degree(d, n - k, cur, out);
    cur.pop_back();
  }
}
}  // namespace

HermiteFrame::HermiteFrame(int d, int A) : d_(d), A_(A) {
  if (d < 1) throw DomainError("HermiteFrame: d must be positive");
  if (A < 0) throw DomainError("HermiteFrame: cutoff must be nonnegative");
  for (int n = 0; n <= A; ++n) {
    band_first_.push_back(static_cast<int>(alphas_.size()));
    std::vector<int> cur;
    emit_degree(d, n, cur, alphas_);
  }
  band_first_.push_back(static_cast<int>(alphas_.size()));
  degrees_.reserve(alphas_.size());
  for (const auto& a : alphas_) {
    int s = 0;
    for (int x : a) s += x;
    degrees_.push_back(s);
  }
}

int HermiteFrame::index_of(const std::vector<int>& alpha) const {
  if (static_cast<int>(alpha.size()) != d_) return -1;
  int n = 0;
  for (int x : alpha) {
    if (x < 0) return -1;
    n += x;
  }
  if (n > A_) return -1;
  const auto first = alphas_.begin() + band_first_[n];
  const auto last = alphas_.begin() + band_first_[n + 1];
  const auto it = std::lower_bound(first, last, alpha,
                                   [](const std::vector<int>& a, const std::vector<int>& b) {
                                     return std::lexicographical_compare(
                                         b.begin(), b.end(), a.begin(), a.end());
                                   });
  if (it == last || *it != alpha) return -1;
  return static_cast<int>(it - alphas_.begin());
}

std::pair<int, int> HermiteFrame::band_range(int n) const {
  if (n < 0 || n > A_) throw DomainError("band_range: band outside cutoff");
  return {band_first_[n], band_first_[n + 1]};
}

int HermiteFrame::band_dim(int n) const {
  const auto [a, b] = band_range(n);
  return b - a;
}

VectorXd HermiteFrame::interior_mask(int guard) const {
  VectorXd m = VectorXd::Zero(size());
  for (int i = 0; i < size(); ++i)
    if (degrees_[i] <= A_ - guard) m[i] = 1.0;
  return m;
}

FramePtr make_frame(int d, int A) { return std::make_shared<HermiteFrame>(d, A); }

}  // namespace htsc
