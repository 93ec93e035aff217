#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace agp {

// Bit vector over the p predictors with a cached popcount.
class InclusionVector {
 public:
  InclusionVector() = default;
  explicit InclusionVector(int p) : bits_(p, 0), size_(0) {
    if (p < 0) throw std::invalid_argument("InclusionVector: negative p");
  }

  int p() const { return static_cast<int>(bits_.size()); }
  int size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool test(int j) const {
    check_index(j);
    return bits_[j] != 0;
  }

  void set(int j, bool on) {
    check_index(j);
    if (bits_[j] != static_cast<uint8_t>(on)) {
      bits_[j] = on ? 1 : 0;
      size_ += on ? 1 : -1;
    }
  }

  void flip(int j) {
    check_index(j);
    bits_[j] ^= 1;
    size_ += bits_[j] ? 1 : -1;
  }

  InclusionVector toggled(int j) const {
    InclusionVector out(*this);
    out.flip(j);
    return out;
  }

  std::vector<int> included() const {
    std::vector<int> idx;
    idx.reserve(size_);
    for (int j = 0; j < p(); ++j)
      if (bits_[j]) idx.push_back(j);
    return idx;
  }

  std::vector<int> excluded() const {
    std::vector<int> idx;
    idx.reserve(p() - size_);
    for (int j = 0; j < p(); ++j)
      if (!bits_[j]) idx.push_back(j);
    return idx;
  }

  // Packed bit key; valid only for p <= 64 (oracle-scale instances).
  uint64_t key() const {
    if (p() > 64) throw std::logic_error("InclusionVector::key: p > 64");
    uint64_t k = 0;
    for (int j = 0; j < p(); ++j)
      if (bits_[j]) k |= (uint64_t{1} << j);
    return k;
  }

  static InclusionVector from_key(uint64_t k, int p) {
    InclusionVector g(p);
    for (int j = 0; j < p; ++j)
      if (k & (uint64_t{1} << j)) g.set(j, true);
    return g;
  }

  bool operator==(const InclusionVector& o) const { return bits_ == o.bits_; }

 private:
  void check_index(int j) const {
    if (j < 0 || j >= p()) throw std::out_of_range("InclusionVector: index out of range");
  }

  std::vector<uint8_t> bits_;
  int size_ = 0;
};

// tog(j, gamma): flip predictor j's inclusion status.
inline InclusionVector toggle(int j, const InclusionVector& gamma) { return gamma.toggled(j); }

}  // namespace agp
