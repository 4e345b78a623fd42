#pragma once

#include <cstddef>
#include <vector>

namespace adiabatic {

/// Half-open range [begin, end) of grid indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return end <= begin; }
  bool contains(std::size_t j) const noexcept { return j >= begin && j < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Disjoint contiguous bands covering 0..N-1. Every band holds `m` indices
/// except the last one, which absorbs the remainder (size in [m, 2m-1]).
class BandPartition {
 public:
  BandPartition() = default;
  BandPartition(std::size_t grid_size, std::size_t m);

  std::size_t band_size() const noexcept { return m_; }
  std::size_t grid_size() const noexcept { return n_; }
  std::size_t count() const noexcept { return bands_.size(); }
  const std::vector<IndexRange>& bands() const noexcept { return bands_; }
  const IndexRange& band(std::size_t b) const;

  /// Band id holding grid index j.
  std::size_t band_of(std::size_t j) const;
  bool same_band(std::size_t a, std::size_t b) const { return band_of(a) == band_of(b); }

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<IndexRange> bands_;
};

}  // namespace adiabatic
