#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace car {

/// Partition of the confounder range into contiguous intervals. Bin j covers
/// [edges[j], edges[j+1]); the last bin is closed on the right.
struct BinPartition {
  std::vector<double> edges;
  std::vector<std::size_t> assignments;  // per observation
  std::vector<std::size_t> counts;       // per bin
  std::vector<double> midpoints;         // per bin

  std::size_t bin_count() const noexcept { return counts.size(); }
  std::size_t observation_count() const noexcept { return assignments.size(); }

  /// Observation indices of each bin, in original order.
  std::vector<std::vector<std::size_t>> members() const;
};

/// m equal-width bins over [min(u), max(u)].
BinPartition make_bins(std::span<const double> u, std::size_t m);

/// Merge bins holding fewer than min_bin_size observations into a neighbour.
/// Scan left to right; a sparse bin joins the neighbour with the smaller
/// count, ties going left. Stops once every bin is large enough or a single
/// bin remains.
BinPartition merge_sparse_bins(const BinPartition& partition, std::size_t min_bin_size);

/// round(2 sqrt(n)) clamped to [1, n].
std::size_t default_bin_count(std::size_t n) noexcept;

}  // namespace car
