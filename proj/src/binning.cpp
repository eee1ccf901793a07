#include "car/binning.hpp"

#include <algorithm>
#include <cmath>

#include "car/error.hpp"

namespace car {
namespace {

void refresh_midpoints(BinPartition& p) {
  p.midpoints.resize(p.counts.size());
  for (std::size_t j = 0; j < p.counts.size(); ++j)
    p.midpoints[j] = 0.5 * (p.edges[j] + p.edges[j + 1]);
}

}  // namespace

std::vector<std::vector<std::size_t>> BinPartition::members() const {
  std::vector<std::vector<std::size_t>> out(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) out[j].reserve(counts[j]);
  for (std::size_t i = 0; i < assignments.size(); ++i) out[assignments[i]].push_back(i);
  return out;
}

BinPartition make_bins(std::span<const double> u, std::size_t m) {
  if (m == 0) throw CarError(ErrorCode::InvalidInput, "number of bins must be >= 1");
  if (u.empty()) throw CarError(ErrorCode::InvalidInput, "no confounder values");
  for (double v : u)
    if (!std::isfinite(v)) throw CarError(ErrorCode::InvalidInput, "non-finite confounder value");
  if (m > u.size()) throw CarError(ErrorCode::TooManyBins, "more bins than observations");

  const auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo && m > 1)
    throw CarError(ErrorCode::DegenerateRange, "all confounder values are equal");

  BinPartition p;
  p.edges.resize(m + 1);
  const double width = (hi - lo) / static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j) p.edges[j] = lo + static_cast<double>(j) * width;
  p.edges[m] = hi;

  p.counts.assign(m, 0);
  p.assignments.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::size_t j = 0;
    if (m > 1) {
      const double pos = std::floor((u[i] - lo) / width);
      j = pos <= 0.0 ? 0 : std::min(static_cast<std::size_t>(pos), m - 1);
      // floating point can put a value one bin off its edge interval
      while (j > 0 && u[i] < p.edges[j]) --j;
      while (j + 1 < m && u[i] >= p.edges[j + 1]) ++j;
    }
    p.assignments[i] = j;
    ++p.counts[j];
  }
  refresh_midpoints(p);
  return p;
}

BinPartition merge_sparse_bins(const BinPartition& partition, std::size_t min_bin_size) {
  if (min_bin_size == 0) throw CarError(ErrorCode::InvalidInput, "min_bin_size must be >= 1");
  if (partition.observation_count() < min_bin_size)
    throw CarError(ErrorCode::CannotSatisfy, "fewer observations than min_bin_size");

  // Work on groups of original bins, then relabel once at the end.
  std::vector<std::size_t> counts = partition.counts;
  std::vector<double> edges = partition.edges;
  std::vector<std::size_t> group_of(partition.bin_count());
  for (std::size_t j = 0; j < group_of.size(); ++j) group_of[j] = j;

  std::size_t j = 0;
  while (counts.size() > 1 && j < counts.size()) {
    if (counts[j] >= min_bin_size) {
      ++j;
      continue;
    }
    std::size_t target;
    if (j == 0) {
      target = 1;
    } else if (j + 1 == counts.size()) {
      target = j - 1;
    } else {
      target = counts[j - 1] <= counts[j + 1] ? j - 1 : j + 1;
    }
    const std::size_t keep = std::min(j, target);
    const std::size_t drop = keep + 1;
    counts[keep] += counts[drop];
    counts.erase(counts.begin() + static_cast<std::ptrdiff_t>(drop));
    edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(drop));
    for (auto& g : group_of)
      if (g >= drop) --g;
    // the merged bin may itself still be sparse; revisit from its position
    j = keep;
  }

  BinPartition out;
  out.edges = std::move(edges);
  out.counts = std::move(counts);
  out.assignments.resize(partition.assignments.size());
  for (std::size_t i = 0; i < partition.assignments.size(); ++i)
    out.assignments[i] = group_of[partition.assignments[i]];
  refresh_midpoints(out);
  return out;
}

std::size_t default_bin_count(std::size_t n) noexcept {
  if (n == 0) return 1;
  const auto m = static_cast<std::size_t>(std::llround(2.0 * std::sqrt(static_cast<double>(n))));
  return std::clamp<std::size_t>(m, 1, n);
}

}  // namespace car
