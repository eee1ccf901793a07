#pragma once

namespace car {

/// Selects the OpenMP kernel or the serial reference loop. Both produce
/// bit-identical results; the serial path exists for testing and benchmarks.
enum class Execution { Serial, Parallel };

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads() noexcept;

/// Sets the OpenMP thread count; no-op without OpenMP.
void set_threads(int threads) noexcept;

}  // namespace car
