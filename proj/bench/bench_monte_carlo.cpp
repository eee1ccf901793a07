// Serial reference vs OpenMP kernels on the coverage-study workload.
//
//   bench_monte_carlo [replicates] [n] [m]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "car/estimator.hpp"
#include "car/parallel.hpp"
#include "car/simulation.hpp"

namespace {

template <typename Fn>
double seconds(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t reps = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 1000;
  const std::size_t n = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 1600;
  const std::size_t m = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 50;

  const car::GenerativeModel model = car::paper_model();
  car::SimulationConfig cfg;
  cfg.n = n;
  cfg.replicates = reps;
  cfg.m = m;
  cfg.seed = 20060401;

  car::SimulationReport serial, parallel;
  const double ts = seconds([&] { serial = car::run_monte_carlo(model, cfg, car::Execution::Serial); });
  const double tp = seconds([&] { parallel = car::run_monte_carlo(model, cfg, car::Execution::Parallel); });

  bool same = serial.failures == parallel.failures;
  for (std::size_t r = 0; r < serial.coefficients.size(); ++r)
    same = same && serial.coefficients[r].coverage_fraction == parallel.coefficients[r].coverage_fraction &&
           serial.coefficients[r].mean_ci_length == parallel.coefficients[r].mean_ci_length;

  std::printf("replicates (n=%zu, m=%zu, reps=%zu, threads=%d)\n", n, m, reps, car::max_threads());
  std::printf("  serial   %8.3f s\n  openmp   %8.3f s  speedup %.2fx  identical=%s\n", ts, tp, ts / tp,
              same ? "yes" : "NO");

  // single large fit: bin-level parallelism
  const auto big = car::generate(model, 200000, 7);
  car::FitOptions opts;
  opts.m = 400;
  opts.exec = car::Execution::Serial;
  car::CarFit a, b;
  const double fs = seconds([&] { a = car::fit_car(big.observed, opts); });
  opts.exec = car::Execution::Parallel;
  const double fp = seconds([&] { b = car::fit_car(big.observed, opts); });
  std::printf("fit_bins (n=200000, m=400)\n  serial   %8.3f s\n  openmp   %8.3f s  identical=%s\n", fs, fp,
              a.gamma_hat == b.gamma_hat ? "yes" : "NO");
  return same ? 0 : 1;
}
