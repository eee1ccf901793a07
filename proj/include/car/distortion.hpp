#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "car/rng.hpp"

namespace car {

using DistortionFn = std::function<double(double)>;

struct UniformLaw {
  double a = 0.0;
  double b = 1.0;
};

/// Draws resample the stored values uniformly with replacement.
struct EmpiricalLaw {
  std::vector<double> sample;
};

using ConfounderLaw = std::variant<UniformLaw, EmpiricalLaw>;

double draw(const ConfounderLaw& law, Rng& rng);

/// Multiplicative distortions of the response (psi) and each predictor
/// (phi[r]) as functions of the confounder, plus the confounder's law.
/// The functions must be stateless so they can be called concurrently.
struct DistortionSpec {
  std::string name;
  DistortionFn psi;
  std::vector<DistortionFn> phi;
  ConfounderLaw u_law;

  std::size_t p() const noexcept { return phi.size(); }
};

/// psi(u) = (u+3)/7, phi1 = (u+1)^2/26.3333, phi2 = (u+10)/14,
/// phi3 = (u+2)^2/37.3333, U ~ Uniform(2, 6). Normalisers kept at four decimals.
DistortionSpec paper_distortions();

/// psi = phi_r = 1.
DistortionSpec identity_distortions(std::size_t p, ConfounderLaw law = UniformLaw{2.0, 6.0});

/// psi(u) = 1 + psi_slope (u - c), phi_r(u) = 1 + phi_slopes[r] (u - c) with
/// c = (a+b)/2, so every mean is exactly 1 under Uniform(a, b).
DistortionSpec affine_distortions(double psi_slope, std::vector<double> phi_slopes,
                                  UniformLaw law = {2.0, 6.0});

/// Catalogue lookup for the CLI: "identity" (with p predictors) or "paper-5.2".
/// Throws ConfigError for unknown names.
DistortionSpec distortion_by_name(const std::string& name, std::size_t p = 3);

struct IdentifiabilityReport {
  std::size_t samples = 0;
  double tol = 0.0;
  double psi_mean = 0.0;
  std::vector<double> phi_means;
  std::vector<double> phi_min;
  bool passed = false;
};

/// Monte Carlo check of E psi(U) = 1, E phi_r(U) = 1 and phi_r > 0.
/// Throws InvalidDistortion on a non-finite function value.
IdentifiabilityReport validate_identifiability(const DistortionSpec& spec, std::size_t samples,
                                               double tol, std::uint64_t seed = 0);

}  // namespace car
