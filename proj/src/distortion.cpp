#include "car/distortion.hpp"

#include <cmath>
#include <limits>

#include "car/error.hpp"

namespace car {

double draw(const ConfounderLaw& law, Rng& rng) {
  return std::visit(
      [&rng](const auto& l) -> double {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, UniformLaw>) {
          return std::uniform_real_distribution<double>(l.a, l.b)(rng);
        } else {
          if (l.sample.empty())
            throw CarError(ErrorCode::InvalidDistortion, "empty empirical confounder law");
          std::uniform_int_distribution<std::size_t> pick(0, l.sample.size() - 1);
          return l.sample[pick(rng)];
        }
      },
      law);
}

DistortionSpec paper_distortions() {
  DistortionSpec s;
  s.name = "paper-5.2";
  s.psi = [](double u) { return (u + 3.0) / 7.0; };
  s.phi = {
      [](double u) { return (u + 1.0) * (u + 1.0) / 26.3333; },
      [](double u) { return (u + 10.0) / 14.0; },
      [](double u) { return (u + 2.0) * (u + 2.0) / 37.3333; },
  };
  s.u_law = UniformLaw{2.0, 6.0};
  return s;
}

DistortionSpec identity_distortions(std::size_t p, ConfounderLaw law) {
  DistortionSpec s;
  s.name = "identity";
  s.psi = [](double) { return 1.0; };
  s.phi.assign(p, [](double) { return 1.0; });
  s.u_law = std::move(law);
  return s;
}

DistortionSpec affine_distortions(double psi_slope, std::vector<double> phi_slopes, UniformLaw law) {
  const double centre = 0.5 * (law.a + law.b);
  DistortionSpec s;
  s.name = "affine";
  s.psi = [=](double u) { return 1.0 + psi_slope * (u - centre); };
  for (double slope : phi_slopes) s.phi.push_back([=](double u) { return 1.0 + slope * (u - centre); });
  s.u_law = law;
  return s;
}

DistortionSpec distortion_by_name(const std::string& name, std::size_t p) {
  if (name == "paper-5.2") return paper_distortions();
  if (name == "identity") return identity_distortions(p);
  throw CarError(ErrorCode::ConfigError, "unknown distortion '" + name + "'");
}

IdentifiabilityReport validate_identifiability(const DistortionSpec& spec, std::size_t samples,
                                               double tol, std::uint64_t seed) {
  if (samples < 1000) throw CarError(ErrorCode::ConfigError, "identifiability check needs >= 1000 samples");
  if (!(tol >= 0.0)) throw CarError(ErrorCode::ConfigError, "tolerance must be >= 0");
  const std::size_t p = spec.p();
  IdentifiabilityReport rep;
  rep.samples = samples;
  rep.tol = tol;
  rep.phi_means.assign(p, 0.0);
  rep.phi_min.assign(p, std::numeric_limits<double>::infinity());

  Rng rng = make_stream(seed, 0);
  auto checked = [](double v, const char* what) {
    if (!std::isfinite(v))
      throw CarError(ErrorCode::InvalidDistortion, std::string("non-finite value of ") + what);
    return v;
  };
  double psi_sum = 0.0;
  std::vector<double> phi_sum(p, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    const double u = draw(spec.u_law, rng);
    psi_sum += checked(spec.psi(u), "psi");
    for (std::size_t r = 0; r < p; ++r) {
      const double v = checked(spec.phi[r](u), "phi");
      phi_sum[r] += v;
      rep.phi_min[r] = std::min(rep.phi_min[r], v);
    }
  }
  const double ns = static_cast<double>(samples);
  rep.psi_mean = psi_sum / ns;
  rep.passed = std::abs(rep.psi_mean - 1.0) <= tol;
  for (std::size_t r = 0; r < p; ++r) {
    rep.phi_means[r] = phi_sum[r] / ns;
    rep.passed = rep.passed && std::abs(rep.phi_means[r] - 1.0) <= tol && rep.phi_min[r] > 0.0;
  }
  return rep;
}

}  // namespace car
