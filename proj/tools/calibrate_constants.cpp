// Regenerates include/envavg/spectral_constants.hpp:
//   calibrate_constants > include/envavg/spectral_constants.hpp
#include <envavg/spectral.hpp>

#include <cstdio>

using namespace envavg;

int main() {
  const Domain d = reference::domain();
  const int n = reference::cells;
  const double mphi = calibrate_gap_constant(reference::overmollified(), d, n);
  const double cs = calibrate_gap_constant(reference::cs_bochner(), d, n);
  const double seg = calibrate_gap_constant(reference::segregation(), d, n);
  const double beta = calibrate_gap_constant(reference::beta_half(), d, n);
  const double lam = calibrate_cs_lambda(Kernel::bochner(reference::psi()), d, n, reference::lambda_samples,
                                         reference::lambda_seed, reference::lambda_amp);
  std::printf("#pragma once\n\n");
  std::printf("// Generated by tools/calibrate_constants.cpp for the configuration in envavg::reference.\n\n");
  std::printf("namespace envavg::gap_constants {\n\n");
  std::printf("inline constexpr double overmollified = %.17g;\n", mphi);
  std::printf("inline constexpr double cs_bochner = %.17g;\n", cs);
  std::printf("inline constexpr double segregation = %.17g;\n", seg);
  std::printf("inline constexpr double beta_half = %.17g;\n", beta);
  std::printf("inline constexpr double cs_lambda = %.17g;\n", lam);
  std::printf("\n}  // namespace envavg::gap_constants\n");
}
