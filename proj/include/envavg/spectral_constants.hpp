#pragma once

// Generated by tools/calibrate_constants.cpp for the configuration in envavg::reference.

namespace envavg::gap_constants {

inline constexpr double overmollified = 2.9954082610867023;
inline constexpr double cs_bochner = 1161.2979853909765;
inline constexpr double segregation = 48108877.86700011;
inline constexpr double beta_half = 0.030391858549718209;
inline constexpr double cs_lambda = 0.075864165575895828;

}  // namespace envavg::gap_constants
