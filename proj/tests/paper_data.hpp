#pragma once

#include <array>
#include <vector>

#include "bellcal/calibration.hpp"

namespace bellcal::testdata {

/// Seven CHSH runs: counts and durations with the observed Bell values of the same runs.
inline std::vector<ExperimentRun> chsh_runs() {
  return {
      {1, 37892989, 549605351, 540, 2.6502},   {2, 43322946, 660223194, 832, 2.6760},
      {3, 40639747, 646698789, 1112, 2.7026},  {4, 40767056, 631786125, 2000, 2.7150},
      {5, 41386494, 668668812, 3332, 2.7369},  {6, 40381162, 650423503, 5000, 2.7443},
      {7, 36888729, 590756887, 10000, 2.7609},
  };
}

inline constexpr std::array<double, 7> kLambdaCalc{0.0649, 0.0488, 0.0346, 0.0195, 0.0120, 0.0078, 0.0036};
inline constexpr std::array<double, 7> kBellCalc{2.6486, 2.6760, 2.6999, 2.7255, 2.7382, 2.7453, 2.7524};

inline constexpr double kEta = 0.1134;
inline constexpr double kSlopeA = -1.6917;
inline constexpr double kInterceptB = 2.7585;
inline constexpr double kRmse = 0.0053;

struct ExtrapolationRow {
  double events_per_second;
  double bell;
  double lambda;
};

inline constexpr std::array<ExtrapolationRow, 8> kExtrapolation{{
    {93240, 2.625, 0.0849},
    {113636, 2.6, 0.1022},
    {207254, 2.5, 0.1769},
    {322581, 2.4, 0.2614},
    {470588, 2.3, 0.3576},
    {655738, 2.2, 0.4684},
    {888889, 2.1, 0.5972},
    {1212121, 2.0, 0.7490},
}};

}  // namespace bellcal::testdata
