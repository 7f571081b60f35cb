#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bgtse/waveform.hpp"

namespace bgtse {

// Cap applied to infinite metric values when stored in reports/aggregates.
constexpr double kMetricDbCap = 200.0;

// One system output scored against one reference. Infinite raw values are
// capped at +-200 dB and flagged so aggregates stay finite.
struct MetricResult {
  double sdr_db = 0.0;
  double si_sdr_db = 0.0;
  double si_sdr_improvement_db = 0.0;
  bool sdr_capped = false;
  bool si_sdr_capped = false;
  bool improvement_capped = false;

  // "" when finite; otherwise semicolon-joined subset of
  // sdr_inf / si_sdr_inf / si_sdri_inf (sign follows the capped value).
  std::string flags() const;
};

// SDR = 10 log10(||ref||^2 / ||ref - est||^2). est == ref gives +inf.
double sdr(const Waveform& ref, const Waveform& est);

// Scale-invariant SDR (Le Roux et al.): project est onto ref, score the
// residual. Returns +inf when est is an exact rescaling of ref, -inf when
// orthogonal. zero_mean subtracts the sample mean from both first.
double si_sdr(const Waveform& ref, const Waveform& est, bool zero_mean = false);

// si_sdr(ref, est) - si_sdr(ref, mixture); mixture is the unprocessed
// reference channel.
double si_sdr_improvement(const Waveform& ref, const Waveform& est, const Waveform& mixture,
                          bool zero_mean = false);

// Oracle output selection: argmax of si_sdr over outputs, ties broken by the
// lowest index. All-zero outputs score -inf instead of erroring.
std::pair<Eigen::Index, double> pit_select(const std::vector<Waveform>& outputs,
                                           const Waveform& ref);

// Bundles the three metrics with capping/flagging applied.
MetricResult measure(const Waveform& ref, const Waveform& est, const Waveform& mixture);

}  // namespace bgtse
