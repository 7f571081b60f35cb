#include "bgtse/metrics.hpp"

#include <cmath>
#include <limits>

#include "bgtse/errors.hpp"

namespace bgtse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_lengths(const Waveform& ref, const Waveform& est, const char* what) {
  if (ref.length() != est.length())
    throw ConfigError(std::string(what) + ": signal lengths differ");
  if (ref.length() < 1) throw ConfigError(std::string(what) + ": empty signals");
}

double log_ratio_db(double num, double den) {
  if (den <= 0.0) return kInf;
  if (num <= 0.0) return -kInf;
  return 10.0 * std::log10(num / den);
}

double cap_db(double v, bool& flagged) {
  if (std::isinf(v)) {
    flagged = true;
    return v > 0.0 ? kMetricDbCap : -kMetricDbCap;
  }
  return v;
}

}  // namespace

std::string MetricResult::flags() const {
  std::string out;
  auto add = [&out](const char* tag) {
    if (!out.empty()) out += ';';
    out += tag;
  };
  if (sdr_capped) add("sdr_inf");
  if (si_sdr_capped) add("si_sdr_inf");
  if (improvement_capped) add("si_sdri_inf");
  return out;
}

double sdr(const Waveform& ref, const Waveform& est) {
  check_lengths(ref, est, "sdr");
  const double ref_energy = ref.samples.squaredNorm();
  if (!(ref_energy > 0.0)) throw ConfigError("sdr: zero reference");
  const double err_energy = (ref.samples - est.samples).squaredNorm();
  return log_ratio_db(ref_energy, err_energy);
}

double si_sdr(const Waveform& ref, const Waveform& est, bool zero_mean) {
  check_lengths(ref, est, "si_sdr");
  Eigen::VectorXd r = ref.samples;
  Eigen::VectorXd e = est.samples;
  if (zero_mean) {
    r.array() -= r.mean();
    e.array() -= e.mean();
  }
  const double ref_energy = r.squaredNorm();
  const double est_energy = e.squaredNorm();
  if (!(ref_energy > 0.0)) throw ConfigError("si_sdr: zero reference");
  if (!(est_energy > 0.0)) throw ConfigError("si_sdr: zero estimate");

  // alpha = <est, ref> / ||ref||^2; score ||alpha ref||^2 / ||est - alpha ref||^2
  const double alpha = e.dot(r) / ref_energy;
  const double sig_energy = alpha * alpha * ref_energy;
  const double err_energy = (e - alpha * r).squaredNorm();
  return log_ratio_db(sig_energy, err_energy);
}

double si_sdr_improvement(const Waveform& ref, const Waveform& est, const Waveform& mixture,
                          bool zero_mean) {
  const double est_score = si_sdr(ref, est, zero_mean);
  const double mix_score = si_sdr(ref, mixture, zero_mean);
  const double diff = est_score - mix_score;
  return std::isnan(diff) ? 0.0 : diff;  // both infinite with the same sign
}

std::pair<Eigen::Index, double> pit_select(const std::vector<Waveform>& outputs,
                                           const Waveform& ref) {
  if (outputs.empty()) throw ConfigError("pit_select: no outputs");
  Eigen::Index best = 0;
  double best_score = -kInf;
  for (size_t i = 0; i < outputs.size(); ++i) {
    const double score = outputs[i].samples.squaredNorm() > 0.0
                             ? si_sdr(ref, outputs[i])
                             : -kInf;
    if (score > best_score) {
      best_score = score;
      best = static_cast<Eigen::Index>(i);
    }
  }
  return {best, best_score};
}

MetricResult measure(const Waveform& ref, const Waveform& est, const Waveform& mixture) {
  MetricResult m;
  m.sdr_db = cap_db(sdr(ref, est), m.sdr_capped);
  m.si_sdr_db = cap_db(si_sdr(ref, est), m.si_sdr_capped);
  m.si_sdr_improvement_db =
      cap_db(si_sdr_improvement(ref, est, mixture), m.improvement_capped);
  return m;
}

}  // namespace bgtse
