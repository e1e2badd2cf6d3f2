#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "mlpcpg/robot.hpp"
#include "mlpcpg/trajectory_log.hpp"
#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Velocity-to-step-frequency reference curve f = a + b ln(v + c). The
/// origin-adjusted parameters are used as a tracking reference; the animal
/// curve f = a + b ln(v) (v > 0) is the data source it was refitted from.
struct FrequencyCurve {
  double a = 1.066;
  double b = 0.876;
  double c = 0.289;
  static constexpr double kAnimalA = 1.314;
  static constexpr double kAnimalB = 0.762;

  double operator()(double v) const { return std::max(0.0, a + b * std::log(v + c)); }
};

/// Reference step frequency for a commanded speed; clamped at zero so the
/// curve passes through the origin.
inline double f_ref(double v) {
  if (v < 0.0) throw DomainError("f_ref: velocity must be >= 0");
  return FrequencyCurve{}(v);
}

/// Least-squares fit of f = a + b ln(v + c) with the origin constraint
/// a + b ln(c) = 0. With a eliminated the model is f = b ln(1 + v/c); b is
/// closed-form for each c and c is found by scan plus golden-section.
inline FrequencyCurve fit_origin_curve(const std::vector<double>& v,
                                       const std::vector<double>& f) {
  if (v.size() != f.size() || v.size() < 3)
    throw DomainError("fit_origin_curve: need at least 3 (v, f) samples");
  const double vmin = *std::min_element(v.begin(), v.end());
  const double vmax = *std::max_element(v.begin(), v.end());
  if (!(vmin > 0.0)) throw DomainError("fit_origin_curve: v must be > 0");
  if (vmax - vmin < 1e-12) throw DomainError("fit_origin_curve: degenerate samples");

  auto solve_b = [&](double c, double* sse_out) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double g = std::log1p(v[i] / c);
      num += f[i] * g;
      den += g * g;
    }
    const double b = num / den;
    if (sse_out) {
      double sse = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double e = f[i] - b * std::log1p(v[i] / c);
        sse += e * e;
      }
      *sse_out = sse;
    }
    return b;
  };

  // coarse scan over c, then golden-section refinement
  double best_c = 0.01, best_sse = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 600; ++k) {
    const double c = 0.005 + (3.0 - 0.005) * k / 599.0;
    double sse;
    solve_b(c, &sse);
    if (sse < best_sse) {
      best_sse = sse;
      best_c = c;
    }
  }
  double lo = std::max(0.001, best_c - 0.01), hi = best_c + 0.01;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo), s1, s2;
  solve_b(x1, &s1);
  solve_b(x2, &s2);
  for (int it = 0; it < 60; ++it) {
    if (s1 < s2) {
      hi = x2; x2 = x1; s2 = s1;
      x1 = hi - gr * (hi - lo);
      solve_b(x1, &s1);
    } else {
      lo = x1; x1 = x2; s1 = s2;
      x2 = lo + gr * (hi - lo);
      solve_b(x2, &s2);
    }
  }
  FrequencyCurve curve;
  curve.c = 0.5 * (lo + hi);
  curve.b = solve_b(curve.c, nullptr);
  curve.a = -curve.b * std::log(curve.c);
  return curve;
}

namespace detail {

/// Least-squares residual of signal against [1, cos(2*pi*f*t), sin(...)].
inline double sinusoid_residual(const VecX& x, double f, double fs) {
  const Eigen::Index n = x.size();
  MatX basis(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    basis(i, 0) = 1.0;
    basis(i, 1) = std::cos(kTwoPi * f * t);
    basis(i, 2) = std::sin(kTwoPi * f * t);
  }
  const Vec3 coef = (basis.transpose() * basis)
                        .ldlt()
                        .solve(basis.transpose() * x);
  return (x - basis * coef).squaredNorm();
}

}  // namespace detail

/// Dominant frequency per STFT window: Hann window (2 s), hop 0.25 s, mean
/// removed, zero-padded DFT peak with quadratic interpolation, then a local
/// sinusoid-fit refinement (a bare parabolic peak cannot resolve low
/// frequencies where the negative-frequency image overlaps the main lobe).
inline std::vector<double> step_frequency(const VecX& signal, double fs = 25.0) {
  const int window = static_cast<int>(std::lround(2.0 * fs));
  const int hop = std::max(1, static_cast<int>(2.0 * fs * 0.125));  // 0.25 s
  if (signal.size() < window)
    throw DomainError("step_frequency: need at least one 2 s window");

  const int nfft = 1024;
  VecX hann(window);
  for (int i = 0; i < window; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / (window - 1));

  std::vector<double> out;
  for (int start = 0; start + window <= signal.size(); start += hop) {
    VecX seg = signal.segment(start, window);
    seg.array() -= seg.mean();
    const VecX w = seg.cwiseProduct(hann);

    // zero-padded DFT magnitudes, excluding bins below 0.25 Hz
    const int kmin = static_cast<int>(std::ceil(0.25 * nfft / fs));
    const int kmax = nfft / 2;
    int peak = kmin;
    double peak_mag = -1.0;
    std::vector<double> mag(kmax + 1, 0.0);
    for (int k = kmin - 1; k <= kmax; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (int i = 0; i < window; ++i) {
        const double ang = -kTwoPi * k * i / nfft;
        acc += w[i] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      mag[k] = std::abs(acc);
      if (k >= kmin && mag[k] > peak_mag) {
        peak_mag = mag[k];
        peak = k;
      }
    }
    if (peak_mag < 1e-9 * window) {  // no rhythmic content
      out.push_back(0.0);
      continue;
    }
    double delta = 0.0;
    if (peak > kmin - 1 && peak < kmax) {
      const double a = mag[peak - 1], b = mag[peak], c = mag[peak + 1];
      const double den = a - 2.0 * b + c;
      if (std::abs(den) > 1e-30) delta = std::clamp(0.5 * (a - c) / den, -1.0, 1.0);
    }
    double f0 = (peak + delta) * fs / nfft;

    // refine by minimizing the sinusoid-fit residual near f0
    double lo = std::max(0.05, f0 - 0.3), hi = std::min(0.5 * fs, f0 + 0.3);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double r1 = detail::sinusoid_residual(seg, x1, fs);
    double r2 = detail::sinusoid_residual(seg, x2, fs);
    for (int it = 0; it < 45; ++it) {
      if (r1 < r2) {
        hi = x2; x2 = x1; r2 = r1;
        x1 = hi - gr * (hi - lo);
        r1 = detail::sinusoid_residual(seg, x1, fs);
      } else {
        lo = x1; x1 = x2; r1 = r2;
        x2 = lo + gr * (hi - lo);
        r2 = detail::sinusoid_residual(seg, x2, fs);
      }
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

/// Horizontal base displacement between consecutive touchdowns of the same
/// foot, averaged over feet and cycles. Empty when no foot completes a cycle.
inline std::vector<double> step_lengths(const TrajectoryLog& log) {
  std::vector<double> lengths;
  for (int n = 0; n < kNumLegs; ++n) {
    bool prev = true;  // treat the first row as already-in-contact
    bool have_prev_td = false;
    Eigen::Vector2d prev_td = Eigen::Vector2d::Zero();
    for (std::size_t k = 0; k < log.rows.size(); ++k) {
      const bool c = log.rows[k].contact[n];
      if (c && !prev) {  // touchdown edge
        const Eigen::Vector2d base_xy = log.rows[k].base_position.head<2>();
        if (have_prev_td) lengths.push_back((base_xy - prev_td).norm());
        prev_td = base_xy;
        have_prev_td = true;
      }
      prev = c;
    }
  }
  return lengths;
}

inline double mean_step_length(const TrajectoryLog& log) {
  const auto lengths = step_lengths(log);
  if (lengths.empty()) return 0.0;
  double sum = 0.0;
  for (double l : lengths) sum += l;
  return sum / static_cast<double>(lengths.size());
}

/// Mechanical cost of transport: sum_t sum_j |tau_j qd_j| dt / (m g d) with
/// d the horizontal displacement over the log.
inline double cost_of_transport(const TrajectoryLog& log, double mass = RobotModel::kMass,
                                double gravity = 9.81) {
  if (log.rows.size() < 2) throw DomainError("cost_of_transport: log too short");
  const Eigen::Vector2d start = log.rows.front().base_position.head<2>();
  const Eigen::Vector2d end = log.rows.back().base_position.head<2>();
  const double distance = (end - start).norm();
  if (distance <= 0.1) throw DomainError("cost_of_transport: distance below 0.1 m");
  double energy = 0.0;
  for (std::size_t k = 1; k < log.rows.size(); ++k) {
    const double dt = log.rows[k].time - log.rows[k - 1].time;
    energy += log.rows[k].tau.cwiseProduct(log.rows[k].qd).cwiseAbs().sum() * dt;
  }
  return energy / (mass * gravity * distance);
}

struct ContactDiagram {
  std::vector<std::array<bool, kNumLegs>> grid;  // one entry per log row
  std::array<double, kNumLegs> duty_factor{};    // stance fraction per cycle
};

/// Contact raster plus per-foot duty factors (stance fraction between
/// consecutive touchdowns, averaged over cycles; feet without a complete
/// cycle report their overall stance fraction).
inline ContactDiagram contact_diagram(const TrajectoryLog& log) {
  ContactDiagram d;
  d.grid.reserve(log.rows.size());
  for (const auto& r : log.rows) d.grid.push_back(r.contact);

  for (int n = 0; n < kNumLegs; ++n) {
    std::vector<std::size_t> touchdowns;
    bool prev = true;
    for (std::size_t k = 0; k < log.rows.size(); ++k) {
      const bool c = log.rows[k].contact[n];
      if (c && !prev) touchdowns.push_back(k);
      prev = c;
    }
    double duty_sum = 0.0;
    int cycles = 0;
    for (std::size_t i = 0; i + 1 < touchdowns.size(); ++i) {
      int stance = 0;
      const std::size_t len = touchdowns[i + 1] - touchdowns[i];
      for (std::size_t k = touchdowns[i]; k < touchdowns[i + 1]; ++k)
        if (log.rows[k].contact[n]) ++stance;
      duty_sum += static_cast<double>(stance) / static_cast<double>(len);
      ++cycles;
    }
    if (cycles > 0) {
      d.duty_factor[n] = duty_sum / cycles;
    } else {
      int stance = 0;
      for (const auto& r : log.rows)
        if (r.contact[n]) ++stance;
      d.duty_factor[n] =
          log.rows.empty() ? 0.0 : static_cast<double>(stance) / log.rows.size();
    }
  }
  return d;
}

/// Aggregate per-rollout gait quantities.
struct GaitMetrics {
  std::vector<double> window_frequency;  // dominant step frequency per window
  double mean_frequency = 0.0;
  double mean_speed = 0.0;               // horizontal base speed
  double step_length = 0.0;
  double cot = 0.0;
  bool cot_valid = false;
  std::array<double, kNumLegs> duty_factor{};
  double mean_hip_amplitude = 0.0;   // time-mean CPG r over hip pitch joints
  double mean_knee_amplitude = 0.0;  // over knee joints
};

/// Knee joint angle of the given leg is the default analysis channel (the
/// largest rhythmic amplitude).
inline GaitMetrics analyze_gait(const TrajectoryLog& log, int signal_joint = 2,
                                double fs = 25.0) {
  GaitMetrics m;
  if (log.rows.empty()) return m;
  VecX signal(static_cast<Eigen::Index>(log.rows.size()));
  double speed_sum = 0.0, hip_amp = 0.0, knee_amp = 0.0;
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    signal[static_cast<Eigen::Index>(k)] = log.rows[k].q[signal_joint];
    speed_sum += log.rows[k].base_velocity.head<2>().norm();
    for (int leg = 0; leg < kNumLegs; ++leg) {
      hip_amp += log.rows[k].cpg_r[3 * leg + 1];
      knee_amp += log.rows[k].cpg_r[3 * leg + 2];
    }
  }
  m.mean_speed = speed_sum / static_cast<double>(log.rows.size());
  m.mean_hip_amplitude = hip_amp / (4.0 * static_cast<double>(log.rows.size()));
  m.mean_knee_amplitude = knee_amp / (4.0 * static_cast<double>(log.rows.size()));
  if (signal.size() >= static_cast<Eigen::Index>(std::lround(2.0 * fs))) {
    m.window_frequency = step_frequency(signal, fs);
    double fsum = 0.0;
    for (double f : m.window_frequency) fsum += f;
    m.mean_frequency =
        m.window_frequency.empty() ? 0.0 : fsum / m.window_frequency.size();
  }
  m.step_length = mean_step_length(log);
  try {
    m.cot = cost_of_transport(log);
    m.cot_valid = true;
  } catch (const DomainError&) {
    m.cot_valid = false;
  }
  m.duty_factor = contact_diagram(log).duty_factor;
  return m;
}

}  // namespace mlpcpg
