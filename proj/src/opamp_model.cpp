#include <algorithm>
#include <cmath>
#include <numbers>

#include "hpso/opamp.hpp"

namespace hpso::opamp {

namespace {

constexpr double kKclTolerance = 1e-12;  // A
constexpr double kBoltzmann = 1.380649e-23;

// Root of a monotone f on [lo, hi] with f(lo) and f(hi) of opposite sign,
// bisected down to adjacent doubles.
template <class F>
double bisect(F&& f, double lo, double hi) {
  const bool rising = f(lo) < 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == rising) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

DeviceOp device_op(double id, double vgs, double vds, double vth, double lambda) {
  DeviceOp d;
  d.id = id;
  d.vgs = vgs;
  d.vds = vds;
  d.vov = vgs - vth;
  // gm from the square law; the (1 + lambda*V_DS) factor is deliberately left out.
  d.gm = d.vov > 0.0 ? 2.0 * id / d.vov : 0.0;
  d.gds = lambda * id;
  return d;
}

}  // namespace

DesignVector DesignVector::from_position(std::span<const double> x) {
  if (x.size() != kDimension) {
    throw std::invalid_argument("design vector needs 6 entries, got " + std::to_string(x.size()));
  }
  return {x[0], x[1], x[2], x[3], x[4], x[5]};
}

double DesignVector::width(std::size_t device) const {
  switch (device) {
    case 0:
    case 1:
      return w12;
    case 2:
    case 3:
      return w34;
    case 4:
    case 7:
      return w58;
    case 5:
      return w6;
    case 6:
      return w7;
    default:
      throw std::out_of_range("device index " + std::to_string(device));
  }
}

void DesignVector::validate() const {
  for (double v : to_position()) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("design vector entries must be positive and finite");
    }
  }
}

DesignVector reference_design() { return {266e-9, 783e-9, 126e-9, 1115e-9, 191e-9, 29.7e-6}; }

void TechParams::validate() const {
  if (!(vdd > 0.0)) throw SpecError("vdd must be positive");
  if (!(channel_length > 0.0)) throw SpecError("channel_length must be positive");
  if (!(mu_n_cox > 0.0)) throw SpecError("mu_n_cox must be positive");
  if (!(mu_p_cox > 0.0)) throw SpecError("mu_p_cox must be positive");
  if (!(vth_n > 0.0)) throw SpecError("vth_n must be positive");
  if (!(vth_p < 0.0)) throw SpecError("vth_p must be negative");
  if (!(lambda_n >= 0.0)) throw SpecError("lambda_n must be non-negative");
  if (!(lambda_p >= 0.0)) throw SpecError("lambda_p must be non-negative");
  if (!(gamma_noise >= 0.0)) throw SpecError("gamma_noise must be non-negative");
  if (!(cc_ratio > 0.0 && cc_ratio <= 1.0)) throw SpecError("cc_ratio must lie in (0, 1]");
  if (!(temperature > 0.0)) throw SpecError("temperature must be positive");
}

double area_fitness(const DesignVector& dv, const TechParams& tech) {
  return (2.0 * dv.w12 + 2.0 * dv.w34 + 2.0 * dv.w58 + dv.w6 + dv.w7) * tech.channel_length;
}

double drain_current(double k, double vgs, double vth, double vds, double lambda) {
  const double vov = vgs - vth;
  if (vov <= 0.0 || vds <= 0.0) return 0.0;
  if (vds >= vov) return 0.5 * k * vov * vov * (1.0 + lambda * vds);
  return k * (vov * vds - 0.5 * vds * vds) * (1.0 + lambda * vds);
}

std::array<double, 5> OperatingPoint::kcl_residuals(double ibias) const {
  const auto& d = devices;
  return {ibias - d[7].id, d[0].id + d[1].id - d[4].id, d[2].id - d[0].id, d[3].id - d[1].id,
          d[5].id - d[6].id};
}

OperatingPoint solve_operating_point(const DesignVector& dv, const TechParams& tech, double vcm,
                                     [[maybe_unused]] double c_load) {
  using Kind = SolverError::Kind;
  const double L = tech.channel_length;
  const double vdd = tech.vdd;
  const double vtn = tech.vth_n;
  const double vtp = -tech.vth_p;
  const double ln = tech.lambda_n;
  const double lp = tech.lambda_p;
  const double k12 = tech.mu_n_cox * dv.w12 / L;
  const double k34 = tech.mu_p_cox * dv.w34 / L;
  const double k58 = tech.mu_n_cox * dv.w58 / L;
  const double k6 = tech.mu_p_cox * dv.w6 / L;
  const double k7 = tech.mu_n_cox * dv.w7 / L;

  if (!(dv.ibias > 0.0)) throw SolverError(Kind::cutoff, "cutoff: M8 carries no bias current");
  if (vcm <= vtn) throw SolverError(Kind::cutoff, "cutoff: M1/M2 have V_GS <= V_th at vcm");

  // M8, diode-connected: ibias = I_D(V_GS, V_DS = V_GS).
  auto bias_residual = [&](double v) { return drain_current(k58, v, vtn, v, ln) - dv.ibias; };
  if (bias_residual(vdd) < 0.0) {
    throw SolverError(Kind::no_convergence, "no-convergence: M8 cannot carry ibias within vdd");
  }
  const double vgs8 = bisect(bias_residual, vtn, vdd);

  auto tail_current = [&](double vs) { return drain_current(k58, vgs8, vtn, vs, ln); };
  auto mirror_current = [&](double vsg3) { return drain_current(k34, vsg3, vtp, vsg3, lp); };
  const double vs_max = vcm - vtn;
  auto tail_voltage = [&](double i5) {
    if (tail_current(vs_max) <= i5) return vs_max;
    return bisect([&](double vs) { return tail_current(vs) - i5; }, 0.0, vs_max);
  };

  // First stage: M3's V_SG fixes I1; the tail node follows from M5 carrying
  // 2*I1; M1 must then conduct the same I1.
  auto first_stage_residual = [&](double vsg3) {
    const double i1 = mirror_current(vsg3);
    const double vs = tail_voltage(2.0 * i1);
    return drain_current(k12, vcm - vs, vtn, vdd - vsg3 - vs, ln) - i1;
  };
  const double vsg3 = bisect(first_stage_residual, vtp, vdd);
  const double i1 = mirror_current(vsg3);
  const double vs = tail_voltage(2.0 * i1);
  const double vd1 = vdd - vsg3;

  // Node 1: M4 (gate shared with M3) against M2.
  auto node1_residual = [&](double v1) {
    return drain_current(k34, vsg3, vtp, vdd - v1, lp) - drain_current(k12, vcm - vs, vtn, v1 - vs, ln);
  };
  const double v1 = bisect(node1_residual, vs, vdd);

  const double vsg6 = vdd - v1;
  auto output_residual = [&](double vo) {
    return drain_current(k6, vsg6, vtp, vdd - vo, lp) - drain_current(k7, vgs8, vtn, vo, ln);
  };
  const double vout = bisect(output_residual, 0.0, vdd);

  OperatingPoint op;
  op.vcm = vcm;
  op.v_bias = vgs8;
  op.v_tail = vs;
  op.v_d1 = vd1;
  op.v_first = v1;
  op.v_out = vout;

  auto& d = op.devices;
  d[0] = device_op(drain_current(k12, vcm - vs, vtn, vd1 - vs, ln), vcm - vs, vd1 - vs, vtn, ln);
  d[1] = device_op(drain_current(k12, vcm - vs, vtn, v1 - vs, ln), vcm - vs, v1 - vs, vtn, ln);
  d[2] = device_op(mirror_current(vsg3), vsg3, vsg3, vtp, lp);
  d[3] = device_op(drain_current(k34, vsg3, vtp, vdd - v1, lp), vsg3, vdd - v1, vtp, lp);
  d[4] = device_op(tail_current(vs), vgs8, vs, vtn, ln);
  d[5] = device_op(drain_current(k6, vsg6, vtp, vdd - vout, lp), vsg6, vdd - vout, vtp, lp);
  d[6] = device_op(drain_current(k7, vgs8, vtn, vout, ln), vgs8, vout, vtn, ln);
  d[7] = device_op(drain_current(k58, vgs8, vtn, vgs8, ln), vgs8, vgs8, vtn, ln);

  for (std::size_t m = 0; m < kDeviceCount; ++m) {
    if (!(d[m].vov > 0.0) || !(d[m].id > 0.0)) {
      throw SolverError(Kind::cutoff, "cutoff: M" + std::to_string(m + 1) + " is off");
    }
  }
  for (double r : op.kcl_residuals(dv.ibias)) {
    if (!(std::abs(r) < kKclTolerance)) {
      throw SolverError(Kind::no_convergence, "no-convergence: KCL residual above 1 pA");
    }
  }
  return op;
}

SaturationFlags check_saturation(const OperatingPoint& op) {
  SaturationFlags flags{};
  for (std::size_t m = 0; m < kDeviceCount; ++m) {
    flags[m] = std::abs(op.devices[m].vds) >= std::abs(op.devices[m].vov);
  }
  return flags;
}

AcMetrics small_signal_unchecked(const OperatingPoint& op, const TechParams& tech, double c_load) {
  const auto& m1 = op.device(1);
  const double gm6 = op.device(6).gm;
  const double cc = tech.cc(c_load);
  const double two_pi = 2.0 * std::numbers::pi;

  AcMetrics ac;
  ac.av_linear = m1.gm / (op.device(2).gds + op.device(4).gds) * gm6 /
                 (op.device(6).gds + op.device(7).gds);
  ac.av_db = 20.0 * std::log10(ac.av_linear);
  ac.ugb = m1.gm / (two_pi * cc);
  const double p2 = gm6 / (two_pi * c_load);
  const double rhp_zero = gm6 / (two_pi * cc);
  const double deg = 180.0 / std::numbers::pi;
  ac.phase_margin = 90.0 - std::atan(ac.ugb / p2) * deg - std::atan(ac.ugb / rhp_zero) * deg;
  // Dominant pole 1/(2*pi*R1*R2*gm6*Cc) equals UGB/A_v.
  ac.f3db = ac.ugb / ac.av_linear;
  return ac;
}

AcMetrics small_signal(const OperatingPoint& op, const TechParams& tech, double c_load) {
  auto ac = small_signal_unchecked(op, tech, c_load);
  if (!(ac.phase_margin > 0.0)) {
    throw UnstableError("unstable: phase margin " + std::to_string(ac.phase_margin) + " deg");
  }
  return ac;
}

SlewPower slew_and_power(const DesignVector& dv, const OperatingPoint& op, const TechParams& tech,
                         double c_load) {
  const double i5 = op.device(5).id;
  const double i6 = op.device(6).id;
  return {std::min(i5 / tech.cc(c_load), i6 / c_load), tech.vdd * (dv.ibias + i5 + i6)};
}

double input_noise_psd(const OperatingPoint& op, const TechParams& tech, [[maybe_unused]] double freq) {
  const double gm1 = op.device(1).gm;
  const double gm3 = op.device(3).gm;
  const double s = 2.0 * 4.0 * kBoltzmann * tech.temperature * tech.gamma_noise / gm1 * (1.0 + gm3 / gm1);
  return std::sqrt(s);
}

}  // namespace hpso::opamp
