// Generated by make_oracles.py; do not edit.
#pragma once

namespace oracle {

struct IdCase { double k, vgs, vth, vds, lambda, id; };
inline constexpr IdCase kDrainCurrent[] = {
    {2e-3, 0.6, 0.35, 0.5, 2.5, 1.4062500000000000e-4},
    {5e-3, 0.9, 0.35, 0.2, 0.25, 4.7250000000000000e-4},
    {1e-3, 0.55, 0.35, 0.2, 0, 2.0000000000000000e-5},
    {8e-3, 0.3, 0.35, 0.5, 2.5, 0.0},
    {3.3e-3, 1.05, 0.35, 0.95, 1.2, 1.7301900000000000e-3},
};

// A synthetic device set; gm and gds derived from (id, vov).
struct DeviceCase { double id[8]; double vov[8]; };
struct MetricCase {
  DeviceCase dev; double ibias;
  double gm1, gds2, av_linear, av_db, ugb, f3db, phase_margin, slew_rate, power, noise_psd;
};
inline constexpr MetricCase kMetrics[] = {
    {{{20e-6, 20e-6, 20e-6, 20e-6, 40e-6, 60e-6, 60e-6, 25e-6}, {0.15, 0.15, 0.2, 0.2, 0.25, 0.18, 0.25, 0.25}}, 25e-6,
     2.6666666666666667e-4, 5.0000000000000000e-5, 5.9259259259259259, 1.5455124369938749e+1, 7.0735530263064594e+8, 1.1936620731892150e+8, 1.5068488159492210e+1, 3.0000000000000000e+8, 1.3750000000000000e-4, 1.4746261136301635e-8},
    {{{5e-6, 5e-6, 5e-6, 5e-6, 10e-6, 30e-6, 30e-6, 8e-6}, {0.1, 0.1, 0.3, 0.3, 0.2, 0.1, 0.3, 0.2}}, 8e-6,
     1.0000000000000000e-4, 1.2500000000000000e-5, 1.6000000000000000e+1, 2.4082399653118496e+1, 2.6525823848649223e+8, 1.6578639905405764e+7, 5.1483073692897237e+1, 1.5000000000000000e+8, 5.2800000000000000e-5, 2.1019221679215432e-8},
    {{{33e-6, 33e-6, 33e-6, 33e-6, 66e-6, 120e-6, 120e-6, 30e-6}, {0.2, 0.2, 0.12, 0.12, 0.3, 0.22, 0.15, 0.3}}, 30e-6,
     3.3000000000000000e-4, 8.2500000000000000e-5, 3.6363636363636364, 1.1213346123394747e+1, 8.7535218700542435e+8, 2.4072185142649170e+8, 2.7931693557496400e+1, 6.0000000000000000e+8, 2.3760000000000000e-4, 1.6363441884366208e-8},
};

// Reference design solved at three common-mode voltages.
struct OpCase {
  double vcm;
  double v_bias, v_tail, v_d1, v_first, v_out;
  double id[8];
  double av_db, ugb, f3db, phase_margin, slew_rate, power, noise_psd;
};
inline constexpr OpCase kReferenceOp[] = {
    {0.6,
     4.6440745354286672e-1, 2.0450389334374958e-1, 7.0985739770380789e-1, 7.0985739770380789e-1, 1.0485767908732522e-1,
     {1.0385013201080074e-5, 1.0385013201080074e-5, 1.0385013201080074e-5, 1.0385013201080074e-5, 2.0770026402160147e-5, 2.6111582483458597e-5, 2.6111582483458597e-5, 2.9700000000000000e-5},
     3.8850804530605255e+1, 1.2109652938836762e+9, 1.3822655043802178e+7, 2.1190313947499964e+1, 1.3055791241729299e+8, 8.4239769774180619e-5, 1.2443660361533529e-8},
    {0.8,
     4.6440745354286672e-1, 3.9133863086193819e-1, 7.0423356481262864e-1, 7.0423356481262864e-1, 2.0491590886966276e-1,
     {1.3594721586603049e-5, 1.3594721586603049e-5, 1.3594721586603049e-5, 1.3594721586603049e-5, 2.7189443173206097e-5, 3.1506181802660440e-5, 3.1506181802660440e-5, 2.9700000000000000e-5},
     3.5504414033291561e+1, 1.2294673492156281e+9, 2.0629860823162691e+7, 2.3100454954015566e+1, 1.5753090901330220e+8, 9.7235187473453191e-5, 1.2771965400448051e-8},
    {1.0,
     4.6440745354286672e-1, 5.7417070525676134e-1, 6.9937538036352829e-1, 6.9937538036352829e-1, 2.9097435103103107e-1,
     {1.6735666627781458e-5, 1.6735666627781458e-5, 1.6735666627781458e-5, 1.6735666627781458e-5, 3.3471333255562917e-5, 3.5988412943607354e-5, 3.5988412943607354e-5, 2.9700000000000000e-5},
     3.2398423852813125e+1, 1.1708597487591199e+9, 2.8092066230925109e+7, 2.6770935752365118e+1, 1.7994206471803677e+8, 1.0907572081908730e-4, 1.3693501597858173e-8},
};

}  // namespace oracle
