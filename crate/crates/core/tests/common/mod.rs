#![allow(dead_code)]

use astro_float_num::{BigFloat, RoundingMode};
use jbessel::{ModelClass, ModelParams};

pub const NUS: [f64; 2] = [0.0, 0.3];
pub const ALPHAS: [f64; 2] = [0.0, 0.5];
pub const AS: [f64; 3] = [-0.5, -1.0, -2.0];

/// Every `(ν, α, a)` of the pinned grid at the given `β` values and classes.
pub fn grid(betas: &[f64], classes: &[ModelClass]) -> Vec<ModelParams> {
    let mut out = Vec::new();
    for &class in classes {
        for &beta in betas {
            for nu in NUS {
                for alpha in ALPHAS {
                    for a in AS {
                        out.push(ModelParams::validate(nu, alpha, beta, a, class).unwrap());
                    }
                }
            }
        }
    }
    out
}

pub fn label(p: &ModelParams) -> String {
    format!("{:?} nu={} alpha={} beta={} a={}", p.class, p.nu, p.alpha, p.beta, p.a)
}

/// `j_{0,n}`, n = 1..40, from mpmath at 30 digits.
pub const J0_ZEROS: [f64; 40] = [
    2.404_825_557_695_773,
    5.520_078_110_286_311,
    8.653_727_912_911_012,
    11.791_534_439_014_282,
    14.930_917_708_487_786,
    18.071_063_967_910_923,
    21.211_636_629_879_26,
    24.352_471_530_749_303,
    27.493_479_132_040_255,
    30.634_606_468_431_975,
    33.775_820_213_573_57,
    36.917_098_353_664_04,
    40.058_425_764_628_24,
    43.199_791_713_176_73,
    46.341_188_371_661_814,
    49.482_609_897_397_817,
    52.624_051_841_115,
    55.765_510_755_019_98,
    58.906_983_926_080_94,
    62.048_469_190_227_17,
    65.189_964_800_206_86,
    68.331_469_329_856_8,
    71.472_981_603_593_73,
    74.614_500_643_701_84,
    77.756_025_630_388_06,
    80.897_555_871_137_63,
    84.039_090_776_938_2,
    87.180_629_843_641_15,
    90.322_172_637_210_48,
    93.463_718_781_944_77,
    96.605_267_950_996_27,
    99.746_819_858_680_6,
    102.888_374_254_194_8,
    106.029_930_916_451_62,
    109.171_489_649_805_38,
    112.313_050_280_494_9,
    115.454_612_653_666_94,
    118.596_176_630_872_53,
    121.737_742_087_950_96,
    124.879_308_913_232_95,
];

const RM: RoundingMode = RoundingMode::ToEven;

/// Sign of `J_0(x)` from its power series summed in wide precision.
fn j0_is_negative(x: f64) -> bool {
    let prec = (64 + (2.0 * x / std::f64::consts::LN_2) as usize).div_ceil(64) * 64;
    let q = BigFloat::from_f64(-x * x / 4.0, prec);
    let mut term = BigFloat::from_f64(1.0, prec);
    let mut sum = term.clone();
    let mut k = 1u64;
    loop {
        let kk = BigFloat::from_f64((k * k) as f64, prec);
        term = term.mul(&q, prec, RM).div(&kk, prec, RM);
        sum = sum.add(&term, prec, RM);
        if k as f64 > x && term.abs().cmp(&BigFloat::from_f64(1e-40, prec)) == Some(-1) {
            break;
        }
        k += 1;
    }
    sum.is_negative()
}

/// `j_{0,n}` by bisection on the series sign inside `(n - ¼)π ± 0.2`.
pub fn j0_zero_oracle(n: usize) -> f64 {
    let guess = (n as f64 - 0.25) * std::f64::consts::PI;
    let (mut lo, mut hi) = (guess - 0.2, guess + 0.2);
    let lo_neg = j0_is_negative(lo);
    assert_ne!(lo_neg, j0_is_negative(hi), "bracket for j0,{n}");
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if j0_is_negative(mid) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
