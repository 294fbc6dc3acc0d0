//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` to relative accuracy `rel_tol` (absolute floor `1e-300`).
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate meets the tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut intervals = vec![{
        let (v, e) = kronrod(&f, lo, hi);
        (lo, hi, v, e)
    }];
    for _ in 0..20_000 {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if !total.is_finite() {
            return Err(Error::DomainError("integrand is not finite".into()));
        }
        if err <= rel_tol * total.abs() || err <= 1e-300 {
            return Ok(sign * total);
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (l, r, _, _) = intervals.swap_remove(worst);
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            // Interval can no longer be split in floating point.
            let total: f64 = intervals.iter().map(|iv| iv.2).sum::<f64>() + kronrod(&f, l, r).0;
            return Ok(sign * total);
        }
        let (v1, e1) = kronrod(&f, l, m);
        let (v2, e2) = kronrod(&f, m, r);
        intervals.push((l, m, v1, e1));
        intervals.push((m, r, v2, e2));
    }
    Err(Error::DomainError("quadrature did not converge".into()))
}
