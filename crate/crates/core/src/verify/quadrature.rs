//! Adaptive Gauss-Kronrod (7, 15) quadrature on intervals and on the line.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{MixError, Result};

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
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Total number of panels allowed across one call.
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            max_panels: 10_000,
        }
    }
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive integral over `[a, b]`, bisecting the panel with the largest
/// error estimate. `budget` is decremented per panel and shared between
/// calls. Returns `(value, error estimate)`.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
    budget: &mut usize,
) -> Result<(f64, f64)> {
    let mut heap = BinaryHeap::new();
    let (value, err) = gk15(&mut f, a, b);
    *budget = budget.saturating_sub(1);
    heap.push(Panel { a, b, value, err });
    let (mut total, mut total_err) = (value, err);
    loop {
        if !total.is_finite() {
            return Ok((total, f64::INFINITY));
        }
        if total_err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            return Ok((total, total_err));
        }
        if *budget < 2 {
            return Err(MixError::Quadrature { achieved: total_err });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gk15(&mut f, worst.a, mid);
        let (rv, re) = gk15(&mut f, mid, worst.b);
        *budget -= 2;
        total += lv + rv - worst.value;
        total_err += le + re - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: lv, err: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, err: re });
    }
}

/// Integral over the whole line of a nonnegative `f`: the core `[lo, hi]`
/// plus outward tail panels of doubling width starting at `width`.
///
/// Returns `+inf` when the integrand is not finite or when the tail panels
/// stop shrinking.
pub fn integrate_line(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    width: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    let mut budget = cfg.max_panels;
    let (core, _) = integrate(&mut f, lo, hi, cfg, &mut budget)?;
    if !core.is_finite() {
        return Ok(f64::INFINITY);
    }
    let mut total = core;
    for dir in [1.0, -1.0] {
        let mut edge = if dir > 0.0 { hi } else { lo };
        let mut w = width;
        let mut prev = f64::INFINITY;
        let mut growing = 0;
        let mut quiet = 0;
        for _ in 0..64 {
            let far = edge + dir * w;
            let (a, b) = if dir > 0.0 { (edge, far) } else { (far, edge) };
            let (panel, _) = integrate(&mut f, a, b, cfg, &mut budget)?;
            if !panel.is_finite() {
                return Ok(f64::INFINITY);
            }
            total += panel;
            let negligible = panel.abs() <= 1e-3 * cfg.abs_tol.max(cfg.rel_tol * total.abs());
            quiet = if negligible { quiet + 1 } else { 0 };
            if quiet >= 2 {
                break;
            }
            growing = if panel.abs() >= 0.9 * prev && !negligible { growing + 1 } else { 0 };
            if growing >= 6 {
                return Ok(f64::INFINITY);
            }
            prev = panel.abs();
            edge = far;
            w *= 2.0;
        }
        if quiet < 2 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(total)
}
