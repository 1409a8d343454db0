use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Arrangement, Compiled};
use crate::error::{invalid, Result};

/// Independent stream seed for worker `stream` (splitmix64 finaliser).
pub(crate) fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit direction supported on `free`: a random axis half of the time,
/// otherwise Gaussian.
pub(crate) fn random_direction(rng: &mut ChaCha8Rng, free: &[usize], d: &mut [f64]) {
    d.iter_mut().for_each(|v| *v = 0.0);
    if free.len() == 1 || rng.random::<bool>() {
        let k = free[rng.random_range(0..free.len())];
        d[k] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    let mut norm = 0.0;
    for &k in free {
        let g: f64 = rng.sample(StandardNormal);
        d[k] = g;
        norm += g * g;
    }
    let norm = norm.sqrt();
    if norm == 0.0 {
        d[free[0]] = 1.0;
    } else {
        d.iter_mut().for_each(|v| *v /= norm);
    }
}

const BURN_IN: usize = 30;
const THIN: usize = 3;

/// Seeded hit-and-run inside `D` and the box `[lo, hi]`, moving only the
/// coordinates in `free`. `start` must be in the open domain.
pub(crate) fn hit_and_run(
    comp: &Compiled,
    start: &[f64],
    free: &[usize],
    lo: &[f64],
    hi: &[f64],
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    let mut x = start.to_vec();
    let mut d = vec![0.0; x.len()];
    let mut cand = vec![0.0; x.len()];
    let mut out = Vec::with_capacity(count);
    let mut step = 0usize;
    while out.len() < count {
        random_direction(&mut rng, free, &mut d);
        let ch = comp.chord(&x, &d, lo, hi);
        if ch.lo.is_finite() && ch.hi.is_finite() && ch.hi > ch.lo {
            let s = ch.lo + (ch.hi - ch.lo) * rng.random::<f64>();
            for k in 0..x.len() {
                cand[k] = x[k] + s * d[k];
            }
            if comp.is_open(&cand) {
                x.copy_from_slice(&cand);
            }
        }
        step += 1;
        if step > BURN_IN && step.is_multiple_of(THIN) {
            out.push(x.clone());
        }
    }
    out
}

/// Deterministic interior samples of `D` within the arrangement window.
pub fn sample_region(arr: &Arrangement, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(invalid("sample count must be positive"));
    }
    let start = arr.seed_f64();
    if !arr.compiled().is_open(&start) {
        return Err(invalid("seed point is not interior; D cannot be sampled"));
    }
    let w = arr.window();
    let free: Vec<usize> = (0..arr.n).collect();
    Ok(hit_and_run(arr.compiled(), &start, &free, &w.lo, &w.hi, count, seed))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySample {
    pub primitive: usize,
    pub point: Vec<f64>,
}

pub(crate) const ROOT_TOL: f64 = 1e-12;

/// Refines the exit point `x + s0 d` of constraint `j` by bisection until
/// `|f_j| < 1e-12` (at most 200 halvings). `f_j(x) > 0` is required.
pub(crate) fn refine_root(comp: &Compiled, j: usize, x: &[f64], d: &[f64], s0: f64) -> Option<Vec<f64>> {
    let at = |s: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + s * b).collect() };
    let g = |s: f64| comp.f[j].eval(&at(s));
    let v0 = g(s0);
    if v0.abs() < ROOT_TOL {
        return Some(at(s0));
    }
    let (mut inside, mut outside) = if v0 > 0.0 {
        let mut delta = 1e-12 * s0.abs().max(1.0);
        let mut out = None;
        for _ in 0..80 {
            let s = s0 + delta;
            if g(s) < 0.0 {
                out = Some(s);
                break;
            }
            delta *= 2.0;
        }
        (s0, out?)
    } else {
        (0.0, s0)
    };
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        let v = g(mid);
        if v.abs() < ROOT_TOL {
            return Some(at(mid));
        }
        if v > 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    None
}

/// Points on each `S_j` reached from interior samples, `per_primitive` per
/// constraint when the budget allows. Directions aim down the gradient of
/// the target constraint with random perturbation.
pub fn sample_boundary(
    arr: &Arrangement,
    interior: &[Vec<f64>],
    per_primitive: usize,
    seed: u64,
) -> Vec<BoundarySample> {
    let comp = arr.compiled();
    let w = arr.window();
    let mut out = Vec::new();
    if interior.is_empty() {
        return out;
    }
    let n = arr.n;
    for j in 0..comp.l() {
        let mut rng = rng(sub_seed(seed, j as u64));
        let mut got = 0;
        let mut d = vec![0.0; n];
        for _ in 0..per_primitive * 6 {
            if got >= per_primitive {
                break;
            }
            let x = &interior[rng.random_range(0..interior.len())];
            let g = comp.gradient(j, x);
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut norm = 0.0;
            for k in 0..n {
                let noise: f64 = rng.sample(StandardNormal);
                d[k] = if gn > 0.0 { -g[k] / gn } else { 0.0 } + 0.35 * noise / (n as f64).sqrt();
                norm += d[k] * d[k];
            }
            let norm = norm.sqrt();
            d.iter_mut().for_each(|v| *v /= norm);
            let ch = comp.chord(x, &d, &w.lo, &w.hi);
            if ch.hi_by == Some(j) {
                if let Some(p) = refine_root(comp, j, x, &d, ch.hi) {
                    out.push(BoundarySample { primitive: j, point: p });
                    got += 1;
                }
            }
        }
    }
    out
}
