use num_complex::Complex64 as C64;

use super::{DensityMatrix, Liouvillian};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on a single step, in μs. `None` lets the controller decide.
    pub max_step: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, max_step: None }
    }
}

// Dormand–Prince 5(4) tableau; the equation is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Stepper<'a> {
    l: &'a Liouvillian,
    opts: EvolveOptions,
    k: Vec<Vec<C64>>,
    tmp: Vec<C64>,
    y5: Vec<C64>,
    h: f64,
}

impl<'a> Stepper<'a> {
    fn new(l: &'a Liouvillian, n: usize, opts: EvolveOptions) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self { l, opts, k: vec![vec![zero; n]; 7], tmp: vec![zero; n], y5: vec![zero; n], h: 0.0 }
    }

    fn initial_step(&mut self, y: &[C64], span: f64) -> f64 {
        self.l.apply_vec(y, &mut self.k[0]);
        let scale = |v: C64, yi: C64| v.norm() / (self.opts.atol + self.opts.rtol * yi.norm());
        let d0 = y.iter().map(|&v| scale(v, v).powi(2)).sum::<f64>().sqrt();
        let d1 = self.k[0].iter().zip(y).map(|(&f, &v)| scale(f, v).powi(2)).sum::<f64>().sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span).max(f64::EPSILON * span.max(1.0))
    }

    /// Advances `y` from `t` to `t_end` exactly.
    fn advance(&mut self, y: &mut [C64], t: &mut f64, t_end: f64) -> Result<()> {
        let n = y.len();
        while *t < t_end {
            let remaining = t_end - *t;
            let mut h = self.h.min(remaining);
            if let Some(m) = self.opts.max_step {
                h = h.min(m);
            }
            if h < 1e-14 * t.abs().max(1.0) && remaining > h {
                return Err(Error::StepSizeUnderflow { t: *t });
            }
            self.l.apply_vec(y, &mut self.k[0]);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * (h * a);
                        }
                    }
                    self.tmp[i] = acc;
                }
                self.l.apply_vec(&self.tmp, &mut self.k[s]);
            }
            let mut err = 0.0f64;
            for i in 0..n {
                let mut hi = y[i];
                let mut e = C64::new(0.0, 0.0);
                for s in 0..7 {
                    hi += self.k[s][i] * (h * B5[s]);
                    e += self.k[s][i] * (h * (B5[s] - B4[s]));
                }
                self.y5[i] = hi;
                let sc = self.opts.atol + self.opts.rtol * y[i].norm().max(hi.norm());
                err = err.max(e.norm() / sc);
            }
            if !err.is_finite() {
                return Err(Error::StepSizeUnderflow { t: *t });
            }
            if err <= 1.0 {
                *t += h;
                if h == remaining {
                    *t = t_end;
                }
                y.copy_from_slice(&self.y5);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // A step clipped to hit t_end says nothing about the natural step size.
                if h < remaining || h >= self.h {
                    self.h = h * factor;
                }
            } else {
                self.h = h * (0.9 * err.powf(-0.25)).max(0.1);
            }
        }
        Ok(())
    }
}

/// Integrates `dρ/dt = Lρ` and samples at each of `times` (μs, non-decreasing,
/// starting at or after 0 where `rho0` is taken).
pub fn evolve(l: &Liouvillian, rho0: &DensityMatrix, times: &[f64], opts: EvolveOptions) -> Result<Vec<DensityMatrix>> {
    evolve_from(l, rho0, 0.0, times, opts)
}

/// As [`evolve`] but with `rho0` given at `t0`.
pub fn evolve_from(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t0: f64,
    times: &[f64],
    opts: EvolveOptions,
) -> Result<Vec<DensityMatrix>> {
    if l.dims() != rho0.dims() {
        return Err(Error::DimensionMismatch { expected: l.dims().total(), found: rho0.dim() });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::InvalidParameter("sample times must be ordered and not precede t0".into()));
    }
    let dims = rho0.dims();
    let mut y = rho0.as_slice().to_vec();
    let mut t = t0;
    let mut out = Vec::with_capacity(times.len());
    let mut stepper = Stepper::new(l, y.len(), opts);
    if let Some(&last) = times.last() {
        stepper.h = stepper.initial_step(&y, (last - t0).max(f64::MIN_POSITIVE));
    }
    for &ts in times {
        stepper.advance(&mut y, &mut t, ts)?;
        out.push(DensityMatrix::from_vec(dims, y.clone())?);
    }
    Ok(out)
}
