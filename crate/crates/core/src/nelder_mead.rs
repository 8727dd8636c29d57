//! Nelder-Mead on the real line: the simplex is a pair of points.

/// Settings for [`NelderMead1d::minimize`]. Points are clamped to
/// `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead1d {
    pub init: f64,
    pub step: f64,
    pub max_evals: usize,
    pub xtol: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evals: usize,
    /// Simplex width fell below `xtol` before the evaluation budget ran out.
    pub converged: bool,
}

impl NelderMead1d {
    /// Minimizes `f`; non-finite values are treated as `+∞`.
    pub fn minimize<F: FnMut(f64) -> f64>(&self, mut f: F) -> Minimum {
        let clamp = |x: f64| x.clamp(self.lower, self.upper);
        let mut evals = 0usize;
        let mut eval = |x: f64, evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let x0 = clamp(self.init);
        let mut x1 = clamp(self.init + self.step);
        if x1 == x0 {
            x1 = clamp(self.init - self.step);
        }
        let f0 = eval(x0, &mut evals);
        let f1 = eval(x1, &mut evals);
        // (best, worst)
        let (mut b, mut w) = if f1 < f0 { ((x1, f1), (x0, f0)) } else { ((x0, f0), (x1, f1)) };
        let mut converged = false;

        while evals < self.max_evals {
            if (b.0 - w.0).abs() < self.xtol {
                converged = true;
                break;
            }
            let xr = clamp(b.0 + (b.0 - w.0));
            let fr = eval(xr, &mut evals);
            if fr < b.1 {
                if evals < self.max_evals {
                    let xe = clamp(b.0 + 2.0 * (b.0 - w.0));
                    let fe = eval(xe, &mut evals);
                    w = if fe < fr { (xe, fe) } else { (xr, fr) };
                } else {
                    w = (xr, fr);
                }
            } else if fr < w.1 {
                // Outside contraction.
                if evals >= self.max_evals {
                    w = (xr, fr);
                } else {
                    let xc = clamp(b.0 + 0.5 * (xr - b.0));
                    let fc = eval(xc, &mut evals);
                    w = if fc <= fr { (xc, fc) } else { (xr, fr) };
                }
            } else {
                // Inside contraction; in one dimension this coincides with
                // shrinking toward the best point.
                if evals >= self.max_evals {
                    break;
                }
                let xc = clamp(b.0 + 0.5 * (w.0 - b.0));
                let fc = eval(xc, &mut evals);
                w = (xc, fc);
            }
            if w.1 < b.1 {
                core::mem::swap(&mut b, &mut w);
            }
        }
        if !converged && (b.0 - w.0).abs() < self.xtol {
            converged = true;
        }
        Minimum {
            x: b.0,
            value: b.1,
            evals,
            converged,
        }
    }
}
