#![allow(dead_code)]

//! Independent reference routines for the oracle tests: recursive Cox-de Boor
//! evaluation, adaptive Simpson quadrature and dense linear algebra.

/// `B_{i,order}^{(deriv)}(x)` by the textbook recursion, right-continuous
/// except at the last knot.
pub fn cox_de_boor(knots: &[f64], i: usize, order: usize, x: f64, deriv: usize) -> f64 {
    if deriv > 0 {
        if order == 1 {
            return 0.0;
        }
        let k = (order - 1) as f64;
        let mut v = 0.0;
        let d1 = knots[i + order - 1] - knots[i];
        if d1 > 0.0 {
            v += k * cox_de_boor(knots, i, order - 1, x, deriv - 1) / d1;
        }
        let d2 = knots[i + order] - knots[i + 1];
        if d2 > 0.0 {
            v -= k * cox_de_boor(knots, i + 1, order - 1, x, deriv - 1) / d2;
        }
        return v;
    }
    if order == 1 {
        let last = *knots.last().unwrap();
        let (a, b) = (knots[i], knots[i + 1]);
        if (a <= x && x < b) || (x == last && b == last && a < b) {
            return 1.0;
        }
        return 0.0;
    }
    let mut v = 0.0;
    let d1 = knots[i + order - 1] - knots[i];
    if d1 > 0.0 {
        v += (x - knots[i]) / d1 * cox_de_boor(knots, i, order - 1, x, 0);
    }
    let d2 = knots[i + order] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + order] - x) / d2 * cox_de_boor(knots, i + 1, order - 1, x, 0);
    }
    v
}

/// Spline value from coefficients via [`cox_de_boor`].
pub fn spline_eval(knots: &[f64], order: usize, coef: &[f64], x: f64, deriv: usize) -> f64 {
    coef.iter()
        .enumerate()
        .map(|(i, c)| c * cox_de_boor(knots, i, order, x, deriv))
        .sum()
}

fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol.max(1e-13 * (left + right).abs()) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`, relaxed to a
/// relative 1e-13 when the integral is large.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 18)
}

/// Composite Simpson with `2k` panels on `[a, b]`.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, k: usize) -> f64 {
    let n = 2 * k;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        x.swap(col, piv);
        for r in (col + 1)..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            x[r] -= f * x[col];
        }
    }
    for r in (0..n).rev() {
        let mut s = x[r];
        for c in (r + 1)..n {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    x
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Design `t_i = i/n`, `i = 1..=n`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / n as f64).collect()
}

pub fn dense_design(knots: &[f64], order: usize, nb: usize, t: &[f64]) -> Vec<Vec<f64>> {
    t.iter()
        .map(|&x| (0..nb).map(|i| cox_de_boor(knots, i, order, x, 0)).collect())
        .collect()
}

/// `∫ B_i^{(m)} B_j^{(m)}` by adaptive Simpson on each knot span.
pub fn dense_omega(breaks: &[f64], knots: &[f64], order: usize, nb: usize, m: usize) -> Vec<Vec<f64>> {
    let mut o = vec![vec![0.0; nb]; nb];
    for i in 0..nb {
        for j in i..nb {
            let v: f64 = breaks
                .windows(2)
                .map(|w| {
                    let (lo, hi) = (w[0].next_up(), w[1].next_down());
                    adaptive_simpson(
                        |x| {
                            let x = x.clamp(lo, hi);
                            cox_de_boor(knots, i, order, x, m) * cox_de_boor(knots, j, order, x, m)
                        },
                        w[0],
                        w[1],
                        1e-12,
                    )
                })
                .sum();
            o[i][j] = v;
            o[j][i] = v;
        }
    }
    o
}

pub fn huber_rho(x: f64, k: f64) -> f64 {
    if x.abs() <= k {
        x * x
    } else {
        2.0 * k * x.abs() - k * k
    }
}

pub fn huber_psi(x: f64, k: f64) -> f64 {
    2.0 * x.clamp(-k, k)
}

/// Minimizes the Huber criterion with accelerated gradient descent on the
/// dense problem, restarting momentum whenever it points uphill.
pub fn huber_oracle(b: &[Vec<f64>], omega: &[Vec<f64>], y: &[f64], k: f64, lambda: f64) -> Vec<f64> {
    let n = y.len() as f64;
    let nb = omega.len();
    let grad = |c: &[f64]| -> Vec<f64> {
        let f = mat_vec(b, c);
        let psi: Vec<f64> = y.iter().zip(&f).map(|(yi, fi)| huber_psi(yi - fi, k)).collect();
        let oc = mat_vec(omega, c);
        (0..nb)
            .map(|j| -(0..b.len()).map(|i| b[i][j] * psi[i]).sum::<f64>() / n + 2.0 * lambda * oc[j])
            .collect()
    };
    // Lipschitz bound: largest eigenvalue of 2BᵀB/n + 2λΩ by power iteration.
    let hess: Vec<Vec<f64>> = (0..nb)
        .map(|p| {
            (0..nb)
                .map(|q| 2.0 * (0..b.len()).map(|i| b[i][p] * b[i][q]).sum::<f64>() / n + 2.0 * lambda * omega[p][q])
                .collect()
        })
        .collect();
    let mut v = vec![1.0; nb];
    let mut l = 0.0;
    for _ in 0..500 {
        let hv = mat_vec(&hess, &v);
        l = norm(&hv) / norm(&v);
        v = hv.iter().map(|x| x / norm(&hv)).collect();
    }
    let step = 1.0 / (1.01 * l);

    let mut x = vec![0.0; nb];
    let mut z = x.clone();
    let mut theta = 1.0f64;
    for _ in 0..5_000_000 {
        let g = grad(&z);
        let x_new: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let theta_new = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let dir: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        if dot(&g, &dir) > 0.0 {
            theta = 1.0;
            z = x_new.clone();
        } else {
            let beta = (theta - 1.0) / theta_new;
            z = x_new.iter().zip(&dir).map(|(a, d)| a + beta * d).collect();
            theta = theta_new;
        }
        x = x_new;
        if norm(&grad(&x)) <= 1e-10 {
            break;
        }
    }
    assert!(norm(&grad(&x)) <= 1e-10, "oracle did not converge");
    x
}

