//! Exact chain solver for the `||phi||_inf + Lip(phi) <= 1` ball.
//!
//! For a fixed sup-budget `a` the value function of the first `k` atoms is a
//! concave piecewise-linear function of `u in [-a, a]`, kept as its vertex
//! list. The optimal value is concave and piecewise linear in `a`, and is
//! maximised by golden-section search.

use crate::error::{Error, Result};

const GOLDEN_ITERATIONS: usize = 96;

fn argmax(verts: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, v) in verts.iter().enumerate() {
        if v.1 > verts[best].1 {
            best = i;
        }
    }
    best
}

fn interpolate(p: (f64, f64), q: (f64, f64), u: f64) -> f64 {
    if q.0 == p.0 {
        return p.1.max(q.1);
    }
    p.1 + (q.1 - p.1) * (u - p.0) / (q.0 - p.0)
}

/// Restrict a vertex list whose domain contains `[-a, a]` to that interval.
fn clip(verts: &[(f64, f64)], a: f64) -> Vec<(f64, f64)> {
    let value_at = |u: f64| {
        let i = verts.partition_point(|v| v.0 < u);
        if i == 0 {
            verts[0].1
        } else if i == verts.len() {
            verts[i - 1].1
        } else {
            interpolate(verts[i - 1], verts[i], u)
        }
    };
    let mut out = Vec::with_capacity(verts.len() + 2);
    out.push((-a, value_at(-a)));
    out.extend(verts.iter().copied().filter(|v| v.0 > -a && v.0 < a));
    out.push((a, value_at(a)));
    out
}

/// Value for a fixed budget, optionally recording the peak of every
/// intermediate value function. Returns the value and the final maximiser.
fn chain(xs: &[f64], ss: &[f64], a: f64, mut peaks: Option<&mut Vec<f64>>) -> (f64, f64) {
    if a <= 0.0 {
        if let Some(p) = peaks.as_deref_mut() {
            p.extend(std::iter::repeat(0.0).take(xs.len().saturating_sub(1)));
        }
        return (0.0, 0.0);
    }
    let mut verts = vec![(-a, -ss[0] * a), (a, ss[0] * a)];
    for k in 1..xs.len() {
        let r = (1.0 - a) * (xs[k] - xs[k - 1]);
        let m = argmax(&verts);
        if let Some(p) = peaks.as_deref_mut() {
            p.push(verts[m].0);
        }
        if r > 0.0 {
            let mut spread = Vec::with_capacity(verts.len() + 1);
            spread.extend(verts[..=m].iter().map(|v| (v.0 - r, v.1)));
            spread.extend(verts[m..].iter().map(|v| (v.0 + r, v.1)));
            verts = clip(&spread, a);
        }
        for v in verts.iter_mut() {
            v.1 += ss[k] * v.0;
        }
    }
    let m = argmax(&verts);
    (verts[m].1, verts[m].0)
}

/// Maximise `sum s_i u_i` over `|u_i| <= a`, `|u_{i+1} - u_i| <= (1 - a) d_i`,
/// `0 <= a <= 1`. Returns the value, an optimal `u` and the optimal `a`.
pub fn solve(xs: &[f64], ss: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    let n = xs.len();
    if n == 0 {
        return Ok((0.0, Vec::new(), 1.0));
    }
    let value = |a: f64| chain(xs, ss, a, None).0;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (value(x1), value(x2));
    let mut best = (value(1.0), 1.0);
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = value(x1);
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    for (f, x) in [(f1, x1), (f2, x2)] {
        if f > best.0 {
            best = (f, x);
        }
    }
    if best.0 < 0.0 {
        best = (0.0, 0.0);
    }
    let (value, a) = best;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("flat norm evaluated to {value}")));
    }
    let mut peaks = Vec::with_capacity(n - 1);
    let (_, mut u) = chain(xs, ss, a, Some(&mut peaks));
    let mut us = vec![0.0; n];
    us[n - 1] = u;
    for k in (0..n - 1).rev() {
        let r = (1.0 - a) * (xs[k + 1] - xs[k]);
        u = peaks[k].clamp(u - r, u + r).clamp(-a, a);
        us[k] = u;
    }
    Ok((value, us, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_split_for_dirac_pair() {
        let d = 2.0;
        let (v, u, a) = solve(&[0.0, d], &[1.0, -1.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!((a - 0.5).abs() < 1e-9);
        assert!((u[0] - 0.5).abs() < 1e-9 && (u[1] + 0.5).abs() < 1e-9);
    }

    #[test]
    fn clip_interpolates_edges() {
        let v = clip(&[(-2.0, 0.0), (0.0, 2.0), (2.0, 0.0)], 1.0);
        assert_eq!(v, vec![(-1.0, 1.0), (0.0, 2.0), (1.0, 1.0)]);
    }
}
