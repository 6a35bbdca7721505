//! Exact chain dynamic program for the `|phi| + |phi'| <= 1` ball.
//!
//! In the coordinate `g = G(u)` the constraints become `|g_{i+1} - g_i| <= d_i`
//! and the objective is `sum s_i H(g_i)` with `H(g) = sign(g) (1 - e^{-|g|})`.
//! The value function `V_k(g)` of the first `k` atoms is unimodal (it is
//! concave in `u`), so the sup-convolution `max_{|g' - g| <= d} V_k(g')` just
//! pulls the increasing branch left by `d`, pushes the decreasing branch right
//! by `d` and inserts a plateau at the peak. Every `V_k` is piecewise of the
//! form `A + B e^{-(g - lo)} + C e^{g - hi}`, which is closed under both
//! operations.

use crate::error::{Error, Result};

/// `G(u) = sign(u) * (-ln(1 - |u|))`, with `G(+-1) = +-inf`.
pub(crate) fn to_g(u: f64) -> f64 {
    if u >= 1.0 {
        f64::INFINITY
    } else if u <= -1.0 {
        f64::NEG_INFINITY
    } else {
        -(-u.abs()).ln_1p() * u.signum()
    }
}

/// Inverse of [`to_g`].
pub(crate) fn from_g(g: f64) -> f64 {
    if g.is_infinite() {
        g.signum()
    } else {
        -(-g.abs()).exp_m1() * g.signum()
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    a: f64,
    /// Coefficient of `e^{-(g - lo)}`; zero when `lo = -inf`.
    b: f64,
    /// Coefficient of `e^{g - hi}`; zero when `hi = +inf`.
    c: f64,
    /// `e^{lo - hi}`, invariant under shifts.
    w: f64,
}

impl Piece {
    fn whole_line() -> Self {
        Piece {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            a: 0.0,
            b: 0.0,
            c: 0.0,
            w: 0.0,
        }
    }

    fn eval(&self, g: f64) -> f64 {
        let mut v = self.a;
        if self.b != 0.0 {
            v += self.b * (self.lo - g).exp();
        }
        if self.c != 0.0 {
            v += self.c * (g - self.hi).exp();
        }
        v
    }

    /// Value (or limit) at the left end.
    fn left_value(&self) -> f64 {
        self.a + self.b + self.c * self.w
    }

    /// Value (or limit) at the right end.
    fn right_value(&self) -> f64 {
        self.a + self.b * self.w + self.c
    }

    fn shifted(mut self, delta: f64) -> Self {
        self.lo += delta;
        self.hi += delta;
        self
    }

    /// Split at `lo < m < hi`.
    fn split(&self, m: f64) -> (Self, Self) {
        let wl = (self.lo - m).exp();
        let wr = (m - self.hi).exp();
        let left = Piece {
            hi: m,
            c: self.c * wr,
            w: wl,
            ..*self
        };
        let right = Piece {
            lo: m,
            b: self.b * wl,
            w: wr,
            ..*self
        };
        (left, right)
    }
}

/// Supremum of the unimodal function and a point where it is attained
/// (possibly `+-inf`).
fn argmax(pieces: &[Piece]) -> (f64, f64) {
    let first = pieces[0];
    let mut best = (first.left_value(), first.lo);
    let mut best_edge = 0;
    for (i, p) in pieces.iter().enumerate() {
        let v = p.right_value();
        if v > best.0 {
            best = (v, p.hi);
            best_edge = i + 1;
        }
    }
    // A unimodal function peaks inside one of the pieces next to its best
    // breakpoint; look one piece further on each side to absorb rounding.
    let from = best_edge.saturating_sub(2);
    let to = (best_edge + 2).min(pieces.len());
    for p in &pieces[from..to] {
        if p.b < 0.0 && p.c < 0.0 {
            let g = ((p.b / p.c).ln() + p.lo + p.hi) / 2.0;
            if g > p.lo && g < p.hi {
                let v = p.eval(g);
                if v > best.0 {
                    best = (v, g);
                }
            }
        }
    }
    best
}

fn sup_convolve(pieces: &mut Vec<Piece>, peak: f64, m: f64, d: f64) {
    if d <= 0.0 {
        return;
    }
    if m.is_infinite() {
        let delta = if m > 0.0 { -d } else { d };
        for p in pieces.iter_mut() {
            *p = p.shifted(delta);
        }
        return;
    }
    let mut out = Vec::with_capacity(pieces.len() + 2);
    let mut right = Vec::new();
    for p in pieces.iter() {
        if p.hi <= m {
            out.push(p.shifted(-d));
        } else if p.lo >= m {
            right.push(p.shifted(d));
        } else {
            let (l, r) = p.split(m);
            out.push(l.shifted(-d));
            right.push(r.shifted(d));
        }
    }
    out.push(Piece {
        lo: m - d,
        hi: m + d,
        a: peak,
        b: 0.0,
        c: 0.0,
        w: (-2.0 * d).exp(),
    });
    out.extend(right);
    *pieces = out;
}

/// Add `s H(g)`. Pieces are contiguous, so `e^{-lo}` and `e^{hi}` follow
/// from the width factors by walking away from `g = 0`.
fn add_h(pieces: &mut Vec<Piece>, s: f64) {
    if let Some(i) = pieces.iter().position(|p| p.lo < 0.0 && p.hi > 0.0) {
        let (l, r) = pieces[i].split(0.0);
        pieces[i] = l;
        pieces.insert(i + 1, r);
    }
    let split = pieces.partition_point(|p| p.hi <= 0.0);
    let mut e_lo = 1.0;
    for p in pieces[split..].iter_mut() {
        p.a += s;
        p.b -= s * e_lo;
        e_lo *= p.w;
    }
    let mut e_hi = 1.0;
    for p in pieces[..split].iter_mut().rev() {
        p.a -= s;
        p.c += s * e_hi;
        e_hi *= p.w;
    }
}

/// Maximise `sum s_i u_i` subject to `|G(u_{i+1}) - G(u_i)| <= x_{i+1} - x_i`.
///
/// Returns the value and an optimal `u`.
pub fn solve(xs: &[f64], ss: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = xs.len();
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let mut pieces = vec![Piece::whole_line()];
    let mut peaks = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        if k > 0 {
            let (peak, m) = argmax(&pieces);
            peaks.push(m);
            sup_convolve(&mut pieces, peak, m, xs[k] - xs[k - 1]);
        }
        add_h(&mut pieces, ss[k]);
    }
    let (value, mut g) = argmax(&pieces);
    if !value.is_finite() {
        return Err(Error::Numerical(format!("flat norm evaluated to {value}")));
    }
    let mut gs = vec![0.0; n];
    gs[n - 1] = g;
    for k in (0..n - 1).rev() {
        if g.is_finite() {
            let d = xs[k + 1] - xs[k];
            g = peaks[k].clamp(g - d, g + d);
        }
        gs[k] = g;
    }
    Ok((value, gs.into_iter().map(from_g).collect()))
}
