//! One-dimensional root finding and extremum search.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Illinois regula falsi on `[a, b]` with `g(a)` and `g(b)` of opposite
/// sign. Stops when `b/a - 1 <= rel_tol` (positive brackets) or
/// `|g| <= abs_tol`. Returns the final bracket with its values.
pub fn bracket_root(
    g: &mut dyn FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut ga: f64,
    mut gb: f64,
    rel_tol: f64,
    abs_tol: f64,
    log_scale: bool,
) -> Result<Bracket> {
    let fwd = |x: f64| if log_scale { x.ln() } else { x };
    let inv = |y: f64| if log_scale { y.exp() } else { y };
    let mut side = 0i8;
    for _ in 0..200 {
        let width = if log_scale { b / a - 1.0 } else { (b - a).abs() / a.abs().max(b.abs()).max(1e-300) };
        if width <= rel_tol || ga.abs() <= abs_tol || gb.abs() <= abs_tol {
            break;
        }
        let (ya, yb) = (fwd(a), fwd(b));
        let mut y = yb - gb * (yb - ya) / (gb - ga);
        // keep the trial strictly inside and away from the ends
        let lo = ya + 0.01 * (yb - ya);
        let hi = yb - 0.01 * (yb - ya);
        if !y.is_finite() {
            y = 0.5 * (ya + yb);
        }
        y = y.clamp(lo.min(hi), lo.max(hi));
        let x = inv(y);
        let gx = g(x)?;
        if (gx < 0.0) == (ga < 0.0) {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
    }
    Ok(Bracket { a, b, ga, gb })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub a: f64,
    pub b: f64,
    pub ga: f64,
    pub gb: f64,
}

impl Bracket {
    /// Root estimate by linear interpolation inside the bracket.
    pub fn estimate(&self, log_scale: bool) -> f64 {
        if self.ga == self.gb {
            return 0.5 * (self.a + self.b);
        }
        let t = self.ga / (self.ga - self.gb);
        let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
        if log_scale {
            (self.a.ln() + t * (self.b.ln() - self.a.ln())).exp()
        } else {
            self.a + t * (self.b - self.a)
        }
    }
}

/// Golden-section search for a maximum of `g` on `[a, b]`, in log
/// coordinates when `log_scale`. Returns the best point seen.
pub fn golden_max(
    g: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    rel_tol: f64,
    log_scale: bool,
) -> Result<(f64, f64)> {
    let fwd = |x: f64| if log_scale { x.ln() } else { x };
    let inv = |y: f64| if log_scale { y.exp() } else { y };
    let (mut lo, mut hi) = (fwd(a), fwd(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut g1 = g(inv(x1))?;
    let mut g2 = g(inv(x2))?;
    let mut best = if g1 >= g2 { (inv(x1), g1) } else { (inv(x2), g2) };
    for _ in 0..200 {
        let width = if log_scale { (hi - lo).abs() } else { (hi - lo).abs() / inv(hi).abs().max(1e-300) };
        if width <= rel_tol {
            break;
        }
        if g1 >= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - INV_PHI * (hi - lo);
            g1 = g(inv(x1))?;
            if g1 > best.1 {
                best = (inv(x1), g1);
            }
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + INV_PHI * (hi - lo);
            g2 = g(inv(x2))?;
            if g2 > best.1 {
                best = (inv(x2), g2);
            }
        }
    }
    Ok(best)
}

/// Minimum counterpart of [`golden_max`].
pub fn golden_min(
    g: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    rel_tol: f64,
    log_scale: bool,
) -> Result<(f64, f64)> {
    let mut neg = |x: f64| g(x).map(|v| -v);
    let (x, v) = golden_max(&mut neg, a, b, rel_tol, log_scale)?;
    Ok((x, -v))
}

/// Brent's method for a maximum of `g` on `[a, b]` (plain coordinates).
pub fn brent_max(
    g: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    let c = 1.0 - INV_PHI;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + c * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = -g(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-15;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = c * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1 * d.signum() };
        let fu = -g(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, -fx))
}
