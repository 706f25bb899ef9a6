//! Grid-sampled convex functions with an infinity sentinel for indicator
//! domains, plus the separable discrete Legendre transform.

use crate::error::{Error, Result};
use crate::quad::BoxDomain;
use serde::{Deserialize, Serialize};

/// Values on a regular grid over a box, endpoints included. `+inf` cells
/// encode points outside the effective domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub shape: Vec<usize>,
    /// Row-major (last axis fastest). `f64::INFINITY` marks out-of-domain.
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn from_fn<F: FnMut(&[f64]) -> f64>(
        domain: &BoxDomain,
        shape: Vec<usize>,
        mut f: F,
    ) -> Self {
        let n = domain.dim();
        assert_eq!(shape.len(), n);
        assert!(shape.iter().all(|s| *s >= 2));
        let total: usize = shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        for _ in 0..total {
            for i in 0..n {
                x[i] = domain.lo[i]
                    + idx[i] as f64 * (domain.hi[i] - domain.lo[i]) / (shape[i] - 1) as f64;
            }
            values.push(f(&x));
            let mut axis = n;
            while axis > 0 {
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < shape[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        GridFunction {
            lo: domain.lo.clone(),
            hi: domain.hi.clone(),
            shape,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.shape[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain::new(self.lo.clone(), self.hi.clone())
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (i, &k) in idx.iter().enumerate() {
            flat = flat * self.shape[i] + k;
        }
        flat
    }

    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    /// Multilinear interpolation; infinite if any corner of the containing
    /// cell is infinite, infinite outside the box.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for i in 0..n {
            let span = self.hi[i] - self.lo[i];
            if x[i] < self.lo[i] - 1e-12 * span.abs() || x[i] > self.hi[i] + 1e-12 * span.abs() {
                return f64::INFINITY;
            }
            let t = ((x[i] - self.lo[i]) / self.spacing(i)).clamp(0.0, (self.shape[i] - 1) as f64);
            let k = (t.floor() as usize).min(self.shape[i] - 2);
            base[i] = k;
            frac[i] = t - k as f64;
        }
        let mut acc = 0.0;
        let corners = 1usize << n;
        let mut idx = vec![0usize; n];
        for mask in 0..corners {
            let mut w = 1.0;
            for i in 0..n {
                if mask >> i & 1 == 1 {
                    idx[i] = base[i] + 1;
                    w *= frac[i];
                } else {
                    idx[i] = base[i];
                    w *= 1.0 - frac[i];
                }
            }
            let v = self.value_at(&idx);
            if !v.is_finite() {
                // A vanishing weight keeps boundary nodes usable.
                if w > 1e-14 {
                    return f64::INFINITY;
                }
            } else {
                acc += w * v;
            }
        }
        acc
    }

    /// Central-difference gradient and Hessian at an interior point.
    pub fn gradient_hessian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.dim();
        let mut grad = vec![0.0; n];
        let mut hess = vec![vec![0.0; n]; n];
        let f0 = self.eval(x);
        if !f0.is_finite() {
            return Err(Error::domain(format!(
                "grid function not differentiable at {x:?} (outside domain)"
            )));
        }
        let mut xp = x.to_vec();
        for i in 0..n {
            let h = self.spacing(i);
            xp[i] = x[i] + h;
            let fp = self.eval(&xp);
            xp[i] = x[i] - h;
            let fm = self.eval(&xp);
            xp[i] = x[i];
            if !fp.is_finite() || !fm.is_finite() {
                return Err(Error::domain(format!(
                    "grid stencil leaves the domain near {x:?}"
                )));
            }
            grad[i] = (fp - fm) / (2.0 * h);
            hess[i][i] = (fp - 2.0 * f0 + fm) / (h * h);
        }
        for i in 0..n {
            for j in i + 1..n {
                let (hi, hj) = (self.spacing(i), self.spacing(j));
                let mut v = 0.0;
                for (si, sj, sign) in
                    [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)]
                {
                    xp[i] = x[i] + si * hi;
                    xp[j] = x[j] + sj * hj;
                    let f = self.eval(&xp);
                    if !f.is_finite() {
                        xp[i] = x[i];
                        xp[j] = x[j];
                        return Err(Error::domain(format!(
                            "grid stencil leaves the domain near {x:?}"
                        )));
                    }
                    v += sign * f;
                }
                xp[i] = x[i];
                xp[j] = x[j];
                let cross = v / (4.0 * hi * hj);
                hess[i][j] = cross;
                hess[j][i] = cross;
            }
        }
        Ok((grad, hess))
    }

    /// Midpoint convexity along axis lines and two-axis diagonals, skipping
    /// infinite cells.
    pub fn is_midpoint_convex(&self, tol: f64) -> bool {
        let n = self.dim();
        let mut dirs: Vec<Vec<isize>> = Vec::new();
        for i in 0..n {
            let mut d = vec![0isize; n];
            d[i] = 1;
            dirs.push(d);
        }
        for i in 0..n {
            for j in i + 1..n {
                for s in [1isize, -1] {
                    let mut d = vec![0isize; n];
                    d[i] = 1;
                    d[j] = s;
                    dirs.push(d);
                }
            }
        }
        let total: usize = self.shape.iter().product();
        let mut idx = vec![0usize; n];
        for flat in 0..total {
            let mut rem = flat;
            for i in (0..n).rev() {
                idx[i] = rem % self.shape[i];
                rem /= self.shape[i];
            }
            let center = self.values[flat];
            if !center.is_finite() {
                continue;
            }
            'dir: for d in &dirs {
                let mut plus = vec![0usize; n];
                let mut minus = vec![0usize; n];
                for i in 0..n {
                    let p = idx[i] as isize + d[i];
                    let m = idx[i] as isize - d[i];
                    if p < 0 || p >= self.shape[i] as isize || m < 0 || m >= self.shape[i] as isize
                    {
                        continue 'dir;
                    }
                    plus[i] = p as usize;
                    minus[i] = m as usize;
                }
                let (vp, vm) = (self.value_at(&plus), self.value_at(&minus));
                if vp.is_finite() && vm.is_finite() && vp + vm < 2.0 * center - tol {
                    return false;
                }
            }
        }
        true
    }

    /// Separable discrete Legendre transform onto a dual grid.
    ///
    /// The conjugate is computed axis by axis with a linear-time envelope
    /// pass per line. When `dual` is `None`, the dual box per axis is
    /// derived from the finite difference-slope range (falling back to a
    /// symmetric box when the slope range degenerates, e.g. for
    /// indicators).
    pub fn legendre(&self, dual: Option<&BoxDomain>) -> GridFunction {
        let n = self.dim();
        let dual_box = match dual {
            Some(b) => b.clone(),
            None => {
                let mut lo = vec![0.0; n];
                let mut hi = vec![0.0; n];
                for axis in 0..n {
                    let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
                    self.for_each_line(axis, |line| {
                        for w in line.windows(2) {
                            if w[0].1.is_finite() && w[1].1.is_finite() {
                                let s = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                                smin = smin.min(s);
                                smax = smax.max(s);
                            }
                        }
                    });
                    if !smin.is_finite() || !smax.is_finite() || smax - smin < 1e-9 {
                        let scale = 1.0 + self.lo[axis].abs().max(self.hi[axis].abs());
                        smin = -scale;
                        smax = scale;
                    }
                    let pad = 0.05 * (smax - smin);
                    lo[axis] = smin - pad;
                    hi[axis] = smax + pad;
                }
                BoxDomain::new(lo, hi)
            }
        };

        let mut current = self.clone();
        for axis in 0..n {
            current = current.conjugate_axis(axis, dual_box.lo[axis], dual_box.hi[axis], axis > 0);
        }
        current
    }

    fn for_each_line<F: FnMut(&[(f64, f64)])>(&self, axis: usize, mut f: F) {
        let n = self.dim();
        let len = self.shape[axis];
        let outer: usize = self.shape.iter().enumerate().filter(|(i, _)| *i != axis).map(|(_, s)| s).product();
        let mut idx = vec![0usize; n];
        let mut line = Vec::with_capacity(len);
        for o in 0..outer {
            let mut rem = o;
            for i in (0..n).rev() {
                if i == axis {
                    continue;
                }
                idx[i] = rem % self.shape[i];
                rem /= self.shape[i];
            }
            line.clear();
            for k in 0..len {
                idx[axis] = k;
                let x = self.lo[axis] + k as f64 * self.spacing(axis);
                line.push((x, self.value_at(&idx)));
            }
            f(&line);
        }
    }

    /// Conjugate along one axis: out[y, rest] = sup_x (x*y - in[x, rest]).
    /// `negate_input` implements the alternating sign of the separable
    /// factorization.
    fn conjugate_axis(
        &self,
        axis: usize,
        ylo: f64,
        yhi: f64,
        negate_input: bool,
    ) -> GridFunction {
        let n = self.dim();
        let len = self.shape[axis];
        let ys: Vec<f64> = (0..len)
            .map(|k| ylo + k as f64 * (yhi - ylo) / (len - 1) as f64)
            .collect();
        let mut out = self.clone();
        out.lo[axis] = ylo;
        out.hi[axis] = yhi;

        let outer: usize = self
            .shape
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != axis)
            .map(|(_, s)| s)
            .product();
        let mut idx = vec![0usize; n];
        let mut xs = Vec::with_capacity(len);
        let mut fs = Vec::with_capacity(len);
        for o in 0..outer {
            let mut rem = o;
            for i in (0..n).rev() {
                if i == axis {
                    continue;
                }
                idx[i] = rem % self.shape[i];
                rem /= self.shape[i];
            }
            xs.clear();
            fs.clear();
            for k in 0..len {
                idx[axis] = k;
                let x = self.lo[axis] + k as f64 * self.spacing(axis);
                let mut v = self.value_at(&idx);
                if negate_input {
                    v = -v;
                }
                xs.push(x);
                fs.push(v);
            }
            let conj = discrete_legendre_1d(&xs, &fs, &ys);
            for k in 0..len {
                idx[axis] = k;
                let flat = out.flat_index(&idx);
                out.values[flat] = conj[k];
            }
        }
        out
    }
}

/// 1-D discrete Legendre transform: `g(y) = max_i (y x_i - f_i)` for sorted
/// query slopes, via the upper envelope of lines with increasing slopes
/// (a single monotone pass, no quadratic blow-up).
pub fn discrete_legendre_1d(xs: &[f64], fs: &[f64], ys: &[f64]) -> Vec<f64> {
    // Lines y -> x_i * y - f_i with slopes x_i increasing. Infinite f_i
    // never participates.
    struct Line {
        slope: f64,
        intercept: f64,
    }
    let lines: Vec<Line> = xs
        .iter()
        .zip(fs)
        .filter(|(_, f)| f.is_finite())
        .map(|(x, f)| Line {
            slope: *x,
            intercept: -f,
        })
        .collect();
    if lines.is_empty() {
        return vec![f64::NEG_INFINITY; ys.len()];
    }
    // Build the upper envelope (slopes already sorted increasing).
    let mut hull: Vec<&Line> = Vec::with_capacity(lines.len());
    let meet = |a: &Line, b: &Line| (a.intercept - b.intercept) / (b.slope - a.slope);
    for l in &lines {
        while let Some(&last) = hull.last() {
            if (l.slope - last.slope).abs() < 1e-300 {
                if l.intercept >= last.intercept {
                    hull.pop();
                    continue;
                } else {
                    break;
                }
            }
            if hull.len() >= 2 {
                let prev = hull[hull.len() - 2];
                if meet(prev, l) <= meet(prev, last) {
                    hull.pop();
                    continue;
                }
            }
            break;
        }
        if let Some(&last) = hull.last() {
            if (l.slope - last.slope).abs() < 1e-300 && l.intercept < last.intercept {
                continue;
            }
        }
        hull.push(l);
    }
    // Sweep sorted queries along the envelope.
    let mut out = Vec::with_capacity(ys.len());
    let mut seg = 0usize;
    for &y in ys {
        while seg + 1 < hull.len() {
            let here = hull[seg].slope * y + hull[seg].intercept;
            let next = hull[seg + 1].slope * y + hull[seg + 1].intercept;
            if next >= here {
                seg += 1;
            } else {
                break;
            }
        }
        out.push(hull[seg].slope * y + hull[seg].intercept);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_1d_of_parabola() {
        let xs: Vec<f64> = (0..101).map(|i| -2.0 + 4.0 * i as f64 / 100.0).collect();
        let fs: Vec<f64> = xs.iter().map(|x| 0.5 * x * x).collect();
        let ys: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        let g = discrete_legendre_1d(&xs, &fs, &ys);
        for (y, gy) in ys.iter().zip(&g) {
            assert_abs_diff_eq!(*gy, 0.5 * y * y, epsilon = 1e-3);
        }
    }

    #[test]
    fn multilinear_eval_matches_nodes() {
        let domain = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let g = GridFunction::from_fn(&domain, vec![17, 17], |x| x[0] + 2.0 * x[1]);
        assert_abs_diff_eq!(g.eval(&[0.5, -0.25]), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.eval(&[1.0, 1.0]), 3.0, epsilon = 1e-12);
        assert_eq!(g.eval(&[1.5, 0.0]), f64::INFINITY);
    }

    #[test]
    fn infinity_cells_propagate() {
        let domain = BoxDomain::new(vec![-1.0], vec![1.0]);
        let g = GridFunction::from_fn(&domain, vec![5], |x| {
            if x[0] > 0.4 {
                f64::INFINITY
            } else {
                0.0
            }
        });
        assert_eq!(g.eval(&[0.8]), f64::INFINITY);
        assert_eq!(g.eval(&[0.0]), 0.0);
    }

    #[test]
    fn convexity_check_flags_saddle() {
        let domain = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let convex = GridFunction::from_fn(&domain, vec![9, 9], |x| x[0] * x[0] + x[1] * x[1]);
        assert!(convex.is_midpoint_convex(1e-12));
        let saddle = GridFunction::from_fn(&domain, vec![9, 9], |x| x[0] * x[0] - x[1] * x[1]);
        assert!(!saddle.is_midpoint_convex(1e-12));
    }

    #[test]
    fn grid_legendre_self_dual_quadratic() {
        let domain = BoxDomain::new(vec![-3.0, -3.0], vec![3.0, 3.0]);
        let g = GridFunction::from_fn(&domain, vec![97, 97], |x| {
            0.5 * (x[0] * x[0] + x[1] * x[1])
        });
        let dual = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let conj = g.legendre(Some(&dual));
        for &y in &[[-0.5, 0.5], [0.25, 0.75], [0.0, 0.0]] {
            let expect = 0.5 * (y[0] * y[0] + y[1] * y[1]);
            assert_abs_diff_eq!(conj.eval(&y), expect, epsilon = 5e-2);
        }
    }

    #[test]
    fn grid_legendre_of_ball_indicator_is_norm() {
        let domain = BoxDomain::new(vec![-1.1, -1.1], vec![1.1, 1.1]);
        let g = GridFunction::from_fn(&domain, vec![121, 121], |x| {
            if x[0] * x[0] + x[1] * x[1] <= 1.0 {
                0.0
            } else {
                f64::INFINITY
            }
        });
        let dual = BoxDomain::new(vec![-2.0, -2.0], vec![2.0, 2.0]);
        let conj = g.legendre(Some(&dual));
        for &y in &[[1.0f64, 0.0], [0.0, -1.5], [1.0, 1.0]] {
            let expect = (y[0] * y[0] + y[1] * y[1]).sqrt();
            let got = conj.eval(&y);
            assert!(
                (got - expect).abs() < 0.05,
                "conjugate of ball indicator at {y:?}: got {got}, expected {expect}"
            );
        }
    }
}
