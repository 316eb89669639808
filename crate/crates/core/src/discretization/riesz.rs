//! Riesz potential on a radial grid, assembled as a symmetric Galerkin form.

use super::radial::{RadialField, RadialGrid, ELEMENT_ORDER};
use crate::error::{Error, Result};
use crate::model::riesz_normalization;
use crate::quadrature::GaussRule;
use crate::special::{sphere_area, AngularKernel};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct RieszKernel {
    grid: Arc<RadialGrid>,
    alpha: f64,
    // `B_ij = ∫(I_α ∗ φ_j) φ_i` over R^N; symmetric, row-major
    gram: Vec<f64>,
}

struct Pair<'a> {
    ang: &'a AngularKernel,
    expo: f64,
}

impl Pair<'_> {
    fn eval(&self, r: f64, s: f64) -> f64 {
        let (lo, hi) = if r < s { (r, s) } else { (s, r) };
        hi.powf(self.expo) * self.ang.eval((lo / hi).min(1.0 - 1e-15))
    }
}

fn graded(
    a: f64,
    b: f64,
    toward_a: bool,
    toward_b: bool,
    rule: &GaussRule,
    out: &mut Vec<(f64, f64)>,
) {
    const RATIO: f64 = 0.15;
    const LEVELS: usize = 14;
    if toward_a && toward_b {
        let m = 0.5 * (a + b);
        graded(a, m, true, false, rule, out);
        graded(m, b, false, true, rule, out);
        return;
    }
    if !toward_a && !toward_b {
        out.extend(rule.mapped(a, b));
        return;
    }
    let len = b - a;
    let mut outer = 1.0;
    for _ in 0..LEVELS {
        let inner = outer * RATIO;
        let (x0, x1) = if toward_a {
            (a + len * inner, a + len * outer)
        } else {
            (b - len * outer, b - len * inner)
        };
        out.extend(rule.mapped(x0, x1));
        outer = inner;
    }
    let (x0, x1) = if toward_a {
        (a, a + len * outer)
    } else {
        (b - len * outer, b)
    };
    out.extend(rule.mapped(x0, x1));
}

pub fn build_riesz_kernel(grid: &Arc<RadialGrid>, alpha: f64) -> Result<RieszKernel> {
    let dim = grid.dim();
    let nf = dim as f64;
    if !(alpha > 0.0 && alpha < nf) {
        return Err(Error::Domain(format!(
            "Riesz order {alpha} outside (0, {dim})"
        )));
    }
    let ang = AngularKernel::new(dim, alpha);
    let pair = Pair {
        ang: &ang,
        expo: alpha - nf,
    };
    let smooth = ang.is_polynomial();
    let c = riesz_normalization(dim, alpha)? * sphere_area(dim) * sphere_area(dim - 1);
    let n = grid.len();
    let m = ELEMENT_ORDER;
    let k = grid.n_elements();
    let r = grid.nodes();
    let wt: Vec<f64> = grid
        .weights()
        .iter()
        .map(|w| w / sphere_area(dim))
        .collect();
    let mut gram = vec![0.0; n * n];
    let near = if smooth { 1 } else { 2 };

    for e in 0..k {
        for f in (e + near + 1)..k {
            for i in e * m..(e + 1) * m {
                for j in f * m..(f + 1) * m {
                    let v = c * wt[i] * wt[j] * pair.eval(r[i], r[j]);
                    gram[i * n + j] = v;
                    gram[j * n + i] = v;
                }
            }
        }
    }

    let edges = grid.edges();
    let basis = grid.basis();
    let plain = GaussRule::new(m + dim + 6);
    let panel = GaussRule::new(10);
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    let mut li = [0.0; ELEMENT_ORDER];
    let mut lj = [0.0; ELEMENT_ORDER];
    let mut g = [0.0; ELEMENT_ORDER];
    for e in 0..k {
        let (a, b) = (edges[e], edges[e + 1]);
        for f in e..(e + near + 1).min(k) {
            let (a2, b2) = (edges[f], edges[f + 1]);
            let mut block = [[0.0; ELEMENT_ORDER]; ELEMENT_ORDER];
            outer.clear();
            if smooth || f > e + 1 {
                outer.extend(plain.mapped(a, b));
            } else {
                graded(a, b, f == e, true, &panel, &mut outer);
            }
            for &(x, wx) in &outer {
                basis.values(2.0 * (x - a) / (b - a) - 1.0, &mut li);
                inner.clear();
                if f == e {
                    if smooth {
                        inner.extend(plain.mapped(a2, x));
                        inner.extend(plain.mapped(x, b2));
                    } else {
                        graded(a2, x, false, true, &panel, &mut inner);
                        graded(x, b2, true, false, &panel, &mut inner);
                    }
                } else if smooth || f > e + 1 {
                    inner.extend(plain.mapped(a2, b2));
                } else {
                    graded(a2, b2, true, false, &panel, &mut inner);
                }
                g.iter_mut().for_each(|v| *v = 0.0);
                for &(y, wy) in &inner {
                    basis.values(2.0 * (y - a2) / (b2 - a2) - 1.0, &mut lj);
                    let kv = wy * y.powi(dim as i32 - 1) * pair.eval(x, y);
                    for jj in 0..m {
                        g[jj] += kv * lj[jj];
                    }
                }
                let ox = c * wx * x.powi(dim as i32 - 1);
                for ii in 0..m {
                    for jj in 0..m {
                        block[ii][jj] += ox * li[ii] * g[jj];
                    }
                }
            }
            for ii in 0..m {
                for jj in 0..m {
                    let (i, j) = (e * m + ii, f * m + jj);
                    let v = if f == e {
                        0.5 * (block[ii][jj] + block[jj][ii])
                    } else {
                        block[ii][jj]
                    };
                    if !v.is_finite() {
                        return Err(Error::Quadrature {
                            i,
                            j,
                            msg: "non-finite kernel entry".into(),
                        });
                    }
                    gram[i * n + j] = v;
                    gram[j * n + i] = v;
                }
            }
        }
    }
    Ok(RieszKernel {
        grid: grid.clone(),
        alpha,
        gram,
    })
}

impl RieszKernel {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Symmetric Galerkin matrix; the kernel matrix is `K = W⁻¹B`.
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    /// `K_ij`, so that `(I_α ∗ f)(r_i) ≈ Σ_j K_ij f(r_j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.grid.len() + j] / self.grid.weights()[i]
    }

    pub fn gram_apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        self.gram
            .chunks_exact(n)
            .map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.gram_apply(f)
            .into_iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v / w)
            .collect()
    }

    /// `∫(I_α ∗ f) g`
    pub fn bilinear(&self, f: &[f64], g: &[f64]) -> f64 {
        self.gram_apply(f).iter().zip(g).map(|(a, b)| a * b).sum()
    }

    pub fn matches(&self, grid: &RadialGrid) -> bool {
        self.grid.same_as(grid)
    }
}

pub fn riesz_convolve(kernel: &RieszKernel, f: &RadialField) -> Result<RadialField> {
    if !kernel.matches(&f.grid) {
        return Err(Error::GridMismatch(
            "field and kernel live on different grids".into(),
        ));
    }
    Ok(RadialField {
        grid: f.grid.clone(),
        values: kernel.apply(&f.values),
    })
}
