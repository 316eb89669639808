//! Symmetric banded storage with a Cholesky solver.

#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    kd: usize,
    // lower band, row-major: entry (i, i - d) at i * (kd + 1) + d
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, kd: usize) -> Self {
        SymBanded {
            n,
            kd,
            data: vec![0.0; n * (kd + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.kd
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        if d > self.kd {
            0.0
        } else {
            self.data[i * (self.kd + 1) + d]
        }
    }

    /// Adds `v` to the symmetric pair `(i, j)` / `(j, i)` (once if `i == j`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        assert!(d <= self.kd, "entry outside band");
        self.data[i * (self.kd + 1) + d] += v;
    }

    pub fn add_diagonal(&mut self, diag: &[f64], scale: f64) {
        for (i, d) in diag.iter().enumerate() {
            self.data[i * (self.kd + 1)] += scale * d;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        let kd = self.kd;
        for i in 0..self.n {
            let row = &self.data[i * (kd + 1)..(i + 1) * (kd + 1)];
            y[i] += row[0] * x[i];
            for d in 1..=kd.min(i) {
                let v = row[d];
                y[i] += v * x[i - d];
                y[i - d] += v * x[i];
            }
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i.saturating_sub(self.kd)..=i {
                let v = self.get(i, j);
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        m
    }

    /// Cholesky factorization; `None` if the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<BandedCholesky> {
        let n = self.n;
        let kd = self.kd;
        let w = kd + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(kd);
            for j in j0..=i {
                let mut s = l[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(kd));
                for k in k0..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Some(BandedCholesky { n, kd, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    kd: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let kd = self.kd;
        let w = kd + 1;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(kd)..i {
                s -= self.l[i * w + (i - k)] * y[k];
            }
            y[i] = s / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + kd + 1) {
                s -= self.l[k * w + (k - i)] * y[k];
            }
            y[i] = s / self.l[i * w];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_tridiagonal() {
        let n = 50;
        let mut a = SymBanded::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 4.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i > 1 {
                a.add(i, i - 2, 0.5);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x);
        let sol = a.cholesky().unwrap().solve(&b);
        for (u, v) in sol.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
        let dense = a.to_dense();
        assert_eq!(dense[3 * n + 1], 0.5);
        assert_eq!(dense[n + 3], 0.5);
    }

    #[test]
    fn indefinite_rejected() {
        let mut a = SymBanded::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(2, 2, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_none());
    }
}
