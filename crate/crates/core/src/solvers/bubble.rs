//! Cut-off Aubin–Talenti bubbles.

use crate::discretization::{RadialField, RadialGrid};
use crate::error::{Error, Result};
use crate::model::talenti;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct BubbleProfile {
    pub eps: f64,
    pub field: RadialField,
}

/// Smooth cutoff: 1 on `[0, 1]`, 0 beyond 2, `C³` septic transition.
pub fn cutoff(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let x = r - 1.0;
        1.0 - x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3))
    }
}

pub fn make_bubble(eps: f64, grid: &Arc<RadialGrid>) -> Result<BubbleProfile> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Validation {
            name: "bubble_eps",
            value: eps,
            bound: "0 < eps <= 0.5",
        });
    }
    let below = grid.nodes().iter().filter(|&&r| r < eps).count();
    if below < 8 {
        return Err(Error::Resolution(format!(
            "only {below} nodes below eps = {eps}; need 8"
        )));
    }
    if grid.radius() < 2.0 {
        return Err(Error::Resolution(
            "grid must extend past the cutoff radius 2".into(),
        ));
    }
    let n = grid.dim();
    let field = RadialField::from_fn(grid, |r| cutoff(r) * talenti(n, eps, r).0);
    Ok(BubbleProfile { eps, field })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_radial_grid, GridKind};

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.3), 1.0);
        assert_eq!(cutoff(2.5), 0.0);
        assert!((cutoff(1.5) - 0.5).abs() < 1e-12);
        let h = 1e-5;
        for x in [1.0 + h, 2.0 - h] {
            let d = (cutoff(x + h / 2.0) - cutoff(x - h / 2.0)) / h;
            assert!(d.abs() < 1e-6);
        }
    }

    #[test]
    fn bubble_support_and_core() {
        let g = build_radial_grid(3, 4.0, 1024, GridKind::Uniform).unwrap();
        let b = make_bubble(0.1, &g).unwrap();
        for (r, v) in g.nodes().iter().zip(&b.field.values) {
            if *r >= 2.0 {
                assert_eq!(*v, 0.0);
            }
            if *r <= 1.0 {
                assert!((v - talenti(3, 0.1, *r).0).abs() <= 1e-15 * v.abs());
            }
        }
    }

    #[test]
    fn under_resolved_rejected() {
        let g = build_radial_grid(3, 40.0, 128, GridKind::Uniform).unwrap();
        assert!(matches!(make_bubble(0.1, &g), Err(Error::Resolution(_))));
        assert!(make_bubble(0.6, &g).is_err());
    }
}
