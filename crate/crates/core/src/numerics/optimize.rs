#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for a minimum of a unimodal function on `[lo, hi]`.
pub fn minimize_golden<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Minimum {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    Minimum { x, value: f(x) }
}

/// Outcome of a grid scan followed by golden-section refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMinimum {
    pub minimum: Minimum,
    /// The smallest sampled value sat on the first or last grid point.
    pub at_boundary: bool,
}

/// Scans `grid` (increasing) for the smallest value, then refines between the
/// neighbouring grid points. Non-finite samples are skipped.
pub fn minimize_on_grid<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], tol: f64) -> Option<GridMinimum> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        if v.is_finite() && best.is_none_or(|(_, bv)| v < bv) {
            best = Some((i, v));
        }
    }
    let (i, v) = best?;
    if i == 0 || i + 1 == grid.len() {
        return Some(GridMinimum { minimum: Minimum { x: grid[i], value: v }, at_boundary: true });
    }
    let minimum = minimize_golden(f, grid[i - 1], grid[i + 1], tol);
    Some(GridMinimum { minimum, at_boundary: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola() {
        let m = minimize_golden(|x| (x - 0.3) * (x - 0.3) + 2.0, -1.0, 4.0, 1e-10);
        assert!((m.x - 0.3).abs() < 1e-7);
        assert!((m.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn grid_boundary_detected() {
        let grid: alloc::vec::Vec<f64> = (0..10).map(|i| i as f64).collect();
        let m = minimize_on_grid(|x| x, &grid, 1e-8).unwrap();
        assert!(m.at_boundary);
        let m = minimize_on_grid(|x| (x - 4.2).powi(2), &grid, 1e-10).unwrap();
        assert!(!m.at_boundary);
        assert!((m.minimum.x - 4.2).abs() < 1e-8);
    }
}
