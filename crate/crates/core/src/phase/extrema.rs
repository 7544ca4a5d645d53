const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut gc = g(c);
    let mut gd = g(d);
    while hi - lo > tol {
        if gc >= gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - INV_PHI * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + INV_PHI * (hi - lo);
            gd = g(d);
        }
    }
    let x = 0.5 * (lo + hi);
    let gx = g(x);
    // the bracket endpoints can beat the interior when the max sits on a kink
    [(x, gx), (c, gc), (d, gd)]
        .into_iter()
        .fold((x, gx), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Supremum of a 1-periodic function: uniform scan, then golden-section
/// refinement around the best few local maxima of the scan.
pub fn sup_on_circle(g: impl Fn(f64) -> f64, scan: usize) -> f64 {
    let scan = scan.max(8);
    let h = 1.0 / scan as f64;
    let values: Vec<f64> = (0..scan).map(|i| g(i as f64 * h)).collect();
    let mut peaks: Vec<usize> = (0..scan)
        .filter(|&i| {
            let prev = values[(i + scan - 1) % scan];
            let next = values[(i + 1) % scan];
            values[i] >= prev && values[i] >= next
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    peaks.truncate(4);
    let mut best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for i in peaks {
        let centre = i as f64 * h;
        let (_, v) = golden_max(&g, centre - h, centre + h, 1e-12);
        best = best.max(v);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn finds_off_grid_maximum() {
        let v = sup_on_circle(|x| (TAU * (x - 0.123_456_7)).cos(), 16);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_on_parabola() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(v.abs() < 1e-12);
    }
}
