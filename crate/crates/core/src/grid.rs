//! Discretized continuous functions on [0, 1] with cubic interpolation.

/// A sampled function on [0, 1]. Evaluation between nodes uses local
/// four-point Lagrange interpolation, so the reconstruction is continuous
/// and fourth order accurate for smooth data.
#[derive(Debug, Clone)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Build from matching node and value lists. Nodes must be strictly
    /// increasing and cover [0, 1].
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> GridFunction {
        assert_eq!(nodes.len(), values.len());
        assert!(nodes.len() >= 4, "need at least four nodes");
        assert!(nodes.windows(2).all(|w| w[1] > w[0]), "nodes must increase");
        GridFunction { nodes, values }
    }

    /// Uniform grid with n nodes covering [0, 1], sampled from f.
    pub fn sample<F: Fn(f64) -> f64>(n: usize, f: F) -> GridFunction {
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let values = nodes.iter().map(|&t| f(t)).collect();
        GridFunction::new(nodes, values)
    }

    /// Constant function on a uniform grid.
    pub fn constant(n: usize, value: f64) -> GridFunction {
        GridFunction::sample(n, |_| value)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Interpolated evaluation at t. Arguments outside [first, last] are
    /// clamped to the boundary values.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.nodes.len();
        if t <= self.nodes[0] {
            return self.values[0];
        }
        if t >= self.nodes[n - 1] {
            return self.values[n - 1];
        }
        // index of the interval containing t
        let idx = match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        // four-point stencil centered on the interval [idx, idx+1]
        let lo = idx.saturating_sub(1).min(n - 4);
        let mut acc = 0.0;
        for i in lo..lo + 4 {
            let mut l = 1.0;
            for j in lo..lo + 4 {
                if j != i {
                    l *= (t - self.nodes[j]) / (self.nodes[i] - self.nodes[j]);
                }
            }
            acc += l * self.values[i];
        }
        acc
    }

    /// Sup-norm over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Minimum of the interpolant over [lo, hi], scanned densely across the
    /// covered nodes plus a fixed oversampling between them.
    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        self.extremum_on(lo, hi, false)
    }

    /// Maximum of the interpolant over [lo, hi].
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        self.extremum_on(lo, hi, true)
    }

    fn extremum_on(&self, lo: f64, hi: f64, want_max: bool) -> f64 {
        let mut best = self.eval(lo);
        let mut consider = |v: f64| {
            if (want_max && v > best) || (!want_max && v < best) {
                best = v;
            }
        };
        consider(self.eval(hi));
        for (i, &x) in self.nodes.iter().enumerate() {
            if x >= lo && x <= hi {
                consider(self.values[i]);
            }
        }
        // oversample to catch interior extrema of the cubic pieces
        let samples = 8 * self.nodes.len();
        for i in 1..samples {
            let t = lo + (hi - lo) * i as f64 / samples as f64;
            consider(self.eval(t));
        }
        best
    }

    /// Nodewise linear combination with another function on the same grid.
    pub fn axpy(&self, alpha: f64, other: &GridFunction) -> GridFunction {
        assert_eq!(self.nodes.len(), other.nodes.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        GridFunction::new(self.nodes.clone(), values)
    }

    /// Sup-norm of the nodewise difference.
    pub fn distance(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.nodes.len(), other.nodes.len());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |t: f64| 2.0 * t * t * t - t * t + 0.5 * t - 3.0;
        let g = GridFunction::sample(9, f);
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!((g.eval(t) - f(t)).abs() < 1e-13, "t = {t}");
        }
    }

    #[test]
    fn smooth_function_accuracy() {
        let f = |t: f64| (std::f64::consts::PI * t).sin();
        let g = GridFunction::sample(129, f);
        for i in 0..=333 {
            let t = i as f64 / 333.0;
            assert!((g.eval(t) - f(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn norms_and_window_extrema() {
        let g = GridFunction::sample(65, |t| t * (1.0 - t));
        assert!((g.sup_norm() - 0.25).abs() < 1e-12);
        assert!((g.max_on(0.25, 0.75) - 0.25).abs() < 1e-10);
        assert!((g.min_on(0.25, 0.75) - 0.1875).abs() < 1e-10);
        let h = GridFunction::sample(65, |t| t);
        assert!((h.min_on(0.25, 0.75) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn clamped_outside_domain() {
        let g = GridFunction::sample(17, |t| t);
        assert_eq!(g.eval(-0.5), 0.0);
        assert_eq!(g.eval(1.5), 1.0);
    }
}
