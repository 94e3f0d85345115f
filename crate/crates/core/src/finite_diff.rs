//! Finite-difference stencils on uniform grids.

/// Fornberg weights for the `order`-th derivative at `x0` from samples at `xs`.
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > order, "need more nodes than the derivative order");
    // c[j][k]: weight of node j for derivative k.
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Central stencil on integer offsets `-half..=half` for unit spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub order: usize,
    pub half: usize,
    pub weights: Vec<f64>,
}

impl Stencil {
    /// Smallest symmetric stencil with the given even accuracy order.
    pub fn central(order: usize, accuracy: usize) -> Self {
        assert!(order >= 1 && accuracy >= 2 && accuracy.is_multiple_of(2));
        let points = 2 * order.div_ceil(2) - 1 + accuracy;
        let half = (points - 1) / 2;
        let xs: Vec<f64> = (0..points).map(|i| i as f64 - half as f64).collect();
        let weights = fornberg_weights(0.0, &xs, order);
        Self {
            order,
            half,
            weights,
        }
    }

    /// Applies the stencil centred at `values[center]` with grid spacing `h`.
    pub fn apply(&self, values: &[f64], center: usize, h: f64) -> Option<f64> {
        let lo = center.checked_sub(self.half)?;
        let hi = center + self.half;
        if hi >= values.len() {
            return None;
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(&values[lo..=hi])
            .map(|(w, v)| w * v)
            .sum();
        Some(s / h.powi(self.order as i32))
    }

    /// Same as [`Stencil::apply`] but reads samples through a closure over
    /// signed node indices.
    pub fn apply_with<F: Fn(isize) -> Option<f64>>(
        &self,
        center: isize,
        h: f64,
        value: F,
    ) -> Option<f64> {
        let mut s = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            s += w * value(center + i as isize - self.half as isize)?;
        }
        Some(s / h.powi(self.order as i32))
    }
}

/// Derivative of `f` at `x` with central differences of step `h`, improved by
/// one Richardson step (`h` and `h/2`). Returns `(value, error estimate)`.
pub fn richardson_derivative<F: Fn(f64) -> f64>(f: &F, x: f64, order: usize, h: f64) -> (f64, f64) {
    let st = Stencil::central(order, 4);
    let eval = |step: f64| -> f64 {
        let s: f64 = st
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * f(x + (i as f64 - st.half as f64) * step))
            .sum();
        s / step.powi(order as i32)
    };
    let coarse = eval(h);
    let fine = eval(0.5 * h);
    // Fourth-order stencils: error ~ h^4.
    let improved = fine + (fine - coarse) / 15.0;
    (improved, (improved - fine).abs())
}
