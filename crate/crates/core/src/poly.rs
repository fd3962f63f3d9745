//! Lagrange interpolation bases on arbitrary distinct nodes.

/// Lagrange basis `φ_i` attached to a set of distinct nodes, so that
/// `φ_i(x_j) = δ_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl LagrangeBasis {
    /// Panics if two nodes coincide.
    pub fn new(nodes: &[f64]) -> Self {
        let inv_denom = nodes
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let d: f64 = nodes
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &xj)| xi - xj)
                    .product();
                assert!(d != 0.0, "Lagrange nodes must be distinct");
                1.0 / d
            })
            .collect();
        Self {
            nodes: nodes.to_vec(),
            inv_denom,
        }
    }

    /// Equispaced nodes `0, 1/k, ..., 1` on the unit interval.
    pub fn equispaced(k: usize) -> Self {
        assert!(k >= 1);
        let nodes: Vec<f64> = (0..=k).map(|l| l as f64 / k as f64).collect();
        Self::new(&nodes)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self, x: f64, out: &mut [f64]) {
        let n = self.nodes.len();
        for i in 0..n {
            let mut p = self.inv_denom[i];
            for j in 0..n {
                if j != i {
                    p *= x - self.nodes[j];
                }
            }
            out[i] = p;
        }
    }

    pub fn derivatives(&self, x: f64, out: &mut [f64]) {
        let n = self.nodes.len();
        for i in 0..n {
            let mut sum = 0.0;
            for l in 0..n {
                if l == i {
                    continue;
                }
                let mut p = 1.0;
                for j in 0..n {
                    if j != i && j != l {
                        p *= x - self.nodes[j];
                    }
                }
                sum += p;
            }
            out[i] = sum * self.inv_denom[i];
        }
    }

    pub fn values_vec(&self, x: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        self.values(x, &mut v);
        v
    }

    pub fn derivatives_vec(&self, x: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        self.derivatives(x, &mut v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cardinal_property() {
        let b = LagrangeBasis::new(&[-0.3, 0.1, 0.7, 1.0]);
        for (j, &x) in b.nodes().iter().enumerate() {
            let v = b.values_vec(x);
            for (i, vi) in v.iter().enumerate() {
                assert_abs_diff_eq!(*vi, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn derivative_reproduces_linear() {
        let b = LagrangeBasis::equispaced(3);
        // sum_i x_i φ_i'(x) = 1 for every x
        for &x in &[0.0, 0.2, 0.55, 1.0] {
            let d = b.derivatives_vec(x);
            let s: f64 = d.iter().zip(b.nodes()).map(|(di, xi)| di * xi).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(d.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        }
    }
}
