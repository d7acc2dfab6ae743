//! Truncated PCA via the symmetric eigendecomposition of the covariance.
//!
//! Components are sorted by eigenvalue (descending) and each is flipped so
//! that its largest-magnitude loading is positive (first index wins ties).

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Array1<f64>,
    /// n_components × dim, orthonormal rows.
    pub components: Array2<f64>,
    pub explained_variance: Vec<f64>,
}

impl Pca {
    /// Panics unless `1 <= n_components <= dim` and there is at least one row.
    pub fn fit(x: &Array2<f64>, n_components: usize) -> Self {
        let (m, dim) = x.dim();
        assert!(m >= 1, "PCA needs at least one point");
        assert!(
            (1..=dim).contains(&n_components),
            "n_components out of range"
        );
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let centered = x - &mean;
        let cov = centered.t().dot(&centered) / (m.max(2) - 1) as f64;
        let cov = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (cov[[i, j]] + cov[[j, i]]));
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let mut components = Array2::zeros((n_components, dim));
        let mut explained_variance = Vec::with_capacity(n_components);
        for (row, &k) in order.iter().take(n_components).enumerate() {
            let col = eig.eigenvectors.column(k);
            let mut pivot = 0;
            for i in 1..dim {
                if col[i].abs() > col[pivot].abs() {
                    pivot = i;
                }
            }
            let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..dim {
                components[[row, i]] = sign * col[i];
            }
            explained_variance.push(eig.eigenvalues[k].max(0.0));
        }
        Self {
            mean,
            components,
            explained_variance,
        }
    }

    /// Scores in component space, M × n_components.
    pub fn transform(&self, x: &Array2<f64>) -> Array2<f64> {
        (x - &self.mean).dot(&self.components.t())
    }

    /// Orthogonal projection back into the original space.
    pub fn project(&self, x: &Array2<f64>) -> Array2<f64> {
        self.transform(x).dot(&self.components) + &self.mean
    }
}
