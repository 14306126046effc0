use super::LinearOperator;

/// Diagonal matrix; houses the lumped mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagMatrix {
    diag: Vec<f64>,
}

impl DiagMatrix {
    pub fn new(diag: Vec<f64>) -> Self {
        DiagMatrix { diag }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.diag
    }

    pub fn is_positive(&self) -> bool {
        self.diag.iter().all(|&d| d > 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn apply_to(&self, x: &[f64]) -> Vec<f64> {
        self.diag.iter().zip(x).map(|(d, v)| d * v).collect()
    }
}

impl LinearOperator for DiagMatrix {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, &d), &xi) in y.iter_mut().zip(&self.diag).zip(x) {
            *yi = d * xi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diag.clone()
    }
}
