use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Up,
    Down,
}

/// Dense pointwise tensor with index variance metadata. Components are
/// stored row-major: the last index varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorValue {
    pub variance: Vec<Variance>,
    pub dim: usize,
    pub data: Vec<f64>,
    pub point: Vec<f64>,
}

impl TensorValue {
    pub fn new(variance: Vec<Variance>, dim: usize, data: Vec<f64>, point: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim.pow(variance.len() as u32), "tensor size mismatch");
        TensorValue { variance, dim, data, point }
    }

    pub fn scalar(v: f64, point: Vec<f64>) -> Self {
        TensorValue { variance: vec![], dim: point.len(), data: vec![v], point }
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    /// Sup norm over components.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest violation of symmetry in slots `a` and `b`.
    pub fn asymmetry(&self, a: usize, b: usize) -> f64 {
        let r = self.rank();
        let mut idx = vec![0; r];
        let mut worst: f64 = 0.0;
        for flat in 0..self.data.len() {
            let mut rest = flat;
            for slot in (0..r).rev() {
                idx[slot] = rest % self.dim;
                rest /= self.dim;
            }
            let v = self.data[flat];
            idx.swap(a, b);
            worst = worst.max((v - self.get(&idx)).abs());
        }
        worst
    }

    pub fn sub(&self, other: &TensorValue) -> TensorValue {
        assert_eq!(self.data.len(), other.data.len());
        TensorValue {
            variance: self.variance.clone(),
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
            point: self.point.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_and_symmetry() {
        let t = TensorValue::new(
            vec![Variance::Down, Variance::Down],
            2,
            vec![1.0, 2.0, 2.5, 4.0],
            vec![0.0, 0.0],
        );
        assert_eq!(t.get(&[1, 0]), 2.5);
        assert_eq!(t.asymmetry(0, 1), 0.5);
        assert_eq!(t.max_abs(), 4.0);
    }
}
