use crate::error::{Error, Result};
use crate::expr::Expression;

/// Coordinate patch: names, sampling box and optional periods.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    coordinates: Vec<String>,
    bounds: Vec<(f64, f64)>,
    periods: Vec<Option<f64>>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(coordinates: &[S], bounds: &[(f64, f64)]) -> Result<Chart> {
        let n = coordinates.len();
        if n == 0 {
            return Err(Error::InvalidInstance("chart needs at least one coordinate".into()));
        }
        if bounds.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates but {} box intervals",
                n,
                bounds.len()
            )));
        }
        let coordinates: Vec<String> = coordinates.iter().map(|c| c.as_ref().to_string()).collect();
        for (i, name) in coordinates.iter().enumerate() {
            if coordinates[..i].contains(name) {
                return Err(Error::InvalidInstance(format!("duplicate coordinate `{}`", name)));
            }
        }
        for (name, &(lo, hi)) in coordinates.iter().zip(bounds) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInstance(format!(
                    "degenerate box interval [{}, {}] for `{}`",
                    lo, hi, name
                )));
            }
        }
        Ok(Chart { coordinates, bounds: bounds.to_vec(), periods: vec![None; n] })
    }

    /// Mark coordinate `index` as periodic with the given period.
    pub fn with_period(mut self, index: usize, period: f64) -> Result<Chart> {
        if index >= self.dim() {
            return Err(Error::DimensionMismatch(format!("no coordinate with index {}", index)));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidInstance(format!("period must be positive, got {}", period)));
        }
        self.periods[index] = Some(period);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coordinates
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coordinates.iter().position(|c| c == name)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.bounds).all(|(x, &(lo, hi))| lo <= *x && *x <= hi)
    }
}

/// Symmetric metric components, stored as the upper triangle row by row:
/// `g00, g01, …, g0(n-1), g11, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    n: usize,
    upper: Vec<Expression>,
}

pub(crate) fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl MetricField {
    pub fn new(n: usize, upper: Vec<Expression>) -> Result<MetricField> {
        if upper.len() != n * (n + 1) / 2 {
            return Err(Error::DimensionMismatch(format!(
                "dimension {} needs {} upper-triangle entries, got {}",
                n,
                n * (n + 1) / 2,
                upper.len()
            )));
        }
        Ok(MetricField { n, upper })
    }

    pub fn diagonal(diag: Vec<Expression>) -> MetricField {
        let n = diag.len();
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for (i, d) in diag.into_iter().enumerate() {
            upper.push(d);
            upper.extend((i + 1..n).map(|_| Expression::zero()));
        }
        MetricField { n, upper }
    }

    pub fn euclidean(n: usize) -> MetricField {
        MetricField::diagonal(vec![Expression::one(); n])
    }

    /// Block sum `g1 ⊕ g2`.
    pub fn block_sum(a: &MetricField, b: &MetricField) -> MetricField {
        let n = a.n + b.n;
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(match (i < a.n, j < a.n) {
                    (true, true) => a.component(i, j).clone(),
                    (false, false) => b.component(i - a.n, j - a.n).clone(),
                    _ => Expression::zero(),
                });
            }
        }
        MetricField { n, upper }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn component(&self, i: usize, j: usize) -> &Expression {
        &self.upper[upper_index(self.n, i, j)]
    }

    pub fn upper(&self) -> &[Expression] {
        &self.upper
    }

    pub fn map(&self, f: impl Fn(&Expression) -> Expression) -> MetricField {
        MetricField { n: self.n, upper: self.upper.iter().map(f).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_validation() {
        assert!(Chart::new(&["x"], &[(0.0, 0.0)]).is_err());
        assert!(Chart::new(&["x", "x"], &[(0.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(Chart::new::<&str>(&[], &[]).is_err());
        let c = Chart::new(&["r", "t"], &[(0.1, 1.0), (0.0, 6.0)]).unwrap();
        assert!(c.clone().with_period(1, -1.0).is_err());
        assert_eq!(c.with_period(1, 6.0).unwrap().periods()[1], Some(6.0));
    }

    #[test]
    fn upper_triangle_layout() {
        let n = 3;
        let seen: Vec<usize> = (0..n).flat_map(|i| (i..n).map(move |j| upper_index(n, i, j))).collect();
        assert_eq!(seen, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(upper_index(n, 2, 1), upper_index(n, 1, 2));
        let g = MetricField::diagonal(vec![Expression::one(), Expression::constant(2.0)]);
        assert!(g.component(0, 1).is_zero());
        assert_eq!(g.component(1, 1).as_const(), Some(2.0));
        let b = MetricField::block_sum(&g, &MetricField::euclidean(1));
        assert_eq!(b.dim(), 3);
        assert!(b.component(1, 2).is_zero());
        assert_eq!(b.component(2, 2).as_const(), Some(1.0));
    }
}
