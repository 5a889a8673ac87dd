//! The block vector `z = [x; y]` used for every iterate.

use crate::error::{Error, Result};

/// Above this length squared distances switch to compensated summation.
const COMPENSATED_THRESHOLD: usize = 10_000;

/// A point `z = [x; y]` stored contiguously with the split after `n` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct PairVector {
    data: Vec<f64>,
    n: usize,
}

impl PairVector {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        let mut data = x;
        data.extend_from_slice(&y);
        Self::from_concat(data, n)
    }

    /// Builds `[x; y]` from an already concatenated buffer.
    pub fn from_concat(data: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || data.len() <= n {
            return Err(Error::invalid(format!(
                "pair vector needs n >= 1 and m >= 1, got n={n}, total={}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("entry {i} is not finite")));
        }
        Ok(Self { data, n })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        assert!(n >= 1 && m >= 1, "pair vector blocks must be non-empty");
        Self {
            data: vec![0.0; n + m],
            n,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.data.len() - self.n
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.m())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn x(&self) -> &[f64] {
        &self.data[..self.n]
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.data[self.n..]
    }

    #[inline]
    pub fn x_mut(&mut self) -> &mut [f64] {
        &mut self.data[..self.n]
    }

    #[inline]
    pub fn y_mut(&mut self) -> &mut [f64] {
        &mut self.data[self.n..]
    }

    #[inline]
    pub fn split_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        self.data.split_at_mut(self.n)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn check_dims(&self, expected: (usize, usize)) -> Result<()> {
        if self.dims() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dims(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &PairVector) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        sum_squares(self.data.iter().copied(), self.data.len())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self <- a * self + b * other`
    #[inline]
    pub fn lincomb_assign(&mut self, a: f64, b: f64, other: &PairVector) {
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s = a * *s + b * o;
        }
    }

    /// `self <- a * p + b * q`
    #[inline]
    pub fn set_lincomb(&mut self, a: f64, p: &PairVector, b: f64, q: &PairVector) {
        for ((s, u), v) in self.data.iter_mut().zip(&p.data).zip(&q.data) {
            *s = a * u + b * v;
        }
    }

    pub fn copy_from(&mut self, other: &PairVector) {
        self.data.copy_from_slice(&other.data);
    }

    pub fn sub(&self, other: &PairVector) -> PairVector {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        PairVector { data, n: self.n }
    }

    pub fn add(&self, other: &PairVector) -> PairVector {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        PairVector { data, n: self.n }
    }

    pub fn scale(&self, s: f64) -> PairVector {
        PairVector {
            data: self.data.iter().map(|v| v * s).collect(),
            n: self.n,
        }
    }
}

/// Squared Euclidean distance between two points with matching blocks.
pub fn sq_dist(z: &PairVector, zstar: &PairVector) -> Result<f64> {
    z.check_dims(zstar.dims())?;
    Ok(sq_dist_unchecked(z, zstar))
}

#[inline]
pub(crate) fn sq_dist_unchecked(z: &PairVector, zstar: &PairVector) -> f64 {
    sum_squares(
        z.data.iter().zip(&zstar.data).map(|(a, b)| a - b),
        z.data.len(),
    )
}

/// `‖x - x*‖² + w‖y - y*‖²`; the weighted norm in which scaled runs contract.
pub fn weighted_sq_dist(z: &PairVector, zstar: &PairVector, y_weight: f64) -> Result<f64> {
    z.check_dims(zstar.dims())?;
    let dx = sum_squares(z.x().iter().zip(zstar.x()).map(|(a, b)| a - b), z.n);
    let dy = sum_squares(z.y().iter().zip(zstar.y()).map(|(a, b)| a - b), z.m());
    Ok(dx + y_weight * dy)
}

fn sum_squares(it: impl Iterator<Item = f64>, len: usize) -> f64 {
    if len > COMPENSATED_THRESHOLD {
        neumaier_sum(it.map(|v| v * v))
    } else {
        it.map(|v| v * v).sum()
    }
}

pub(crate) fn neumaier_sum(it: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in it {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(x: &[f64], y: &[f64]) -> PairVector {
        PairVector::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn sq_dist_examples() {
        let z = pv(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(sq_dist(&z, &z).unwrap(), 0.0);
        let zero = PairVector::zeros(2, 2);
        assert_eq!(sq_dist(&pv(&[1.0, 0.0], &[0.0, 0.0]), &zero).unwrap(), 1.0);
        assert_eq!(sq_dist(&pv(&[3.0, 4.0], &[0.0, 0.0]), &zero).unwrap(), 25.0);
    }

    #[test]
    fn rejects_empty_blocks_and_non_finite() {
        assert!(PairVector::new(vec![], vec![1.0]).is_err());
        assert!(PairVector::new(vec![1.0], vec![]).is_err());
        assert!(PairVector::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = PairVector::zeros(2, 2);
        let b = PairVector::zeros(1, 3);
        assert!(matches!(
            sq_dist(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn compensated_sum_on_long_vectors() {
        // 1 followed by many tiny terms that plain summation drops.
        let n = 20_001;
        let mut x = vec![1e-9; n];
        x[0] = 1.0;
        let z = PairVector::new(x, vec![0.0]).unwrap();
        let expected = 1.0 + (n as f64 - 1.0) * 1e-18;
        assert!((z.norm_sq() - expected).abs() < 1e-17);
    }

    proptest! {
        #[test]
        fn sq_dist_symmetric_and_nonnegative(
            a in proptest::collection::vec(-1e3..1e3f64, 4),
            b in proptest::collection::vec(-1e3..1e3f64, 4),
        ) {
            let za = PairVector::from_concat(a, 2).unwrap();
            let zb = PairVector::from_concat(b, 2).unwrap();
            let d1 = sq_dist(&za, &zb).unwrap();
            let d2 = sq_dist(&zb, &za).unwrap();
            prop_assert!(d1 >= 0.0);
            prop_assert_eq!(d1, d2);
        }
    }
}
