use crate::error::{MixError, Result};
use crate::scalar::Scalar;

/// A sorted i.i.d. sample together with its empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample<T> {
    data: Vec<T>,
}

impl<T: Scalar> EmpiricalSample<T> {
    /// Sorts the data; rejects empty or non-finite input.
    pub fn new(mut data: Vec<T>) -> Result<Self> {
        if data.is_empty() {
            return Err(MixError::EmptySample);
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(MixError::InvalidArgument("non-finite observation".into()));
        }
        data.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Order statistics, ascending.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// `F_n(t) = #{X_i <= t} / n`.
    pub fn ecdf(&self, t: T) -> T {
        let k = self.data.partition_point(|&x| x <= t);
        T::from_usize_lossy(k) / T::from_usize_lossy(self.len())
    }

    /// Raw sample moment `n^{-1} sum X_i^k`.
    pub fn raw_moment(&self, k: usize) -> T {
        let n = T::from_usize_lossy(self.len());
        self.data.iter().map(|&x| x.powi(k as i32)).sum::<T>() / n
    }

    /// Empirical quantile by linear interpolation between order statistics.
    pub fn quantile(&self, p: T) -> T {
        let n = self.len();
        let pos = p.max(T::zero()).min(T::one()) * T::from_usize_lossy(n - 1);
        let lo = pos.floor().to_usize().unwrap_or(0).min(n - 1);
        let hi = (lo + 1).min(n - 1);
        let frac = pos - T::from_usize_lossy(lo);
        self.data[lo] + frac * (self.data[hi] - self.data[lo])
    }
}
