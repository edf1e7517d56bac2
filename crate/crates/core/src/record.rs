use num_complex::Complex64;

/// Uniformly sampled complex amplitude over co-moving time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeRecord {
    /// Time of the first sample in s.
    pub t0: f64,
    /// Sample spacing in s.
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl TimeRecord {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Self {
        Self { t0, dt, values }
    }

    pub fn zeros(t0: f64, dt: f64, len: usize) -> Self {
        Self::new(t0, dt, vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::new(self.t0, self.dt, self.values.iter().map(|v| v * factor).collect())
    }

    /// The record `t -> values(pivot - t)`, sampled on the mirrored grid.
    pub fn time_reversed(&self, pivot: f64) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self::new(pivot - self.t_end(), self.dt, values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
