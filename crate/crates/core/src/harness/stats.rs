//! Running statistics and convergence-slope fitting.

/// Welford running mean and variance, mergeable across workers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn from_sums(n: u64, sum: f64, sum2: f64) -> Welford {
        if n == 0 {
            return Welford::default();
        }
        let mean = sum / n as f64;
        Welford {
            n,
            mean,
            m2: (sum2 - sum * mean).max(0.0),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (zero below two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One checkpoint of a convergence run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Checkpoint {
    pub n: u64,
    pub rmse: f64,
    /// `sqrt(mean_i s_i² / N)`: the RMSE expected from noise alone.
    pub noise: f64,
}

/// Estimated truncation floor: the part of the final RMSE that noise does
/// not explain.
pub fn floor_estimate(rows: &[Checkpoint]) -> f64 {
    rows.last()
        .map_or(0.0, |c| (c.rmse * c.rmse - c.noise * c.noise).max(0.0).sqrt())
}

/// Checkpoints whose noise level is at least twice the floor estimate.
pub fn pre_floor(rows: &[Checkpoint]) -> Vec<Checkpoint> {
    let floor = floor_estimate(rows);
    rows.iter().copied().filter(|c| c.noise >= 2.0 * floor).collect()
}

/// Log-log slope of RMSE against N over the pre-floor checkpoints, with
/// the number of checkpoints used. `None` with fewer than three.
pub fn pre_floor_slope(rows: &[Checkpoint]) -> Option<(f64, usize)> {
    let used = pre_floor(rows);
    if used.len() < 3 {
        return None;
    }
    let n: Vec<f64> = used.iter().map(|c| c.n as f64).collect();
    let e: Vec<f64> = used.iter().map(|c| c.rmse).collect();
    loglog_slope(&n, &e).map(|s| (s, used.len()))
}

/// Logarithmically spaced checkpoints from `lo` to `hi`, `per_decade` per
/// factor of ten, always including both ends.
pub fn log_schedule(lo: u64, hi: u64, per_decade: usize) -> Vec<u64> {
    let mut out = vec![lo];
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let steps = ((b - a) * per_decade as f64).round() as usize;
    for k in 1..=steps {
        let v = 10f64.powf(a + (b - a) * k as f64 / steps as f64).round() as u64;
        if v > *out.last().unwrap() {
            out.push(v);
        }
    }
    if *out.last().unwrap() != hi {
        out.push(hi);
    }
    out
}
