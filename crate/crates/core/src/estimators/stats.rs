use std::collections::BTreeMap;

/// One row of a Monte Carlo table.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRow {
    pub params: Vec<f64>,
    pub estimate: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed_lo: u64,
    pub seed_hi: u64,
}

/// Rows of estimates keyed by named parameters, plus free-form metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EstimateTable {
    pub param_names: Vec<String>,
    pub rows: Vec<EstimateRow>,
    pub meta: BTreeMap<String, String>,
}

impl EstimateTable {
    pub fn new(param_names: &[&str]) -> Self {
        Self { param_names: param_names.iter().map(|s| s.to_string()).collect(), ..Self::default() }
    }

    pub fn push(&mut self, params: Vec<f64>, estimate: f64, stderr: f64, n: u64, seeds: std::ops::Range<u64>) {
        debug_assert_eq!(params.len(), self.param_names.len());
        self.rows.push(EstimateRow { params, estimate, stderr, n, seed_lo: seeds.start, seed_hi: seeds.end });
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = self.param_names.clone();
        h.extend(["estimate", "stderr", "n", "seed_lo", "seed_hi"].map(String::from));
        h
    }

    /// Estimates in row order.
    pub fn estimates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.estimate).collect()
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Half-width of the one-sigma Wilson score interval for `k` successes in `n`
/// trials; positive even when `k = 0`.
pub fn wilson_se(k: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let n = n as f64;
    let p = k as f64 / n;
    (p * (1.0 - p) / n + 1.0 / (4.0 * n * n)).sqrt() / (1.0 + 1.0 / n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

impl SlopeFit {
    /// `|slope| / stderr`.
    pub fn z(&self) -> f64 {
        self.slope.abs() / self.stderr
    }
}

/// Weighted least squares of `y` on `x` with weights `w`.
pub fn wls(x: &[f64], y: &[f64], w: &[f64]) -> Option<SlopeFit> {
    if x.len() < 2 {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if det <= 0.0 || !det.is_finite() {
        return None;
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    Some(SlopeFit { slope, stderr: (sw / det).sqrt(), intercept, points: x.len() })
}

/// Slope of log-frequency against `t`. Rows with zero frequency are dropped;
/// each log-frequency is weighted by `(f / se)²` using its Wilson standard error.
pub fn log_frequency_slope(t: &[f64], freq: &[f64], se: &[f64]) -> Option<SlopeFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for ((&t, &f), &s) in t.iter().zip(freq).zip(se) {
        if f > 0.0 && s > 0.0 {
            xs.push(t);
            ys.push(f.ln());
            ws.push((f / s) * (f / s));
        }
    }
    wls(&xs, &ys, &ws)
}

/// Fits the log-frequency slope of the rows of a tail table whose first
/// parameter is `t`.
pub fn table_slope(table: &EstimateTable) -> Option<SlopeFit> {
    let t: Vec<f64> = table.rows.iter().map(|r| r.params[0]).collect();
    let f: Vec<f64> = table.rows.iter().map(|r| r.estimate).collect();
    let s: Vec<f64> = table.rows.iter().map(|r| r.stderr).collect();
    log_frequency_slope(&t, &f, &s)
}
