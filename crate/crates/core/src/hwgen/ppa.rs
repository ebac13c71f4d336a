//! Synapse-count-driven leakage and area forecasting.
//!
//! Reference data are post-layout results for twelve UCR designs in three
//! technologies. The default fit is the line minimizing the largest
//! relative error over the table rows; ordinary and relative least squares
//! are available for comparison.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pdk {
    FreePdk45,
    Asap7,
    Tnn7,
}

impl Pdk {
    pub const ALL: [Pdk; 3] = [Pdk::FreePdk45, Pdk::Asap7, Pdk::Tnn7];

    pub fn name(self) -> &'static str {
        match self {
            Pdk::FreePdk45 => "FreePDK45",
            Pdk::Asap7 => "ASAP7",
            Pdk::Tnn7 => "TNN7",
        }
    }

    /// Flow `node` value selecting this PDK.
    pub fn node(self) -> &'static str {
        match self {
            Pdk::FreePdk45 => "nangate45",
            Pdk::Asap7 => "asap7",
            Pdk::Tnn7 => "asap7_tnn7",
        }
    }

    pub fn from_node(node: &str) -> Option<Pdk> {
        Pdk::ALL.into_iter().find(|p| p.node() == node)
    }

    /// Accepts a node name or a PDK name, case-insensitively.
    pub fn parse(s: &str) -> Option<Pdk> {
        let s = s.to_ascii_lowercase();
        Pdk::ALL
            .into_iter()
            .find(|p| p.node() == s || p.name().to_ascii_lowercase() == s)
    }

    pub fn leakage_unit(self) -> PowerUnit {
        match self {
            Pdk::FreePdk45 => PowerUnit::MilliWatt,
            Pdk::Asap7 | Pdk::Tnn7 => PowerUnit::MicroWatt,
        }
    }
}

impl fmt::Display for Pdk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerUnit {
    #[serde(rename = "uW")]
    MicroWatt,
    #[serde(rename = "mW")]
    MilliWatt,
}

impl PowerUnit {
    pub fn symbol(self) -> &'static str {
        match self {
            PowerUnit::MicroWatt => "uW",
            PowerUnit::MilliWatt => "mW",
        }
    }

    pub fn to_milliwatts(self, v: f64) -> f64 {
        match self {
            PowerUnit::MicroWatt => v / 1000.0,
            PowerUnit::MilliWatt => v,
        }
    }
}

pub const AREA_UNIT: &str = "um2";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpaRow {
    pub benchmark: String,
    pub synapses: u64,
    pub leakage: f64,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpaTable {
    pub pdk: Pdk,
    pub leakage_unit: PowerUnit,
    pub rows: Vec<PpaRow>,
}

const BENCHMARKS: [&str; 12] = [
    "SonyAIBORobotSurface2",
    "ECG200",
    "Wafer",
    "TwoPattern",
    "Coffee",
    "ToeSegmentation2",
    "Plane",
    "Lightning2",
    "Meat",
    "Beef",
    "OSULeaf",
    "WordSynonyms",
];

const SYNAPSES: [u64; 12] = [130, 192, 304, 512, 572, 686, 1008, 1274, 1344, 2350, 2562, 6750];

const LEAKAGE: [[f64; 12]; 3] = [
    [0.32, 0.45, 0.73, 1.22, 1.33, 1.66, 2.44, 2.93, 3.02, 5.79, 6.31, 19.8],
    [0.94, 1.39, 2.21, 3.79, 4.22, 4.92, 7.32, 9.08, 9.57, 16.12, 17.57, 49.37],
    [0.74, 1.06, 1.68, 2.85, 3.25, 3.79, 5.56, 6.99, 7.42, 12.54, 13.67, 40.27],
];

const AREA: [[f64; 12]; 3] = [
    [
        15156.68, 21884.31, 34769.06, 58558.41, 65420.72, 74064.40, 108829.33, 138006.45, 145589.22, 262614.44,
        286305.61, 870555.73,
    ],
    [
        997.13, 1462.53, 2402.54, 4046.38, 4520.56, 5344.52, 7853.17, 10419.41, 10991.91, 18178.67, 19818.62,
        54856.83,
    ],
    [
        830.54, 1200.73, 1919.28, 3232.47, 3611.28, 4426.00, 6503.51, 8385.73, 8846.49, 15281.87, 16660.49,
        49478.29,
    ],
];

impl PpaTable {
    /// Published post-layout results for `pdk`.
    pub fn reference(pdk: Pdk) -> PpaTable {
        let k = pdk as usize;
        PpaTable {
            pdk,
            leakage_unit: pdk.leakage_unit(),
            rows: (0..12)
                .map(|i| PpaRow {
                    benchmark: BENCHMARKS[i].into(),
                    synapses: SYNAPSES[i],
                    leakage: LEAKAGE[k][i],
                    area: AREA[k][i],
                })
                .collect(),
        }
    }

    pub fn lookup(&self, synapses: u64) -> Option<&PpaRow> {
        self.rows.iter().find(|r| r.synapses == synapses)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "pdk,benchmark,synapses,leakage_{},area_{AREA_UNIT}\n",
            self.leakage_unit.symbol()
        );
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", self.pdk, r.benchmark, r.synapses, r.leakage, r.area);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Smallest worst-case relative error over the rows.
    #[default]
    Minimax,
    /// Ordinary least squares on absolute residuals.
    Ols,
    /// Least squares on relative residuals.
    RelativeLeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub rmse: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    fn with_residuals(slope: f64, intercept: f64, xs: &[f64], ys: &[f64]) -> LinearFit {
        let mut max_rel: f64 = 0.0;
        let mut sum_rel = 0.0;
        let mut sse = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            let r = slope * x + intercept - y;
            sse += r * r;
            if y != 0.0 {
                let rel = (r / y).abs();
                max_rel = max_rel.max(rel);
                sum_rel += rel;
            }
        }
        LinearFit {
            slope,
            intercept,
            max_rel_error: max_rel,
            mean_rel_error: sum_rel / xs.len() as f64,
            rmse: (sse / xs.len() as f64).sqrt(),
        }
    }
}

fn weighted_least_squares(xs: &[f64], ys: &[f64], ws: &[f64]) -> Option<(f64, f64)> {
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][c] = r[row];
        }
        *o = det(mc) / d;
    }
    Some(out)
}

/// Chebyshev line under weights `ws`: the optimum equioscillates on three
/// rows, so every row triple and sign pattern is tried.
fn minimax(xs: &[f64], ys: &[f64], ws: &[f64]) -> (f64, f64) {
    let worst = |a: f64, b: f64| {
        xs.iter()
            .zip(ys)
            .zip(ws)
            .map(|((&x, &y), &w)| ((a * x + b - y) * w).abs())
            .fold(0.0, f64::max)
    };
    let n = xs.len();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let mut consider = |a: f64, b: f64| {
        let e = worst(a, b);
        if e < best.0 {
            best = (e, a, b);
        }
    };
    for i in 0..n {
        for j in i + 1..n {
            if xs[i] != xs[j] {
                let a = (ys[j] - ys[i]) / (xs[j] - xs[i]);
                consider(a, ys[i] - a * xs[i]);
            }
            for k in j + 1..n {
                for signs in 0..8 {
                    let s = |bit: usize| if signs >> bit & 1 == 1 { 1.0 } else { -1.0 };
                    // a*x + b - s*e/w = y
                    let rows = [(i, s(0)), (j, s(1)), (k, s(2))];
                    let m = rows.map(|(r, sg)| [xs[r], 1.0, -sg / ws[r]]);
                    let rhs = rows.map(|(r, _)| ys[r]);
                    if let Some([a, b, e]) = solve3(m, rhs) {
                        if e >= 0.0 {
                            consider(a, b);
                        }
                    }
                }
            }
        }
    }
    (best.1, best.2)
}

/// Fits `y = slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64], method: FitMethod) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            actual: ys.len(),
            context: "fit points",
        });
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 rows, got {}", xs.len())));
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::DegenerateFit("all synapse counts are equal".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite table entry".into()));
    }
    let ones = vec![1.0; xs.len()];
    let positive = ys.iter().all(|&y| y > 0.0);
    // Relative weighting needs positive targets; fall back to absolute.
    let rel: Vec<f64> = if positive {
        ys.iter().map(|y| 1.0 / y).collect()
    } else {
        ones.clone()
    };
    let (slope, intercept) = match method {
        _ if xs.len() == 2 => {
            let a = (ys[1] - ys[0]) / (xs[1] - xs[0]);
            (a, ys[0] - a * xs[0])
        }
        FitMethod::Ols => weighted_least_squares(xs, ys, &ones).unwrap(),
        FitMethod::RelativeLeastSquares => {
            let w2: Vec<f64> = rel.iter().map(|w| w * w).collect();
            weighted_least_squares(xs, ys, &w2).unwrap()
        }
        FitMethod::Minimax => minimax(xs, ys, &rel),
    };
    Ok(LinearFit::with_residuals(slope, intercept, xs, ys))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpaModel {
    pub pdk: Pdk,
    pub method: FitMethod,
    pub leakage_unit: PowerUnit,
    pub leakage: LinearFit,
    pub area: LinearFit,
    /// Synapse range covered by the fitted rows.
    pub fit_range: (u64, u64),
}

/// Fits leakage and area against synapse count.
pub fn fit_ppa(table: &PpaTable, method: FitMethod) -> Result<PpaModel> {
    let xs: Vec<f64> = table.rows.iter().map(|r| r.synapses as f64).collect();
    let leak: Vec<f64> = table.rows.iter().map(|r| r.leakage).collect();
    let area: Vec<f64> = table.rows.iter().map(|r| r.area).collect();
    let leakage = fit_line(&xs, &leak, method)?;
    let area = fit_line(&xs, &area, method)?;
    let lo = table.rows.iter().map(|r| r.synapses).min().unwrap_or(0);
    let hi = table.rows.iter().map(|r| r.synapses).max().unwrap_or(0);
    Ok(PpaModel {
        pdk: table.pdk,
        method,
        leakage_unit: table.leakage_unit,
        leakage,
        area,
        fit_range: (lo, hi),
    })
}

/// Default fit of the reference table.
pub fn reference_model(pdk: Pdk) -> PpaModel {
    fit_ppa(&PpaTable::reference(pdk), FitMethod::Minimax).expect("reference table fits")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub pdk: Pdk,
    pub synapses: u64,
    pub leakage: f64,
    pub leakage_unit: PowerUnit,
    pub area: f64,
    pub warnings: Vec<String>,
}

impl Forecast {
    pub fn leakage_mw(&self) -> f64 {
        self.leakage_unit.to_milliwatts(self.leakage)
    }

    pub fn area_mm2(&self) -> f64 {
        self.area / 1e6
    }
}

impl PpaModel {
    pub fn forecast(&self, synapses: u64) -> Forecast {
        let x = synapses as f64;
        let mut warnings = Vec::new();
        let mut leakage = self.leakage.predict(x);
        let mut area = self.area.predict(x);
        if leakage < 0.0 {
            warnings.push(format!("negative leakage {leakage:.4} clamped to 0"));
            leakage = 0.0;
        }
        if area < 0.0 {
            warnings.push(format!("negative area {area:.4} clamped to 0"));
            area = 0.0;
        }
        if synapses < self.fit_range.0 || synapses > self.fit_range.1 {
            warnings.push(format!(
                "{synapses} synapses lies outside the fitted range {}..={}; extrapolated",
                self.fit_range.0, self.fit_range.1
            ));
        }
        Forecast {
            pdk: self.pdk,
            synapses,
            leakage,
            leakage_unit: self.leakage_unit,
            area,
            warnings,
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{:?},{},{:.9},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.pdk,
            self.method,
            self.leakage_unit.symbol(),
            self.leakage.slope,
            self.leakage.intercept,
            self.leakage.max_rel_error,
            self.area.slope,
            self.area.intercept,
            self.area.max_rel_error
        )
    }
}

pub const FIT_CSV_HEADER: &str =
    "pdk,method,leakage_unit,leakage_slope,leakage_intercept,leakage_max_rel_error,area_slope_um2,area_intercept_um2,area_max_rel_error";

pub fn fits_csv(models: &[PpaModel]) -> String {
    let mut s = String::from(FIT_CSV_HEADER);
    s.push('\n');
    for m in models {
        s.push_str(&m.to_csv_row());
        s.push('\n');
    }
    s
}

pub const FORECAST_CSV_HEADER: &str = "pdk,synapses,leakage,leakage_unit,leakage_mw,area_um2,area_mm2,warnings";

pub fn forecasts_csv(rows: &[Forecast]) -> String {
    let mut s = String::from(FORECAST_CSV_HEADER);
    s.push('\n');
    for f in rows {
        let _ = writeln!(
            s,
            "{},{},{:.6},{},{:.6},{:.3},{:.6},{}",
            f.pdk,
            f.synapses,
            f.leakage,
            f.leakage_unit.symbol(),
            f.leakage_mw(),
            f.area,
            f.area_mm2(),
            f.warnings.join("; ").replace(',', ";")
        );
    }
    s
}

/// Forecasts for every PDK, lowest leakage first (compared in mW).
pub fn compare_pdks(synapses: u64) -> Vec<Forecast> {
    let mut rows: Vec<Forecast> = Pdk::ALL.iter().map(|&p| reference_model(p).forecast(synapses)).collect();
    rows.sort_by(|a, b| a.leakage_mw().total_cmp(&b.leakage_mw()).then(a.pdk.cmp(&b.pdk)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_interpolate_exactly() {
        for m in [FitMethod::Minimax, FitMethod::Ols, FitMethod::RelativeLeastSquares] {
            let f = fit_line(&[0.0, 1.0], &[2.5, 4.0], m).unwrap();
            assert!((f.slope - 1.5).abs() < 1e-12 && (f.intercept - 2.5).abs() < 1e-12);
        }
        let f = fit_line(&[0.0, 1.0], &[0.0, 3.0], FitMethod::Minimax).unwrap();
        assert_eq!((f.slope, f.intercept), (3.0, 0.0));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_line(&[3.0, 3.0], &[1.0, 2.0], FitMethod::Ols), Err(Error::DegenerateFit(_))));
        assert!(fit_line(&[1.0], &[1.0], FitMethod::Ols).is_err());
    }

    #[test]
    fn collinear_points_fit_exactly() {
        let xs = [1.0, 2.0, 5.0, 9.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x + 1.0).collect();
        for m in [FitMethod::Minimax, FitMethod::Ols, FitMethod::RelativeLeastSquares] {
            let f = fit_line(&xs, &ys, m).unwrap();
            assert!(f.max_rel_error < 1e-9, "{m:?}");
        }
    }

    #[test]
    fn minimax_beats_least_squares_on_worst_case() {
        let t = PpaTable::reference(Pdk::FreePdk45);
        let mm = fit_ppa(&t, FitMethod::Minimax).unwrap();
        let ols = fit_ppa(&t, FitMethod::Ols).unwrap();
        let rls = fit_ppa(&t, FitMethod::RelativeLeastSquares).unwrap();
        assert!(mm.leakage.max_rel_error <= ols.leakage.max_rel_error);
        assert!(mm.leakage.max_rel_error <= rls.leakage.max_rel_error);
        assert!(mm.leakage.max_rel_error < 0.15);
    }

    #[test]
    fn tnn7_two_point_slope_is_close() {
        let two: f64 = (40.27 - 0.74) / (6750.0 - 130.0);
        assert!((two - 5.97e-3).abs() < 1e-5);
        let fit = reference_model(Pdk::Tnn7);
        assert!((fit.leakage.slope - two).abs() / two < 0.1);
    }

    #[test]
    fn forecast_is_linear_and_clamped() {
        let m = reference_model(Pdk::Asap7);
        let f = |s| m.forecast(s);
        let (a, b, c) = (f(1000), f(2000), f(3000));
        assert!(((b.leakage - a.leakage) - (c.leakage - b.leakage)).abs() < 1e-9);
        assert!(((b.area - a.area) - (c.area - b.area)).abs() < 1e-6);
        let zero = reference_model(Pdk::FreePdk45).forecast(0);
        assert_eq!(zero.leakage, 0.0);
        assert!(zero.warnings.iter().any(|w| w.contains("clamped")));
        assert!(reference_model(Pdk::Tnn7).forecast(1_232_000).warnings.iter().any(|w| w.contains("outside")));
    }

    #[test]
    fn pdk_ranking() {
        for s in [500, 5000, 50000] {
            let order: Vec<Pdk> = compare_pdks(s).iter().map(|f| f.pdk).collect();
            assert_eq!(order, vec![Pdk::Tnn7, Pdk::Asap7, Pdk::FreePdk45], "S={s}");
        }
    }

    #[test]
    fn node_names() {
        assert_eq!(Pdk::from_node("asap7_tnn7"), Some(Pdk::Tnn7));
        assert_eq!(Pdk::parse("FreePDK45"), Some(Pdk::FreePdk45));
        assert_eq!(Pdk::parse("nangate45"), Some(Pdk::FreePdk45));
        assert_eq!(Pdk::from_node("asap9"), None);
    }

    #[test]
    fn csv_exports() {
        let t = PpaTable::reference(Pdk::Tnn7).to_csv();
        assert!(t.starts_with("pdk,benchmark,synapses,leakage_uW,area_um2\nTNN7,SonyAIBORobotSurface2,130,0.74,830.54\n"));
        assert_eq!(t.lines().count(), 13);
        let f = fits_csv(&[reference_model(Pdk::Tnn7)]);
        assert_eq!(f.lines().count(), 2);
    }
}
