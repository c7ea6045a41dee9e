//! Ordinary least squares with the usual diagnostics, used to relate Borda
//! lever scores to community covariates and an information-treatment dummy.
//!
//! The fit goes through a column-pivoted Householder QR, so collinear columns
//! are detected and named instead of producing garbage estimates.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};
use thiserror::Error;

use crate::catalog::Lever;
use crate::metrics::{borda_scores, MetricsError};
use crate::voting::Ballot;

/// Relative diagonal threshold below which a pivoted column counts as collinear.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub const INTERCEPT: &str = "const";
pub const TREATMENT: &str = "info_dummy";

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("failed to read covariates: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed covariate table: {0}")]
    Csv(#[from] csv::Error),
    #[error("covariate table row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("covariate table has no `community_id` column")]
    MissingIdColumn,
    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),
    #[error("need more observations than parameters: n = {n_obs}, p = {n_params}")]
    TooFewObservations { n_obs: usize, n_params: usize },
    #[error("response has {found} values for {expected} observations")]
    LengthMismatch { expected: usize, found: usize },
    #[error("design matrix is rank deficient; collinear columns: {0:?}")]
    RankDeficient(Vec<String>),
    #[error("need at least two covariates for variance inflation factors")]
    TooFewCovariates,
    #[error("scenario community sets differ: {0:?} present in one condition only")]
    CommunityMismatch(Vec<u32>),
    #[error("no covariates for community {0}")]
    MissingCommunity(u32),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Per-community covariates as read from the covariate file, as fractions in
/// [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct CommunityCovariates {
    names: Vec<String>,
    rows: BTreeMap<u32, Vec<f64>>,
}

impl CommunityCovariates {
    pub fn new(names: Vec<String>, rows: BTreeMap<u32, Vec<f64>>) -> Result<CommunityCovariates, RegressionError> {
        for (i, (id, values)) in rows.iter().enumerate() {
            check_covariate_row(i + 1, *id, values, names.len())?;
        }
        Ok(CommunityCovariates { names, rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CommunityCovariates, RegressionError> {
        CommunityCovariates::from_reader(std::fs::File::open(path)?)
    }

    /// Reads `community_id,<covariate>,...`; any number of covariate columns.
    pub fn from_reader<R: Read>(reader: R) -> Result<CommunityCovariates, RegressionError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.first().map(String::as_str) != Some("community_id") {
            return Err(RegressionError::MissingIdColumn);
        }
        let names: Vec<String> = header[1..].to_vec();
        let mut rows = BTreeMap::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record?;
            let bad = |message: String| RegressionError::Row { row, message };
            let id: u32 = record
                .get(0)
                .unwrap_or_default()
                .parse()
                .map_err(|e| bad(format!("community_id: {e}")))?;
            let values = record
                .iter()
                .skip(1)
                .zip(&names)
                .map(|(cell, name)| {
                    if cell.is_empty() {
                        return Err(bad(format!("{name} is missing")));
                    }
                    cell.parse::<f64>().map_err(|e| bad(format!("{name}: {e}")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            check_covariate_row(row, id, &values, names.len())?;
            if rows.insert(id, values).is_some() {
                return Err(bad(format!("duplicate community_id {id}")));
            }
        }
        Ok(CommunityCovariates { names, rows })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, community_id: u32) -> Option<&[f64]> {
        self.rows.get(&community_id).map(Vec::as_slice)
    }

    pub fn communities(&self) -> impl Iterator<Item = u32> + '_ {
        self.rows.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Covariates only (no intercept), one row per community in id order.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.rows.len();
        let k = self.names.len();
        DMatrix::from_fn(n, k, |i, j| self.rows.values().nth(i).expect("row")[j])
    }
}

fn check_covariate_row(row: usize, id: u32, values: &[f64], expected: usize) -> Result<(), RegressionError> {
    if values.len() != expected {
        return Err(RegressionError::Row { row, message: format!("expected {expected} covariates, found {}", values.len()) });
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(RegressionError::Row {
            row,
            message: format!("community {id}: value {v} is not a fraction in [0, 1]"),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariateRow {
    pub community_id: u32,
    pub values: Vec<f64>,
    pub treated: bool,
}

/// Stacked observations: covariates plus the treatment flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariateTable {
    pub names: Vec<String>,
    pub rows: Vec<CovariateRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    pub matrix: DMatrix<f64>,
    pub terms: Vec<String>,
}

/// Columns: intercept, covariates, treatment dummy, then each covariate
/// multiplied by the dummy.
pub fn build_design_matrix(table: &CovariateTable, covariate_names: &[&str]) -> Result<DesignMatrix, RegressionError> {
    let columns = covariate_names
        .iter()
        .map(|name| {
            table
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| RegressionError::UnknownCovariate(name.to_string()))
        })
        .collect::<Result<Vec<usize>, _>>()?;
    let k = columns.len();
    let p = 2 * k + 2;
    let n = table.rows.len();
    if n < p {
        return Err(RegressionError::TooFewObservations { n_obs: n, n_params: p });
    }

    let mut terms = Vec::with_capacity(p);
    terms.push(INTERCEPT.to_string());
    terms.extend(covariate_names.iter().map(|s| s.to_string()));
    terms.push(TREATMENT.to_string());
    terms.extend(covariate_names.iter().map(|s| format!("{s}_x_info")));

    let matrix = DMatrix::from_fn(n, p, |i, j| {
        let row = &table.rows[i];
        let d = if row.treated { 1.0 } else { 0.0 };
        match j {
            0 => 1.0,
            j if j <= k => row.values[columns[j - 1]],
            j if j == k + 1 => d,
            j => row.values[columns[j - k - 2]] * d,
        }
    });
    Ok(DesignMatrix { matrix, terms })
}

/// Householder QR with column pivoting, `X P = Q R`.
struct PivotedQr {
    /// Householder vectors below the diagonal, R on and above it.
    qr: DMatrix<f64>,
    tau: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    fn new(x: &DMatrix<f64>) -> PivotedQr {
        let (n, p) = x.shape();
        let mut a = x.clone();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut tau = vec![0.0; p.min(n)];
        let mut norms: Vec<f64> = (0..p).map(|j| a.column(j).norm_squared()).collect();

        for k in 0..p.min(n) {
            let pivot = (k..p).max_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(b.cmp(&a))).expect("column");
            if pivot != k {
                a.swap_columns(k, pivot);
                perm.swap(k, pivot);
                norms.swap(k, pivot);
            }
            let alpha = a.view((k, k), (n - k, 1)).norm();
            if alpha == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let beta = if a[(k, k)] > 0.0 { -alpha } else { alpha };
            let v0 = a[(k, k)] - beta;
            for i in k + 1..n {
                a[(i, k)] /= v0;
            }
            tau[k] = (beta - a[(k, k)]) / beta;
            a[(k, k)] = beta;
            for j in k + 1..p {
                let mut s = a[(k, j)];
                for i in k + 1..n {
                    s += a[(i, k)] * a[(i, j)];
                }
                s *= tau[k];
                a[(k, j)] -= s;
                for i in k + 1..n {
                    let vik = a[(i, k)];
                    a[(i, j)] -= s * vik;
                }
            }
            // recompute trailing norms exactly; matrices here are small
            for (j, norm) in norms.iter_mut().enumerate().skip(k + 1) {
                *norm = a.view((k + 1, j), (n - k - 1, 1)).norm_squared();
            }
        }

        let lead = if p > 0 && n > 0 { a[(0, 0)].abs() } else { 0.0 };
        let rank = (0..p.min(n)).take_while(|&k| lead > 0.0 && a[(k, k)].abs() > RANK_TOLERANCE * lead).count();
        PivotedQr { qr: a, tau, perm, rank }
    }

    /// Applies `Q^T` to `y` in place.
    fn apply_qt(&self, y: &mut DVector<f64>) {
        let n = self.qr.nrows();
        for k in 0..self.tau.len() {
            if self.tau[k] == 0.0 {
                continue;
            }
            let mut s = y[k];
            for i in k + 1..n {
                s += self.qr[(i, k)] * y[i];
            }
            s *= self.tau[k];
            y[k] -= s;
            for i in k + 1..n {
                y[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Residual of `y` after projection onto the span of the first `rank`
    /// pivoted columns.
    fn residual_ss(&self, y: &DVector<f64>) -> f64 {
        let mut qty = y.clone();
        self.apply_qt(&mut qty);
        qty.rows(self.rank, qty.len() - self.rank).norm_squared()
    }
}

/// OLS estimates and diagnostics. Vectors follow the order of `terms`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    /// Joint test of every non-intercept term; absent for intercept-only fits.
    pub f_statistic: Option<f64>,
    pub f_pvalue: Option<f64>,
    pub aic: f64,
    pub n_obs: usize,
    pub n_params: usize,
    pub sse: f64,
    pub sst: f64,
    pub residuals: Vec<f64>,
    pub has_intercept: bool,
}

impl FitResult {
    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.term_index(term).map(|i| self.coefficients[i])
    }

    /// Regression sum of squares, `SST - SSE`.
    pub fn ssr(&self) -> f64 {
        self.sst - self.sse
    }
}

/// Significance marks: † p < 0.1, * p < 0.05, ** p < 0.01, *** p < 0.001.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else if p < 0.1 {
        "†"
    } else {
        ""
    }
}

pub fn fit_ols(design: &DesignMatrix, y: &[f64]) -> Result<FitResult, RegressionError> {
    let x = &design.matrix;
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(RegressionError::LengthMismatch { expected: n, found: y.len() });
    }
    if n <= p {
        return Err(RegressionError::TooFewObservations { n_obs: n, n_params: p });
    }
    let qr = PivotedQr::new(x);
    if qr.rank < p {
        let collinear = qr.perm[qr.rank..].iter().map(|&j| design.terms[j].clone()).collect();
        return Err(RegressionError::RankDeficient(collinear));
    }

    let yv = DVector::from_column_slice(y);
    let mut qty = yv.clone();
    qr.apply_qt(&mut qty);

    // back substitution R b = (Q^T y)[..p], in pivoted order
    let r = qr.qr.view((0, 0), (p, p)).upper_triangle();
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| RegressionError::RankDeficient(design.terms.clone()))?;
    let b_perm = &r_inv * qty.rows(0, p);
    let mut coefficients = vec![0.0; p];
    for (k, &j) in qr.perm.iter().enumerate() {
        coefficients[j] = b_perm[k];
    }

    let beta = DVector::from_column_slice(&coefficients);
    let fitted = x * &beta;
    let residuals: Vec<f64> = (&yv - &fitted).iter().copied().collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();

    let has_intercept = (0..p).any(|j| x.column(j).iter().all(|&v| v == 1.0));
    let sst = if has_intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };

    let df_resid = (n - p) as f64;
    let sigma2 = sse / df_resid;
    // (X^T X)^-1 = P R^-1 R^-T P^T
    let cov_perm = &r_inv * r_inv.transpose();
    let mut std_errors = vec![0.0; p];
    for (k, &j) in qr.perm.iter().enumerate() {
        std_errors[j] = (sigma2 * cov_perm[(k, k)]).sqrt();
    }
    let t_dist = StudentsT::new(0.0, 1.0, df_resid).expect("positive degrees of freedom");
    let t_values: Vec<f64> = coefficients.iter().zip(&std_errors).map(|(b, se)| b / se).collect();
    let p_values = t_values.iter().map(|t| two_sided_p(&t_dist, *t)).collect();

    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - if has_intercept { 1.0 } else { 0.0 }) / df_resid;
    let df_model = if has_intercept { p - 1 } else { p };
    let (f_statistic, f_pvalue) = if df_model == 0 {
        (None, None)
    } else {
        let f: f64 = ((sst - sse) / df_model as f64) / sigma2;
        let pval = FisherSnedecor::new(df_model as f64, df_resid)
            .map(|d| if f.is_finite() { d.sf(f) } else { 0.0 })
            .unwrap_or(f64::NAN);
        (Some(f), Some(pval))
    };
    let nf = n as f64;
    let aic = nf * (2.0 * std::f64::consts::PI * sse / nf).ln() + nf + 2.0 * (p as f64 + 1.0);

    Ok(FitResult {
        terms: design.terms.clone(),
        coefficients,
        std_errors,
        t_values,
        p_values,
        r2,
        adj_r2,
        f_statistic,
        f_pvalue,
        aic,
        n_obs: n,
        n_params: p,
        sse,
        sst,
        residuals,
        has_intercept,
    })
}

fn two_sided_p(dist: &StudentsT, t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    (2.0 * dist.sf(t.abs())).min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VifReport {
    pub names: Vec<String>,
    /// `1 / (1 - R_j^2)`; infinite under perfect collinearity.
    pub values: Vec<f64>,
}

/// Variance inflation factor of each column of `covariates` (no intercept
/// column), from auxiliary regressions on an intercept and the other columns.
pub fn vif(covariates: &DMatrix<f64>, names: &[String]) -> Result<VifReport, RegressionError> {
    let (n, k) = covariates.shape();
    if k < 2 {
        return Err(RegressionError::TooFewCovariates);
    }
    let mut values = Vec::with_capacity(k);
    for j in 0..k {
        let aux = DMatrix::from_fn(n, k, |i, c| match c {
            0 => 1.0,
            c if c <= j => covariates[(i, c - 1)],
            c => covariates[(i, c)],
        });
        let y = covariates.column(j).into_owned();
        let mean = y.mean();
        let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        let sse = PivotedQr::new(&aux).residual_ss(&y);
        let unexplained = if sst > 0.0 { sse / sst } else { 0.0 };
        values.push(if unexplained <= 1e-12 { f64::INFINITY } else { 1.0 / unexplained });
    }
    Ok(VifReport { names: names.to_vec(), values })
}

/// Screening aids for choosing covariates: each covariate's simple
/// regression on the response, and pairwise Pearson correlations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub names: Vec<String>,
    pub slopes: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub f_statistics: Vec<f64>,
    pub correlations: Vec<Vec<f64>>,
}

pub fn screen_covariates(covariates: &DMatrix<f64>, names: &[String], y: &[f64]) -> Result<ScreeningReport, RegressionError> {
    let (n, k) = covariates.shape();
    let mut report = ScreeningReport {
        names: names.to_vec(),
        slopes: Vec::with_capacity(k),
        t_values: Vec::with_capacity(k),
        p_values: Vec::with_capacity(k),
        f_statistics: Vec::with_capacity(k),
        correlations: vec![vec![0.0; k]; k],
    };
    for j in 0..k {
        let design = DesignMatrix {
            matrix: DMatrix::from_fn(n, 2, |i, c| if c == 0 { 1.0 } else { covariates[(i, j)] }),
            terms: vec![INTERCEPT.to_string(), names[j].clone()],
        };
        let fit = fit_ols(&design, y)?;
        report.slopes.push(fit.coefficients[1]);
        report.t_values.push(fit.t_values[1]);
        report.p_values.push(fit.p_values[1]);
        report.f_statistics.push(fit.f_statistic.unwrap_or(f64::NAN));
    }
    let cols: Vec<DVector<f64>> = (0..k).map(|j| covariates.column(j).into_owned()).collect();
    for a in 0..k {
        for b in 0..k {
            report.correlations[a][b] = pearson(&cols[a], &cols[b]);
        }
    }
    Ok(report)
}

fn pearson(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let (ma, mb) = (a.mean(), b.mean());
    let cov: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Fits for all three levers on the stacked control and treated observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeverRegressions {
    pub fits: BTreeMap<Lever, FitResult>,
    pub vif: Option<VifReport>,
    pub table: CovariateTable,
    /// Stacked Borda responses per lever, in `table.rows` order.
    pub responses: BTreeMap<Lever, Vec<f64>>,
}

/// Stacks per-community Borda scores from the untreated (`com_rounds`) and
/// treated (`know_rounds`) scenarios and fits one model per lever.
///
/// Untreated observations come first, each block in community-id order.
pub fn run_lever_regressions(
    know_rounds: &[Vec<Ballot>],
    com_rounds: &[Vec<Ballot>],
    covariates: &CommunityCovariates,
) -> Result<LeverRegressions, RegressionError> {
    let mut by_lever = BTreeMap::new();
    let mut communities: Option<Vec<u32>> = None;
    for lever in Lever::ALL {
        let know: BTreeMap<u32, f64> =
            borda_scores(know_rounds, lever)?.into_iter().map(|s| (s.community_id, s.score)).collect();
        let com: BTreeMap<u32, f64> =
            borda_scores(com_rounds, lever)?.into_iter().map(|s| (s.community_id, s.score)).collect();
        let know_ids: BTreeSet<u32> = know.keys().copied().collect();
        let com_ids: BTreeSet<u32> = com.keys().copied().collect();
        if know_ids != com_ids {
            let diff = know_ids.symmetric_difference(&com_ids).copied().collect();
            return Err(RegressionError::CommunityMismatch(diff));
        }
        communities.get_or_insert_with(|| com_ids.iter().copied().collect());
        by_lever.insert(lever, (com, know));
    }
    let communities = communities.unwrap_or_default();

    let mut rows = Vec::with_capacity(2 * communities.len());
    for treated in [false, true] {
        for &id in &communities {
            let values = covariates.get(id).ok_or(RegressionError::MissingCommunity(id))?.to_vec();
            rows.push(CovariateRow { community_id: id, values, treated });
        }
    }
    let table = CovariateTable { names: covariates.names().to_vec(), rows };
    let names: Vec<&str> = covariates.names().iter().map(String::as_str).collect();
    let design = build_design_matrix(&table, &names)?;

    let mut fits = BTreeMap::new();
    let mut responses = BTreeMap::new();
    for (lever, (com, know)) in by_lever {
        let y: Vec<f64> = table
            .rows
            .iter()
            .map(|r| if r.treated { know[&r.community_id] } else { com[&r.community_id] })
            .collect();
        fits.insert(lever, fit_ols(&design, &y)?);
        responses.insert(lever, y);
    }

    let present = CommunityCovariates {
        names: covariates.names().to_vec(),
        rows: communities.iter().map(|id| (*id, covariates.get(*id).expect("checked").to_vec())).collect(),
    };
    let vif = if present.names.len() >= 2 { Some(vif(&present.matrix(), present.names())?) } else { None };
    Ok(LeverRegressions { fits, vif, table, responses })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(cols: Vec<Vec<f64>>, terms: &[&str]) -> DesignMatrix {
        let n = cols[0].len();
        DesignMatrix {
            matrix: DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]),
            terms: terms.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn design_matrix_layout() {
        let table = CovariateTable {
            names: (0..5).map(|i| format!("c{i}")).collect(),
            rows: (0..14)
                .map(|i| CovariateRow {
                    community_id: i,
                    values: vec![0.1 * (i % 5) as f64; 5],
                    treated: i % 2 == 0,
                })
                .collect(),
        };
        let names: Vec<&str> = table.names.iter().map(String::as_str).collect();
        let d = build_design_matrix(&table, &names).unwrap();
        assert_eq!(d.matrix.ncols(), 12);
        assert_eq!(d.terms[0], "const");
        assert_eq!(d.terms[6], "info_dummy");
        assert_eq!(d.terms[7], "c0_x_info");

        let d = build_design_matrix(&table, &[]).unwrap();
        assert_eq!(d.terms, vec!["const", "info_dummy"]);

        let untreated = CovariateTable {
            rows: table.rows.iter().cloned().map(|r| CovariateRow { treated: false, ..r }).collect(),
            ..table.clone()
        };
        let d = build_design_matrix(&untreated, &names).unwrap();
        assert!(d.matrix.columns(7, 5).iter().all(|&v| v == 0.0));
        assert!(matches!(build_design_matrix(&table, &["nope"]), Err(RegressionError::UnknownCovariate(_))));
    }

    #[test]
    fn perfect_fit() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let fit = fit_ols(&design(vec![vec![1.0; 10], x], &["const", "x"]), &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intercept_only_is_the_mean() {
        let y = [1.0, 2.0, 4.0, 9.0];
        let fit = fit_ols(&design(vec![vec![1.0; 4]], &["const"]), &y).unwrap();
        assert!((fit.coefficients[0] - 4.0).abs() < 1e-12);
        assert_eq!(fit.r2, 0.0);
        assert!(fit.f_statistic.is_none());
    }

    #[test]
    fn collinear_columns_are_named() {
        let x: Vec<f64> = (0..8).map(|i| (i * i) as f64).collect();
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let y: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let err = fit_ols(&design(vec![vec![1.0; 8], x, twice], &["const", "x", "x2"]), &y).unwrap_err();
        match err {
            RegressionError::RankDeficient(cols) => assert_eq!(cols.len(), 1),
            other => panic!("unexpected {other}"),
        }
        let err = fit_ols(&design(vec![vec![1.0; 2], vec![0.0, 1.0]], &["const", "x"]), &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, RegressionError::TooFewObservations { .. }));
    }

    #[test]
    fn vif_orthogonal_and_duplicated() {
        let a = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let m = DMatrix::from_fn(8, 2, |i, j| if j == 0 { a[i] } else { b[i] });
        let names = vec!["a".to_string(), "b".to_string()];
        let r = vif(&m, &names).unwrap();
        assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-12));

        let dup = DMatrix::from_fn(8, 2, |i, _| a[i] * (i as f64));
        assert!(vif(&dup, &names).unwrap().values.iter().all(|v| v.is_infinite()));
        assert!(matches!(vif(&m.columns(0, 1).into_owned(), &names[..1]), Err(RegressionError::TooFewCovariates)));
    }

    #[test]
    fn stars_thresholds() {
        assert_eq!(significance_stars(0.0005), "***");
        assert_eq!(significance_stars(0.005), "**");
        assert_eq!(significance_stars(0.03), "*");
        assert_eq!(significance_stars(0.07), "†");
        assert_eq!(significance_stars(0.5), "");
    }

    #[test]
    fn covariate_file_validation() {
        let ok = "community_id,non_white,car_no\n1,0.5,0.2\n2,0.9,0.4\n";
        let c = CommunityCovariates::from_reader(ok.as_bytes()).unwrap();
        assert_eq!(c.names(), &["non_white", "car_no"]);
        assert_eq!(c.get(2), Some(&[0.9, 0.4][..]));
        let pct = "community_id,non_white\n1,55.0\n";
        assert!(matches!(CommunityCovariates::from_reader(pct.as_bytes()), Err(RegressionError::Row { row: 1, .. })));
        let missing = "community_id,non_white,car_no\n1,0.5,\n";
        assert!(CommunityCovariates::from_reader(missing.as_bytes()).is_err());
        assert!(matches!(
            CommunityCovariates::from_reader("id,x\n1,0.5\n".as_bytes()),
            Err(RegressionError::MissingIdColumn)
        ));
    }
}
