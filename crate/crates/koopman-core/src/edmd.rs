//! Core EDMD: snapshot-pair assembly, least-squares fit of the finite
//! Koopman matrix K and measurement matrix C, eigen-analysis, and multi-step
//! linear prediction.
//!
//! Convention: lifted data matrices hold one snapshot per column, so K acts
//! on column vectors Phi(x). Both transposes appear in the literature; this
//! is the column one.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, JobSvd, SVDDC};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{State, Trajectory};
use crate::error::{Error, Result};
use crate::observables::{Dictionary, Observables};

pub const DEFAULT_SVD_RTOL: f64 = 1e-10;

/// Consecutive snapshot pairs (x_i, y_i) with y_i one sample ahead of x_i.
#[derive(Debug, Clone)]
pub struct SnapshotPairs {
    pub x: Vec<State>,
    pub y: Vec<State>,
    pub dt: f64,
}

impl SnapshotPairs {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.x.first().map_or(0, |s| s.len())
    }
}

/// Concatenates (x_i, x_{i+1}) pairs across trajectories.
pub fn build_snapshot_pairs(trajs: &[Trajectory]) -> Result<SnapshotPairs> {
    let first = trajs
        .first()
        .ok_or(Error::EmptyInput("no trajectories for snapshot pairs"))?;
    let dt = first.dt;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for traj in trajs {
        if (traj.dt - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(Error::MixedSamplingIntervals(dt, traj.dt));
        }
        if traj.len() < 2 {
            return Err(Error::InvalidParameter(
                "each trajectory needs at least two states".into(),
            ));
        }
        for w in traj.states.windows(2) {
            x.push(w[0].clone());
            y.push(w[1].clone());
        }
    }
    Ok(SnapshotPairs { x, y, dt })
}

/// Fitted finite-dimensional Koopman representation.
#[derive(Debug, Clone)]
pub struct KoopmanModel {
    pub k: Array2<f64>,
    pub c: Array2<f64>,
    pub dict: Dictionary,
    pub eigenvalues: Array1<Complex64>,
    /// Right eigenvectors of K, one per column.
    pub eigvecs: Array2<Complex64>,
    pub fit_residual: f64,
    pub reconstruction_residual: f64,
    /// 2-norm condition number of the eigenvector matrix.
    pub p_cond: f64,
    /// Retained rank of the lifted data matrix.
    pub rank: usize,
    pub n_pairs: usize,
    pub dt: f64,
    pub svd_rtol: f64,
}

struct PinvFactors {
    /// D x r left singular block.
    u: Array2<f64>,
    s_inv: Array1<f64>,
    /// N x r right singular block.
    v: Array2<f64>,
    rank: usize,
}

/// Thin SVD of `g` with relative truncation; all singular values below
/// rtol * s_max are dropped.
fn svd_pinv(g: &Array2<f64>, rtol: f64) -> Result<PinvFactors> {
    let (u, s, vt) = g.svddc(JobSvd::Some)?;
    let u = u.ok_or(Error::DegenerateDictionary)?;
    let vt = vt.ok_or(Error::DegenerateDictionary)?;
    let s_max = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().take_while(|&&v| v > rtol * s_max && v > 0.0).count();
    if rank == 0 {
        return Err(Error::DegenerateDictionary);
    }
    let u = u.slice(ndarray::s![.., ..rank]).to_owned();
    let v = vt.slice(ndarray::s![..rank, ..]).t().to_owned();
    let s_inv = s.slice(ndarray::s![..rank]).mapv(|v| 1.0 / v);
    Ok(PinvFactors { u, s_inv, v, rank })
}

/// Minimum-norm solution of min_M ||B - M G||_F given the SVD of G.
fn apply_pinv(b: &Array2<f64>, f: &PinvFactors) -> Array2<f64> {
    let mut bv = b.dot(&f.v); // m x r
    for (j, si) in f.s_inv.iter().enumerate() {
        bv.column_mut(j).mapv_inplace(|v| v * si);
    }
    bv.dot(&f.u.t())
}

fn lift_matrix<O: Observables>(dict: &O, states: &[State]) -> Result<Array2<f64>> {
    let d = dict.dim();
    let mut g = Array2::<f64>::zeros((d, states.len()));
    for (j, x) in states.iter().enumerate() {
        g.column_mut(j).assign(&dict.evaluate(x)?);
    }
    Ok(g)
}

fn state_matrix(states: &[State]) -> Array2<f64> {
    let n = states.first().map_or(0, |s| s.len());
    let mut m = Array2::<f64>::zeros((n, states.len()));
    for (j, x) in states.iter().enumerate() {
        m.column_mut(j).assign(x);
    }
    m
}

fn rms_column_norm(residual: &Array2<f64>) -> f64 {
    let n = residual.ncols().max(1) as f64;
    (residual.iter().map(|v| v * v).sum::<f64>() / n).sqrt()
}

/// Least-squares fit of K (lifted one-step map) and C (state reconstruction)
/// via SVD pseudoinverse of the lifted data matrix.
/// Operator-level fit over an arbitrary observable evaluator; what remains of
/// a [`KoopmanModel`] when the dictionary is not a serializable [`Dictionary`].
#[derive(Debug, Clone)]
pub struct OperatorFit {
    pub k: Array2<f64>,
    pub c: Array2<f64>,
    pub fit_residual: f64,
    pub reconstruction_residual: f64,
    pub rank: usize,
}

pub fn fit_operators<O: Observables>(
    pairs: &SnapshotPairs,
    obs: &O,
    svd_rtol: f64,
) -> Result<OperatorFit> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("snapshot pairs are empty"));
    }
    if !(svd_rtol > 0.0 && svd_rtol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "svd_rtol must lie in (0, 1), got {svd_rtol}"
        )));
    }
    let g = lift_matrix(obs, &pairs.x)?;
    let a = lift_matrix(obs, &pairs.y)?;
    let xm = state_matrix(&pairs.x);

    let factors = svd_pinv(&g, svd_rtol)?;
    let k = apply_pinv(&a, &factors);
    let c = apply_pinv(&xm, &factors);

    let fit_residual = rms_column_norm(&(&a - &k.dot(&g)));
    let reconstruction_residual = rms_column_norm(&(&xm - &c.dot(&g)));
    Ok(OperatorFit {
        k,
        c,
        fit_residual,
        reconstruction_residual,
        rank: factors.rank,
    })
}

pub fn fit(pairs: &SnapshotPairs, dict: &Dictionary, svd_rtol: f64) -> Result<KoopmanModel> {
    let OperatorFit {
        k,
        c,
        fit_residual,
        reconstruction_residual,
        rank,
    } = fit_operators(pairs, dict, svd_rtol)?;

    let (eigenvalues, eigvecs) = k.eig()?;
    let p_cond = {
        let (_, s, _) = eigvecs.svddc(JobSvd::None)?;
        let smin = s.last().copied().unwrap_or(0.0);
        if smin > 0.0 {
            s[0] / smin
        } else {
            f64::INFINITY
        }
    };

    Ok(KoopmanModel {
        k,
        c,
        dict: dict.clone(),
        eigenvalues,
        eigvecs,
        fit_residual,
        reconstruction_residual,
        p_cond,
        rank,
        n_pairs: pairs.len(),
        dt: pairs.dt,
        svd_rtol,
    })
}

/// Fits only a measurement matrix min_C sum ||x_i - C Phi(x_i)||^2 over an
/// arbitrary observable evaluator; returns (C, RMS reconstruction error).
pub fn fit_measurement_matrix<O: Observables>(
    states: &[State],
    obs: &O,
    svd_rtol: f64,
) -> Result<(Array2<f64>, f64)> {
    if states.is_empty() {
        return Err(Error::EmptyInput("no states for measurement fit"));
    }
    let g = lift_matrix(obs, states)?;
    let xm = state_matrix(states);
    let factors = svd_pinv(&g, svd_rtol)?;
    let c = apply_pinv(&xm, &factors);
    let rms = rms_column_norm(&(&xm - &c.dot(&g)));
    Ok((c, rms))
}

impl KoopmanModel {
    pub fn lifted_dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.c.nrows()
    }

    /// Eigenfunction values Psi(x) = P^-1 Phi(x).
    pub fn eigenfunctions(&self, x: &State) -> Result<Array1<Complex64>> {
        if !self.p_cond.is_finite() || self.p_cond > 1e14 {
            return Err(Error::IllConditionedEigendecomposition { cond: self.p_cond });
        }
        let phi = self.dict.evaluate(x)?.mapv(|v| Complex64::new(v, 0.0));
        use ndarray_linalg::Solve;
        self.eigvecs
            .solve(&phi)
            .map_err(|_| Error::IllConditionedEigendecomposition { cond: self.p_cond })
    }

    /// Koopman modes B = C P.
    pub fn koopman_modes(&self) -> Array2<Complex64> {
        let c_complex = self.c.mapv(|v| Complex64::new(v, 0.0));
        c_complex.dot(&self.eigvecs)
    }

    /// C K^l Phi(x0), with K^l by iterated real multiplication.
    pub fn predict(&self, x0: &State, l: usize) -> Result<State> {
        let mut v = self.dict.evaluate(x0)?;
        for _ in 0..l {
            v = self.k.dot(&v);
        }
        Ok(self.c.dot(&v))
    }

    /// Lifts once and evolves in the lifted space; entry l matches
    /// `predict(x0, l)` bit-for-bit.
    pub fn predict_trajectory(&self, x0: &State, l_max: usize) -> Result<Trajectory> {
        let mut v = self.dict.evaluate(x0)?;
        let mut states = Vec::with_capacity(l_max + 1);
        states.push(self.c.dot(&v));
        for _ in 0..l_max {
            v = self.k.dot(&v);
            states.push(self.c.dot(&v));
        }
        // constructed directly: predictions may legitimately diverge and the
        // caller inspects magnitudes
        Ok(Trajectory {
            states,
            dt: self.dt,
            t0: 0.0,
        })
    }
}

// ---------------------------------------------------------------------------
// persistence

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    k: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    eigenvalues: Vec<[f64; 2]>,
    eigvecs: Vec<Vec<[f64; 2]>>,
    dictionary: Dictionary,
    metadata: ModelMetadata,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelMetadata {
    fit_residual: f64,
    reconstruction_residual: f64,
    p_cond: f64,
    rank: usize,
    n_pairs: usize,
    dt: f64,
    svd_rtol: f64,
    #[serde(default)]
    seed: Option<u64>,
}

fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidParameter("ragged matrix in model file".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

impl KoopmanModel {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            k: to_rows(&self.k),
            c: to_rows(&self.c),
            eigenvalues: self.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            eigvecs: self
                .eigvecs
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            dictionary: self.dict.clone(),
            metadata: ModelMetadata {
                fit_residual: self.fit_residual,
                reconstruction_residual: self.reconstruction_residual,
                p_cond: self.p_cond,
                rank: self.rank,
                n_pairs: self.n_pairs,
                dt: self.dt,
                svd_rtol: self.svd_rtol,
                seed: None,
            },
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let k = from_rows(&file.k)?;
        let c = from_rows(&file.c)?;
        let d = k.nrows();
        let eigenvalues = Array1::from(
            file.eigenvalues
                .iter()
                .map(|p| Complex64::new(p[0], p[1]))
                .collect::<Vec<_>>(),
        );
        let flat: Vec<Complex64> = file
            .eigvecs
            .iter()
            .flatten()
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        let eigvecs = Array2::from_shape_vec((d, d), flat)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(KoopmanModel {
            k,
            c,
            dict: file.dictionary,
            eigenvalues,
            eigvecs,
            fit_residual: file.metadata.fit_residual,
            reconstruction_residual: file.metadata.reconstruction_residual,
            p_cond: file.metadata.p_cond,
            rank: file.metadata.rank,
            n_pairs: file.metadata.n_pairs,
            dt: file.metadata.dt,
            svd_rtol: file.metadata.svd_rtol,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
