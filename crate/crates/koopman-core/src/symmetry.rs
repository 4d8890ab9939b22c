//! Discrete symmetry machinery: matrix group actions, trajectory
//! augmentation, the stitched global observable over invariant sets, and the
//! symmetry-constrained global predictor built from fundamental-domain data.

use ndarray::{Array1, Array2};
use ndarray_linalg::Inverse;
use serde::{Deserialize, Serialize};

use crate::basin::BasinIndicator;
use crate::dynamics::{State, Trajectory};
use crate::edmd::KoopmanModel;
use crate::error::{Error, Result};
use crate::observables::{Dictionary, Observables};

const MAX_FINITE_ORDER: usize = 64;

/// Invertible matrix representation of a discrete symmetry.
#[derive(Debug, Clone)]
pub struct GroupAction {
    matrix: Array2<f64>,
    inverse: Array2<f64>,
    /// Smallest m with gamma^m = I, when one exists up to a search bound.
    order: Option<usize>,
}

impl GroupAction {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidParameter(format!(
                "group action must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let inverse = matrix
            .inv()
            .map_err(|_| Error::InvalidParameter("group action is singular".into()))?;
        let eye = Array2::<f64>::eye(matrix.nrows());
        let prod = matrix.dot(&inverse);
        if max_abs(&(&prod - &eye)) > 1e-12 {
            return Err(Error::InvalidParameter(
                "group action inverse fails the identity check".into(),
            ));
        }
        let mut power = matrix.clone();
        let mut order = None;
        for m in 1..=MAX_FINITE_ORDER {
            if max_abs(&(&power - &eye)) <= 1e-10 {
                order = Some(m);
                break;
            }
            power = power.dot(&matrix);
        }
        Ok(Self {
            matrix,
            inverse,
            order,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: Array2::eye(dim),
            inverse: Array2::eye(dim),
            order: Some(1),
        }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &State) -> State {
        self.matrix.dot(x)
    }

    pub fn apply_inverse(&self, x: &State) -> State {
        self.inverse.dot(x)
    }

    pub fn is_identity(&self) -> bool {
        max_abs(&(&self.matrix - &Array2::<f64>::eye(self.dim()))) <= 1e-12
    }

    /// True when the action is a scalar multiple of the identity.
    pub fn scalar(&self) -> Option<f64> {
        let s = self.matrix[(0, 0)];
        let target = Array2::<f64>::eye(self.dim()) * s;
        if max_abs(&(&self.matrix - &target)) <= 1e-12 {
            Some(s)
        } else {
            None
        }
    }
}

fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Returns the input trajectories followed by their gamma-images.
pub fn augment(trajs: &[Trajectory], gamma: &GroupAction) -> Vec<Trajectory> {
    let mut out = trajs.to_vec();
    out.extend(trajs.iter().map(|t| Trajectory {
        states: t.states.iter().map(|x| gamma.apply(x)).collect(),
        dt: t.dt,
        t0: t.t0,
    }));
    out
}

/// Global predictor assembled from a Koopman model fitted on the fundamental
/// invariant set M1, the group actions mapping M1 onto each set, and an
/// indicator classifier.
#[derive(Debug, Clone)]
pub struct SymmetryModel {
    pub base: KoopmanModel,
    actions: Vec<GroupAction>,
    pub indicator: BasinIndicator,
}

impl SymmetryModel {
    /// `actions[0]` must be the identity (gamma_1 M1 = M1).
    pub fn new(
        base: KoopmanModel,
        actions: Vec<GroupAction>,
        indicator: BasinIndicator,
    ) -> Result<Self> {
        let first = actions
            .first()
            .ok_or(Error::EmptyInput("symmetry model needs actions"))?;
        if !first.is_identity() {
            return Err(Error::WrongAction(
                "first action must be the identity".into(),
            ));
        }
        let n = base.state_dim();
        if actions.iter().any(|a| a.dim() != n) || indicator.state_dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: indicator.state_dim(),
            });
        }
        Ok(Self {
            base,
            actions,
            indicator,
        })
    }

    pub fn actions(&self) -> &[GroupAction] {
        &self.actions
    }

    pub fn n_sets(&self) -> usize {
        self.actions.len()
    }

    /// Maps x into the fundamental set: picks j from the indicator and
    /// returns (gamma_j^-1 x, j) with 1-based j.
    pub fn canonicalize(&self, x: &State) -> (State, usize) {
        let j = self.indicator.classify(x).0.min(self.actions.len());
        if j == 1 {
            (x.clone(), 1)
        } else {
            (self.actions[j - 1].apply_inverse(x), j)
        }
    }

    /// l-step global prediction: canonicalize once at the initial state, run
    /// the base model on M1, map the result back with gamma_j.
    pub fn predict(&self, x0: &State, l: usize) -> Result<State> {
        let (xc, j) = self.canonicalize(x0);
        let pred = self.base.predict(&xc, l)?;
        if j == 1 {
            Ok(pred)
        } else {
            Ok(self.actions[j - 1].apply(&pred))
        }
    }

    /// Trajectory form of [`predict`](Self::predict); entry l matches it
    /// bit-for-bit.
    pub fn predict_trajectory(&self, x0: &State, l_max: usize) -> Result<Trajectory> {
        let (xc, j) = self.canonicalize(x0);
        let base_traj = self.base.predict_trajectory(&xc, l_max)?;
        if j == 1 {
            return Ok(base_traj);
        }
        let gamma = &self.actions[j - 1];
        Ok(Trajectory {
            states: base_traj.states.iter().map(|s| gamma.apply(s)).collect(),
            dt: base_traj.dt,
            t0: base_traj.t0,
        })
    }

    /// Compact lift for scalar Z2 actions: s Phi(s x) with s = 2 chi_M1 - 1.
    /// Only valid for the 2-set case with gamma_2 = -I.
    pub fn compact_duffing_lift(&self, x: &State) -> Result<Array1<f64>> {
        if self.base.state_dim() != 2 {
            return Err(Error::WrongAction(
                "compact lift is defined for 2-dimensional states".into(),
            ));
        }
        if self.actions.len() != 2 || self.actions[1].scalar() != Some(-1.0) {
            return Err(Error::WrongAction(
                "compact lift requires exactly the actions {I, -I}".into(),
            ));
        }
        let s = 2.0 * self.indicator.indicator(x, 1) - 1.0;
        let lifted = self.base.dict.evaluate(&x.mapv(|v| s * v))?;
        Ok(lifted.mapv(|v| s * v))
    }

    /// Prediction through the compact lift: C K^l PhiTilde(x0). Agrees with
    /// [`predict`](Self::predict) exactly for the Duffing action pair.
    pub fn compact_duffing_predict(&self, x0: &State, l: usize) -> Result<State> {
        let mut v = self.compact_duffing_lift(x0)?;
        for _ in 0..l {
            v = self.base.k.dot(&v);
        }
        Ok(self.base.c.dot(&v))
    }
}

/// Block observable over invariant sets: block j equals chi_Mj(x) Phi_j(x),
/// so exactly one block is active per state.
#[derive(Debug, Clone)]
pub struct StitchedDictionary {
    blocks: Vec<Dictionary>,
    indicator: BasinIndicator,
}

pub fn stitched_dictionary(
    blocks: Vec<Dictionary>,
    indicator: BasinIndicator,
) -> Result<StitchedDictionary> {
    if blocks.is_empty() {
        return Err(Error::EmptyInput("stitched dictionary needs blocks"));
    }
    let n = indicator.state_dim();
    for b in &blocks {
        if b.state_dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.state_dim(),
            });
        }
    }
    Ok(StitchedDictionary { blocks, indicator })
}

impl Observables for StitchedDictionary {
    fn state_dim(&self) -> usize {
        self.indicator.state_dim()
    }

    fn dim(&self) -> usize {
        self.blocks.iter().map(Observables::dim).sum()
    }

    fn evaluate(&self, x: &State) -> Result<Array1<f64>> {
        let active = self.indicator.classify(x).0;
        let mut out = Vec::with_capacity(self.dim());
        for (j, block) in self.blocks.iter().enumerate() {
            if j + 1 == active {
                out.extend(block.evaluate(x)?.iter());
            } else {
                out.extend(std::iter::repeat(0.0).take(block.dim()));
            }
        }
        Ok(Array1::from(out))
    }
}

/// Tests whether gamma can be absorbed into the lifted evolution:
/// max over samples of ||gamma C K^l Phi(gamma^-1 x) - C K^l Phi(x)||_inf.
/// Zero for the identity, small for scalar actions on parity-respecting fits,
/// large for generic actions.
pub fn check_commutation(
    gamma: &GroupAction,
    model: &KoopmanModel,
    l: usize,
    samples: &[State],
    tol: f64,
) -> Result<(bool, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("commutation check needs samples"));
    }
    let mut kl = Array2::<f64>::eye(model.lifted_dim());
    for _ in 0..l {
        kl = model.k.dot(&kl);
    }
    let ckl = model.c.dot(&kl);
    let mut max_resid: f64 = 0.0;
    for x in samples {
        let lhs = gamma.apply(&ckl.dot(&model.dict.evaluate(&gamma.apply_inverse(x))?));
        let rhs = ckl.dot(&model.dict.evaluate(x)?);
        let resid = (&lhs - &rhs).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        max_resid = max_resid.max(resid);
    }
    Ok((max_resid <= tol, max_resid))
}

/// Parses `{"actions": [[[..]]]}` JSON into group actions.
#[derive(Debug, Serialize, Deserialize)]
pub struct ActionFile {
    pub actions: Vec<Vec<Vec<f64>>>,
}

impl ActionFile {
    pub fn parse(text: &str) -> Result<Vec<GroupAction>> {
        let file: ActionFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        file.actions
            .iter()
            .map(|rows| {
                let n = rows.len();
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                let m = Array2::from_shape_vec((n, flat.len() / n.max(1)), flat)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                GroupAction::new(m)
            })
            .collect()
    }
}
