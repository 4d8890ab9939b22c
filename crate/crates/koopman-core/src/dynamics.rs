//! Benchmark vector fields, fixed-step RK4 integration, and trajectory
//! generation for the Duffing and Lorenz experiments.

use ndarray::{array, Array1, Array2};

use crate::error::{Error, Result};

/// State vector; callers are expected to keep coordinates finite.
pub type State = Array1<f64>;

/// Internal integration step shared by both benchmark systems.
pub const INTERNAL_DT: f64 = 0.005;

/// Coordinates beyond this magnitude abort integration.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Uniformly sampled state sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub dt: f64,
    pub t0: f64,
}

impl Trajectory {
    pub fn new(states: Vec<State>, dt: f64, t0: f64) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyInput("trajectory needs at least one state"));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sampling interval must be positive, got {dt}"
            )));
        }
        let dim = states[0].len();
        for s in &states {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(
                    "non-finite coordinate in trajectory".into(),
                ));
            }
        }
        Ok(Self { states, dt, t0 })
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuffingParams {
    pub delta: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl Default for DuffingParams {
    fn default() -> Self {
        // stable fixed points at (+-1, 0)
        Self {
            delta: 0.5,
            beta: -1.0,
            alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

pub fn duffing_rhs(x: &State, p: &DuffingParams) -> Result<State> {
    if x.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: x.len(),
        });
    }
    Ok(duffing_field(*p)(x))
}

pub fn lorenz_rhs(x: &State, p: &LorenzParams) -> Result<State> {
    if x.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: x.len(),
        });
    }
    Ok(lorenz_field(*p)(x))
}

/// Unchecked closure form of the Duffing vector field, for the integrator.
pub fn duffing_field(p: DuffingParams) -> impl Fn(&State) -> State + Copy {
    move |x: &State| array![x[1], -p.delta * x[1] - x[0] * (p.beta + p.alpha * x[0] * x[0])]
}

/// Unchecked closure form of the Lorenz vector field, for the integrator.
pub fn lorenz_field(p: LorenzParams) -> impl Fn(&State) -> State + Copy {
    move |x: &State| {
        array![
            p.sigma * (x[1] - x[0]),
            x[0] * (p.rho - x[2]) - x[1],
            x[0] * x[1] - p.beta * x[2]
        ]
    }
}

/// Classical fixed-step 4th-order Runge-Kutta. Returns `n_steps + 1` states.
pub fn integrate<F>(rhs: F, x0: &State, dt: f64, n_steps: usize) -> Result<Trajectory>
where
    F: Fn(&State) -> State,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(x0.clone());
    let mut x = x0.clone();
    for step in 0..n_steps {
        let k1 = rhs(&x);
        let k2 = rhs(&(&x + &(&k1 * (dt / 2.0))));
        let k3 = rhs(&(&x + &(&k2 * (dt / 2.0))));
        let k4 = rhs(&(&x + &(&k3 * dt)));
        x = &x + &((&k1 + &(&k2 * 2.0) + &(&k3 * 2.0) + &k4) * (dt / 6.0));
        if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND) {
            return Err(Error::IntegrationDiverged { step });
        }
        states.push(x.clone());
    }
    Trajectory::new(states, dt, 0.0)
}

/// Keep indices 0, stride, 2*stride, ...; the sampling interval scales by `stride`.
pub fn subsample(traj: &Trajectory, stride: usize) -> Trajectory {
    assert!(stride >= 1, "stride must be at least 1");
    let states: Vec<State> = traj.states.iter().step_by(stride).cloned().collect();
    Trajectory {
        states,
        dt: traj.dt * stride as f64,
        t0: traj.t0,
    }
}

/// Tests F(gamma x) = gamma F(x) over the sample set; returns the verdict and
/// the max infinity-norm residual.
pub fn check_equivariance<F>(
    rhs: F,
    gamma: &Array2<f64>,
    samples: &[State],
    tol: f64,
) -> Result<(bool, f64)>
where
    F: Fn(&State) -> State,
{
    if samples.is_empty() {
        return Err(Error::EmptyInput("equivariance check needs samples"));
    }
    let n = gamma.nrows();
    let mut max_resid: f64 = 0.0;
    for x in samples {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let lhs = rhs(&gamma.dot(x));
        let rhs_v = gamma.dot(&rhs(x));
        let resid = (&lhs - &rhs_v)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        max_resid = max_resid.max(resid);
    }
    Ok((max_resid <= tol, max_resid))
}

/// Initial-condition layout for the Duffing training set: the trajectory
/// count and the x2 levels are fixed by the benchmark; the exact split
/// between the two rows lives here so it can be changed in one place.
#[derive(Debug, Clone)]
pub struct DuffingGrid {
    pub n_top: usize,
    pub n_bottom: usize,
    pub x1_range: (f64, f64),
    pub x2_top: f64,
    pub x2_bottom: f64,
    /// Replaces x1 values of the bottom row starting at `refinement_start`.
    pub refinement: Vec<f64>,
    pub refinement_start: usize,
}

impl Default for DuffingGrid {
    fn default() -> Self {
        Self {
            n_top: 25,
            n_bottom: 24,
            x1_range: (-2.0, 2.0),
            x2_top: 2.0,
            x2_bottom: -2.0,
            refinement: vec![-0.085, -0.08, -0.075],
            refinement_start: 2,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// The 49-trajectory Duffing training set: each trajectory runs to time 10,
/// emitted at interval 0.2 (51 states).
pub fn generate_duffing_training_set(p: &DuffingParams) -> Result<Vec<Trajectory>> {
    generate_duffing_training_set_with(p, &DuffingGrid::default())
}

pub fn generate_duffing_training_set_with(
    p: &DuffingParams,
    grid: &DuffingGrid,
) -> Result<Vec<Trajectory>> {
    let field = duffing_field(*p);
    let mut top = linspace(grid.x1_range.0, grid.x1_range.1, grid.n_top);
    let mut bottom = linspace(grid.x1_range.0, grid.x1_range.1, grid.n_bottom);
    for (i, v) in grid.refinement.iter().enumerate() {
        let idx = grid.refinement_start + i;
        if idx < bottom.len() {
            bottom[idx] = *v;
        }
    }
    let mut ics: Vec<State> = Vec::with_capacity(grid.n_top + grid.n_bottom);
    ics.extend(top.drain(..).map(|x1| array![x1, grid.x2_top]));
    ics.extend(bottom.drain(..).map(|x1| array![x1, grid.x2_bottom]));

    let stride = (0.2 / INTERNAL_DT).round() as usize;
    let n_fine = (10.0 / INTERNAL_DT).round() as usize;
    ics.iter()
        .map(|x0| {
            let fine = integrate(field, x0, INTERNAL_DT, n_fine)?;
            Ok(subsample(&fine, stride))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn duffing_fixed_points() {
        let p = DuffingParams::default();
        let f0 = duffing_rhs(&array![0.0, 0.0], &p).unwrap();
        assert_eq!(f0, array![0.0, 0.0]);
        let f1 = duffing_rhs(&array![1.0, 0.0], &p).unwrap();
        assert_eq!(f1, array![0.0, 0.0]);
    }

    #[test]
    fn duffing_hand_evaluated() {
        let p = DuffingParams::default();
        let f = duffing_rhs(&array![1.0, 2.0], &p).unwrap();
        assert_abs_diff_eq!(f[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn duffing_rejects_wrong_dim() {
        assert!(duffing_rhs(&array![1.0, 2.0, 3.0], &DuffingParams::default()).is_err());
    }

    #[test]
    fn lorenz_hand_evaluated() {
        let p = LorenzParams::default();
        assert_eq!(lorenz_rhs(&array![0.0, 0.0, 0.0], &p).unwrap(), array![0.0, 0.0, 0.0]);
        let f = lorenz_rhs(&array![1.0, 0.0, 0.0], &p).unwrap();
        assert_abs_diff_eq!(f[0], -10.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], 28.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f[2], 0.0, epsilon = 1e-15);
        let g = lorenz_rhs(&array![1.0, 1.0, 1.0], &p).unwrap();
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 26.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[2], 1.0 - 8.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn rk4_matches_exponential_decay() {
        let traj = integrate(|x: &State| -x.clone(), &array![1.0], 0.1, 1).unwrap();
        assert_abs_diff_eq!(traj.states[1][0], (-0.1f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn zero_steps_returns_initial_state() {
        let traj = integrate(|x: &State| -x.clone(), &array![1.0, 2.0], 0.1, 0).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], array![1.0, 2.0]);
    }

    #[test]
    fn duffing_converges_to_positive_attractor() {
        let field = duffing_field(DuffingParams::default());
        let traj = integrate(field, &array![1.5, 0.0], 0.01, 5000).unwrap();
        let end = traj.states.last().unwrap();
        // verified against a dt = 0.000625 reference
        let fine = integrate(field, &array![1.5, 0.0], 0.000625, 80000).unwrap();
        let fine_end = fine.states.last().unwrap();
        assert!((end[0] - 1.0).abs() < 1e-3 && end[1].abs() < 1e-3);
        assert!((end[0] - fine_end[0]).abs() < 1e-6);
    }

    #[test]
    fn rk4_is_fourth_order_on_duffing() {
        let field = duffing_field(DuffingParams::default());
        let x0 = array![1.5, 0.0];
        let t_end = 1.0;
        let reference = integrate(field, &x0, 0.02 / 16.0, (t_end / (0.02 / 16.0)) as usize)
            .unwrap();
        let r = reference.states.last().unwrap();
        let coarse = integrate(field, &x0, 0.02, 50).unwrap();
        let half = integrate(field, &x0, 0.01, 100).unwrap();
        let e1 = (coarse.states.last().unwrap() - r).mapv(f64::abs).sum();
        let e2 = (half.states.last().unwrap() - r).mapv(f64::abs).sum();
        let ratio = e1 / e2;
        assert!(
            (12.0..=20.0).contains(&ratio),
            "error ratio {ratio} outside [12, 20]"
        );
    }

    #[test]
    fn divergence_reports_step_index() {
        // exponential growth blows past the bound
        let err = integrate(|x: &State| x * 10.0, &array![1.0], 1.0, 100).unwrap_err();
        match err {
            Error::IntegrationDiverged { step } => assert!(step > 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn subsample_counts() {
        let states: Vec<State> = (0..2001).map(|i| array![i as f64]).collect();
        let traj = Trajectory::new(states, 0.005, 0.0).unwrap();
        let sub = subsample(&traj, 4);
        assert_eq!(sub.len(), 501);
        assert_abs_diff_eq!(sub.dt, 0.02, epsilon = 1e-15);

        let short = Trajectory::new((0..5).map(|i| array![i as f64]).collect(), 1.0, 0.0).unwrap();
        assert_eq!(subsample(&short, 10).len(), 1);
        assert_eq!(subsample(&short, 1), short);
    }

    #[test]
    fn equivariance_of_known_symmetries() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let duffing = duffing_field(DuffingParams::default());
        let samples: Vec<State> = (0..200)
            .map(|_| array![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
            .collect();
        let neg_i = ndarray::array![[-1.0, 0.0], [0.0, -1.0]];
        let (ok, resid) = check_equivariance(duffing, &neg_i, &samples, 1e-12).unwrap();
        assert!(ok, "residual {resid}");

        let broken = ndarray::array![[1.0, 0.0], [0.0, -1.0]];
        let (ok, resid) = check_equivariance(duffing, &broken, &samples, 1e-12).unwrap();
        assert!(!ok && resid > 1e-3);

        let lorenz = lorenz_field(LorenzParams::default());
        let samples3: Vec<State> = (0..200)
            .map(|_| {
                array![
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0)
                ]
            })
            .collect();
        let g3 = ndarray::array![[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        let (ok, resid) = check_equivariance(lorenz, &g3, &samples3, 1e-12).unwrap();
        assert!(ok, "residual {resid}");
    }

    #[test]
    fn equivariance_rejects_empty_samples() {
        let duffing = duffing_field(DuffingParams::default());
        let neg_i = ndarray::array![[-1.0, 0.0], [0.0, -1.0]];
        assert!(check_equivariance(duffing, &neg_i, &[], 1e-12).is_err());
    }

    #[test]
    fn duffing_training_set_shape() {
        let trajs = generate_duffing_training_set(&DuffingParams::default()).unwrap();
        assert_eq!(trajs.len(), 49);
        for t in &trajs {
            assert_eq!(t.len(), 51);
            assert_abs_diff_eq!(t.dt, 0.2, epsilon = 1e-12);
            let end = t.states.last().unwrap();
            let d_pos = ((end[0] - 1.0).powi(2) + end[1].powi(2)).sqrt();
            let d_neg = ((end[0] + 1.0).powi(2) + end[1].powi(2)).sqrt();
            assert!(d_pos.min(d_neg) < 0.75, "endpoint {end} not settled");
        }
    }
}
