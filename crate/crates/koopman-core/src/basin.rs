//! Basin-of-attraction labeling: a slow integration oracle for the indicator
//! function of each invariant set, and a fast k-nearest-neighbor classifier
//! trained on oracle labels.

use crate::dynamics::{integrate, State, INTERNAL_DT};
use crate::error::{Error, Result};

/// 1-based index of the invariant set; for the Duffing defaults, label 1 is
/// the basin of the positive fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasinLabel(pub usize);

/// Ground-truth indicator: integrates to `t_final` and labels by the nearest
/// attractor target if the endpoint lands within `tol` of one.
pub fn label_by_integration<F>(
    x0: &State,
    rhs: F,
    targets: &[State],
    t_final: f64,
    tol: f64,
) -> Result<BasinLabel>
where
    F: Fn(&State) -> State,
{
    if targets.is_empty() {
        return Err(Error::EmptyInput("no attractor targets"));
    }
    if !(t_final > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_final must be positive, got {t_final}"
        )));
    }
    let n_steps = (t_final / INTERNAL_DT).round() as usize;
    // integrate in chunks so deep-in-basin points exit early
    let chunk = 200;
    let mut x = x0.clone();
    let mut done = 0;
    while done < n_steps {
        let steps = chunk.min(n_steps - done);
        let traj = integrate(&rhs, &x, INTERNAL_DT, steps)?;
        x = traj.states.last().unwrap().clone();
        done += steps;
        // well inside an attractor: the endpoint cannot leave the tol ball
        if nearest(&x, targets).1 < (tol * 0.02).min(1e-3) {
            break;
        }
    }
    let (idx, dist) = nearest(&x, targets);
    if dist <= tol {
        Ok(BasinLabel(idx + 1))
    } else {
        Err(Error::UnresolvedBasin)
    }
}

fn nearest(x: &State, targets: &[State]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, t) in targets.iter().enumerate() {
        let d = x
            .iter()
            .zip(t.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-nearest-neighbor approximation of the indicator function. Majority vote
/// over the k nearest training points; ties break toward label 1.
#[derive(Debug, Clone)]
pub struct BasinIndicator {
    points: Vec<State>,
    labels: Vec<usize>,
    k: usize,
}

/// Stores the labeled set; `k` must be odd and defaults to 5.
pub fn train(points: Vec<State>, labels: Vec<BasinLabel>, k: usize) -> Result<BasinIndicator> {
    if points.is_empty() {
        return Err(Error::EmptyInput("indicator training set is empty"));
    }
    if points.len() != labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    if k == 0 || k % 2 == 0 || k > points.len() {
        return Err(Error::InvalidParameter(format!(
            "k must be odd and within 1..={}, got {k}",
            points.len()
        )));
    }
    let labels: Vec<usize> = labels.iter().map(|l| l.0).collect();
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(Error::SingleClassTraining);
    }
    Ok(BasinIndicator { points, labels, k })
}

impl BasinIndicator {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn classify(&self, x: &State) -> BasinLabel {
        debug_assert_eq!(x.len(), self.state_dim());
        // partial selection of the k smallest squared distances
        let mut d2: Vec<(f64, usize)> = self
            .points
            .iter()
            .zip(&self.labels)
            .map(|(p, &l)| {
                (
                    p.iter()
                        .zip(x.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>(),
                    l,
                )
            })
            .collect();
        let k = self.k;
        d2.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
        let mut votes: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        for (_, l) in &d2[..k] {
            *votes.entry(*l).or_insert(0) += 1;
        }
        let top = votes.values().copied().max().unwrap();
        // tie-break toward the lowest label (label 1 wins on the boundary)
        let label = votes
            .iter()
            .filter(|(_, &c)| c == top)
            .map(|(&l, _)| l)
            .min()
            .unwrap();
        BasinLabel(label)
    }

    /// Indicator value for a specific set: 1 if classify(x) == j else 0.
    pub fn indicator(&self, x: &State, j: usize) -> f64 {
        if self.classify(x).0 == j {
            1.0
        } else {
            0.0
        }
    }
}

/// Duffing attractor targets in label order: (+1, 0) first.
pub fn duffing_targets() -> Vec<State> {
    vec![ndarray::array![1.0, 0.0], ndarray::array![-1.0, 0.0]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{duffing_field, DuffingParams};
    use ndarray::array;

    fn field() -> impl Fn(&State) -> State + Copy {
        duffing_field(DuffingParams::default())
    }

    #[test]
    fn oracle_labels_fixed_points_and_nearby_starts() {
        let targets = duffing_targets();
        let f = field();
        assert_eq!(
            label_by_integration(&array![1.0, 0.0], f, &targets, 50.0, 0.05).unwrap(),
            BasinLabel(1)
        );
        assert_eq!(
            label_by_integration(&array![1.5, 0.0], f, &targets, 50.0, 0.05).unwrap(),
            BasinLabel(1)
        );
        assert_eq!(
            label_by_integration(&array![-1.5, 0.0], f, &targets, 50.0, 0.05).unwrap(),
            BasinLabel(2)
        );
    }

    #[test]
    fn oracle_is_flow_invariant() {
        // label(x) == label(S_t(x)) for an intermediate time t
        let f = field();
        let targets = duffing_targets();
        for x0 in [array![1.8, -1.0], array![-0.3, 2.0], array![0.4, -1.7]] {
            let l0 = label_by_integration(&x0, f, &targets, 50.0, 0.05).unwrap();
            let mid = integrate(f, &x0, INTERNAL_DT, 400).unwrap();
            let xm = mid.states.last().unwrap().clone();
            let lm = label_by_integration(&xm, f, &targets, 50.0, 0.05).unwrap();
            assert_eq!(l0, lm);
        }
    }

    #[test]
    fn oracle_respects_symmetry() {
        let f = field();
        let targets = duffing_targets();
        for x0 in [array![1.8, -1.0], array![-0.3, 2.0], array![0.9, 0.9]] {
            let l = label_by_integration(&x0, f, &targets, 50.0, 0.05).unwrap();
            let neg = x0.mapv(|v| -v);
            let ln = label_by_integration(&neg, f, &targets, 50.0, 0.05).unwrap();
            assert_ne!(l, ln);
        }
    }

    #[test]
    fn knn_basics() {
        let ind = train(
            vec![array![1.0, 0.0], array![-1.0, 0.0]],
            vec![BasinLabel(1), BasinLabel(2)],
            1,
        )
        .unwrap();
        assert_eq!(ind.classify(&array![0.9, 0.0]), BasinLabel(1));
        assert_eq!(ind.classify(&array![-0.9, 0.0]), BasinLabel(2));
        // training point classifies as itself
        assert_eq!(ind.classify(&array![1.0, 0.0]), BasinLabel(1));
        // exact midpoint: tie-break toward label 1
        assert_eq!(ind.classify(&array![0.0, 0.0]), BasinLabel(1));
    }

    #[test]
    fn train_rejects_degenerate_sets() {
        assert!(matches!(
            train(
                vec![array![1.0], array![2.0]],
                vec![BasinLabel(1), BasinLabel(1)],
                1
            ),
            Err(Error::SingleClassTraining)
        ));
        assert!(train(vec![], vec![], 1).is_err());
        assert!(train(
            vec![array![1.0], array![2.0]],
            vec![BasinLabel(1), BasinLabel(2)],
            2
        )
        .is_err());
    }

    #[test]
    fn knn_reproduces_training_labels_with_k1() {
        let f = field();
        let targets = duffing_targets();
        let trajs = crate::dynamics::generate_duffing_training_set(&DuffingParams::default())
            .unwrap();
        let mut pts = Vec::new();
        let mut labs = Vec::new();
        // mix of top-row and bottom-row trajectories so both labels appear
        let subset: Vec<_> = trajs.iter().take(4).chain(trajs.iter().rev().take(4)).collect();
        for t in subset {
            let lab = label_by_integration(t.states.last().unwrap(), f, &targets, 40.0, 0.05)
                .unwrap();
            for s in &t.states {
                pts.push(s.clone());
                labs.push(lab);
            }
        }
        let expected = labs.clone();
        let ind = train(pts.clone(), labs, 1).unwrap();
        for (p, e) in pts.iter().zip(expected) {
            assert_eq!(ind.classify(p), e);
        }
    }

    #[test]
    fn far_corner_classifies_positive() {
        let f = field();
        let targets = duffing_targets();
        let trajs = crate::dynamics::generate_duffing_training_set(&DuffingParams::default())
            .unwrap();
        let mut pts = Vec::new();
        let mut labs = Vec::new();
        for t in &trajs {
            let lab = label_by_integration(t.states.last().unwrap(), f, &targets, 40.0, 0.05)
                .unwrap();
            for s in &t.states {
                pts.push(s.clone());
                labs.push(lab);
            }
        }
        let ind = train(pts, labs, 5).unwrap();
        let oracle = label_by_integration(&array![2.0, 2.0], f, &targets, 50.0, 0.05).unwrap();
        assert_eq!(ind.classify(&array![2.0, 2.0]), oracle);
    }
}
