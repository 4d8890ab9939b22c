//! Observable dictionaries used to lift states. Every dictionary starts with
//! the constant observable and the identity coordinates, so the measurement
//! matrix can always reconstruct the state exactly from a full-rank fit.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::dynamics::State;
use crate::error::{Error, Result};

/// Anything that lifts a state into a fixed-length observation vector.
pub trait Observables {
    fn state_dim(&self) -> usize;
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &State) -> Result<Array1<f64>>;
}

/// Dictionary family as it appears in JSON configs; concrete centers/widths
/// are resolved against data via [`Dictionary::from_spec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DictionarySpec {
    Polynomial { max_order: usize },
    Rbf { n_centers: usize },
    Fourier {
        n_pairs: usize,
        #[serde(rename = "L", default = "default_half_width")]
        half_width: f64,
    },
}

fn default_half_width() -> f64 {
    2.0
}

impl DictionarySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Polynomial { .. } => "polynomial",
            Self::Rbf { .. } => "rbf",
            Self::Fourier { .. } => "fourier",
        }
    }

    pub fn hyperparam(&self) -> usize {
        match self {
            Self::Polynomial { max_order } => *max_order,
            Self::Rbf { n_centers } => *n_centers,
            Self::Fourier { n_pairs, .. } => *n_pairs,
        }
    }
}

/// A concrete dictionary. Component order is fixed:
/// `[1, x_1 .. x_n, family-specific observables]`.
///
/// - polynomial: monomials x^a with 1 < |a| <= max_order in graded
///   lexicographic order (degree ascending, exponents lexicographically
///   descending within a degree);
/// - rbf: exp(-||x - c_k||^2 / (2 width^2)) per center k, in center order;
/// - fourier: per coordinate i, per frequency k = 1..n_pairs, the pair
///   (sin(k pi x_i / L), cos(k pi x_i / L)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Dictionary {
    Polynomial { state_dim: usize, max_order: usize },
    Rbf { centers: Vec<Vec<f64>>, width: f64 },
    Fourier {
        state_dim: usize,
        n_pairs: usize,
        half_width: f64,
    },
}

impl Dictionary {
    /// Resolves a spec against training data (RBF centers are placed by
    /// farthest-point sampling over `data`; other families only take the
    /// state dimension from it).
    pub fn from_spec(spec: &DictionarySpec, data: &[State]) -> Result<Dictionary> {
        if data.is_empty() {
            return Err(Error::EmptyInput("dictionary construction needs data"));
        }
        let n = data[0].len();
        match spec {
            DictionarySpec::Polynomial { max_order } => Ok(Dictionary::Polynomial {
                state_dim: n,
                max_order: *max_order,
            }),
            DictionarySpec::Fourier {
                n_pairs,
                half_width,
            } => Ok(Dictionary::Fourier {
                state_dim: n,
                n_pairs: *n_pairs,
                half_width: *half_width,
            }),
            DictionarySpec::Rbf { n_centers } => {
                let centers = place_rbf_centers(data, *n_centers)?;
                let width = default_rbf_width(&centers)?;
                Ok(Dictionary::Rbf {
                    centers: centers.iter().map(|c| c.to_vec()).collect(),
                    width,
                })
            }
        }
    }
}

impl Observables for Dictionary {
    fn state_dim(&self) -> usize {
        match self {
            Self::Polynomial { state_dim, .. } | Self::Fourier { state_dim, .. } => *state_dim,
            Self::Rbf { centers, .. } => centers.first().map_or(0, Vec::len),
        }
    }

    fn dim(&self) -> usize {
        let n = self.state_dim();
        match self {
            Self::Polynomial { max_order, .. } => binomial(n + max_order, n),
            Self::Rbf { centers, .. } => 1 + n + centers.len(),
            Self::Fourier { n_pairs, .. } => 1 + n + 2 * n * n_pairs,
        }
    }

    fn evaluate(&self, x: &State) -> Result<Array1<f64>> {
        let n = self.state_dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let mut out = Vec::with_capacity(self.dim());
        out.push(1.0);
        out.extend(x.iter().copied());
        match self {
            Self::Polynomial { max_order, .. } => {
                for expo in monomial_exponents(n, *max_order) {
                    let mut v = 1.0;
                    for (xi, &e) in x.iter().zip(&expo) {
                        v *= xi.powi(e as i32);
                    }
                    out.push(v);
                }
            }
            Self::Rbf { centers, width } => {
                let two_w2 = 2.0 * width * width;
                for c in centers {
                    let d2: f64 = x
                        .iter()
                        .zip(c)
                        .map(|(xi, ci)| (xi - ci) * (xi - ci))
                        .sum();
                    out.push((-d2 / two_w2).exp());
                }
            }
            Self::Fourier {
                n_pairs,
                half_width,
                ..
            } => {
                for xi in x.iter() {
                    for k in 1..=*n_pairs {
                        let arg = k as f64 * std::f64::consts::PI * xi / half_width;
                        out.push(arg.sin());
                        out.push(arg.cos());
                    }
                }
            }
        }
        debug_assert_eq!(out.len(), self.dim());
        Ok(Array1::from(out))
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All exponent vectors with 2 <= |a| <= p, graded lex.
fn monomial_exponents(n: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for degree in 2..=p {
        compositions(degree, n, &mut Vec::new(), &mut out);
    }
    out
}

fn compositions(rest: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if slots == 1 {
        prefix.push(rest);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for e in (0..=rest).rev() {
        prefix.push(e);
        compositions(rest - e, slots - 1, prefix, out);
        prefix.pop();
    }
}

/// Deterministic farthest-point sampling. The first center is the data point
/// closest to the centroid; each next center maximizes the minimum distance
/// to the chosen set. Ties break toward the lowest index.
pub fn place_rbf_centers(data: &[State], n_centers: usize) -> Result<Vec<State>> {
    if data.is_empty() {
        return Err(Error::EmptyInput("center placement needs data"));
    }
    if n_centers == 0 || n_centers > data.len() {
        return Err(Error::InvalidParameter(format!(
            "n_centers must be in 1..={}, got {n_centers}",
            data.len()
        )));
    }
    let dim = data[0].len();
    let mut centroid = Array1::<f64>::zeros(dim);
    for x in data {
        centroid += x;
    }
    centroid /= data.len() as f64;

    let first = argmin_by(data.iter().map(|x| sq_dist(x, &centroid)));
    let mut chosen = vec![first];
    let mut min_d2: Vec<f64> = data.iter().map(|x| sq_dist(x, &data[first])).collect();
    while chosen.len() < n_centers {
        let next = argmax_by(min_d2.iter().copied());
        chosen.push(next);
        for (i, x) in data.iter().enumerate() {
            let d2 = sq_dist(x, &data[next]);
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
        }
    }
    Ok(chosen.into_iter().map(|i| data[i].clone()).collect())
}

/// Median of pairwise center distances.
pub fn default_rbf_width(centers: &[State]) -> Result<f64> {
    if centers.len() < 2 {
        return Err(Error::InvalidParameter(
            "width heuristic needs at least two centers".into(),
        ));
    }
    let mut dists = Vec::with_capacity(centers.len() * (centers.len() - 1) / 2);
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            dists.push(sq_dist(&centers[i], &centers[j]).sqrt());
        }
    }
    dists.sort_by(|a, b| a.total_cmp(b));
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    Ok(median)
}

fn sq_dist(a: &State, b: &State) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn argmin_by<I: Iterator<Item = f64>>(it: I) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in it.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn argmax_by<I: Iterator<Item = f64>>(it: I) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}
