//! Bagged regression-tree forecaster for harvested energy.
//!
//! The forecast mean is the average of the per-tree outputs, clamped at
//! zero; the forecast variance is the population variance of those outputs.

mod features;
mod forecaster;
mod tree;

pub use features::{build_features, build_features_with, FeatureParams, FeatureVector, SideInfo};
pub use forecaster::{
    persistence_mae, training_set, ExpectedPattern, Forecaster,
};
pub use tree::{Node, RegressionTree};

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use tree::Samples;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            trees: 20,
            max_depth: 6,
            min_samples_leaf: 5,
            seed: 0,
        }
    }
}

/// Harvest forecast for one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forecast {
    pub mean_j: f64,
    pub variance_j2: f64,
}

impl Forecast {
    pub fn std_j(&self) -> f64 {
        self.variance_j2.sqrt()
    }
}

/// `max(0, mean - k * std)`.
pub fn worst_case(forecast: Forecast, k: f64) -> f64 {
    (forecast.mean_j - k * forecast.std_j()).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    dim: usize,
    params: EnsembleParams,
    trees: Vec<RegressionTree>,
}

impl TreeEnsemble {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    /// Builds an ensemble from explicit trees.
    pub fn from_trees(dim: usize, params: EnsembleParams, trees: Vec<RegressionTree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::argument("ensemble needs at least one tree"));
        }
        for t in &trees {
            validate_nodes(t.nodes(), dim)?;
        }
        Ok(Self { dim, params, trees })
    }

    /// Fits one tree per bootstrap resample of `dataset`.
    pub fn fit(dataset: &[(FeatureVector, f64)], params: &EnsembleParams) -> Result<Self> {
        let Some(first) = dataset.first() else {
            return Err(Error::Training("empty dataset".into()));
        };
        let dim = first.0.values.len();
        let mut x = Vec::with_capacity(dataset.len() * dim);
        let mut y = Vec::with_capacity(dataset.len());
        for (f, target) in dataset {
            if f.values.len() != dim {
                return Err(Error::Training("inconsistent feature dimension".into()));
            }
            x.extend_from_slice(&f.values);
            y.push(*target);
        }
        Self::fit_matrix(&x, &y, dim, params)
    }

    pub fn fit_matrix(x: &[f64], y: &[f64], dim: usize, params: &EnsembleParams) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Training("empty dataset".into()));
        }
        if dim == 0 || x.len() != y.len() * dim {
            return Err(Error::Training("feature matrix shape mismatch".into()));
        }
        if let Some(bad) = y.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Training(format!("targets must be finite and >= 0, got {bad}")));
        }
        if params.trees == 0 {
            return Err(Error::config("trees", "must be at least 1"));
        }
        let data = Samples { x, y, dim };
        let n = y.len();
        let trees = (0..params.trees)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(i as u64);
                let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                RegressionTree::grow(&data, rows, params.max_depth, params.min_samples_leaf)
            })
            .collect();
        Ok(Self {
            dim,
            params: *params,
            trees,
        })
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<Forecast> {
        self.predict_values(&features.values)
    }

    pub fn predict_values(&self, x: &[f64]) -> Result<Forecast> {
        if x.len() != self.dim {
            return Err(Error::argument(format!(
                "feature dimension {} does not match model dimension {}",
                x.len(),
                self.dim
            )));
        }
        let outputs: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        let n = outputs.len() as f64;
        let mean = outputs.iter().sum::<f64>() / n;
        let variance = outputs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Forecast {
            mean_j: mean.max(0.0),
            variance_j2: variance.max(0.0),
        })
    }

    /// Writes the flat text model format.
    ///
    /// ```text
    /// ehplan-trees 1
    /// dim 13
    /// trees 20
    /// max_depth 6
    /// min_samples_leaf 5
    /// seed 0
    /// tree 0 nodes 3
    /// 0 4 1.5 1 2 2.25
    /// 1 -1 0 -1 -1 1
    /// ...
    /// ```
    /// Node rows are `index feature threshold left right value`, with `-1`
    /// marking leaves. Floats use the shortest exact decimal form.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ehplan-trees 1")?;
        writeln!(w, "dim {}", self.dim)?;
        writeln!(w, "trees {}", self.trees.len())?;
        writeln!(w, "max_depth {}", self.params.max_depth)?;
        writeln!(w, "min_samples_leaf {}", self.params.min_samples_leaf)?;
        writeln!(w, "seed {}", self.params.seed)?;
        for (i, t) in self.trees.iter().enumerate() {
            writeln!(w, "tree {i} nodes {}", t.nodes().len())?;
            for (j, n) in t.nodes().iter().enumerate() {
                match n.feature {
                    Some(f) => writeln!(
                        w,
                        "{j} {f} {} {} {} {}",
                        n.threshold, n.left, n.right, n.value
                    )?,
                    None => writeln!(w, "{j} -1 {} -1 -1 {}", n.threshold, n.value)?,
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(i, l)| l.map(|l| (i + 1, l)))
            .filter(|l| l.as_ref().map_or(true, |(_, s)| !s.trim().is_empty()));
        let mut next = |what: &str| -> Result<(usize, String)> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::argument(format!("model file truncated before {what}")))
        };
        let bad = |line: usize, what: &str| Error::argument(format!("model line {line}: bad {what}"));

        let (ln, magic) = next("header")?;
        if magic.trim() != "ehplan-trees 1" {
            return Err(bad(ln, "header"));
        }
        let mut header = |key: &str| -> Result<usize> {
            let (ln, line) = next(key)?;
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next().map(str::parse::<usize>)) {
                (Some(k), Some(Ok(v))) if k == key => Ok(v),
                _ => Err(bad(ln, key)),
            }
        };
        let dim = header("dim")?;
        let n_trees = header("trees")?;
        let max_depth = header("max_depth")?;
        let min_samples_leaf = header("min_samples_leaf")?;
        let (ln, seed_line) = next("seed")?;
        let seed = seed_line
            .strip_prefix("seed ")
            .and_then(|s| s.trim().parse::<u64>().ok())
            .ok_or_else(|| bad(ln, "seed"))?;

        let mut trees = Vec::with_capacity(n_trees);
        for ti in 0..n_trees {
            let (ln, line) = next("tree")?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let count = match parts.as_slice() {
                ["tree", i, "nodes", c] if i.parse::<usize>().ok() == Some(ti) => {
                    c.parse::<usize>().map_err(|_| bad(ln, "node count"))?
                }
                _ => return Err(bad(ln, "tree header")),
            };
            let mut nodes = Vec::with_capacity(count);
            for j in 0..count {
                let (ln, line) = next("node")?;
                let p: Vec<&str> = line.split_whitespace().collect();
                if p.len() != 6 || p[0].parse::<usize>().ok() != Some(j) {
                    return Err(bad(ln, "node"));
                }
                let feature: i64 = p[1].parse().map_err(|_| bad(ln, "feature"))?;
                let threshold: f64 = p[2].parse().map_err(|_| bad(ln, "threshold"))?;
                let left: i64 = p[3].parse().map_err(|_| bad(ln, "left"))?;
                let right: i64 = p[4].parse().map_err(|_| bad(ln, "right"))?;
                let value: f64 = p[5].parse().map_err(|_| bad(ln, "value"))?;
                nodes.push(if feature < 0 {
                    Node {
                        feature: None,
                        threshold,
                        left: 0,
                        right: 0,
                        value,
                    }
                } else {
                    if left < 0 || right < 0 {
                        return Err(bad(ln, "children"));
                    }
                    Node {
                        feature: Some(feature as usize),
                        threshold,
                        left: left as usize,
                        right: right as usize,
                        value,
                    }
                });
            }
            trees.push(RegressionTree::from_nodes(nodes));
        }
        Self::from_trees(
            dim,
            EnsembleParams {
                trees: n_trees,
                max_depth,
                min_samples_leaf,
                seed,
            },
            trees,
        )
    }
}

fn validate_nodes(nodes: &[Node], dim: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::argument("tree has no nodes"));
    }
    for (i, n) in nodes.iter().enumerate() {
        if let Some(f) = n.feature {
            // children always follow their parent, which rules out cycles
            if f >= dim || n.left <= i || n.right <= i || n.left >= nodes.len() || n.right >= nodes.len() {
                return Err(Error::argument(format!("tree node {i} is malformed")));
            }
        }
    }
    Ok(())
}
