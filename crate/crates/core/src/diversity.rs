//! Membership diversity and its significance against a gravity null model.
//!
//! Diversity is the Gini–Simpson index `1 − Σ_j m(j)²` of a unit-share
//! membership vector. The null model places expected pair masses
//! `T_xy = κ·p_x·p_y / d_xy^β` between sets, draws Poisson networks from it,
//! and scores each set's observed diversity against the sampled ones.

use std::collections::HashMap;
use std::path::Path;

use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::detect::{leiden, DetectConfig};
use crate::error::{Error, Result};
use crate::graph::{CommunityAssignment, WeightedGraph};
use crate::lfmm::{normalize_node, raw_membership};
use crate::rng;
use crate::table::{self, fmt_num, parse_number};

pub const SPATIAL_HEADER: [&str; 4] = ["set_id", "x", "y", "population"];

/// Gini–Simpson index of a membership row, rescaled to unit sum first.
///
/// Returns `None` for an all-zero row.
pub fn gsi(row: &[f64]) -> Option<f64> {
    let total: f64 = row.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let concentration: f64 = row.iter().map(|v| (v / total).powi(2)).sum();
    Some((1.0 - concentration).max(0.0))
}

/// Planar coordinates and populations per aggregate set.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialAttributes {
    pub labels: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub population: Vec<f64>,
    /// Per-set self-distance; `None` falls back to the nearest-neighbor rule.
    pub self_distance: Vec<Option<f64>>,
}

impl SpatialAttributes {
    pub fn new(labels: Vec<String>, x: Vec<f64>, y: Vec<f64>, population: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if x.len() != n || y.len() != n || population.len() != n {
            return Err(Error::Mismatch("spatial attribute columns differ in length".into()));
        }
        for i in 0..n {
            if !(x[i].is_finite() && y[i].is_finite()) {
                return Err(Error::Gravity(format!("non-finite coordinates for `{}`", labels[i])));
            }
            if !(population[i].is_finite() && population[i] > 0.0) {
                return Err(Error::Gravity(format!(
                    "population of `{}` must be positive",
                    labels[i]
                )));
            }
        }
        Ok(Self {
            labels,
            x,
            y,
            population,
            self_distance: vec![None; n],
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Reorders rows to follow the node order of `g`.
    pub fn aligned_to(&self, g: &WeightedGraph) -> Result<Self> {
        let index: HashMap<&str, usize> = self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut order = Vec::with_capacity(g.node_count());
        for label in g.labels() {
            let &i = index
                .get(label.as_str())
                .ok_or_else(|| Error::MissingNode(label.clone()))?;
            order.push(i);
        }
        Ok(Self {
            labels: order.iter().map(|&i| self.labels[i].clone()).collect(),
            x: order.iter().map(|&i| self.x[i]).collect(),
            y: order.iter().map(|&i| self.y[i]).collect(),
            population: order.iter().map(|&i| self.population[i]).collect(),
            self_distance: order.iter().map(|&i| self.self_distance[i]).collect(),
        })
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        (self.x[a] - self.x[b]).hypot(self.y[a] - self.y[b])
    }
}

pub fn load_spatial(text: &str) -> Result<SpatialAttributes> {
    let rows = table::parse_rows("spatial", text, &SPATIAL_HEADER)?;
    let mut labels = Vec::with_capacity(rows.len());
    let (mut x, mut y, mut p) = (Vec::new(), Vec::new(), Vec::new());
    let mut seen = HashMap::new();
    for row in rows {
        if seen.insert(row.fields[0], ()).is_some() {
            return Err(Error::DuplicateNode(row.fields[0].to_string()));
        }
        labels.push(row.fields[0].to_string());
        x.push(parse_number("spatial", row.line, row.fields[1], "x")?);
        y.push(parse_number("spatial", row.line, row.fields[2], "y")?);
        let pop = parse_number("spatial", row.line, row.fields[3], "population")?;
        if pop <= 0.0 {
            return Err(Error::format("spatial", row.line, "population must be positive"));
        }
        p.push(pop);
    }
    SpatialAttributes::new(labels, x, y, p)
}

pub fn load_spatial_file(path: &Path) -> Result<SpatialAttributes> {
    load_spatial(&table::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GravityConfig {
    /// Distance exponent `β`; `None` fits it from the observed network.
    pub exponent: Option<f64>,
    /// Monte Carlo sample count `K`.
    pub samples: usize,
    pub seed: u64,
    /// Self-distance as a fraction `θ` of the nearest-neighbor distance.
    pub self_distance_factor: f64,
    /// Lower bound `ε` on the standard deviation in the z-score.
    pub sigma_floor: f64,
    /// Re-run detection on every sample instead of reusing the observed
    /// partition.
    pub redetect: Option<DetectConfig>,
}

impl Default for GravityConfig {
    fn default() -> Self {
        Self {
            exponent: None,
            samples: 100,
            seed: 0,
            self_distance_factor: 0.5,
            sigma_floor: 1e-12,
            redetect: None,
        }
    }
}

impl GravityConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(beta) = self.exponent {
            if !(beta.is_finite() && beta >= 0.0) {
                return Err(Error::Config(format!(
                    "gravity exponent must be finite and >= 0, got {beta}"
                )));
            }
        }
        if self.samples < 2 {
            return Err(Error::Config(format!(
                "need at least 2 null samples, got {}",
                self.samples
            )));
        }
        if !(self.self_distance_factor > 0.0 && self.self_distance_factor <= 1.0) {
            return Err(Error::Config(format!(
                "self-distance factor must lie in (0, 1], got {}",
                self.self_distance_factor
            )));
        }
        if !(self.sigma_floor > 0.0 && self.sigma_floor.is_finite()) {
            return Err(Error::Config("sigma floor must be positive".into()));
        }
        Ok(())
    }
}

/// Fitted or supplied gravity parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityModel {
    pub kappa: f64,
    pub beta: f64,
    /// Whether `beta` came from the least-squares fit.
    pub fitted: bool,
}

/// `n × n` distances with the self-distance on the diagonal.
fn distances(s: &SpatialAttributes, theta: f64) -> Result<Vec<f64>> {
    let n = s.len();
    let mut d = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let dist = s.distance(a, b);
            if dist == 0.0 {
                return Err(Error::Gravity(format!(
                    "sets `{}` and `{}` are coincident; distances must be positive",
                    s.labels[a], s.labels[b]
                )));
            }
            d[a * n + b] = dist;
            d[b * n + a] = dist;
        }
    }
    for a in 0..n {
        let own = match s.self_distance[a] {
            Some(v) if v > 0.0 && v.is_finite() => v,
            Some(v) => {
                return Err(Error::Gravity(format!(
                    "self-distance of `{}` must be positive, got {v}",
                    s.labels[a]
                )))
            }
            None if n == 1 => return Err(Error::Gravity("a single set needs an explicit self-distance".into())),
            None => {
                let nearest = (0..n)
                    .filter(|&b| b != a)
                    .map(|b| d[a * n + b])
                    .fold(f64::INFINITY, f64::min);
                theta * nearest
            }
        };
        d[a * n + a] = own;
    }
    Ok(d)
}

/// Unscaled pair masses `p_x·p_y / d_xy^β` (diagonal included).
fn gravity_kernel(s: &SpatialAttributes, d: &[f64], beta: f64) -> Vec<f64> {
    let n = s.len();
    let mut t = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            t[a * n + b] = s.population[a] * s.population[b] / d[a * n + b].powf(beta);
        }
    }
    t
}

/// Fits `β` by least squares of `ln w_xy − ln(p_x p_y)` on `ln d_xy` over the
/// linked pairs (unless `exponent` is set), then scales `κ` so the expected
/// total mass, self-masses included, equals the observed `Σ strength / 2`.
pub fn fit_gravity(g: &WeightedGraph, s: &SpatialAttributes, cfg: &GravityConfig) -> Result<GravityModel> {
    cfg.validate()?;
    let s = s.aligned_to(g)?;
    let n = s.len();
    let d = distances(&s, cfg.self_distance_factor)?;

    let (beta, fitted) = match cfg.exponent {
        Some(beta) => (beta, false),
        None => {
            if n < 3 {
                return Err(Error::Gravity(
                    "the distance exponent is not identifiable from fewer than 3 sets; supply it explicitly".into(),
                ));
            }
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for e in g.edges() {
                let (a, b) = (e.source, e.target);
                xs.push(d[a * n + b].ln());
                ys.push(e.weight.ln() - (s.population[a] * s.population[b]).ln());
            }
            let m = xs.len() as f64;
            if xs.len() < 2 {
                return Err(Error::Gravity(
                    "need at least 2 linked pairs to fit the exponent".into(),
                ));
            }
            let mx = xs.iter().sum::<f64>() / m;
            let my = ys.iter().sum::<f64>() / m;
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            if sxx <= 1e-12 * m {
                return Err(Error::Gravity(
                    "all linked pairs are equidistant; the exponent cannot be fitted".into(),
                ));
            }
            (-(sxy / sxx), true)
        }
    };

    let observed = g.total_strength() / 2.0;
    if observed.is_nan() || observed <= 0.0 {
        return Err(Error::Gravity("observed network has no mass".into()));
    }
    let kernel = gravity_kernel(&s, &d, beta);
    let mut expected = 0.0;
    for a in 0..n {
        for b in a..n {
            expected += kernel[a * n + b];
        }
    }
    Ok(GravityModel {
        kappa: observed / expected,
        beta,
        fitted,
    })
}

/// Diversity of one set against the null.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetDiversity {
    pub gsi: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullDiversity {
    pub model: GravityModel,
    /// One row per node of the observed graph, in node order.
    pub sets: Vec<SetDiversity>,
}

/// Observed unit-share diversity of every set.
pub fn observed_gsi(g: &WeightedGraph, c: &CommunityAssignment) -> Result<Vec<Option<f64>>> {
    let shares = normalize_node(&raw_membership(g, c)?)?;
    Ok((0..g.node_count()).map(|x| gsi(shares.row(x))).collect())
}

/// Expected pair masses `κ·p_x·p_y / d_xy^β`, row-major `n × n`, with the
/// self-masses on the diagonal. Rows follow the order of `s`.
pub fn expected_masses(s: &SpatialAttributes, model: &GravityModel, self_distance_factor: f64) -> Result<Vec<f64>> {
    let d = distances(s, self_distance_factor)?;
    Ok(gravity_kernel(s, &d, model.beta)
        .into_iter()
        .map(|k| model.kappa * k)
        .collect())
}

/// Draws one network with independent Poisson pair weights of mean `t`
/// (row-major, `n × n`). A sampled self-mass `s` becomes diagonal mass `2s`.
pub fn sample_network(labels: &[String], t: &[f64], rng: &mut impl rand::Rng) -> Result<WeightedGraph> {
    let n = labels.len();
    let mut draw = |lambda: f64| -> f64 {
        if lambda > 0.0 {
            Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(0.0)
        } else {
            0.0
        }
    };
    let mut diagonal = vec![0.0; n];
    let mut edges = Vec::new();
    for a in 0..n {
        diagonal[a] = 2.0 * draw(t[a * n + a]);
        for b in a + 1..n {
            let w = draw(t[a * n + b]);
            if w > 0.0 {
                edges.push((a, b, w));
            }
        }
    }
    WeightedGraph::new(labels.to_vec(), diagonal, edges)
}

/// Gravity-null mean, standard deviation and z-score of every set's diversity.
///
/// Samples are independent, each seeded from `(seed, sample index)`, so the
/// result does not depend on how many threads run them.
pub fn null_diversity(
    g: &WeightedGraph,
    c: &CommunityAssignment,
    s: &SpatialAttributes,
    cfg: &GravityConfig,
) -> Result<NullDiversity> {
    let model = fit_gravity(g, s, cfg)?;
    let aligned = s.aligned_to(g)?;
    let n = g.node_count();
    let expected = expected_masses(&aligned, &model, cfg.self_distance_factor)?;
    let observed = observed_gsi(g, c)?;

    let samples: Vec<Vec<Option<f64>>> = (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(cfg.seed, &[k as u64]);
            let sample = sample_network(g.labels(), &expected, &mut rng)?;
            match &cfg.redetect {
                Some(detect) => {
                    let detect = DetectConfig {
                        seed: rng::derive_seed(detect.seed, &[k as u64]),
                        ..*detect
                    };
                    observed_gsi(&sample, &leiden(&sample, &detect)?)
                }
                None => observed_gsi(&sample, c),
            }
        })
        .collect::<Result<_>>()?;

    let sets = (0..n)
        .map(|x| {
            let values: Vec<f64> = samples.iter().filter_map(|row| row[x]).collect();
            if values.len() < 2 {
                return SetDiversity {
                    gsi: observed[x],
                    mu: None,
                    sigma: None,
                    z: None,
                };
            }
            let m = values.len() as f64;
            let mu = values.iter().sum::<f64>() / m;
            let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1.0);
            let sigma = var.sqrt();
            SetDiversity {
                gsi: observed[x],
                mu: Some(mu),
                sigma: Some(sigma),
                z: observed[x].map(|obs| (obs - mu) / sigma.max(cfg.sigma_floor)),
            }
        })
        .collect();
    Ok(NullDiversity { model, sets })
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_num)
}

/// `set_id,gsi` rows ordered by set label; missing values are `NA`.
pub fn gsi_to_csv(labels: &[String], values: &[Option<f64>]) -> String {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    let mut out = String::from("set_id,gsi\n");
    for i in order {
        out.push_str(&format!("{},{}\n", labels[i], opt_num(values[i])));
    }
    out
}

/// `set_id,gsi,mu,sigma,z` rows ordered by set label; missing values are `NA`.
pub fn diversity_to_csv(labels: &[String], result: &NullDiversity) -> String {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    let mut out = String::from("set_id,gsi,mu,sigma,z\n");
    for i in order {
        let row = &result.sets[i];
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            labels[i],
            opt_num(row.gsi),
            opt_num(row.mu),
            opt_num(row.sigma),
            opt_num(row.z)
        ));
    }
    out
}
