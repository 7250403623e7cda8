//! Per-class Gaussian mixtures over latent vectors and the resulting class
//! posterior.

use log::warn;
use rand::seq::index::sample;

use super::gaussian::{add_ridge, diagonal_of, weighted_moments, Gaussian};
use crate::error::{Error, Result};
use crate::linalg::{log_sum_exp, Matrix};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MmConfig {
    /// Mixture components per class.
    pub components: usize,
    /// Added to every covariance diagonal.
    pub ridge: f64,
    pub max_iterations: usize,
    /// EM stops once the mean log-likelihood changes by less than this.
    pub tolerance: f64,
    pub seed: u64,
    /// One covariance pooled over both classes (single-component only).
    pub shared_covariance: bool,
}

impl Default for MmConfig {
    fn default() -> Self {
        MmConfig {
            components: 1,
            ridge: 1e-6,
            max_iterations: 100,
            tolerance: 1e-8,
            seed: 0,
            shared_covariance: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDensity {
    pub weights: Vec<f64>,
    pub components: Vec<Gaussian>,
    /// Class frequency prior.
    pub gamma: f64,
    pub count: usize,
}

impl ClassDensity {
    pub fn single(component: Gaussian, gamma: f64, count: usize) -> Self {
        ClassDensity {
            weights: vec![1.0],
            components: vec![component],
            gamma,
            count,
        }
    }

    pub fn log_density(&self, u: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, g)| w.ln() + g.log_pdf(u))
            .collect();
        log_sum_exp(&terms)
    }
}

/// Class-conditional densities, literal class first.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureEnsemble {
    pub classes: [ClassDensity; 2],
}

impl MixtureEnsemble {
    pub fn dim(&self) -> usize {
        self.classes[0].components[0].dim()
    }

    /// `(literal, idiomatic)` posterior for latent vector `u`.
    pub fn posterior(&self, u: &[f64]) -> Result<[f64; 2]> {
        if u.len() != self.dim() {
            return Err(Error::Shape(format!(
                "latent vector has length {} but the ensemble expects {}",
                u.len(),
                self.dim()
            )));
        }
        let scores: Vec<f64> = self
            .classes
            .iter()
            .map(|c| c.log_density(u) + c.gamma.ln() + (c.count as f64).ln())
            .collect();
        let z = log_sum_exp(&scores);
        let p = [(scores[0] - z).exp(), (scores[1] - z).exp()];
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ensemble posterior".into()));
        }
        Ok(p)
    }
}

pub fn predict_mm(ensemble: &MixtureEnsemble, u: &[f64]) -> Result<[f64; 2]> {
    ensemble.posterior(u)
}

/// Fits one density per class. `gamma` is the class frequency among
/// `labels`; `count` the class size.
pub fn fit_mm(latents: &[Vec<f64>], labels: &[bool], config: &MmConfig) -> Result<MixtureEnsemble> {
    if latents.len() != labels.len() {
        return Err(Error::Shape(format!("{} latents but {} labels", latents.len(), labels.len())));
    }
    let d = latents.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::invalid("no latent vectors to fit"));
    }
    if latents.iter().any(|u| u.len() != d) {
        return Err(Error::Shape("latent vectors differ in length".into()));
    }
    if latents.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("latent vector".into()));
    }
    if config.components == 0 {
        return Err(Error::invalid("at least one mixture component is required"));
    }
    if config.shared_covariance && config.components > 1 {
        return Err(Error::invalid("a shared covariance needs a single component per class"));
    }
    let n = latents.len() as f64;
    let groups: Vec<Vec<&[f64]>> = [false, true]
        .iter()
        .map(|&c| {
            latents
                .iter()
                .zip(labels)
                .filter(|(_, &y)| y == c)
                .map(|(u, _)| &u[..])
                .collect()
        })
        .collect();
    for (c, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(Error::invalid(format!(
                "class {} has no training examples",
                if c == 1 { "idiomatic" } else { "literal" }
            )));
        }
    }

    let classes: Vec<ClassDensity> = if config.shared_covariance {
        let mut pooled = Matrix::zeros(d, d);
        let mut means = Vec::new();
        for g in &groups {
            let (m, c) = weighted_moments(g, &vec![1.0; g.len()]);
            for (p, v) in pooled.as_mut_slice().iter_mut().zip(c.as_slice()) {
                *p += v * g.len() as f64 / n;
            }
            means.push(m);
        }
        add_ridge(&mut pooled, config.ridge);
        means
            .into_iter()
            .zip(&groups)
            .map(|(m, g)| {
                Ok(ClassDensity::single(
                    Gaussian::new(m, pooled.clone())?,
                    g.len() as f64 / n,
                    g.len(),
                ))
            })
            .collect::<Result<_>>()?
    } else {
        groups
            .iter()
            .enumerate()
            .map(|(c, g)| {
                let (weights, components) = fit_class(g, config, c)?;
                Ok(ClassDensity {
                    weights,
                    components,
                    gamma: g.len() as f64 / n,
                    count: g.len(),
                })
            })
            .collect::<Result<_>>()?
    };
    let [a, b]: [ClassDensity; 2] = classes.try_into().expect("two classes");
    Ok(MixtureEnsemble { classes: [a, b] })
}

/// Single Gaussian with ML covariance; diagonal when the class is too small
/// for a full covariance or the full one is numerically singular.
fn fit_gaussian(points: &[&[f64]], weights: &[f64], ridge: f64, label: &str) -> Result<Gaussian> {
    let d = points[0].len();
    let (mean, mut cov) = weighted_moments(points, weights);
    let effective: f64 = weights.iter().sum();
    if effective < (d + 1) as f64 {
        warn!("{label}: {effective:.1} examples for a {d}-dimensional covariance; using a diagonal covariance");
        cov = diagonal_of(&cov);
    }
    add_ridge(&mut cov, ridge);
    match Gaussian::new(mean.clone(), cov.clone()) {
        Ok(g) => Ok(g),
        Err(_) => {
            warn!("{label}: covariance is singular; using a diagonal covariance");
            let mut diag = diagonal_of(&cov);
            for i in 0..d {
                diag[(i, i)] = diag[(i, i)].max(ridge);
            }
            Gaussian::new(mean, diag)
        }
    }
}

fn fit_class(points: &[&[f64]], config: &MmConfig, class: usize) -> Result<(Vec<f64>, Vec<Gaussian>)> {
    let label = format!("class {class}");
    let k = config.components;
    if k == 1 || points.len() < 2 * k {
        if k > 1 {
            warn!("{label}: {} examples are too few for {k} components; fitting one", points.len());
        }
        return Ok((vec![1.0], vec![fit_gaussian(points, &vec![1.0; points.len()], config.ridge, &label)?]));
    }

    // Means start at distinct random points; covariances at the class covariance.
    let mut rng = rng::substream(config.seed ^ class as u64, "em");
    let whole = fit_gaussian(points, &vec![1.0; points.len()], config.ridge, &label)?;
    let mut components: Vec<Gaussian> = sample(&mut rng, points.len(), k)
        .into_iter()
        .map(|i| Gaussian::new(points[i].to_vec(), whole.covariance().clone()))
        .collect::<Result<_>>()?;
    let mut weights = vec![1.0 / k as f64; k];
    let mut previous = f64::NEG_INFINITY;
    let mut resp = vec![vec![0.0; points.len()]; k];

    for iteration in 0..config.max_iterations {
        // E-step in log space.
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            let logs: Vec<f64> = (0..k).map(|j| weights[j].ln() + components[j].log_pdf(p)).collect();
            let z = log_sum_exp(&logs);
            total += z;
            for j in 0..k {
                resp[j][i] = (logs[j] - z).exp();
            }
        }
        let mean_ll = total / points.len() as f64;
        if !mean_ll.is_finite() {
            return Err(Error::NonFinite(format!("{label}: EM log-likelihood")));
        }
        if (mean_ll - previous).abs() < config.tolerance {
            log::debug!("{label}: EM converged after {iteration} iterations");
            break;
        }
        previous = mean_ll;

        // M-step.
        for j in 0..k {
            let mass: f64 = resp[j].iter().sum();
            weights[j] = (mass / points.len() as f64).max(1e-12);
            if mass > 1e-9 {
                components[j] = fit_gaussian(points, &resp[j], config.ridge, &label)?;
            }
        }
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
    }
    Ok((weights, components))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_posterior() {
        let g = |m: f64| Gaussian::new(vec![m], Matrix::identity(1)).unwrap();
        let e = MixtureEnsemble {
            classes: [ClassDensity::single(g(-2.0), 0.5, 10), ClassDensity::single(g(2.0), 0.5, 10)],
        };
        let p = e.posterior(&[1.0]).unwrap();
        assert!((p[1] - 1.0 / (1.0 + (-4.0f64).exp())).abs() < 1e-12);
        assert!((p[1] - 0.9820).abs() < 1e-4);
        assert_eq!(e.posterior(&[0.0]).unwrap(), [0.5, 0.5]);
        // Far in the tail both densities underflow; log-space keeps it finite.
        let far = e.posterior(&[1e4]).unwrap();
        assert!(far[1] == 1.0 && far[0] >= 0.0);
    }

    #[test]
    fn separated_means() {
        let mut lat = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let j = (i as f64 / 19.0 - 0.5) * 0.2;
            lat.push(vec![-2.0 + j]);
            lat.push(vec![2.0 + j]);
            y.extend([false, true]);
        }
        let e = fit_mm(&lat, &y, &MmConfig::default()).unwrap();
        assert!((e.classes[0].components[0].mean()[0] + 2.0).abs() < 0.1);
        assert!((e.classes[1].components[0].mean()[0] - 2.0).abs() < 0.1);
        assert_eq!(e.classes[0].gamma, 0.5);
        assert_eq!(e.classes[1].count, 20);
    }

    #[test]
    fn small_class_falls_back_to_diagonal() {
        let lat = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.0], vec![3.0, 3.0, 3.0], vec![2.0, 1.0, 0.0], vec![0.5, 0.2, 0.9]];
        let y = [true, true, false, false, false];
        let e = fit_mm(&lat, &y, &MmConfig::default()).unwrap();
        let c = e.classes[1].components[0].covariance();
        assert_eq!(c[(0, 1)], 0.0);
        assert!((c[(0, 0)] - (0.25 + 1e-6)).abs() < 1e-15);
    }

    #[test]
    fn missing_class_is_an_error() {
        assert!(fit_mm(&[vec![0.0], vec![1.0]], &[true, true], &MmConfig::default()).is_err());
    }
}
