use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::potential::nearest_distances;
use super::{Potential, Site};
use crate::error::{LabError, Result};

/// Built-in families of sparse supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SparseRule {
    /// One-dimensional sites `n_k = ceil(k^p)`, `k >= 1`, mirrored to
    /// `-n_k` as well when `symmetric` is set.
    PowerLaw {
        p: f64,
        #[serde(default)]
        symmetric: bool,
    },
    /// Sites `ceil(k^p) * u` for every `k >= 1` and every direction `u`.
    RadialShells { p: f64, directions: Vec<Vec<i64>> },
    /// A fixed list of sites.
    Explicit { sites: Vec<Vec<i64>> },
}

/// Sites generated by a [`SparseRule`] inside a box, with their separations.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSupport {
    pub sites: Vec<Site>,
    /// `d(n)` for each entry of `sites`, measured within the generated set.
    pub separations: Vec<f64>,
}

impl SparseSupport {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Potential with the same value at every support site.
    pub fn constant_potential(&self, dim: usize, value: f64) -> Result<Potential> {
        Potential::from_entries(dim, self.sites.iter().map(|s| (s.clone(), value)))
    }
}

fn shell_radius(k: u64, p: f64) -> Option<i64> {
    if p.fract() == 0.0 && p <= 32.0 {
        return k.checked_pow(p as u32).and_then(|v| i64::try_from(v).ok());
    }
    let x = (k as f64).powf(p);
    if !x.is_finite() || x > i64::MAX as f64 / 4.0 {
        return None;
    }
    // Guard against k^p landing a hair above an integer.
    Some((x - 1e-9 * x.max(1.0)).ceil() as i64)
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(LabError::Config(format!(
            "sparse rule exponent p must exceed 1 (got {p}); smaller exponents are not sparse"
        )));
    }
    Ok(())
}

/// All sites produced by `rule` with `|n|_inf <= radius`, lexicographically
/// ordered, together with their separations `d(n)`.
pub fn sparse_support(dim: usize, rule: &SparseRule, radius: i64) -> Result<SparseSupport> {
    let mut sites = Vec::new();
    match rule {
        SparseRule::PowerLaw { p, symmetric } => {
            check_exponent(*p)?;
            if dim != 1 {
                return Err(LabError::Config(format!(
                    "power-law rule is one-dimensional, dimension is {dim}"
                )));
            }
            for k in 1u64.. {
                let Some(r) = shell_radius(k, *p) else { break };
                if r > radius {
                    break;
                }
                sites.push(Site::from([r]));
                if *symmetric {
                    sites.push(Site::from([-r]));
                }
            }
        }
        SparseRule::RadialShells { p, directions } => {
            check_exponent(*p)?;
            if directions.is_empty() {
                return Err(LabError::Config("radial-shells rule needs a direction".into()));
            }
            let dirs: Vec<Site> = directions
                .iter()
                .map(|u| {
                    if u.len() != dim {
                        Err(LabError::DimensionMismatch {
                            expected: dim,
                            got: u.len(),
                        })
                    } else if u.iter().all(|&c| c == 0) {
                        Err(LabError::Config("radial-shells direction must be nonzero".into()))
                    } else {
                        Ok(Site::new(u.clone()))
                    }
                })
                .collect::<Result<_>>()?;
            let shortest = dirs.iter().map(Site::norm_inf).min().unwrap_or(1);
            for k in 1u64.. {
                let Some(r) = shell_radius(k, *p) else { break };
                if r.saturating_mul(shortest) > radius {
                    break;
                }
                for u in &dirs {
                    let site = u.scale(r);
                    if site.norm_inf() <= radius {
                        sites.push(site);
                    }
                }
            }
        }
        SparseRule::Explicit { sites: raw } => {
            for coords in raw {
                if coords.len() != dim {
                    return Err(LabError::DimensionMismatch {
                        expected: dim,
                        got: coords.len(),
                    });
                }
                let site = Site::new(coords.clone());
                if site.norm_inf() <= radius {
                    sites.push(site);
                }
            }
        }
    }

    let mut seen = HashSet::with_capacity(sites.len());
    for site in &sites {
        if !seen.insert(site.clone()) {
            return Err(LabError::Config(format!(
                "sparse rule generates site {site} twice"
            )));
        }
    }
    sites.sort();
    let separations = nearest_distances(&sites);
    Ok(SparseSupport { sites, separations })
}

/// Seed of the private random stream attached to `site` under `master`.
///
/// Each site draws from its own stream, so the value at a site does not
/// depend on which other sites are present and nested boxes share values.
pub fn site_seed(master: u64, site: &Site) -> u64 {
    let mut h = splitmix(master ^ 0x5851_f42d_4c95_7f2d);
    for &c in site.coords() {
        h = splitmix(h ^ (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    h
}

/// Seed for work item `index` (a disorder realization, a λ sample) under
/// `master`.
pub fn item_seed(master: u64, index: u64) -> u64 {
    splitmix(splitmix(master ^ 0x2545_f491_4f6c_dd1d) ^ index)
}

pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent uniform amplitudes on `[-a, 0]` at every support site.
pub fn sample_potential(dim: usize, support: &[Site], a: f64, seed: u64) -> Result<Potential> {
    if !(a.is_finite() && a > 0.0) {
        return Err(LabError::Config(format!(
            "amplitude bound a must be positive, got {a}"
        )));
    }
    Potential::from_entries(
        dim,
        support.iter().map(|site| {
            let mut rng = ChaCha8Rng::seed_from_u64(site_seed(seed, site));
            let u: f64 = rng.random();
            (site.clone(), -a * u)
        }),
    )
}

/// Partial sums of `|V(n)| / |n|^((d-1)/2)` over `0 < |n| <= R` for each `R`.
pub fn thm1_condition_partial_sums(potential: &Potential, radii: &[f64]) -> Vec<f64> {
    let exponent = (potential.dim() as f64 - 1.0) / 2.0;
    let mut terms: Vec<(f64, f64)> = potential
        .iter()
        .filter(|(s, _)| !s.is_origin())
        .map(|(s, v)| {
            let r = s.norm();
            (r, v.abs() / r.powf(exponent))
        })
        .collect();
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    radii
        .iter()
        .map(|&radius| {
            terms
                .iter()
                .take_while(|(r, _)| *r <= radius)
                .map(|(_, t)| t)
                .sum()
        })
        .collect()
}

/// For each `R`, the smallest `d(n) / |n|^delta` over support sites in the
/// dyadic shell `R/2 < |n| <= R`; `None` when the shell is empty.
pub fn sparseness_profile(potential: &Potential, delta: f64, radii: &[f64]) -> Vec<Option<f64>> {
    let seps = potential.separations();
    radii
        .iter()
        .map(|&radius| {
            seps.iter()
                .filter(|(s, _)| {
                    let r = s.norm();
                    r > radius / 2.0 && r <= radius
                })
                .map(|(s, d)| d / s.norm().powf(delta))
                .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |m| m.min(x))))
        })
        .collect()
}
