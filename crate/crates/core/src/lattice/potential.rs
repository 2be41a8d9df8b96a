use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::Site;
use crate::error::{LabError, Result};

/// A bounded real potential with finite support.
///
/// Sites absent from the map carry the value 0; exact zeros are dropped at
/// construction, so the stored keys are exactly `supp(V)`.
#[derive(Debug, Clone)]
pub struct Potential {
    dim: usize,
    entries: BTreeMap<Site, f64>,
    separation: OnceLock<BTreeMap<Site, f64>>,
}

impl PartialEq for Potential {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.entries == other.entries
    }
}

impl Potential {
    pub fn zero(dim: usize) -> Self {
        Potential {
            dim,
            entries: BTreeMap::new(),
            separation: OnceLock::new(),
        }
    }

    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (Site, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (site, value) in entries {
            if site.dim() != dim {
                return Err(LabError::DimensionMismatch {
                    expected: dim,
                    got: site.dim(),
                });
            }
            if !value.is_finite() {
                return Err(LabError::Config(format!(
                    "potential value at {site} is not finite"
                )));
            }
            if value != 0.0 {
                map.insert(site, value);
            } else {
                map.remove(&site);
            }
        }
        Ok(Potential {
            dim,
            entries: map,
            separation: OnceLock::new(),
        })
    }

    /// Potential equal to `beta` at the origin and zero elsewhere.
    pub fn single_bump(dim: usize, beta: f64) -> Result<Self> {
        Self::from_entries(dim, [(Site::origin(dim), beta)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, site: &Site) -> f64 {
        self.entries.get(site).copied().unwrap_or(0.0)
    }

    /// Support sites with their values, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&Site, f64)> {
        self.entries.iter().map(|(s, &v)| (s, v))
    }

    pub fn support(&self) -> impl Iterator<Item = &Site> {
        self.entries.keys()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `|V|_inf`.
    pub fn sup_norm(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.entries.values().fold(0.0, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.entries.values().fold(0.0, |m, &v| m.max(v))
    }

    /// Restriction to sites with `|n|_inf <= radius`.
    pub fn restricted(&self, radius: i64) -> Potential {
        Potential {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .filter(|(s, _)| s.norm_inf() <= radius)
                .map(|(s, &v)| (s.clone(), v))
                .collect(),
            separation: OnceLock::new(),
        }
    }

    /// Potential translated so that `center` moves to the origin.
    pub fn translated(&self, center: &Site) -> Potential {
        Potential {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(s, &v)| (s.sub(center), v))
                .collect(),
            separation: OnceLock::new(),
        }
    }

    /// `d(n) = dist(n, supp(V) \ {n})` for every support site; infinite when
    /// the support has a single site. Computed once and cached.
    pub fn separations(&self) -> &BTreeMap<Site, f64> {
        self.separation.get_or_init(|| {
            let sites: Vec<Site> = self.entries.keys().cloned().collect();
            let dists = nearest_distances(&sites);
            sites.into_iter().zip(dists).collect()
        })
    }

    /// `d(n)` for a support site, `None` off the support.
    pub fn separation(&self, site: &Site) -> Option<f64> {
        self.separations().get(site).copied()
    }
}

/// Nearest-neighbour Euclidean distance within `sites` for each site.
///
/// Sweep over sites sorted by their first coordinate, stopping a direction as
/// soon as the first-coordinate gap alone exceeds the best distance found.
pub(crate) fn nearest_distances(sites: &[Site]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by_key(|&i| sites[i].coords()[0]);
    let mut out = vec![f64::INFINITY; sites.len()];
    for (rank, &i) in order.iter().enumerate() {
        let x0 = sites[i].coords()[0];
        let mut best = f64::INFINITY;
        for &j in order[rank + 1..].iter() {
            if (sites[j].coords()[0] - x0) as f64 >= best {
                break;
            }
            best = best.min(sites[i].dist(&sites[j]));
        }
        for &j in order[..rank].iter().rev() {
            if (x0 - sites[j].coords()[0]) as f64 >= best {
                break;
            }
            best = best.min(sites[i].dist(&sites[j]));
        }
        out[i] = best;
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn zeros_are_not_stored() {
        let v = Potential::from_entries(1, [(Site::from([0]), 0.0), (Site::from([3]), 2.0)])
            .unwrap();
        assert_eq!(v.support_len(), 1);
        assert_eq!(v.get(&Site::from([0])), 0.0);
        assert_eq!(v.get(&Site::from([7])), 0.0);
        assert_eq!(v.sup_norm(), 2.0);
    }

    #[test]
    fn rejects_non_finite_values() {
        assert!(Potential::from_entries(1, [(Site::from([0]), f64::NAN)]).is_err());
        assert!(Potential::from_entries(2, [(Site::from([0]), 1.0)]).is_err());
    }

    #[test]
    fn two_point_separation() {
        let v = Potential::from_entries(1, [(Site::from([0]), 1.0), (Site::from([5]), 1.0)])
            .unwrap();
        assert_eq!(v.separation(&Site::from([0])), Some(5.0));
        assert_eq!(v.separation(&Site::from([5])), Some(5.0));
        assert_eq!(v.separation(&Site::from([1])), None);
    }

    #[test]
    fn single_site_is_infinitely_separated() {
        let v = Potential::single_bump(2, -1.0).unwrap();
        assert_eq!(v.separation(&Site::origin(2)), Some(f64::INFINITY));
    }

    fn brute_force(sites: &[Site]) -> Vec<f64> {
        sites
            .iter()
            .enumerate()
            .map(|(i, s)| {
                sites
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, t)| s.dist(t))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn separations_match_brute_force(
            raw in prop::collection::btree_set((-30i64..30, -30i64..30), 1..60)
        ) {
            let sites: Vec<Site> = raw.into_iter().map(|(a, b)| Site::from([a, b])).collect();
            let fast = nearest_distances(&sites);
            let slow = brute_force(&sites);
            prop_assert_eq!(fast, slow);
        }
    }
}
