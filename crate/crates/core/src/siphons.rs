//! Minimal siphons of the Petri-net view and their triviality.
//!
//! A species set `P` is a siphon when every reaction producing a member of `P`
//! also consumes a member of `P`. A siphon is trivial when it contains the
//! support of a nonnegative conservation law, critical otherwise.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::Network;
use crate::ratlinalg::RatVector;

pub const MAX_SIPHON_SPECIES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SiphonError {
    #[error("siphon enumeration limited to {limit} species, network has {species}")]
    TooLarge { species: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Siphon {
    pub species: BTreeSet<usize>,
    pub minimal: bool,
    pub trivial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PersistenceVerdict {
    PersistenceCertified,
    Unknown,
}

/// Direct check of the siphon property.
pub fn is_siphon(net: &Network, set: &BTreeSet<usize>) -> bool {
    !set.is_empty()
        && net.reactions().iter().all(|r| {
            let produces = r.products.species().any(|(i, _)| set.contains(&i));
            !produces || r.reactants.species().any(|(i, _)| set.contains(&i))
        })
}

struct Search<'a> {
    net: &'a Network,
    found: Vec<u64>,
}

impl Search<'_> {
    /// First reaction that produces a member of `inc` without consuming one.
    fn violated(&self, inc: u64) -> Option<usize> {
        self.net.reactions().iter().position(|r| {
            r.products.species().any(|(i, _)| inc & (1 << i) != 0)
                && !r.reactants.species().any(|(i, _)| inc & (1 << i) != 0)
        })
    }

    fn explore(&mut self, inc: u64, exc: u64) {
        // a known siphon inside `inc` makes every extension non-minimal
        if self.found.iter().any(|&s| s & !inc == 0) {
            return;
        }
        let Some(j) = self.violated(inc) else {
            self.found.push(inc);
            return;
        };
        // branch on which reactant of R_j joins; earlier choices are excluded
        // in later branches so each set is reached once
        let mut exc = exc;
        let cands: Vec<usize> = self.net.reactions()[j]
            .reactants
            .species()
            .map(|(i, _)| i)
            .collect();
        for i in cands {
            if exc & (1 << i) != 0 {
                continue;
            }
            self.explore(inc | (1 << i), exc);
            exc |= 1 << i;
        }
    }
}

fn to_set(mask: u64) -> BTreeSet<usize> {
    (0..64).filter(|i| mask & (1 << i) != 0).collect()
}

/// All inclusion-minimal siphons, sorted by size then lexicographically.
/// The `trivial` flag is left `false`; see [`classify_triviality`].
pub fn minimal_siphons(net: &Network) -> Result<Vec<Siphon>, SiphonError> {
    let n = net.num_species();
    if n > MAX_SIPHON_SPECIES {
        return Err(SiphonError::TooLarge {
            species: n,
            limit: MAX_SIPHON_SPECIES,
        });
    }
    let mut search = Search {
        net,
        found: Vec::new(),
    };
    for seed in 0..n {
        // smallest member is `seed`
        let exc = (1u64 << seed) - 1;
        search.explore(1 << seed, exc);
    }
    let found = search.found;
    let mut minimal: Vec<BTreeSet<usize>> = found
        .iter()
        .filter(|&&s| !found.iter().any(|&o| o != s && o & s == o))
        .map(|&s| to_set(s))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    minimal.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(minimal
        .into_iter()
        .map(|species| Siphon {
            species,
            minimal: true,
            trivial: false,
        })
        .collect())
}

/// Mark `s` trivial iff it contains the support of one of the nonnegative `rays`.
pub fn classify_triviality(s: Siphon, rays: &[RatVector]) -> Siphon {
    let trivial = rays.iter().any(|r| {
        r.iter()
            .enumerate()
            .all(|(i, x)| x.is_zero() || s.species.contains(&i))
    });
    Siphon { trivial, ..s }
}

/// Minimal siphons with triviality flags.
pub fn classified_siphons(net: &Network, rays: &[RatVector]) -> Result<Vec<Siphon>, SiphonError> {
    Ok(minimal_siphons(net)?
        .into_iter()
        .map(|s| classify_triviality(s, rays))
        .collect())
}

/// Persistence is certified when every minimal siphon is trivial.
pub fn persistence_verdict(net: &Network) -> Result<PersistenceVerdict, SiphonError> {
    let gamma = net.stoichiometry_matrix();
    let rays = crate::ratlinalg::nonneg_kernel_rays(&gamma.transpose());
    let siphons = classified_siphons(net, &rays)?;
    Ok(if siphons.iter().all(|s| s.trivial) {
        PersistenceVerdict::PersistenceCertified
    } else {
        PersistenceVerdict::Unknown
    })
}
