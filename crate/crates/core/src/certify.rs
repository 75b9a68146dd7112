//! End-to-end certification pipeline and the certificate record.
//!
//! Gates are evaluated in a fixed order and the first failure decides an
//! `Inconclusive` verdict: critical siphon, conservativity, strict stability
//! of every rank-one factor, construction and cone verification of the PWL
//! function, then the LaSalle condition.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compound::{
    rank_one_compound_projection, rank_one_projection, second_compound, CompoundIndex,
};
use crate::lyapunov::{
    algorithm1, closure_builder, detect_instability, lasalle_check, verify_conic, verify_discrete,
    ConicCertificate, InstabilityWitness, LasalleReport, PwlFunction, DEFAULT_MAX_ITER,
    DEFAULT_MAX_LEN, DEFAULT_MAX_WORDS,
};
use crate::netmodel::Network;
use crate::ratlinalg::{RatMatrix, RatVector, Rational};
use crate::siphons::classified_siphons;
use crate::stoich::{
    build_reduction, conservation_laws, rank_one_matrices, species_indices, ConservationBasis,
    ReducedSystem, ReductionError,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertifyError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Iterative,
    Closure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertifyOptions {
    /// Species kept as reduced coordinates, in order. Chosen greedily when `None`.
    pub independent: Option<Vec<String>>,
    pub algorithm: Algorithm,
    pub max_iter: usize,
    pub max_word_len: usize,
    pub max_words: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            independent: None,
            algorithm: Algorithm::Iterative,
            max_iter: DEFAULT_MAX_ITER,
            max_word_len: DEFAULT_MAX_LEN,
            max_words: DEFAULT_MAX_WORDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    RobustlyNonOscillatory,
    Inconclusive { gate: String },
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::RobustlyNonOscillatory)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSection {
    /// sha256 of the canonical network text.
    pub digest: String,
    pub species: Vec<String>,
    pub reactions: Vec<String>,
    pub n_species: usize,
    pub n_reactions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionSection {
    pub conserved: usize,
    pub reduced_dim: usize,
    pub compound_dim: usize,
    pub conservation_laws: Vec<Vec<String>>,
    pub nonneg_rays: Vec<Vec<String>>,
    pub conservative: bool,
    pub independent: Vec<String>,
    pub t: Vec<Vec<String>>,
    pub gamma_r: Vec<Vec<String>>,
    /// Pair labels `(i,j)` indexing second-compound coordinates.
    pub compound_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiphonEntry {
    pub species: Vec<String>,
    pub trivial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub reaction: String,
    pub species: String,
    pub v: Vec<String>,
    pub w: Vec<String>,
    pub gain: String,
    pub a: Vec<Vec<String>>,
    pub a2: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdiSection {
    pub pairs: Vec<PairEntry>,
    pub all_strictly_stable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyapunovSection {
    pub algorithm: Algorithm,
    pub expression: String,
    pub rows: Vec<Vec<String>>,
    pub conic: bool,
    pub discrete: bool,
    pub multipliers: Vec<ConicCertificate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LasalleRowEntry {
    pub row: usize,
    pub rank: usize,
    pub full_rank: bool,
    pub active_kernel_trivial: bool,
    pub witness: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LasalleSection {
    pub dim: usize,
    pub full_rank_pass: bool,
    pub pass: bool,
    pub rows: Vec<LasalleRowEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    pub first_order_instability: Option<InstabilityWitness>,
    pub log: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub network: NetworkSection,
    pub reduction: ReductionSection,
    pub siphons: Vec<SiphonEntry>,
    pub ldi: LdiSection,
    pub lyapunov: Option<LyapunovSection>,
    pub lasalle: Option<LasalleSection>,
    pub diagnostics: Diagnostics,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

fn vec_text(v: &[String]) -> String {
    format!("[{}]", v.join(", "))
}

/// sha256 of the canonical text form.
pub fn network_digest(net: &Network) -> String {
    hex::encode(Sha256::digest(net.to_text().as_bytes()))
}

/// Conservation laws and the coordinate reduction for `independent`.
pub fn prepare(
    net: &Network,
    independent: Option<&[String]>,
) -> Result<(ConservationBasis, ReducedSystem), CertifyError> {
    let gamma = net.stoichiometry_matrix();
    let basis = conservation_laws(&gamma);
    let idx = independent.map(|n| species_indices(net, n)).transpose()?;
    let rs = build_reduction(net, &gamma, &basis, idx.as_deref())?;
    Ok((basis, rs))
}

/// Run the full pipeline. Errors are reserved for unusable input; every
/// analytic failure ends in an `Inconclusive` certificate.
pub fn certify(net: &Network, opts: &CertifyOptions) -> Result<Certificate, CertifyError> {
    let (basis, rs) = prepare(net, opts.independent.as_deref())?;
    let mut diag = Diagnostics::default();
    let mut gate: Option<String> = None;
    let mut fail = |g: String, diag: &mut Diagnostics| {
        diag.log.push(format!("gate failed: {g}"));
        gate.get_or_insert(g);
    };

    let n_red = rs.reduced_dim();
    let labels = if n_red >= 2 {
        CompoundIndex::new(n_red, 2).labels()
    } else {
        Vec::new()
    };
    let conservative = basis.covers_all_species(net.num_species());
    let reduction = ReductionSection {
        conserved: rs.conserved,
        reduced_dim: n_red,
        compound_dim: labels.len(),
        conservation_laws: basis.rows.iter().map(|r| strings(r)).collect(),
        nonneg_rays: basis.nonneg_rays.iter().map(|r| strings(r)).collect(),
        conservative,
        independent: rs
            .independent
            .iter()
            .map(|&i| net.species_name(i).to_string())
            .collect(),
        t: rs.t.to_strings(),
        gamma_r: rs.gamma_r.to_strings(),
        compound_labels: labels.clone(),
    };

    // siphons
    let siphons = match classified_siphons(net, &basis.nonneg_rays) {
        Ok(list) => {
            let entries: Vec<SiphonEntry> = list
                .iter()
                .map(|s| SiphonEntry {
                    species: s
                        .species
                        .iter()
                        .map(|&i| net.species_name(i).to_string())
                        .collect(),
                    trivial: s.trivial,
                })
                .collect();
            if let Some(crit) = entries.iter().find(|s| !s.trivial) {
                fail(
                    format!("critical siphon {{{}}}", crit.species.join(",")),
                    &mut diag,
                );
            }
            entries
        }
        Err(e) => {
            diag.log.push(e.to_string());
            fail("siphon enumeration".into(), &mut diag);
            Vec::new()
        }
    };

    if !conservative {
        let uncovered: Vec<&str> = (0..net.num_species())
            .filter(|&i| {
                basis
                    .nonneg_rays
                    .iter()
                    .all(|r| r[i] == Rational::from_integer(0.into()))
            })
            .map(|i| net.species_name(i))
            .collect();
        fail(
            format!(
                "conservativity (species {{{}}} not covered)",
                uncovered.join(",")
            ),
            &mut diag,
        );
    }

    // rank-one factors and their compounds
    let mats = rank_one_matrices(&rs);
    let compounds: Vec<RatMatrix> = mats.iter().map(second_compound).collect();
    let pairs: Vec<PairEntry> = rs
        .factors
        .iter()
        .zip(mats.iter().zip(&compounds))
        .map(|(f, (a, a2))| PairEntry {
            reaction: net.reactions()[f.pair.reaction].label.clone(),
            species: net.species_name(f.pair.species).to_string(),
            v: strings(&f.v),
            w: strings(&f.w),
            gain: f.gain().to_string(),
            a: a.to_strings(),
            a2: a2.to_strings(),
        })
        .collect();
    let unstable: Vec<usize> = rs
        .factors
        .iter()
        .enumerate()
        .filter(|(_, f)| f.gain() >= Rational::from_integer(0.into()))
        .map(|(l, _)| l + 1)
        .collect();
    let all_strictly_stable = unstable.is_empty();
    if !all_strictly_stable {
        let list: Vec<String> = unstable.iter().map(ToString::to_string).collect();
        fail(
            format!("rank-one stability (wᵀv >= 0 for pairs {})", list.join(",")),
            &mut diag,
        );
    }
    let ldi = LdiSection {
        pairs,
        all_strictly_stable,
    };

    let mut lyapunov = None;
    let mut lasalle = None;
    if all_strictly_stable {
        let p1: Vec<RatMatrix> = rs
            .factors
            .iter()
            .map(|f| rank_one_projection(&f.v, &f.w).expect("gain checked"))
            .collect();
        let p2: Vec<RatMatrix> = rs
            .factors
            .iter()
            .map(|f| rank_one_compound_projection(&f.v, &f.w).expect("gain checked"))
            .collect();

        if !mats.is_empty() && n_red > 0 {
            diag.first_order_instability = detect_instability(&mats, &p1, opts.max_word_len);
            match &diag.first_order_instability {
                Some(w) => diag.log.push(format!("first-order inclusion: {w}")),
                None => diag
                    .log
                    .push("first-order inclusion: no instability witness found".into()),
            }
        }

        let built = if compounds.is_empty() {
            Ok(PwlFunction::infinity_norm(labels.len()))
        } else {
            match opts.algorithm {
                Algorithm::Iterative => algorithm1(&compounds, opts.max_iter),
                Algorithm::Closure => closure_builder(&p2, opts.max_words, opts.max_word_len),
            }
        };
        match built {
            Ok(v) => {
                let conic = verify_conic(&v, &compounds);
                let discrete = verify_discrete(&v, &p2);
                if !conic.holds {
                    fail("Lyapunov function (cone verification)".into(), &mut diag);
                }
                if !discrete.holds {
                    diag.log.push(format!(
                        "discrete verification failed at (row, pair) {:?}",
                        discrete.failures
                    ));
                }
                if conic.holds {
                    let rep = lasalle_check(&v, &compounds);
                    if rep.full_rank_pass {
                        diag.log.push("LaSalle: every M_i has full rank".into());
                    } else {
                        diag.log.push(
                            "LaSalle: some M_i are rank deficient; kernels checked on active regions"
                                .into(),
                        );
                    }
                    if !rep.pass {
                        fail("LaSalle condition".into(), &mut diag);
                    }
                    lasalle = Some(lasalle_section(&rep));
                }
                lyapunov = Some(LyapunovSection {
                    algorithm: opts.algorithm,
                    expression: v.describe(),
                    rows: v.row_strings(),
                    conic: conic.holds,
                    discrete: discrete.holds,
                    multipliers: conic.certificates,
                });
            }
            Err(e) => {
                diag.log.push(format!("construction: {e}"));
                fail("Lyapunov function (construction)".into(), &mut diag);
            }
        }
    }

    let verdict = match gate {
        None => Verdict::RobustlyNonOscillatory,
        Some(gate) => Verdict::Inconclusive { gate },
    };
    let network = NetworkSection {
        digest: network_digest(net),
        species: net.species().iter().map(|s| s.name.clone()).collect(),
        reactions: (0..net.num_reactions())
            .map(|j| format!("{}: {}", net.reactions()[j].label, net.reaction_text(j)))
            .collect(),
        n_species: net.num_species(),
        n_reactions: net.num_reactions(),
    };
    Ok(Certificate {
        network,
        reduction,
        siphons,
        ldi,
        lyapunov,
        lasalle,
        diagnostics: diag,
        verdict,
    })
}

fn lasalle_section(rep: &LasalleReport) -> LasalleSection {
    LasalleSection {
        dim: rep.dim,
        full_rank_pass: rep.full_rank_pass,
        pass: rep.pass,
        rows: rep
            .rows
            .iter()
            .map(|r| LasalleRowEntry {
                row: r.row,
                rank: r.rank,
                full_rank: r.full_rank,
                active_kernel_trivial: r.active_kernel_trivial,
                witness: r.witness.as_ref().map(|z: &RatVector| strings(z)),
            })
            .collect(),
    }
}

fn verdict_line(v: &Verdict) -> String {
    match v {
        Verdict::RobustlyNonOscillatory => "verdict: RobustlyNonOscillatory".into(),
        Verdict::Inconclusive { gate } => format!("verdict: Inconclusive (failed gate: {gate})"),
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

fn text_report(c: &Certificate) -> String {
    let mut s = String::new();
    let n = &c.network;
    let r = &c.reduction;
    let _ = writeln!(s, "network sha256 {}", n.digest);
    let _ = writeln!(s, "species ({}): {}", n.n_species, n.species.join(" "));
    let _ = writeln!(s, "reactions ({}):", n.n_reactions);
    for line in &n.reactions {
        let _ = writeln!(s, "  {line}");
    }
    let _ = writeln!(s, "conservation laws (c = {}):", r.conserved);
    for row in &r.conservation_laws {
        let _ = writeln!(s, "  {}", vec_text(row));
    }
    let _ = writeln!(s, "nonnegative rays:");
    for row in &r.nonneg_rays {
        let _ = writeln!(s, "  {}", vec_text(row));
    }
    let _ = writeln!(
        s,
        "conservative: {}",
        if r.conservative { "yes" } else { "no" }
    );
    let _ = writeln!(
        s,
        "independent species: {} (reduced dimension {}, compound dimension {})",
        r.independent.join(","),
        r.reduced_dim,
        r.compound_dim
    );
    let _ = writeln!(s, "minimal siphons:");
    for sp in &c.siphons {
        let kind = if sp.trivial { "trivial" } else { "critical" };
        let _ = writeln!(s, "  {{{}}} {kind}", sp.species.join(","));
    }
    let _ = writeln!(s, "reaction-reactant pairs:");
    for (l, p) in c.ldi.pairs.iter().enumerate() {
        let _ = writeln!(
            s,
            "  {:>2} ({}, {}) v = {} w = {} wᵀv = {}",
            l + 1,
            p.reaction,
            p.species,
            vec_text(&p.v),
            vec_text(&p.w),
            p.gain
        );
    }
    match &c.lyapunov {
        Some(ly) => {
            let alg = match ly.algorithm {
                Algorithm::Iterative => "iterative",
                Algorithm::Closure => "closure",
            };
            let _ = writeln!(s, "Lyapunov function ({alg}, {} rows):", ly.rows.len());
            let _ = writeln!(s, "  V = {}", ly.expression);
            for row in &ly.rows {
                let _ = writeln!(s, "  {}", vec_text(row));
            }
            let _ = writeln!(s, "cone verification: {}", yes_no(ly.conic));
            let _ = writeln!(s, "projection verification: {}", yes_no(ly.discrete));
        }
        None => {
            let _ = writeln!(s, "Lyapunov function: none");
        }
    }
    if let Some(la) = &c.lasalle {
        let ranks: Vec<String> = la.rows.iter().map(|r| r.rank.to_string()).collect();
        let _ = writeln!(
            s,
            "LaSalle: {} (full rank {}; ranks {} of {})",
            yes_no(la.pass),
            yes_no(la.full_rank_pass),
            ranks.join(","),
            la.dim
        );
    }
    let _ = writeln!(s, "diagnostics:");
    for line in &c.diagnostics.log {
        let _ = writeln!(s, "  {line}");
    }
    let _ = writeln!(s, "{}", verdict_line(&c.verdict));
    s
}

/// Deterministic serialization of a certificate.
pub fn emit_report(cert: &Certificate, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out =
                serde_json::to_vec_pretty(cert).expect("certificate is always serializable");
            out.push(b'\n');
            out
        }
        ReportFormat::Text => text_report(cert).into_bytes(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::parse_network;

    #[test]
    fn decay_has_critical_siphon() {
        let net = parse_network("species A\nA -> 0\n").unwrap();
        let c = certify(&net, &CertifyOptions::default()).unwrap();
        assert_eq!(
            c.verdict,
            Verdict::Inconclusive {
                gate: "critical siphon {A}".into()
            }
        );
        assert!(!c.reduction.conservative);
    }

    #[test]
    fn isomerization_is_certified() {
        // one-dimensional reduced system, empty compound
        let net = parse_network("species A B\nA <-> B\n").unwrap();
        let c = certify(&net, &CertifyOptions::default()).unwrap();
        assert_eq!(c.verdict, Verdict::RobustlyNonOscillatory);
        assert_eq!(c.reduction.compound_dim, 0);
    }

    #[test]
    fn unknown_independent_species() {
        let net = parse_network("species A B\nA -> B\n").unwrap();
        let opts = CertifyOptions {
            independent: Some(vec!["Z".into()]),
            ..Default::default()
        };
        assert_eq!(
            certify(&net, &opts).unwrap_err(),
            CertifyError::Reduction(ReductionError::UnknownSpecies("Z".into()))
        );
    }

    #[test]
    fn json_round_trip() {
        let net = parse_network("species A B C\nA + B <-> C\n").unwrap();
        let c = certify(&net, &CertifyOptions::default()).unwrap();
        let bytes = emit_report(&c, ReportFormat::Json);
        let back: Certificate = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(emit_report(&back, ReportFormat::Json), bytes);
    }
}
