#![allow(dead_code)]

use nonosc::compound::{rank_one_compound_projection, rank_one_projection, second_compound};
use nonosc::netmodel::{parse_network, Network};
use nonosc::ratlinalg::{rat, RatMatrix, RatVector};
use nonosc::stoich::{
    build_reduction, conservation_laws, rank_one_matrices, species_indices, ReducedSystem,
};

pub const PTM_OPEN: &str = "tests/data/ptm_open.net";
pub const PTM_INHIBITOR: &str = "tests/data/ptm_inhibitor.net";
pub const DECAY: &str = "tests/data/decay.net";

pub const PTM_OPEN_INDEPENDENT: [&str; 3] = ["L", "K", "P"];
/// Coordinate order in which the inhibitor Jacobian has zeros at (2,3) and (3,2).
pub const PTM_INHIBITOR_INDEPENDENT: [&str; 3] = ["C", "KI", "P"];

pub fn fixture(path: &str) -> String {
    let full = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(path);
    std::fs::read_to_string(full).unwrap()
}

pub fn network(path: &str) -> Network {
    parse_network(&fixture(path)).unwrap()
}

pub fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

pub struct Instance {
    pub net: Network,
    pub rs: ReducedSystem,
    pub a: Vec<RatMatrix>,
    pub a2: Vec<RatMatrix>,
    pub p1: Vec<RatMatrix>,
    pub p2: Vec<RatMatrix>,
}

pub fn instance(path: &str, independent: &[&str]) -> Instance {
    let net = network(path);
    let g = net.stoichiometry_matrix();
    let basis = conservation_laws(&g);
    let idx = species_indices(&net, &names(independent)).unwrap();
    let rs = build_reduction(&net, &g, &basis, Some(&idx)).unwrap();
    let a = rank_one_matrices(&rs);
    let a2 = a.iter().map(second_compound).collect();
    let p1 = rs
        .factors
        .iter()
        .map(|f| rank_one_projection(&f.v, &f.w).unwrap())
        .collect();
    let p2 = rs
        .factors
        .iter()
        .map(|f| rank_one_compound_projection(&f.v, &f.w).unwrap())
        .collect();
    Instance {
        net,
        rs,
        a,
        a2,
        p1,
        p2,
    }
}

pub fn m(rows: &[[i64; 3]]) -> RatMatrix {
    let r: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
    RatMatrix::from_i64(&r)
}

pub fn v(xs: &[i64]) -> RatVector {
    xs.iter().map(|&x| rat(x)).collect()
}

/// Rank-one matrices of the open phosphotransfer example.
pub fn known_a() -> Vec<RatMatrix> {
    vec![
        m(&[[-1, 0, 0], [1, 0, 0], [0, 0, 0]]),
        m(&[[-1, 0, 0], [1, 0, 0], [0, 0, 0]]),
        m(&[[0, 1, 0], [0, -1, 0], [0, 0, 0]]),
        m(&[[0, 0, 0], [0, -1, 0], [0, 0, 0]]),
        m(&[[0, 0, 0], [-1, -1, 1], [0, 0, 0]]),
        m(&[[0, 0, 0], [-1, -1, 0], [0, 0, 0]]),
        m(&[[0, 0, 0], [-1, -1, 0], [-1, -1, 0]]),
        m(&[[0, 0, 0], [0, 0, 0], [0, 0, -1]]),
    ]
}

/// Their second additive compounds.
pub fn known_a2() -> Vec<RatMatrix> {
    vec![
        m(&[[-1, 0, 0], [0, -1, 0], [0, 1, 0]]),
        m(&[[-1, 0, 0], [0, -1, 0], [0, 1, 0]]),
        m(&[[-1, 0, 0], [0, 0, 1], [0, 0, -1]]),
        m(&[[-1, 0, 0], [0, 0, 0], [0, 0, -1]]),
        m(&[[-1, 1, 0], [0, 0, 0], [0, -1, -1]]),
        m(&[[-1, 0, 0], [0, 0, 0], [0, -1, -1]]),
        m(&[[-1, 0, 0], [-1, 0, 0], [1, -1, -1]]),
        m(&[[0, 0, 0], [0, -1, 0], [0, 0, -1]]),
    ]
}

/// Transform for independent species L, K, P.
pub fn known_t() -> RatMatrix {
    RatMatrix::from_i64(&[
        &[1, 0, 1, 0, 1, 0],
        &[0, 1, 1, 0, 1, 0],
        &[0, 0, 0, 1, 1, 1],
        &[1, 0, 0, 0, 0, 0],
        &[0, 0, 1, 0, 0, 0],
        &[0, 0, 0, 0, 0, 1],
    ])
}

/// Stoichiometry of the open example, derived by hand from its reactions.
pub fn expected_gamma() -> RatMatrix {
    RatMatrix::from_i64(&[
        &[-1, 1, 0, 0, 0, 0],
        &[-1, 1, 0, 0, 0, 0],
        &[1, -1, -1, 1, 1, 0],
        &[0, 0, -1, 1, 0, 1],
        &[0, 0, 1, -1, -1, 0],
        &[0, 0, 0, 0, 1, -1],
    ])
}

/// Rows of the known second-compound Lyapunov function for the open example.
pub fn known_v_open() -> Vec<RatVector> {
    let base = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 1, 1], [-1, 1, 0]];
    base.iter()
        .flat_map(|r| [v(r), v(&[-r[0], -r[1], -r[2]])])
        .collect()
}

/// Rows of the known Lyapunov function for the inhibitor example.
pub fn known_v_inhibitor() -> Vec<RatVector> {
    let base = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 0, -1]];
    base.iter()
        .flat_map(|r| [v(r), v(&[-r[0], -r[1], -r[2]])])
        .collect()
}

use std::collections::BTreeSet;

use nonosc::netmodel::{Complex, Reaction};
use rand::Rng;

/// Random network with `n` species and `r` reactions; complexes hold
/// up to two species with coefficients 1 or 2.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, r: usize) -> Network {
    let species: Vec<String> = (0..n).map(|i| format!("X{i}")).collect();
    let complex = |rng: &mut R| {
        let mut c = Complex::new();
        let k = rng.gen_range(0..=2);
        for _ in 0..k {
            c.add(rng.gen_range(0..n), rng.gen_range(1..=2));
        }
        c
    };
    let mut reactions = Vec::new();
    while reactions.len() < r {
        let reactants = complex(rng);
        let products = complex(rng);
        if reactants == products {
            continue;
        }
        reactions.push(Reaction {
            label: format!("R{}", reactions.len() + 1),
            reactants,
            products,
        });
    }
    Network::new(species, reactions).unwrap()
}

/// Every subset, checked against the siphon definition directly.
pub fn brute_force_minimal_siphons(net: &Network) -> Vec<BTreeSet<usize>> {
    let n = net.num_species();
    let is_siphon = |mask: u32| {
        net.reactions().iter().all(|r| {
            let produces = r.products.species().any(|(i, _)| mask >> i & 1 == 1);
            let consumes = r.reactants.species().any(|(i, _)| mask >> i & 1 == 1);
            !produces || consumes
        })
    };
    let siphons: Vec<u32> = (1u32..1 << n).filter(|&m| is_siphon(m)).collect();
    let mut out: Vec<BTreeSet<usize>> = siphons
        .iter()
        .filter(|&&s| !siphons.iter().any(|&o| o != s && o & s == o))
        .map(|&s| (0..n).filter(|i| s >> i & 1 == 1).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Second compound from the linear term of the 2x2 minors of `I + εA`.
pub fn compound2_by_minors(a: &RatMatrix) -> RatMatrix {
    use nonosc::ratlinalg::Rational;
    let n = a.rows();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let d = |i: usize, j: usize| if i == j { rat(1) } else { rat(0) };
    let mut out = RatMatrix::zeros(pairs.len(), pairs.len());
    for (r, &(i1, i2)) in pairs.iter().enumerate() {
        for (c, &(j1, j2)) in pairs.iter().enumerate() {
            let lin: Rational = d(i1, j1) * &a[(i2, j2)] + &a[(i1, j1)] * d(i2, j2)
                - d(i1, j2) * &a[(i2, j1)]
                - &a[(i1, j2)] * d(i2, j1);
            out[(r, c)] = lin;
        }
    }
    out
}

/// Positive state `[L, Rc, K, S, C, P]` of the open example with all totals 15.
pub fn random_open_state<R: Rng>(rng: &mut R) -> Vec<f64> {
    let c = rng.gen_range(0.5..14.0);
    let k = rng.gen_range(0.05..0.95) * (15.0 - c);
    let p = rng.gen_range(0.05..0.95) * (15.0 - c);
    let l = 15.0 - k - c;
    vec![l, l, k, 15.0 - c - p, c, p]
}
