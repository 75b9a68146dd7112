//! Reaction networks and their line-oriented text format.
//!
//! ```text
//! # comment
//! species L Rc K S C P
//! L + Rc <-> K
//! S + K <-> C
//! C -> P + K
//! P -> S
//! ```
//!
//! A reaction line may carry a `label:` prefix. `0` denotes the empty complex.
//! Reversible arrows expand into two reactions, forward first.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::ratlinalg::{rat, RatMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}: unknown species `{name}`")]
    UnknownSpecies { line: usize, name: String },
    #[error("line {line}: duplicate species `{name}`")]
    DuplicateSpecies { line: usize, name: String },
    #[error("line {line}: reactants and products are identical")]
    NullReaction { line: usize },
    #[error("network has no reactions")]
    NoReactions,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// Nonnegative integer combination of species, keyed by species index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Complex(BTreeMap<usize, u32>);

impl Complex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, species: usize, coeff: u32) {
        if coeff > 0 {
            *self.0.entry(species).or_insert(0) += coeff;
        }
    }

    pub fn coeff(&self, species: usize) -> u32 {
        self.0.get(&species).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Species with a positive coefficient, in index order.
    pub fn species(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0.iter().map(|(&s, &c)| (s, c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reaction {
    pub label: String,
    pub reactants: Complex,
    pub products: Complex,
}

/// A reaction-reactant pair `(j, i)`: species `i` is consumed by reaction `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReactantPair {
    pub reaction: usize,
    pub species: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
}

impl Network {
    /// Assemble a network from already-validated parts.
    pub fn new(species: Vec<String>, reactions: Vec<Reaction>) -> Result<Self, ParseError> {
        let mut seen = HashMap::new();
        for (i, s) in species.iter().enumerate() {
            if seen.insert(s.clone(), i).is_some() {
                return Err(ParseError::DuplicateSpecies {
                    line: 0,
                    name: s.clone(),
                });
            }
        }
        if reactions.is_empty() {
            return Err(ParseError::NoReactions);
        }
        Ok(Network {
            species: species
                .into_iter()
                .enumerate()
                .map(|(index, name)| Species { name, index })
                .collect(),
            reactions,
        })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn species_name(&self, i: usize) -> &str {
        &self.species[i].name
    }

    /// `Γ_ij = β_ij − α_ij`, one column per reaction.
    pub fn stoichiometry_matrix(&self) -> RatMatrix {
        let mut g = RatMatrix::zeros(self.num_species(), self.num_reactions());
        for (j, r) in self.reactions.iter().enumerate() {
            for (i, c) in r.products.species() {
                g[(i, j)] += rat(c as i64);
            }
            for (i, c) in r.reactants.species() {
                g[(i, j)] -= rat(c as i64);
            }
        }
        g
    }

    /// Reaction-reactant pairs in reaction order, then species order.
    pub fn reactant_pairs(&self) -> Vec<ReactantPair> {
        self.reactions
            .iter()
            .enumerate()
            .flat_map(|(j, r)| {
                r.reactants.species().map(move |(i, _)| ReactantPair {
                    reaction: j,
                    species: i,
                })
            })
            .collect()
    }

    /// Canonical text form; parsing it yields an identical network.
    pub fn to_text(&self) -> String {
        let mut out = String::from("species");
        for s in &self.species {
            out.push(' ');
            out.push_str(&s.name);
        }
        out.push('\n');
        for r in &self.reactions {
            let _ = writeln!(
                out,
                "{}: {} -> {}",
                r.label,
                self.complex_text(&r.reactants),
                self.complex_text(&r.products)
            );
        }
        out
    }

    pub fn complex_text(&self, c: &Complex) -> String {
        if c.is_empty() {
            return "0".into();
        }
        c.species()
            .map(|(i, k)| {
                if k == 1 {
                    self.species[i].name.clone()
                } else {
                    format!("{k} {}", self.species[i].name)
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn reaction_text(&self, j: usize) -> String {
        let r = &self.reactions[j];
        format!(
            "{} -> {}",
            self.complex_text(&r.reactants),
            self.complex_text(&r.products)
        )
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u32),
    Plus,
    Arrow,
    BiArrow,
    Colon,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: &str| ParseError::Syntax {
        line: lineno,
        col: col + 1,
        msg: msg.to_string(),
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' {
            toks.push((Tok::Plus, i));
            i += 1;
        } else if c == ':' {
            toks.push((Tok::Colon, i));
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            toks.push((Tok::Arrow, i));
            i += 2;
        } else if c == '<' && chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
            toks.push((Tok::BiArrow, i));
            i += 3;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && is_ident_start(chars[i]) {
                return Err(err(
                    i,
                    "coefficient must be separated from the species name by whitespace",
                ));
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse()
                .map_err(|_| err(start, "coefficient out of range"))?;
            toks.push((Tok::Int(v), start));
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else {
            return Err(err(i, &format!("unexpected character `{c}`")));
        }
    }
    Ok(toks)
}

struct ParsedComplex {
    terms: Vec<(u32, String, usize)>,
}

fn parse_complex(
    toks: &[(Tok, usize)],
    lineno: usize,
    end_col: usize,
) -> Result<ParsedComplex, ParseError> {
    let err = |col: usize, msg: &str| ParseError::Syntax {
        line: lineno,
        col: col + 1,
        msg: msg.to_string(),
    };
    if toks.is_empty() {
        return Err(err(end_col, "expected a complex"));
    }
    if let [(Tok::Int(0), _)] = toks {
        return Ok(ParsedComplex { terms: vec![] });
    }
    let mut terms = Vec::new();
    let mut i = 0;
    loop {
        let (coeff, name_pos) = match toks.get(i) {
            Some((Tok::Int(0), col)) => return Err(err(*col, "zero coefficient")),
            Some((Tok::Int(k), _)) => (*k, i + 1),
            _ => (1, i),
        };
        match toks.get(name_pos) {
            Some((Tok::Ident(name), col)) => terms.push((coeff, name.clone(), *col)),
            Some((_, col)) => return Err(err(*col, "expected a species name")),
            None => return Err(err(end_col, "expected a species name")),
        }
        i = name_pos + 1;
        match toks.get(i) {
            None => break,
            Some((Tok::Plus, _)) => i += 1,
            Some((_, col)) => return Err(err(*col, "expected `+`")),
        }
    }
    Ok(ParsedComplex { terms })
}

/// Parse the network text format.
pub fn parse_network(text: &str) -> Result<Network, ParseError> {
    let mut declared: Option<Vec<String>> = None;
    let mut species: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut reactions: Vec<Reaction> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let lineno = ln + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("species") {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                if declared.is_some() || !reactions.is_empty() {
                    return Err(ParseError::Syntax {
                        line: lineno,
                        col: 1,
                        msg: "`species` line must come first and only once".into(),
                    });
                }
                let names: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                for name in &names {
                    if !name.starts_with(is_ident_start) || !name.chars().all(is_ident_char) {
                        return Err(ParseError::Syntax {
                            line: lineno,
                            col: line.find(name.as_str()).unwrap_or(0) + 1,
                            msg: format!("invalid species name `{name}`"),
                        });
                    }
                    if index.insert(name.clone(), species.len()).is_some() {
                        return Err(ParseError::DuplicateSpecies {
                            line: lineno,
                            name: name.clone(),
                        });
                    }
                    species.push(name.clone());
                }
                declared = Some(names);
                continue;
            }
        }

        let toks = tokenize(line, lineno)?;
        let end_col = line.chars().count();
        let (label, body) = match toks.as_slice() {
            [(Tok::Ident(l), _), (Tok::Colon, _), rest @ ..] => (Some(l.clone()), rest),
            _ => (None, toks.as_slice()),
        };
        let arrows: Vec<usize> = body
            .iter()
            .enumerate()
            .filter(|(_, (t, _))| matches!(t, Tok::Arrow | Tok::BiArrow))
            .map(|(i, _)| i)
            .collect();
        let arrow = match arrows.as_slice() {
            [a] => *a,
            [] => {
                return Err(ParseError::Syntax {
                    line: lineno,
                    col: 1,
                    msg: "expected `->` or `<->`".into(),
                })
            }
            [_, second, ..] => {
                return Err(ParseError::Syntax {
                    line: lineno,
                    col: body[*second].1 + 1,
                    msg: "more than one arrow".into(),
                })
            }
        };
        let reversible = body[arrow].0 == Tok::BiArrow;
        let lhs = parse_complex(&body[..arrow], lineno, body[arrow].1)?;
        let rhs = parse_complex(&body[arrow + 1..], lineno, end_col)?;
        if lhs.terms.is_empty() && rhs.terms.is_empty() {
            return Err(ParseError::Syntax {
                line: lineno,
                col: body[arrow].1 + 1,
                msg: "both sides are the empty complex".into(),
            });
        }

        let mut resolve = |pc: &ParsedComplex| -> Result<Complex, ParseError> {
            let mut c = Complex::new();
            for (k, name, _) in &pc.terms {
                let i = match index.get(name) {
                    Some(&i) => i,
                    None if declared.is_some() => {
                        return Err(ParseError::UnknownSpecies {
                            line: lineno,
                            name: name.clone(),
                        })
                    }
                    None => {
                        index.insert(name.clone(), species.len());
                        species.push(name.clone());
                        species.len() - 1
                    }
                };
                c.add(i, *k);
            }
            Ok(c)
        };
        let reactants = resolve(&lhs)?;
        let products = resolve(&rhs)?;
        if reactants == products {
            return Err(ParseError::NullReaction { line: lineno });
        }

        let next = reactions.len();
        if reversible {
            let (fwd, bwd) = match &label {
                Some(l) => (format!("{l}_fwd"), format!("{l}_rev")),
                None => (format!("R{}", next + 1), format!("R{}", next + 2)),
            };
            reactions.push(Reaction {
                label: fwd,
                reactants: reactants.clone(),
                products: products.clone(),
            });
            reactions.push(Reaction {
                label: bwd,
                reactants: products,
                products: reactants,
            });
        } else {
            reactions.push(Reaction {
                label: label.unwrap_or_else(|| format!("R{}", next + 1)),
                reactants,
                products,
            });
        }
    }

    if species.is_empty() {
        return Err(ParseError::Syntax {
            line: 1,
            col: 1,
            msg: "no species".into(),
        });
    }
    Network::new(species, reactions)
}
