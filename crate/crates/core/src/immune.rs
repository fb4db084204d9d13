//! Reduced idiotypic network.
//!
//! Each control tick the network scores every antibody against the
//! presenting antigens (`S1`), picks the best match α, lets α suppress and
//! stimulate the competing antibodies through the idiotope matrix (`S2`,
//! `S3`), folds everything into a global strength `Sg` and integrates the
//! clone concentrations. The antibody with the highest normalised
//! concentration, β, is the one executed.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::AntigenSet;
use crate::{N_ANTIBODIES as N, N_ANTIGENS as L};

/// Antibody-indexed vector.
pub type Strengths = [f64; N];

/// Weight of the dominant antigen in the antigen array.
pub const DOMINANT_WEIGHT: f64 = 2.0;
/// Weight of every other presenting antigen.
pub const SECONDARY_WEIGHT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmuneConfig {
    /// Rate constant.
    pub b: f64,
    /// Suppression/stimulation balance.
    pub k1: f64,
    /// Death rate.
    pub k2: f64,
}

impl Default for ImmuneConfig {
    fn default() -> Self {
        ImmuneConfig {
            b: 80.0,
            k1: 0.65,
            k2: 0.05,
        }
    }
}

impl ImmuneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) {
            return Err(Error::Config(format!("b must be > 0, got {}", self.b)));
        }
        if !(0.0..=1.0).contains(&self.k1) {
            return Err(Error::Config(format!(
                "k1 must be in [0, 1], got {}",
                self.k1
            )));
        }
        if !(self.k2 > 0.0 && self.k2 < 1.0) {
            return Err(Error::Config(format!(
                "k2 must be in (0, 1), got {}",
                self.k2
            )));
        }
        Ok(())
    }
}

/// Learned antibody-to-antigen match strengths, every element in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParatopeMatrix([[f64; L]; N]);

impl ParatopeMatrix {
    /// Builds a matrix, clamping every element into `[0, 1]`.
    pub fn new(mut rows: [[f64; L]; N]) -> Self {
        for v in rows.iter_mut().flatten() {
            *v = v.clamp(0.0, 1.0);
        }
        ParatopeMatrix(rows)
    }

    pub fn zeros() -> Self {
        ParatopeMatrix([[0.0; L]; N])
    }

    pub fn get(&self, antibody: usize, antigen: usize) -> f64 {
        self.0[antibody][antigen]
    }

    /// Sets an element, clamped into `[0, 1]`.
    pub fn set(&mut self, antibody: usize, antigen: usize, value: f64) {
        self.0[antibody][antigen] = value.clamp(0.0, 1.0);
    }

    pub fn row(&self, antibody: usize) -> &[f64; L] {
        &self.0[antibody]
    }

    pub fn rows(&self) -> &[[f64; L]; N] {
        &self.0
    }

    pub fn column(&self, antigen: usize) -> Strengths {
        std::array::from_fn(|i| self.0[i][antigen])
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_table(text, "paratope matrix").map(ParatopeMatrix::new)
    }

    pub fn to_text(&self) -> String {
        format_table(&self.0, 6)
    }
}

/// Fixed disallowed antibody-antigen combinations. Elements are 0, 0.5 or 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdiotopeMatrix([[f64; L]; N]);

/// The canonical idiotope table shipped with the crate.
pub const CANONICAL_IDIOTOPE: &str = include_str!("../data/idiotope.txt");

impl IdiotopeMatrix {
    /// The canonical idiotope used by every controller in the benchmark.
    pub fn canonical() -> Self {
        Self::parse(CANONICAL_IDIOTOPE).expect("shipped idiotope table is valid")
    }

    pub fn zeros() -> Self {
        IdiotopeMatrix([[0.0; L]; N])
    }

    pub fn from_rows(rows: [[f64; L]; N]) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 && v != 0.5 && v != 1.0 {
                    return Err(Error::Config(format!(
                        "idiotope element [{i}][{j}] = {v}, expected 0, 0.5 or 1"
                    )));
                }
            }
        }
        Ok(IdiotopeMatrix(rows))
    }

    /// Parses a 16×8 whitespace table; `#` starts a comment. An optional
    /// header row of antigen indices and a leading antibody index column
    /// are accepted.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_rows(parse_table(text, "idiotope matrix")?)
    }

    pub fn get(&self, antibody: usize, antigen: usize) -> f64 {
        self.0[antibody][antigen]
    }

    pub fn rows(&self) -> &[[f64; L]; N] {
        &self.0
    }

    pub fn to_text(&self) -> String {
        format_table(&self.0, 2)
    }
}

fn parse_table(text: &str, what: &'static str) -> Result<[[f64; L]; N]> {
    let mut rows = Vec::with_capacity(N);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                what,
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        let values = match values.len() {
            // header row "0 1 .. 7"
            n if n == L && rows.is_empty() && is_header(&values) => continue,
            n if n == L => values,
            n if n == L + 1 => values[1..].to_vec(),
            n => {
                return Err(Error::Parse {
                    what,
                    line: lineno + 1,
                    msg: format!("expected {L} values, found {n}"),
                })
            }
        };
        if rows.len() == N {
            return Err(Error::Parse {
                what,
                line: lineno + 1,
                msg: format!("more than {N} rows"),
            });
        }
        let mut row = [0.0; L];
        row.copy_from_slice(&values);
        rows.push(row);
    }
    if rows.len() != N {
        return Err(Error::Parse {
            what,
            line: text.lines().count(),
            msg: format!("expected {N} rows, found {}", rows.len()),
        });
    }
    let mut out = [[0.0; L]; N];
    out.copy_from_slice(&rows);
    Ok(out)
}

fn is_header(values: &[f64]) -> bool {
    values.iter().enumerate().all(|(j, &v)| v == j as f64) && values.iter().any(|&v| v > 1.0)
}

fn format_table(rows: &[[f64; L]; N], precision: usize) -> String {
    let mut out = String::from("#");
    for j in 0..L {
        let _ = write!(out, "\t{j}");
    }
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in row {
            let _ = write!(out, "\t{v:.precision$}");
        }
        out.push('\n');
    }
    out
}

/// No antigen is presenting; the caller must fall back to a default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AntigenError {
    #[error("no antigen is presenting")]
    NoAntigen,
    #[error("dominant antigen {0} is not presenting")]
    DominantNotPresenting(usize),
}

/// Presenting antigens, the dominant one and the per-antibody antigen array.
#[derive(Debug, Clone, PartialEq)]
pub struct AntigenReport {
    pub presenting: AntigenSet,
    pub dominant: usize,
    /// `g[i][j]`: weight of antigen `j` for antibody `i`.
    pub g: [[f64; L]; N],
}

/// Builds the antigen array: weight 2 for the dominant antigen where the
/// antibody has a nonzero match to it (0 otherwise), 0.25 for every other
/// presenting antigen, 0 for absent antigens.
pub fn build_antigen_array(
    presenting: AntigenSet,
    dominant: usize,
    p: &ParatopeMatrix,
) -> std::result::Result<AntigenReport, AntigenError> {
    if presenting.is_empty() {
        return Err(AntigenError::NoAntigen);
    }
    if !presenting.contains(dominant) {
        return Err(AntigenError::DominantNotPresenting(dominant));
    }
    let mut g = [[0.0; L]; N];
    for (i, row) in g.iter_mut().enumerate() {
        for j in presenting.iter() {
            row[j] = if j != dominant {
                SECONDARY_WEIGHT
            } else if p.get(i, j) > 0.0 {
                DOMINANT_WEIGHT
            } else {
                0.0
            };
        }
    }
    Ok(AntigenReport {
        presenting,
        dominant,
        g,
    })
}

/// Competing antibodies: those with a nonzero match to at least one
/// presenting antigen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompetingSet([bool; N]);

impl CompetingSet {
    pub fn from_presenting(p: &ParatopeMatrix, presenting: AntigenSet) -> Self {
        CompetingSet(std::array::from_fn(|i| {
            presenting.iter().any(|j| p.get(i, j) > 0.0)
        }))
    }

    pub fn all() -> Self {
        CompetingSet([true; N])
    }

    pub fn from_flags(flags: [bool; N]) -> Self {
        CompetingSet(flags)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i]
    }

    /// `H_i` as 0 or 1.
    pub fn weight(&self, i: usize) -> f64 {
        if self.0[i] {
            1.0
        } else {
            0.0
        }
    }
}

/// Index of the largest element; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Strength of match to the presenting antigens and the best-matched
/// antibody α.
pub fn compute_alpha(p: &ParatopeMatrix, report: &AntigenReport) -> (usize, Strengths) {
    let s1: Strengths = std::array::from_fn(|i| {
        p.row(i)
            .iter()
            .zip(report.g[i].iter())
            .map(|(pv, gv)| pv * gv)
            .sum()
    });
    (argmax(&s1), s1)
}

/// Suppression of each competing antibody by α: α's paratope matched
/// against the antibody's idiotope, scaled by both concentrations.
pub fn compute_suppression(
    p: &ParatopeMatrix,
    idiotope: &IdiotopeMatrix,
    h: &CompetingSet,
    c: &Strengths,
    alpha: usize,
) -> Strengths {
    let pa = p.row(alpha);
    std::array::from_fn(|i| {
        let overlap: f64 = pa
            .iter()
            .zip(idiotope.rows()[i].iter())
            .map(|(pv, iv)| pv * iv)
            .sum();
        overlap * h.weight(i) * c[i] * c[alpha]
    })
}

/// Stimulation of each competing antibody: α's idiotope matched against the
/// antibody's paratope complement, scaled by both concentrations.
pub fn compute_stimulation(
    p: &ParatopeMatrix,
    idiotope: &IdiotopeMatrix,
    h: &CompetingSet,
    c: &Strengths,
    alpha: usize,
) -> Strengths {
    let ia = &idiotope.rows()[alpha];
    std::array::from_fn(|i| {
        let overlap: f64 = p
            .row(i)
            .iter()
            .zip(ia.iter())
            .map(|(pv, iv)| (1.0 - pv) * iv)
            .sum();
        overlap * h.weight(i) * c[i] * c[alpha]
    })
}

pub fn compute_global_strength(
    s1: &Strengths,
    s2: &Strengths,
    s3: &Strengths,
    k1: f64,
) -> Strengths {
    std::array::from_fn(|i| s1[i] - k1 * s2[i] + s3[i])
}

/// Concentrations after an update: the floored values and their
/// sum-to-one normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationVector {
    pub raw: Strengths,
    pub norm: Strengths,
}

impl ConcentrationVector {
    /// Every antibody starts at concentration 1.
    pub fn initial() -> Self {
        ConcentrationVector {
            raw: [1.0; N],
            norm: [1.0 / N as f64; N],
        }
    }

    /// Normalises `raw`; an all-zero vector is reset to the initial state.
    /// The flag reports whether a reset happened.
    pub fn normalize(raw: Strengths) -> (Self, bool) {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return (Self::initial(), true);
        }
        let norm = std::array::from_fn(|i| raw[i] / total);
        (ConcentrationVector { raw, norm }, false)
    }
}

/// One Euler step of the concentration dynamics, floored at zero and
/// normalised. Returns the new vector and whether the all-zero reset fired.
pub fn update_concentrations(
    c: &Strengths,
    sg: &Strengths,
    cfg: &ImmuneConfig,
) -> (ConcentrationVector, bool) {
    let raw = std::array::from_fn(|i| (c[i] + cfg.b * sg[i] - cfg.k2 * c[i]).max(0.0));
    ConcentrationVector::normalize(raw)
}

/// The antibody with the highest normalised concentration.
pub fn select_beta(c_norm: &Strengths) -> usize {
    argmax(c_norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub alpha: usize,
    pub beta: usize,
    pub s1: Strengths,
    pub s2: Strengths,
    pub s3: Strengths,
    pub sg: Strengths,
    pub idiotypic_difference: bool,
    /// The concentration vector collapsed to zero and was reset.
    pub reset: bool,
}

/// Total clone count held constant across the repertoire.
pub const CLONE_TOTAL: f64 = N as f64;

/// Stateful network: owns the concentrations carried between ticks.
///
/// The carried concentrations are clone counts: the previous tick's
/// normalised vector scaled back to a total of [`CLONE_TOTAL`], so every
/// antibody starts at 1.00 and the mean stays 1.00. These counts feed
/// suppression, stimulation and the next update.
#[derive(Debug, Clone)]
pub struct ImmuneNetwork {
    cfg: ImmuneConfig,
    idiotope: IdiotopeMatrix,
    state: Strengths,
    last: ConcentrationVector,
    resets: u64,
}

impl ImmuneNetwork {
    pub fn new(cfg: ImmuneConfig, idiotope: IdiotopeMatrix) -> Self {
        ImmuneNetwork {
            cfg,
            idiotope,
            state: [1.0; N],
            last: ConcentrationVector::initial(),
            resets: 0,
        }
    }

    pub fn config(&self) -> &ImmuneConfig {
        &self.cfg
    }

    pub fn idiotope(&self) -> &IdiotopeMatrix {
        &self.idiotope
    }

    /// Concentrations as fed into the next tick.
    pub fn state(&self) -> &Strengths {
        &self.state
    }

    /// Result of the most recent update.
    pub fn concentrations(&self) -> &ConcentrationVector {
        &self.last
    }

    pub fn resets(&self) -> u64 {
        self.resets
    }

    pub fn step(&mut self, p: &ParatopeMatrix, report: &AntigenReport) -> SelectionOutcome {
        let (alpha, s1) = compute_alpha(p, report);
        let h = CompetingSet::from_presenting(p, report.presenting);
        let s2 = compute_suppression(p, &self.idiotope, &h, &self.state, alpha);
        let s3 = compute_stimulation(p, &self.idiotope, &h, &self.state, alpha);
        let sg = compute_global_strength(&s1, &s2, &s3, self.cfg.k1);
        let (c, reset) = update_concentrations(&self.state, &sg, &self.cfg);
        if reset {
            self.resets += 1;
        }
        self.state = c.norm.map(|v| v * CLONE_TOTAL);
        self.last = c;
        let beta = select_beta(&c.norm);
        SelectionOutcome {
            alpha,
            beta,
            s1,
            s2,
            s3,
            sg,
            idiotypic_difference: alpha != beta,
            reset,
        }
    }
}
