//! Dismantling strategies and evaluation metrics: one-pass and adaptive
//! removal over any node-scoring method, the NGCC curve, the normalized
//! attack-set size rho, and the trapezoidal curve area.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centrality;
use crate::graph::{Graph, NodeMask};
use crate::model::{ablation_scores, nirm_rank, IntermediateScore, ModelParameters};

#[derive(Debug, Error, PartialEq)]
pub enum DismantleError {
    #[error("unknown method '{0}'; valid methods: {methods}", methods = Method::NAMES.join(", "))]
    UnknownMethod(String),
    #[error("method '{method}' does not support the {strategy} strategy")]
    UnsupportedStrategy { method: Method, strategy: Strategy },
    #[error("method '{0}' requires trained model parameters")]
    ModelRequired(Method),
    #[error("theta {0} outside (0, 1]")]
    InvalidTheta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    OnePass,
    Adaptive,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::OnePass => f.write_str("one-pass"),
            Strategy::Adaptive => f.write_str("adaptive"),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "one-pass" | "onepass" | "one_pass" => Ok(Strategy::OnePass),
            "adaptive" => Ok(Strategy::Adaptive),
            other => Err(format!("unknown strategy '{other}' (expected one-pass|adaptive)")),
        }
    }
}

/// Ranking method used to pick removal targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Nirm,
    NirmIs,
    NirmLs,
    NirmGs,
    Dc,
    Ci,
    Bc,
    Cc,
    Hc,
    Pc,
    Ec,
    Corehd,
}

impl Method {
    pub const NAMES: [&'static str; 12] = [
        "nirm", "nirm-is", "nirm-ls", "nirm-gs", "dc", "ci", "bc", "cc", "hc", "pc", "ec",
        "corehd",
    ];

    pub fn needs_model(&self) -> bool {
        matches!(self, Method::Nirm | Method::NirmIs | Method::NirmLs | Method::NirmGs)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Nirm => "nirm",
            Method::NirmIs => "nirm-is",
            Method::NirmLs => "nirm-ls",
            Method::NirmGs => "nirm-gs",
            Method::Dc => "dc",
            Method::Ci => "ci",
            Method::Bc => "bc",
            Method::Cc => "cc",
            Method::Hc => "hc",
            Method::Pc => "pc",
            Method::Ec => "ec",
            Method::Corehd => "corehd",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = DismantleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nirm" => Ok(Method::Nirm),
            "nirm-is" => Ok(Method::NirmIs),
            "nirm-ls" => Ok(Method::NirmLs),
            "nirm-gs" => Ok(Method::NirmGs),
            "dc" => Ok(Method::Dc),
            "ci" => Ok(Method::Ci),
            "bc" => Ok(Method::Bc),
            "cc" => Ok(Method::Cc),
            "hc" => Ok(Method::Hc),
            "pc" => Ok(Method::Pc),
            "ec" => Ok(Method::Ec),
            "corehd" => Ok(Method::Corehd),
            other => Err(DismantleError::UnknownMethod(other.to_string())),
        }
    }
}

/// An ordered removal sequence plus the NGCC after each removal.
///
/// `ngcc[0]` is the initial GCC fraction; the curve is non-increasing, the
/// final value is at or below the threshold, and the value before the last
/// removal is above it (the set is minimal with respect to its own order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DismantleTrace {
    /// Node count of the original graph (the NGCC denominator).
    pub n: usize,
    pub removal_order: Vec<usize>,
    pub ngcc: Vec<f64>,
    /// Attack-set size over the original node count.
    pub rho: f64,
    /// Trapezoidal area under the (percent removed, percent NGCC) curve.
    pub area: f64,
}

impl DismantleTrace {
    fn from_parts(n: usize, removal_order: Vec<usize>, ngcc: Vec<f64>) -> Self {
        let rho = if n == 0 {
            0.0
        } else {
            removal_order.len() as f64 / n as f64
        };
        let mut trace = DismantleTrace {
            n,
            removal_order,
            ngcc,
            rho,
            area: 0.0,
        };
        trace.area = ngcc_curve_area(&trace);
        trace
    }
}

/// Trapezoidal integral of NGCC (percent) against the removed fraction
/// (percent) over the recorded curve.
pub fn ngcc_curve_area(trace: &DismantleTrace) -> f64 {
    if trace.ngcc.len() < 2 || trace.n == 0 {
        return 0.0;
    }
    let dx = 100.0 / trace.n as f64;
    trace
        .ngcc
        .windows(2)
        .map(|w| dx * (w[0] * 100.0 + w[1] * 100.0) / 2.0)
        .sum()
}

fn ranked_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn argmax_alive(scores: &[f64], mask: &NodeMask) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in mask.alive_nodes() {
        match best {
            None => best = Some(i),
            Some(b) if scores[i] > scores[b] => best = Some(i),
            _ => {}
        }
    }
    best
}

/// Removes nodes in descending score order (ties toward the lower id) until
/// `NGCC <= theta`.
pub fn one_pass(g: &Graph, scores: &[f64], theta: f64) -> DismantleTrace {
    assert_eq!(scores.len(), g.node_count());
    let n = g.node_count();
    let mut mask = NodeMask::all_alive(n);
    let mut ngcc = vec![initial_ngcc(g, &mask)];
    let mut order = Vec::new();
    let ranking = ranked_order(scores);
    let mut next = 0;
    while *ngcc.last().expect("nonempty curve") > theta && next < ranking.len() {
        let v = ranking[next];
        next += 1;
        mask.remove(v);
        order.push(v);
        ngcc.push(current_ngcc(g, &mask, n));
    }
    DismantleTrace::from_parts(n, order, ngcc)
}

/// Re-scores the surviving graph after every removal and deletes the argmax
/// (ties toward the lower id) until `NGCC <= theta`.
pub fn adaptive(
    g: &Graph,
    scorer: impl Fn(&Graph, &NodeMask) -> Vec<f64>,
    theta: f64,
) -> DismantleTrace {
    let n = g.node_count();
    let mut mask = NodeMask::all_alive(n);
    let mut ngcc = vec![initial_ngcc(g, &mask)];
    let mut order = Vec::new();
    while *ngcc.last().expect("nonempty curve") > theta {
        let scores = scorer(g, &mask);
        let Some(v) = argmax_alive(&scores, &mask) else {
            break;
        };
        mask.remove(v);
        order.push(v);
        ngcc.push(current_ngcc(g, &mask, n));
    }
    DismantleTrace::from_parts(n, order, ngcc)
}

/// Replays the CoreHD sequence into a trace.
pub fn corehd_trace(g: &Graph, theta: f64) -> DismantleTrace {
    let n = g.node_count();
    let order = centrality::corehd_order(g, theta);
    let mut mask = NodeMask::all_alive(n);
    let mut ngcc = vec![initial_ngcc(g, &mask)];
    for &v in &order {
        mask.remove(v);
        ngcc.push(current_ngcc(g, &mask, n));
    }
    DismantleTrace::from_parts(n, order, ngcc)
}

fn initial_ngcc(g: &Graph, mask: &NodeMask) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    g.gcc_size(mask).expect("mask sized to graph") as f64 / n as f64
}

fn current_ngcc(g: &Graph, mask: &NodeMask, original_n: usize) -> f64 {
    g.gcc_size(mask).expect("mask sized to graph") as f64 / original_n as f64
}

/// Default collective-influence ball radius.
pub const DEFAULT_CI_RADIUS: usize = 2;

/// Options for [`dismantle`]: the trained model for the learned methods and
/// the collective-influence radius.
#[derive(Default)]
pub struct MethodContext<'a> {
    pub model: Option<&'a ModelParameters>,
    pub ci_radius: Option<usize>,
}

/// Runs one (method, strategy) dismantling pass at threshold `theta`.
///
/// CoreHD is inherently adaptive (its 2-core peel and tree breaking already
/// re-inspect the residual network), so it rejects the one-pass strategy.
pub fn dismantle(
    g: &Graph,
    method: Method,
    strategy: Strategy,
    theta: f64,
    ctx: &MethodContext<'_>,
) -> Result<DismantleTrace, DismantleError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(DismantleError::InvalidTheta(theta));
    }
    if method.needs_model() && ctx.model.is_none() {
        return Err(DismantleError::ModelRequired(method));
    }
    if method == Method::Corehd {
        if strategy != Strategy::Adaptive {
            return Err(DismantleError::UnsupportedStrategy { method, strategy });
        }
        return Ok(corehd_trace(g, theta));
    }
    let radius = ctx.ci_radius.unwrap_or(DEFAULT_CI_RADIUS);
    let model = ctx.model;
    let scorer = move |g: &Graph, mask: &NodeMask| -> Vec<f64> {
        match method {
            Method::Nirm => nirm_rank(g, mask, model.expect("checked above")),
            Method::NirmIs => {
                ablation_scores(g, mask, model.expect("checked above"), IntermediateScore::Init)
            }
            Method::NirmLs => {
                ablation_scores(g, mask, model.expect("checked above"), IntermediateScore::Local)
            }
            Method::NirmGs => {
                ablation_scores(g, mask, model.expect("checked above"), IntermediateScore::Global)
            }
            Method::Dc => centrality::degree_centrality(g, mask),
            Method::Ci => centrality::collective_influence(g, mask, radius),
            Method::Bc => centrality::betweenness(g, mask),
            Method::Cc => centrality::closeness(g, mask),
            Method::Hc => centrality::harmonic(g, mask),
            Method::Pc => centrality::percolation_centrality_uniform(g, mask),
            Method::Ec => centrality::eigenvector(g, mask),
            Method::Corehd => unreachable!("handled above"),
        }
    };
    Ok(match strategy {
        Strategy::OnePass => {
            let scores = scorer(g, &NodeMask::all_alive(g.node_count()));
            one_pass(g, &scores, theta)
        }
        Strategy::Adaptive => adaptive(g, scorer, theta),
    })
}
