//! Discrete-time Markov cohort cost-effectiveness evaluator.
//!
//! Transition probabilities, costs and utilities are expressions over named
//! parameters. Each state lists its outgoing probabilities; the probability
//! of staying is whatever remains. Costs and utilities are annual rates,
//! accrued at the start of each cycle and discounted per year.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Model, ModelError, Result};

/// Transition matrix, per-state costs and per-state utilities.
type Resolved = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>);

/// A number, a parameter name, or a product of expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Number(f64),
    Param(String),
    Product(Vec<Expr>),
}

impl Expr {
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        match self {
            Expr::Number(v) => Ok(*v),
            Expr::Param(name) => lookup(name).ok_or_else(|| ModelError::MissingParameter(name.clone())),
            Expr::Product(xs) => xs.iter().try_fold(1.0, |acc, e| Ok(acc * e.eval(lookup)?)),
        }
    }

    fn names<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Number(_) => {}
            Expr::Param(name) => {
                out.insert(name);
            }
            Expr::Product(xs) => xs.iter().for_each(|e| e.names(out)),
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::Number(v)
    }
}

impl From<&str> for Expr {
    fn from(s: &str) -> Self {
        Expr::Param(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub name: String,
    #[serde(default)]
    pub absorbing: bool,
    /// Cost per year spent in the state.
    pub cost: Expr,
    /// Quality weight per year spent in the state.
    pub utility: Expr,
    /// Outgoing probabilities per cycle, keyed by target state.
    #[serde(default)]
    pub transitions: BTreeMap<String, Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortCeaSpec {
    pub states: Vec<StateSpec>,
    /// Cycle length in years.
    pub cycle_length: f64,
    /// Number of cycles.
    pub horizon: usize,
    pub discount_rate: f64,
    pub initial: Vec<f64>,
}

/// Occupancy per cycle plus the per-state rates it was computed with.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// `horizon + 1` rows; row 0 is the initial distribution.
    pub occupancy: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    pub utilities: Vec<f64>,
}

const ROW_TOL: f64 = 1e-10;

impl CohortCeaSpec {
    /// Checks the static parts of the spec.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ModelError::InvalidSpec(m));
        if self.states.is_empty() {
            return bad("no states".into());
        }
        if self.horizon < 1 {
            return bad("horizon must be at least one cycle".into());
        }
        if !(self.cycle_length.is_finite() && self.cycle_length > 0.0) {
            return bad(format!("cycle length {} is not positive", self.cycle_length));
        }
        if !(self.discount_rate.is_finite() && self.discount_rate > -1.0) {
            return bad(format!("discount rate {} is out of range", self.discount_rate));
        }
        if self.initial.len() != self.states.len() {
            return bad(format!(
                "initial distribution has {} entries for {} states",
                self.initial.len(),
                self.states.len()
            ));
        }
        let total: f64 = self.initial.iter().sum();
        if self.initial.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (total - 1.0).abs() > ROW_TOL {
            return bad("initial distribution is not a probability vector".into());
        }
        let mut seen = BTreeSet::new();
        for s in &self.states {
            if !seen.insert(s.name.as_str()) {
                return bad(format!("duplicate state {}", s.name));
            }
        }
        for s in &self.states {
            if s.absorbing && !s.transitions.is_empty() {
                return bad(format!("absorbing state {} has outgoing transitions", s.name));
            }
            for target in s.transitions.keys() {
                if !seen.contains(target.as_str()) {
                    return bad(format!("state {} moves to unknown state {target}", s.name));
                }
                if target == &s.name {
                    return bad(format!("state {} lists itself; staying is implied", s.name));
                }
            }
        }
        Ok(())
    }

    /// Every parameter name referenced by the spec, sorted.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut out = BTreeSet::new();
        for s in &self.states {
            s.cost.names(&mut out);
            s.utility.names(&mut out);
            s.transitions.values().for_each(|e| e.names(&mut out));
        }
        out.into_iter().map(String::from).collect()
    }

    fn index(&self, name: &str) -> usize {
        self.states
            .iter()
            .position(|s| s.name == name)
            .expect("validated target")
    }

    /// Transition matrix, costs and utilities under `lookup`.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN row sums must fail
    fn resolve(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<Resolved> {
        let n = self.states.len();
        let mut p = vec![vec![0.0; n]; n];
        let (mut costs, mut utilities) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for (i, s) in self.states.iter().enumerate() {
            let mut out = 0.0;
            for (target, e) in &s.transitions {
                let v = e.eval(lookup)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(ModelError::RowSumViolation {
                        cycle: 0,
                        state: s.name.clone(),
                        sum: v,
                    });
                }
                p[i][self.index(target)] = v;
                out += v;
            }
            if !(out <= 1.0 + ROW_TOL) {
                return Err(ModelError::RowSumViolation {
                    cycle: 0,
                    state: s.name.clone(),
                    sum: out,
                });
            }
            p[i][i] = (1.0 - out).max(0.0);
            costs.push(s.cost.eval(lookup)?);
            let u = s.utility.eval(lookup)?;
            if !(0.0..=1.0).contains(&u) {
                return Err(ModelError::UtilityOutOfRange {
                    state: s.name.clone(),
                    value: u,
                });
            }
            utilities.push(u);
        }
        Ok((p, costs, utilities))
    }
}

/// Cohort occupancy over the horizon.
pub fn cohort_trace(spec: &CohortCeaSpec, params: &BTreeMap<String, f64>) -> Result<Trace> {
    trace_with(spec, &|name: &str| params.get(name).copied())
}

fn trace_with(spec: &CohortCeaSpec, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<Trace> {
    spec.validate()?;
    let (p, costs, utilities) = spec.resolve(lookup)?;
    let n = spec.states.len();
    let mut occupancy = Vec::with_capacity(spec.horizon + 1);
    occupancy.push(spec.initial.clone());
    for t in 0..spec.horizon {
        let row = &occupancy[t];
        let next: Vec<f64> = (0..n).map(|j| (0..n).map(|i| row[i] * p[i][j]).sum()).collect();
        let total: f64 = next.iter().sum();
        if (total - 1.0).abs() > ROW_TOL {
            let state = (0..n)
                .find(|&i| (p[i].iter().sum::<f64>() - 1.0).abs() > ROW_TOL)
                .unwrap_or(0);
            return Err(ModelError::RowSumViolation {
                cycle: t,
                state: spec.states[state].name.clone(),
                sum: p[state].iter().sum(),
            });
        }
        occupancy.push(next);
    }
    Ok(Trace {
        occupancy,
        costs,
        utilities,
    })
}

/// Discounted `(cost, QALY)` totals of a trace.
pub fn discounted_outcomes(trace: &Trace, spec: &CohortCeaSpec) -> (f64, f64) {
    let l = spec.cycle_length;
    let (mut cost, mut qaly) = (0.0, 0.0);
    for (t, row) in trace.occupancy.iter().take(spec.horizon).enumerate() {
        let df = (1.0 + spec.discount_rate).powf(-(t as f64) * l);
        let c: f64 = row.iter().zip(&trace.costs).map(|(o, c)| o * c).sum();
        let q: f64 = row.iter().zip(&trace.utilities).map(|(o, u)| o * u).sum();
        cost += df * c * l;
        qaly += df * q * l;
    }
    (cost, qaly)
}

/// Incremental net monetary benefit of A over B at willingness-to-pay `wtp`.
pub fn inmb(cost_a: f64, qaly_a: f64, cost_b: f64, qaly_b: f64, wtp: f64) -> f64 {
    wtp * (qaly_a - qaly_b) - (cost_a - cost_b)
}

/// Scalar outcome reported by a [`CohortModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Outcome {
    Cost,
    Qaly,
    NetBenefit {
        wtp: f64,
    },
    /// Runs the spec twice with per-strategy parameter overrides.
    Inmb {
        wtp: f64,
        #[serde(default)]
        intervention: BTreeMap<String, f64>,
        #[serde(default)]
        comparator: BTreeMap<String, f64>,
    },
}

/// A cohort spec wrapped as a [`Model`].
#[derive(Debug, Clone)]
pub struct CohortModel {
    spec: CohortCeaSpec,
    outcome: Outcome,
    inputs: Vec<String>,
}

impl CohortModel {
    pub fn new(spec: CohortCeaSpec, outcome: Outcome) -> Result<Self> {
        spec.validate()?;
        let mut inputs = spec.parameter_names();
        if let Outcome::Inmb {
            wtp,
            intervention,
            comparator,
        } = &outcome
        {
            if !(wtp.is_finite() && *wtp >= 0.0) {
                return Err(ModelError::InvalidSpec(format!(
                    "willingness-to-pay {wtp} must be non-negative"
                )));
            }
            for name in intervention.keys().chain(comparator.keys()) {
                if !inputs.contains(name) {
                    return Err(ModelError::MissingParameter(name.clone()));
                }
            }
            inputs.retain(|n| !(intervention.contains_key(n) && comparator.contains_key(n)));
        }
        Ok(Self { spec, outcome, inputs })
    }

    pub fn spec(&self) -> &CohortCeaSpec {
        &self.spec
    }

    pub fn outcome(&self) -> &Outcome {
        &self.outcome
    }

    fn totals(&self, x: &[f64], overrides: &BTreeMap<String, f64>) -> Result<(f64, f64)> {
        let lookup = |name: &str| {
            overrides
                .get(name)
                .copied()
                .or_else(|| self.inputs.iter().position(|n| n == name).map(|i| x[i]))
        };
        let trace = trace_with(&self.spec, &lookup)?;
        Ok(discounted_outcomes(&trace, &self.spec))
    }
}

impl Model for CohortModel {
    fn inputs(&self) -> &[String] {
        &self.inputs
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.inputs.len() {
            return Err(ModelError::ArityMismatch {
                expected: self.inputs.len(),
                got: x.len(),
            });
        }
        let none = BTreeMap::new();
        match &self.outcome {
            Outcome::Cost => Ok(self.totals(x, &none)?.0),
            Outcome::Qaly => Ok(self.totals(x, &none)?.1),
            Outcome::NetBenefit { wtp } => {
                let (c, q) = self.totals(x, &none)?;
                Ok(wtp * q - c)
            }
            Outcome::Inmb {
                wtp,
                intervention,
                comparator,
            } => {
                let (ca, qa) = self.totals(x, intervention)?;
                let (cb, qb) = self.totals(x, comparator)?;
                Ok(inmb(ca, qa, cb, qb, *wtp))
            }
        }
    }
}

/// Willingness-to-pay used by the demo, per QALY.
pub const DEMO_WTP: f64 = 30_000.0;
/// Annual discount rate used by the demo.
pub const DEMO_DISCOUNT: f64 = 0.035;

/// A synthetic four-state joint-replacement style cohort: 20 yearly cycles.
///
/// Free parameters: `p_comp`, `p_fail`, `p_recover`, `p_death`, plus the
/// strategy parameters `rr` (relative risk of complication) and
/// `cost_well`.
pub fn demo_spec() -> CohortCeaSpec {
    let state = |name: &str, cost: Expr, utility: f64, tr: &[(&str, Expr)]| StateSpec {
        name: name.into(),
        absorbing: false,
        cost,
        utility: Expr::Number(utility),
        transitions: tr.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
    };
    let mut dead = state("Dead", 0.0.into(), 0.0, &[]);
    dead.absorbing = true;
    CohortCeaSpec {
        states: vec![
            state(
                "Well",
                "cost_well".into(),
                0.85,
                &[
                    ("Complication", Expr::Product(vec!["p_comp".into(), "rr".into()])),
                    ("Revision", "p_fail".into()),
                    ("Dead", "p_death".into()),
                ],
            ),
            state(
                "Complication",
                2500.0.into(),
                0.6,
                &[
                    ("Well", "p_recover".into()),
                    ("Revision", 0.1.into()),
                    ("Dead", "p_death".into()),
                ],
            ),
            state(
                "Revision",
                8000.0.into(),
                0.5,
                &[
                    ("Well", 0.7.into()),
                    ("Dead", Expr::Product(vec!["p_death".into(), 2.0.into()])),
                ],
            ),
            dead,
        ],
        cycle_length: 1.0,
        horizon: 20,
        discount_rate: DEMO_DISCOUNT,
        initial: vec![1.0, 0.0, 0.0, 0.0],
    }
}

/// The demo spec reporting INMB of the intervention (`rr = 0.6`, yearly
/// cost 400) over the comparator (`rr = 1`, yearly cost 100).
pub fn demo_model() -> CohortModel {
    let arm = |rr: f64, cost: f64| BTreeMap::from([("rr".to_string(), rr), ("cost_well".to_string(), cost)]);
    CohortModel::new(
        demo_spec(),
        Outcome::Inmb {
            wtp: DEMO_WTP,
            intervention: arm(0.6, 400.0),
            comparator: arm(1.0, 100.0),
        },
    )
    .expect("demo spec is valid")
}
