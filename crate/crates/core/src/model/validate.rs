//! Scenario validation: every type invariant is checked and every violation is
//! reported with a path to the offending element.

use super::{weights_sum, EffortVector, Scenario, StateDescription};
use crate::model::Criterion;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { path: path.into(), message: message.into() });
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}

/// A scenario in which every type invariant holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScenario(Scenario);

impl ValidatedScenario {
    pub fn into_inner(self) -> Scenario {
        self.0
    }
}

impl Deref for ValidatedScenario {
    type Target = Scenario;
    fn deref(&self) -> &Scenario {
        &self.0
    }
}

/// Checks every invariant and returns either the validated scenario or a report
/// listing every violation found.
pub fn validate_scenario(scenario: Scenario) -> Result<ValidatedScenario, ValidationReport> {
    let mut report = ValidationReport::default();

    check_weights(&scenario, &mut report);
    check_layout(&scenario, &mut report);
    check_modules(&scenario, &mut report);
    check_order(&scenario, &mut report);
    check_process_models(&scenario, &mut report);
    check_optimizer(&scenario, &mut report);

    if report.is_empty() {
        Ok(ValidatedScenario(scenario))
    } else {
        Err(report)
    }
}

fn check_effort(e: &EffortVector, path: &str, report: &mut ValidationReport) {
    if !e.is_finite() {
        report.push(path, "effort components must be finite");
    }
    if !e.non_negative() {
        report.push(path, "effort components must be >= 0");
    }
}

fn check_state(s: &StateDescription, path: &str, report: &mut ValidationReport) {
    for (name, value) in &s.0 {
        let (lo, hi) = value.bounds();
        if !(lo.is_finite() && hi.is_finite()) {
            report.push(format!("{path}.{name}"), "property values must be finite");
        } else if lo > hi {
            report.push(format!("{path}.{name}"), format!("malformed interval: {lo} > {hi}"));
        }
    }
}

fn check_weights(scenario: &Scenario, report: &mut ValidationReport) {
    let w = &scenario.order.weights;
    for z in Criterion::ALL {
        let v = *w.get(z);
        if !(0.0..=1.0).contains(&v) {
            report.push(format!("$.order.weights.{z}"), "weight must be in [0, 1]");
        }
    }
    let sum = weights_sum(w);
    if (sum - 1.0).abs() > 1e-9 {
        report.push("$.order.weights", format!("weights sum != 1 (got {sum})"));
    }
}

fn check_layout(scenario: &Scenario, report: &mut ValidationReport) {
    let layout = &scenario.layout;
    let mut seen = BTreeSet::new();
    for (i, loc) in layout.locations.iter().enumerate() {
        if !seen.insert(*loc) {
            report.push(format!("$.layout.locations[{i}]"), format!("duplicate location id {loc}"));
        }
    }
    let mut seen_edges = BTreeSet::new();
    for (i, edge) in layout.edges.iter().enumerate() {
        let path = format!("$.layout.edges[{i}]");
        if edge.a == edge.b {
            report.push(&path, "self-loop edges are not allowed");
        }
        for end in [edge.a, edge.b] {
            if !layout.locations.contains(&end) {
                report.push(&path, format!("edge endpoint {end} is not a location"));
            }
        }
        let key = (edge.a.min(edge.b), edge.a.max(edge.b));
        if !seen_edges.insert(key) {
            report.push(&path, format!("duplicate edge {}-{}", key.0, key.1));
        }
        check_effort(&edge.effort, &format!("{path}.effort"), report);
    }
}

fn check_modules(scenario: &Scenario, report: &mut ValidationReport) {
    let mut module_ids = BTreeSet::new();
    let mut used_locations = BTreeSet::new();
    for (mi, module) in scenario.modules.iter().enumerate() {
        let mpath = format!("$.modules[{mi}]");
        if !module_ids.insert(module.id.clone()) {
            report.push(&mpath, format!("duplicate module id `{}`", module.id));
        }
        if let Some(loc) = module.current_location {
            if !scenario.layout.locations.contains(&loc) {
                report.push(
                    format!("{mpath}.current_location"),
                    format!("location {loc} is not in the layout"),
                );
            }
            if !used_locations.insert(loc) {
                report.push(
                    format!("{mpath}.current_location"),
                    format!("location {loc} already occupied by another module"),
                );
            }
        }

        let config_ids: BTreeSet<&str> =
            module.configurations.iter().map(|c| c.id.as_str()).collect();
        if config_ids.len() != module.configurations.len() {
            report.push(&mpath, "duplicate configuration ids within module");
        }
        if !config_ids.contains(module.current_configuration.as_str()) {
            report.push(
                format!("{mpath}.current_configuration"),
                format!("`{}` is not a configuration of this module", module.current_configuration),
            );
        }

        for (ci, config) in module.configurations.iter().enumerate() {
            let cpath = format!("{mpath}.configurations[{ci}]");
            check_effort(&config.standby_effort, &format!("{cpath}.standby_effort"), report);

            // Switch table: complete over siblings, zero on self.
            for other in &config_ids {
                if *other == config.id {
                    continue;
                }
                if !config.switch_from.contains_key(*other) {
                    report.push(
                        format!("{cpath}.switch_from"),
                        format!("missing switch effort from configuration `{other}`"),
                    );
                }
            }
            for (from, effort) in &config.switch_from {
                let spath = format!("{cpath}.switch_from.{from}");
                if !config_ids.contains(from.as_str()) {
                    report.push(&spath, format!("`{from}` is not a configuration of this module"));
                }
                if from == &config.id && *effort != EffortVector::zero() {
                    report.push(&spath, "switch effort from a configuration to itself must be zero");
                }
                check_effort(effort, &spath, report);
            }

            let mut op_ids = BTreeSet::new();
            for (oi, op) in config.operators.iter().enumerate() {
                let opath = format!("{cpath}.operators[{oi}]");
                if !op_ids.insert(op.id.clone()) {
                    report.push(&opath, format!("duplicate operator id `{}`", op.id));
                }
                check_state(&op.input, &format!("{opath}.input"), report);
                check_state(&op.output, &format!("{opath}.output"), report);
                for (pi, p) in op.parameters.iter().enumerate() {
                    if !(p.lo.is_finite() && p.hi.is_finite()) || p.lo > p.hi {
                        report.push(
                            format!("{opath}.parameters[{pi}]"),
                            format!("parameter bounds must satisfy lo <= hi (got [{}, {}])", p.lo, p.hi),
                        );
                    }
                }
                if op.duration.coefficients.len() != op.parameters.len() {
                    report.push(
                        format!("{opath}.duration"),
                        "duration coefficient count must match parameter count",
                    );
                } else if min_duration(op) <= 0.0 {
                    report.push(
                        format!("{opath}.duration"),
                        "service duration must be positive over the whole parameter box",
                    );
                }
                if scenario.process_model(&op.process_model).is_none() {
                    report.push(
                        format!("{opath}.process_model"),
                        format!("references missing process model `{}`", op.process_model),
                    );
                }
            }
        }
    }
}

/// Minimum of the affine duration over the parameter box (attained at a corner).
fn min_duration(op: &super::ProcessOperator) -> f64 {
    let mut d = op.duration.base;
    for (c, p) in op.duration.coefficients.iter().zip(&op.parameters) {
        d += (c * p.lo).min(c * p.hi);
    }
    d
}

fn check_order(scenario: &Scenario, report: &mut ValidationReport) {
    check_state(&scenario.order.input, "$.order.input", report);
    check_state(&scenario.order.output, "$.order.output", report);
    if scenario.order.lot_size < 1 {
        report.push("$.order.lot_size", "lot size must be >= 1");
    }
}

fn check_process_models(scenario: &Scenario, report: &mut ValidationReport) {
    let mut ids = BTreeSet::new();
    for (i, spec) in scenario.process_models.iter().enumerate() {
        let path = format!("$.process_models[{i}]");
        if !ids.insert(spec.id.clone()) {
            report.push(&path, format!("duplicate process model id `{}`", spec.id));
        }
        for v in spec.validate(&scenario.order.weights) {
            report.push(format!("{path}.{}", v.0), v.1);
        }
    }
}

fn check_optimizer(scenario: &Scenario, report: &mut ValidationReport) {
    let opt = &scenario.optimizer;
    if opt.budget_single < 1 {
        report.push("$.optimizer.budget_single", "budget must be >= 1");
    }
    if opt.budget_weighted < 1 {
        report.push("$.optimizer.budget_weighted", "budget must be >= 1");
    }
    if opt.grid_points < 1 {
        report.push("$.optimizer.grid_points", "grid_points must be >= 1");
    }
    if opt.search.max_depth < 1 {
        report.push("$.optimizer.search.max_depth", "max_depth must be >= 1");
    }
    if opt.search.max_branches < 1 {
        report.push("$.optimizer.search.max_branches", "max_branches must be >= 1");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::scenario_from_value;
    use crate::model::Strictness;
    use serde_json::json;

    fn scenario(weights: (f64, f64, f64)) -> Scenario {
        let v = json!({
            "seed": 7,
            "modules": [{
                "id": "m1",
                "current_configuration": "c1",
                "current_location": 1,
                "configurations": [{
                    "id": "c1",
                    "standby_effort": {"time": 0.0, "energy": 0.1, "cost": 0.0},
                    "operators": [{
                        "id": "drill",
                        "input": {"raw": 1.0},
                        "output": {"drilled": 1.0},
                        "parameters": [{"name": "speed", "lo": 0.5, "hi": 2.0}],
                        "duration": {"base": 4.0, "coefficients": [-1.0]},
                        "process_model": "pm"
                    }]
                }]
            }],
            "layout": {"locations": [1, 2], "edges": [
                {"a": 1, "b": 2, "effort": {"time": 10.0, "energy": 1.0, "cost": 0.5}}
            ]},
            "order": {
                "input": {"raw": 1.0},
                "output": {"drilled": 1.0},
                "lot_size": 2,
                "weights": {"time": weights.0, "energy": weights.1, "cost": weights.2}
            },
            "process_models": [{
                "id": "pm",
                "output_dim": 1, "actuation_dim": 1,
                "output_lag": 1, "actuation_lag": 1,
                "coupling_dim": 0, "horizon": 16, "seed": 3
            }]
        });
        scenario_from_value(v, Strictness::Strict).unwrap().0
    }

    #[test]
    fn weights_summing_to_one_accepted() {
        assert!(validate_scenario(scenario((0.5, 0.3, 0.2))).is_ok());
    }

    #[test]
    fn weights_not_summing_to_one_rejected() {
        let report = validate_scenario(scenario((0.5, 0.5, 0.5))).unwrap_err();
        assert!(report.violations.iter().any(|v| v.message.contains("sum != 1")), "{report}");
    }

    #[test]
    fn dangling_process_model_reference_rejected_with_path() {
        let mut s = scenario((0.5, 0.3, 0.2));
        s.process_models.clear();
        let report = validate_scenario(s).unwrap_err();
        let v = report
            .violations
            .iter()
            .find(|v| v.message.contains("missing process model"))
            .expect("dangling reference reported");
        assert_eq!(v.path, "$.modules[0].configurations[0].operators[0].process_model");
    }

    #[test]
    fn validation_is_idempotent() {
        let validated = validate_scenario(scenario((0.5, 0.3, 0.2))).unwrap();
        assert!(validate_scenario(validated.into_inner()).is_ok());
    }

    #[test]
    fn switch_table_must_cover_siblings() {
        let mut s = scenario((0.5, 0.3, 0.2));
        let mut extra = s.modules[0].configurations[0].clone();
        extra.id = "c2".into();
        s.modules[0].configurations.push(extra);
        // Neither c1 nor c2 declares a switch entry for the other.
        let report = validate_scenario(s).unwrap_err();
        assert!(report.violations.iter().any(|v| v.message.contains("missing switch effort")));
    }

    #[test]
    fn occupied_location_rejected() {
        let mut s = scenario((0.5, 0.3, 0.2));
        let mut m2 = s.modules[0].clone();
        m2.id = "m2".into();
        m2.current_location = Some(1);
        s.modules.push(m2);
        let report = validate_scenario(s).unwrap_err();
        assert!(report.violations.iter().any(|v| v.message.contains("already occupied")));
    }

    #[test]
    fn malformed_interval_rejected() {
        let mut s = scenario((0.5, 0.3, 0.2));
        s.order.output.0.insert(
            "bad".into(),
            crate::model::PropertyValue::Interval([2.0, 1.0]),
        );
        let report = validate_scenario(s).unwrap_err();
        assert!(report.violations.iter().any(|v| v.message.contains("malformed interval")));
    }
}
