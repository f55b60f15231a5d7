//! Scenario file loading.
//!
//! A scenario is a single JSON document with the top-level keys `modules`,
//! `layout`, `order`, `process_models`, `optimizer` and `seed`. Unknown keys are
//! a validation error in strict mode and a warning in lenient mode.

use super::Scenario;
use serde_json::Value;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    Strict,
    Lenient,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown keys in scenario: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
}

/// Loads and schema-checks a scenario file. Returns the parsed scenario plus
/// warnings (non-empty only in lenient mode, one per unknown key).
pub fn load_scenario(path: &Path, strictness: Strictness) -> Result<(Scenario, Vec<String>), LoadError> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    scenario_from_value(value, strictness)
}

pub fn scenario_from_value(
    value: Value,
    strictness: Strictness,
) -> Result<(Scenario, Vec<String>), LoadError> {
    let unknown = unknown_keys(&value);
    if !unknown.is_empty() && strictness == Strictness::Strict {
        return Err(LoadError::UnknownKeys(unknown));
    }
    let warnings = unknown
        .into_iter()
        .map(|k| format!("ignoring unknown key `{k}`"))
        .collect();
    let scenario: Scenario = serde_json::from_value(value)?;
    Ok((scenario, warnings))
}

fn check_object(value: &Value, path: &str, known: &[&str], out: &mut Vec<String>) {
    if let Value::Object(map) = value {
        for key in map.keys() {
            if !known.contains(&key.as_str()) {
                out.push(format!("{path}.{key}"));
            }
        }
    }
}

fn check_effort(value: &Value, path: &str, out: &mut Vec<String>) {
    check_object(value, path, &["time", "energy", "cost"], out);
}

fn check_each<'v>(
    value: &'v Value,
    path: &str,
    out: &mut Vec<String>,
    mut f: impl FnMut(&'v Value, String, &mut Vec<String>),
) {
    if let Value::Array(items) = value {
        for (i, item) in items.iter().enumerate() {
            f(item, format!("{path}[{i}]"), out);
        }
    }
}

/// Walks the scenario document and returns the JSON paths of all keys that are
/// not part of the schema. Product-state objects carry free-form property names
/// and are not walked.
fn unknown_keys(root: &Value) -> Vec<String> {
    let mut out = Vec::new();
    check_object(
        root,
        "$",
        &["seed", "modules", "layout", "order", "process_models", "optimizer"],
        &mut out,
    );
    let get = |v: &Value, k: &str| v.get(k).cloned();

    if let Some(modules) = root.get("modules") {
        check_each(modules, "$.modules", &mut out, |module, path, out| {
            check_object(
                module,
                &path,
                &["id", "configurations", "current_configuration", "current_location"],
                out,
            );
            if let Some(configs) = module.get("configurations") {
                check_each(configs, &format!("{path}.configurations"), out, |cfg, cpath, out| {
                    check_object(
                        cfg,
                        &cpath,
                        &["id", "operators", "standby_effort", "standby_map", "switch_from"],
                        out,
                    );
                    if let Some(e) = cfg.get("standby_effort") {
                        check_effort(&e, &format!("{cpath}.standby_effort"), out);
                    }
                    if let Some(m) = cfg.get("standby_map") {
                        check_effort(&m, &format!("{cpath}.standby_map"), out);
                        for z in ["time", "energy", "cost"] {
                            if let Some(a) = m.get(z) {
                                check_object(
                                    &a,
                                    &format!("{cpath}.standby_map.{z}"),
                                    &["coefficient", "offset"],
                                    out,
                                );
                            }
                        }
                    }
                    if let Some(sw) = cfg.get("switch_from") {
                        if let Value::Object(map) = &sw {
                            for (from, e) in map {
                                check_effort(e, &format!("{cpath}.switch_from.{from}"), out);
                            }
                        }
                    }
                    if let Some(ops) = cfg.get("operators") {
                        check_each(&ops, &format!("{cpath}.operators"), out, |op, opath, out| {
                            check_object(
                                op,
                                &opath,
                                &["id", "input", "output", "parameters", "duration", "process_model"],
                                out,
                            );
                            if let Some(params) = op.get("parameters") {
                                check_each(params, &format!("{opath}.parameters"), out, |p, ppath, out| {
                                    check_object(p, &ppath, &["name", "lo", "hi"], out);
                                });
                            }
                            if let Some(d) = op.get("duration") {
                                check_object(d, &format!("{opath}.duration"), &["base", "coefficients"], out);
                            }
                        });
                    }
                });
            }
        });
    }

    if let Some(layout) = root.get("layout") {
        check_object(layout, "$.layout", &["locations", "edges"], &mut out);
        if let Some(edges) = get(layout, "edges") {
            check_each(&edges, "$.layout.edges", &mut out, |e, path, out| {
                check_object(e, &path, &["a", "b", "effort"], out);
                if let Some(eff) = e.get("effort") {
                    check_effort(&eff, &format!("{path}.effort"), out);
                }
            });
        }
    }

    if let Some(order) = root.get("order") {
        check_object(order, "$.order", &["input", "output", "lot_size", "weights"], &mut out);
        if let Some(w) = get(order, "weights") {
            check_effort(&w, "$.order.weights", &mut out);
        }
    }

    if let Some(models) = root.get("process_models") {
        check_each(models, "$.process_models", &mut out, |m, path, out| {
            check_object(
                m,
                &path,
                &[
                    "id", "output_dim", "actuation_dim", "output_lag", "actuation_lag",
                    "coupling_dim", "hidden", "horizon", "seed", "criteria", "training",
                ],
                out,
            );
            if let Some(criteria) = m.get("criteria") {
                check_effort(&criteria, &format!("{path}.criteria"), out);
                for z in ["time", "energy", "cost"] {
                    if let Some(c) = criteria.get(z) {
                        let zpath = format!("{path}.criteria.{z}");
                        check_object(
                            &c,
                            &zpath,
                            &[
                                "drop_output_rows", "drop_output_lags",
                                "drop_actuation_rows", "drop_actuation_lags", "map",
                            ],
                            out,
                        );
                        if let Some(map) = c.get("map") {
                            check_object(&map, &format!("{zpath}.map"), &["coefficients", "offset"], out);
                        }
                    }
                }
            }
            if let Some(t) = m.get("training") {
                check_object(
                    &t,
                    &format!("{path}.training"),
                    &["learning_rate", "epochs", "batch_size"],
                    out,
                );
            }
        });
    }

    if let Some(opt) = root.get("optimizer") {
        check_object(
            opt,
            "$.optimizer",
            &["strategy", "budget_single", "budget_weighted", "grid_points", "seed", "search"],
            &mut out,
        );
        if let Some(s) = get(opt, "search") {
            check_object(&s, "$.optimizer.search", &["max_depth", "max_branches"], &mut out);
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({
            "seed": 1,
            "modules": [],
            "layout": {"locations": [1], "edges": []},
            "order": {
                "input": {}, "output": {}, "lot_size": 1,
                "weights": {"time": 0.5, "energy": 0.3, "cost": 0.2}
            }
        })
    }

    #[test]
    fn minimal_scenario_parses() {
        let (s, warnings) = scenario_from_value(minimal(), Strictness::Strict).unwrap();
        assert_eq!(s.seed, 1);
        assert!(warnings.is_empty());
    }

    #[test]
    fn unknown_top_level_key_rejected_in_strict_mode() {
        let mut v = minimal();
        v["extra_stuff"] = json!(1);
        match scenario_from_value(v, Strictness::Strict) {
            Err(LoadError::UnknownKeys(keys)) => assert_eq!(keys, vec!["$.extra_stuff"]),
            other => panic!("expected UnknownKeys, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_warns_in_lenient_mode() {
        let mut v = minimal();
        v["extra_stuff"] = json!(1);
        let (_, warnings) = scenario_from_value(v, Strictness::Lenient).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("$.extra_stuff"));
    }

    #[test]
    fn nested_unknown_key_has_path() {
        let mut v = minimal();
        v["modules"] = json!([{
            "id": "m1",
            "current_configuration": "c1",
            "typo_field": true,
            "configurations": [{
                "id": "c1",
                "standby_effort": {"time": 0.0, "energy": 0.0, "cost": 0.0},
                "operators": []
            }]
        }]);
        match scenario_from_value(v, Strictness::Strict) {
            Err(LoadError::UnknownKeys(keys)) => {
                assert_eq!(keys, vec!["$.modules[0].typo_field"]);
            }
            other => panic!("expected UnknownKeys, got {other:?}"),
        }
    }
}
