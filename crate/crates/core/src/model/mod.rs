//! Shared domain types: criteria, efforts, product states, modules, layout
//! graph, production orders and system configurations.

mod scenario;
mod validate;

pub use scenario::{load_scenario, scenario_from_value, LoadError, Strictness};
pub use validate::{validate_scenario, ValidatedScenario, ValidationReport, Violation};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// The three evaluation criteria every effort is broken down into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Time,
    Energy,
    Cost,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Time, Criterion::Energy, Criterion::Cost];

    /// Fixed unit per criterion; no implicit conversion anywhere.
    pub fn unit(self) -> &'static str {
        match self {
            Criterion::Time => "s",
            Criterion::Energy => "J",
            Criterion::Cost => "cu",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Time => "time",
            Criterion::Energy => "energy",
            Criterion::Cost => "cost",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PerCriterion<T> {
    pub time: T,
    pub energy: T,
    pub cost: T,
}

impl<T> PerCriterion<T> {
    pub fn get(&self, z: Criterion) -> &T {
        match z {
            Criterion::Time => &self.time,
            Criterion::Energy => &self.energy,
            Criterion::Cost => &self.cost,
        }
    }

    pub fn get_mut(&mut self, z: Criterion) -> &mut T {
        match z {
            Criterion::Time => &mut self.time,
            Criterion::Energy => &mut self.energy,
            Criterion::Cost => &mut self.cost,
        }
    }

    pub fn from_fn(mut f: impl FnMut(Criterion) -> T) -> Self {
        PerCriterion {
            time: f(Criterion::Time),
            energy: f(Criterion::Energy),
            cost: f(Criterion::Cost),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PerCriterion<U> {
        PerCriterion {
            time: f(&self.time),
            energy: f(&self.energy),
            cost: f(&self.cost),
        }
    }
}

/// Per-criterion scalar efforts (time in s, energy in J, cost in currency units).
pub type EffortVector = PerCriterion<f64>;

impl EffortVector {
    pub fn zero() -> Self {
        PerCriterion { time: 0.0, energy: 0.0, cost: 0.0 }
    }

    pub fn new(time: f64, energy: f64, cost: f64) -> Self {
        PerCriterion { time, energy, cost }
    }

    pub fn add(&self, other: &EffortVector) -> EffortVector {
        EffortVector::from_fn(|z| self.get(z) + other.get(z))
    }

    pub fn is_finite(&self) -> bool {
        Criterion::ALL.iter().all(|&z| self.get(z).is_finite())
    }

    pub fn non_negative(&self) -> bool {
        Criterion::ALL.iter().all(|&z| *self.get(z) >= 0.0)
    }

    /// Lexicographic (time, energy, cost) key used for deterministic tie-breaks.
    pub fn lex_key(&self) -> [f64; 3] {
        [self.time, self.energy, self.cost]
    }
}

/// Criteria weights w_z; must be in [0,1] and sum to 1 (validated).
pub type CriteriaWeights = PerCriterion<f64>;

pub fn weights_sum(w: &CriteriaWeights) -> f64 {
    w.time + w.energy + w.cost
}

/// A product property: either an exact value or a closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyValue {
    Exact(f64),
    Interval([f64; 2]),
}

impl PropertyValue {
    /// (lo, hi); exact values are degenerate intervals.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            PropertyValue::Exact(v) => (v, v),
            PropertyValue::Interval([lo, hi]) => (lo, hi),
        }
    }
}

/// A product state as named numeric properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct StateDescription(pub BTreeMap<String, PropertyValue>);

impl StateDescription {
    pub fn exact(pairs: &[(&str, f64)]) -> Self {
        StateDescription(
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), PropertyValue::Exact(*v)))
                .collect(),
        )
    }
}

/// True iff for every property in `required`, `actual` defines that property and
/// the actual value/interval is contained in the required value/interval.
/// Properties present only in `actual` are ignored.
pub fn state_satisfies(actual: &StateDescription, required: &StateDescription) -> bool {
    required.0.iter().all(|(name, req)| match actual.0.get(name) {
        None => false,
        Some(act) => {
            let (alo, ahi) = act.bounds();
            let (rlo, rhi) = req.bounds();
            rlo <= alo && ahi <= rhi
        }
    })
}

/// Closed bounds for one adjustable parameter of a process operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBound {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

/// Nominal service-cycle duration in seconds as an affine function of the
/// operator's parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationModel {
    pub base: f64,
    #[serde(default)]
    pub coefficients: Vec<f64>,
}

impl DurationModel {
    pub fn evaluate(&self, params: &[f64]) -> f64 {
        self.base
            + self
                .coefficients
                .iter()
                .zip(params)
                .map(|(c, u)| c * u)
                .sum::<f64>()
    }
}

/// A capability: transforms products satisfying `input` into products
/// described by `output`, parameterized by a bounded actuation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessOperator {
    pub id: String,
    pub input: StateDescription,
    pub output: StateDescription,
    #[serde(default)]
    pub parameters: Vec<ParameterBound>,
    pub duration: DurationModel,
    /// Id of the process model (in the scenario's `process_models`) backing this operator.
    pub process_model: String,
}

/// Scalar affine map, `coefficient * x + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarAffine {
    pub coefficient: f64,
    pub offset: f64,
}

impl Default for ScalarAffine {
    fn default() -> Self {
        ScalarAffine { coefficient: 1.0, offset: 0.0 }
    }
}

impl ScalarAffine {
    pub fn apply(&self, x: f64) -> f64 {
        self.coefficient * x + self.offset
    }
}

/// One configuration a module can be switched into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleConfiguration {
    pub id: String,
    #[serde(default)]
    pub operators: Vec<ProcessOperator>,
    /// Standby constants per criterion (effort units per standby cycle).
    pub standby_effort: EffortVector,
    /// Per-criterion affine map applied to the standby constant; identity by default.
    #[serde(default)]
    pub standby_map: PerCriterion<ScalarAffine>,
    /// Switch effort keyed by the configuration the module comes FROM.
    /// Complete over the sibling configurations; a self entry must be zero.
    #[serde(default)]
    pub switch_from: BTreeMap<String, EffortVector>,
}

impl ModuleConfiguration {
    /// Effort of switching into this configuration from `from`; zero for self.
    pub fn switch_effort_from(&self, from: &str) -> EffortVector {
        if from == self.id {
            return EffortVector::zero();
        }
        self.switch_from
            .get(from)
            .copied()
            .unwrap_or_else(EffortVector::zero)
    }
}

/// A cyber-physical production module: a machine with a set of configurations,
/// one of which is current, optionally placed at a layout location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cppm {
    pub id: String,
    pub configurations: Vec<ModuleConfiguration>,
    pub current_configuration: String,
    #[serde(default)]
    pub current_location: Option<u32>,
}

impl Cppm {
    pub fn configuration(&self, id: &str) -> Option<&ModuleConfiguration> {
        self.configurations.iter().find(|c| c.id == id)
    }

    pub fn current(&self) -> &ModuleConfiguration {
        self.configuration(&self.current_configuration)
            .expect("current configuration validated to exist")
    }
}

/// Undirected transport connection between two layout locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportEdge {
    pub a: u32,
    pub b: u32,
    pub effort: EffortVector,
}

/// Numbered machine locations and transport connections; one module per location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutGraph {
    pub locations: Vec<u32>,
    #[serde(default)]
    pub edges: Vec<TransportEdge>,
}

impl LayoutGraph {
    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.edges
            .iter()
            .any(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }
}

/// What to produce, from what, how many, and how the criteria are weighted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionOrder {
    pub input: StateDescription,
    pub output: StateDescription,
    pub lot_size: u32,
    pub weights: CriteriaWeights,
}

/// One step of a production sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SequenceStep {
    pub module: String,
    pub configuration: String,
    pub operator: String,
}

/// Parameter values for one (module, operator) pair of a system configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterAssignment {
    pub module: String,
    pub operator: String,
    pub values: Vec<f64>,
}

/// The full parameter set U of a system configuration, sorted by (module, operator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct ParameterSet(pub Vec<ParameterAssignment>);

impl ParameterSet {
    pub fn values(&self, module: &str, operator: &str) -> Option<&[f64]> {
        self.0
            .iter()
            .find(|a| a.module == module && a.operator == operator)
            .map(|a| a.values.as_slice())
    }
}

/// Evaluation results attached to a system configuration by the evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationValues {
    pub total_effort: EffortVector,
    /// Normalized evaluation value per criterion, in [0, 1].
    pub scores: PerCriterion<f64>,
    /// Weighted utility, in [0, 1].
    pub utility: f64,
}

/// One candidate system configuration: sequence, layout, reconfiguration effort,
/// optimized parameters, production efforts and (once evaluated) scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfiguration {
    pub sequence: Vec<SequenceStep>,
    /// Location per placed module.
    pub layout: BTreeMap<String, u32>,
    pub reconfiguration_effort: EffortVector,
    pub parameters: ParameterSet,
    /// f_z at the optimized parameters.
    pub production_effort: EffortVector,
    #[serde(default)]
    pub evaluation: Option<EvaluationValues>,
}

/// Full scenario document (the single JSON input file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub modules: Vec<Cppm>,
    pub layout: LayoutGraph,
    pub order: ProductionOrder,
    #[serde(default)]
    pub process_models: Vec<crate::narx::NarxSpec>,
    #[serde(default)]
    pub optimizer: crate::optimizer::OptimizerSettings,
}

impl Scenario {
    pub fn module(&self, id: &str) -> Option<&Cppm> {
        self.modules.iter().find(|m| m.id == id)
    }

    pub fn process_model(&self, id: &str) -> Option<&crate::narx::NarxSpec> {
        self.process_models.iter().find(|m| m.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn satisfies_containment() {
        let actual = StateDescription::exact(&[("hole_depth", 5.0)]);
        let required = StateDescription(
            [("hole_depth".to_string(), PropertyValue::Interval([4.0, 6.0]))]
                .into_iter()
                .collect(),
        );
        assert!(state_satisfies(&actual, &required));
    }

    #[test]
    fn satisfies_outside_interval() {
        let actual = StateDescription::exact(&[("hole_depth", 7.0)]);
        let required = StateDescription(
            [("hole_depth".to_string(), PropertyValue::Interval([4.0, 6.0]))]
                .into_iter()
                .collect(),
        );
        assert!(!state_satisfies(&actual, &required));
    }

    #[test]
    fn satisfies_missing_property() {
        let actual = StateDescription::default();
        let required = StateDescription::exact(&[("coated", 1.0)]);
        assert!(!state_satisfies(&actual, &required));
    }

    #[test]
    fn extra_actual_properties_ignored() {
        let actual = StateDescription::exact(&[("coated", 1.0), ("drilled", 1.0)]);
        let required = StateDescription::exact(&[("coated", 1.0)]);
        assert!(state_satisfies(&actual, &required));
    }

    #[test]
    fn interval_containment_needs_full_inclusion() {
        let actual = StateDescription(
            [("w".to_string(), PropertyValue::Interval([3.0, 7.0]))]
                .into_iter()
                .collect(),
        );
        let required = StateDescription(
            [("w".to_string(), PropertyValue::Interval([4.0, 6.0]))]
                .into_iter()
                .collect(),
        );
        assert!(!state_satisfies(&actual, &required));
    }

    #[test]
    fn effort_vector_add_componentwise() {
        let a = EffortVector::new(3.0, 0.0, 1.0);
        let b = EffortVector::new(8.0, 10.0, 2.0);
        let s = a.add(&b);
        assert_eq!(s, EffortVector::new(11.0, 10.0, 3.0));
    }

    #[test]
    fn duration_model_affine() {
        let d = DurationModel { base: 4.0, coefficients: vec![-1.0] };
        assert_eq!(d.evaluate(&[2.0]), 2.0);
        assert_eq!(d.evaluate(&[0.5]), 3.5);
    }
}
