use serde_json::{json, Map, Value};

use crate::densities::FlowEquation;
use crate::hamiltonian::Hamiltonian;
use crate::syntax::parse_expr;
use crate::Expr;

use super::{
    hodograph, point_substitute, potential_form, push_flow, reciprocal, special, special_flow, transform_hamiltonian,
    PointTransform, Special, TransformError,
};

#[derive(Clone, Debug, PartialEq)]
pub enum TrailStep {
    Special(Special),
    Point(PointTransform),
    Reciprocal { rho: Expr, theta: Expr },
    PointSubstitute { f: Expr },
    Potential,
    Hodograph,
}

impl TrailStep {
    pub fn name(&self) -> &'static str {
        match self {
            TrailStep::Special(Special::Dilatation { .. }) => "dilatation",
            TrailStep::Special(Special::Galilean { .. }) => "galilean",
            TrailStep::Special(Special::ShiftCt { .. }) => "shift_ct",
            TrailStep::Point(_) => "point",
            TrailStep::Reciprocal { .. } => "reciprocal",
            TrailStep::PointSubstitute { .. } => "point_substitute",
            TrailStep::Potential => "potential",
            TrailStep::Hodograph => "hodograph",
        }
    }

    /// Whether the step maps Hamiltonians to Hamiltonians.
    pub fn is_hamiltonian(&self) -> bool {
        matches!(self, TrailStep::Special(_) | TrailStep::Point(_))
    }

    pub fn apply_hamiltonian(&self, h: &Hamiltonian) -> Result<Hamiltonian, TransformError> {
        match self {
            TrailStep::Special(s) => special(s, h),
            TrailStep::Point(t) => transform_hamiltonian(h, t),
            other => Err(TransformError::Precondition(format!("{} acts on equations only", other.name()))),
        }
    }

    pub fn apply_flow(&self, f: &FlowEquation) -> Result<FlowEquation, TransformError> {
        match self {
            TrailStep::Special(s) => special_flow(s, f),
            TrailStep::Point(t) => push_flow(f, t),
            TrailStep::Reciprocal { rho, theta } => reciprocal(f, rho, theta),
            TrailStep::PointSubstitute { f: g } => point_substitute(f, g),
            TrailStep::Potential => potential_form(f),
            TrailStep::Hodograph => hodograph(f),
        }
    }

    pub fn to_json(&self) -> Value {
        let s = |e: &Expr| Value::String(e.to_string());
        let mut m = Map::new();
        m.insert("kind".into(), json!(self.name()));
        match self {
            TrailStep::Special(Special::Dilatation { alpha, beta, gamma }) => {
                m.insert("alpha".into(), s(alpha));
                m.insert("beta".into(), s(beta));
                m.insert("gamma".into(), s(gamma));
            }
            TrailStep::Special(Special::Galilean { c }) | TrailStep::Special(Special::ShiftCt { c }) => {
                m.insert("c".into(), s(c));
            }
            TrailStep::Point(t) => {
                m.insert("phi".into(), s(&t.phi));
                m.insert("psi".into(), s(&t.psi));
            }
            TrailStep::Reciprocal { rho, theta } => {
                m.insert("rho".into(), s(rho));
                m.insert("theta".into(), s(theta));
            }
            TrailStep::PointSubstitute { f } => {
                m.insert("f".into(), s(f));
            }
            TrailStep::Potential | TrailStep::Hodograph => {}
        }
        Value::Object(m)
    }

    pub fn from_json(v: &Value) -> Result<Self, TransformError> {
        let err = |m: String| TransformError::Trail(m);
        let obj = v.as_object().ok_or_else(|| err("trail step must be an object".into()))?;
        let field = |k: &str| -> Result<Expr, TransformError> {
            let src = obj.get(k).and_then(Value::as_str).ok_or_else(|| err(format!("missing string field `{k}`")))?;
            parse_expr(src).map_err(|e| err(format!("field `{k}`: {e}")))
        };
        let kind = obj.get("kind").and_then(Value::as_str).ok_or_else(|| err("missing `kind`".into()))?;
        Ok(match kind {
            "dilatation" => TrailStep::Special(Special::Dilatation {
                alpha: field("alpha")?,
                beta: field("beta")?,
                gamma: field("gamma")?,
            }),
            "galilean" => TrailStep::Special(Special::Galilean { c: field("c")? }),
            "shift_ct" => TrailStep::Special(Special::ShiftCt { c: field("c")? }),
            "point" => TrailStep::Point(PointTransform::new(field("phi")?, field("psi")?)?),
            "reciprocal" => TrailStep::Reciprocal { rho: field("rho")?, theta: field("theta")? },
            "point_substitute" => TrailStep::PointSubstitute { f: field("f")? },
            "potential" => TrailStep::Potential,
            "hodograph" => TrailStep::Hodograph,
            k => return Err(err(format!("unknown step kind `{k}`"))),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransformTrail {
    pub steps: Vec<TrailStep>,
}

impl TransformTrail {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: TrailStep) {
        self.steps.push(step);
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn replay_hamiltonian(&self, h: &Hamiltonian) -> Result<Hamiltonian, TransformError> {
        self.steps.iter().try_fold(h.clone(), |h, s| s.apply_hamiltonian(&h))
    }

    pub fn replay_flow(&self, f: &FlowEquation) -> Result<FlowEquation, TransformError> {
        self.steps.iter().try_fold(f.clone(), |f, s| s.apply_flow(&f))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.steps.iter().map(TrailStep::to_json).collect())
    }

    pub fn from_json(v: &Value) -> Result<Self, TransformError> {
        let arr = v.as_array().ok_or_else(|| TransformError::Trail("trail must be an array".into()))?;
        Ok(TransformTrail { steps: arr.iter().map(TrailStep::from_json).collect::<Result<_, _>>()? })
    }
}
