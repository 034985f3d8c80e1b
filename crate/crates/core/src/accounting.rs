//! Service accounting: a per-flow cost expressed in service quanta.
//!
//! A flow's cost is the weighted sum of five observable components —
//! urgency, energy, distance traveled, signaling effort, and content
//! quality.  Operators tune the weights; the component order and meaning
//! are fixed so costs stay comparable across runs and tools.

use core::fmt;

use crate::vnode::{LoadReport, TrafficFlow};

/// One flow's measured cost components, all non-negative by convention.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SquVector {
    pub data_urgency: f64,
    pub energy_cost: f64,
    pub distance_to_destination: f64,
    pub signaling_cost: f64,
    pub content_quality: f64,
}

/// Operator-chosen weights, one per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquWeights {
    pub data_urgency: f64,
    pub energy_cost: f64,
    pub distance_to_destination: f64,
    pub signaling_cost: f64,
    pub content_quality: f64,
}

impl Default for SquWeights {
    /// Every component counts equally until an operator says otherwise.
    fn default() -> Self {
        SquWeights {
            data_urgency: 1.0,
            energy_cost: 1.0,
            distance_to_destination: 1.0,
            signaling_cost: 1.0,
            content_quality: 1.0,
        }
    }
}

/// The cost in service quanta: the weighted sum over the five components,
/// in their declared order.
pub fn compute_squ(v: &SquVector, w: &SquWeights) -> f64 {
    v.data_urgency * w.data_urgency
        + v.energy_cost * w.energy_cost
        + v.distance_to_destination * w.distance_to_destination
        + v.signaling_cost * w.signaling_cost
        + v.content_quality * w.content_quality
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingParams {
    /// Signaling charged for setting up one flow.
    pub signaling_setup_cost: f64,
}

impl Default for PricingParams {
    fn default() -> Self {
        PricingParams {
            signaling_setup_cost: 1.0,
        }
    }
}

/// Price a routed flow from its load-report footprint: distance is the
/// backbone hop count, signaling is the setup charge, and the components
/// the simulator does not model stay zero.
pub fn price_flow(
    flow: &TrafficFlow,
    report: &LoadReport,
    weights: &SquWeights,
    params: &PricingParams,
) -> Result<f64, AccountingError> {
    let hops = report
        .per_flow_hops
        .get(&flow.flow_id)
        .ok_or(AccountingError::UnroutedFlow {
            flow_id: flow.flow_id,
        })?;
    let v = SquVector {
        distance_to_destination: *hops as f64,
        signaling_cost: params.signaling_setup_cost,
        ..SquVector::default()
    };
    Ok(compute_squ(&v, weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccountingError {
    /// The flow never appeared in the load report it is being priced from.
    UnroutedFlow { flow_id: u32 },
}

impl fmt::Display for AccountingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccountingError::UnroutedFlow { flow_id } => {
                write!(f, "flow {flow_id} was never routed")
            }
        }
    }
}

impl core::error::Error for AccountingError {}
