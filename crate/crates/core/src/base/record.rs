use super::field::MeanField;

/// One outer iteration of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub k: usize,
    pub mean_field: MeanField,
    pub mean_state: f64,
    /// `‖z_k - z_{k-1}‖₁`, zero for the initial record.
    pub l1_to_previous: f64,
    pub l1_to_reference: Option<f64>,
    /// Cumulative environment samples consumed up to and including iteration `k`.
    pub samples: u64,
    /// Fingerprint of the strategy that generated this mean field (online solver).
    pub acting_strategy: Option<u64>,
    /// Fingerprint of the strategy learned in this iteration (online solver).
    pub learned_strategy: Option<u64>,
}

impl RunRecord {
    pub fn new(k: usize, mean_field: MeanField, previous: Option<&MeanField>, reference: Option<&MeanField>, samples: u64) -> Self {
        let l1_to_previous = previous.map_or(0.0, |p| l1(&mean_field, p));
        let l1_to_reference = reference.map(|r| l1(&mean_field, r));
        Self {
            k,
            mean_state: mean_field.mean_state(),
            mean_field,
            l1_to_previous,
            l1_to_reference,
            samples,
            acting_strategy: None,
            learned_strategy: None,
        }
    }
}

fn l1(a: &MeanField, b: &MeanField) -> f64 {
    a.l1_distance(b).expect("trace fields share one state space")
}
