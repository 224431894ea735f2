use crate::ids::{AgvId, ArcId};

/// One measured traversal of an arc.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversalObservation {
    pub arc: ArcId,
    pub agv: AgvId,
    /// Seconds since epoch 0 (mission start).
    pub start_time: f64,
    /// Seconds.
    pub duration: f64,
}

impl TraversalObservation {
    pub fn new(
        arc: impl Into<ArcId>,
        agv: impl Into<AgvId>,
        start_time: f64,
        duration: f64,
    ) -> Self {
        Self {
            arc: arc.into(),
            agv: agv.into(),
            start_time,
            duration,
        }
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration
    }
}
