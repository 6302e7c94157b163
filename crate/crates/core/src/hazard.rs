//! Hazard checks on ground truth.
//!
//! H1: safety distance to the lead violated. H2: full stop with no lead in
//! range. H3: vehicle body leaves the lane.

use serde::{Deserialize, Serialize};

use crate::plant::WorldState;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HazardKind {
    H1,
    H2,
    H3,
}

impl HazardKind {
    pub const ALL: [HazardKind; 3] = [HazardKind::H1, HazardKind::H2, HazardKind::H3];

    pub fn as_str(self) -> &'static str {
        match self {
            HazardKind::H1 => "H1",
            HazardKind::H2 => "H2",
            HazardKind::H3 => "H3",
        }
    }

    /// Accident class the hazard may lead to.
    pub fn accident(self) -> &'static str {
        match self {
            HazardKind::H1 => "A1 rear-end collision",
            HazardKind::H2 => "A2 congestion / trailing collision",
            HazardKind::H3 => "A3 side collision",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct HazardEvent<T> {
    pub kind: HazardKind,
    pub t: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazardParams {
    pub d_min: f64,
    pub v_stop: f64,
    pub d_far: f64,
    pub warmup: f64,
    pub vehicle_half_width: f64,
}

impl Default for HazardParams {
    fn default() -> Self {
        Self {
            d_min: 2.0,
            v_stop: 0.5,
            d_far: 100.0,
            warmup: 1.0,
            vehicle_half_width: 0.9,
        }
    }
}

pub fn check_h1<T: Scalar>(world: &WorldState<T>, p: &HazardParams) -> bool {
    world.relative_distance().is_some_and(|d| d <= T::lit(p.d_min))
}

pub fn check_h2<T: Scalar>(world: &WorldState<T>, p: &HazardParams) -> bool {
    let no_lead_in_range = world.relative_distance().is_none_or(|d| d > T::lit(p.d_far));
    world.host_speed < T::lit(p.v_stop) && no_lead_in_range && world.t > T::lit(p.warmup)
}

pub fn check_h3<T: Scalar>(world: &WorldState<T>, p: &HazardParams) -> bool {
    world.lat_offset.abs() > world.lane_half_width - T::lit(p.vehicle_half_width)
}

pub fn is_collision<T: Scalar>(world: &WorldState<T>) -> bool {
    world.relative_distance().is_some_and(|d| d <= T::zero())
}

/// First-occurrence registry for one run.
#[derive(Debug, Clone)]
pub struct HazardMonitor<T> {
    params: HazardParams,
    first: [Option<T>; 3],
    collision: Option<T>,
}

impl<T: Scalar> HazardMonitor<T> {
    pub fn new(params: HazardParams) -> Self {
        Self {
            params,
            first: [None; 3],
            collision: None,
        }
    }

    /// Checks all hazards and returns the ones seen for the first time.
    pub fn observe(&mut self, world: &WorldState<T>) -> Vec<HazardEvent<T>> {
        let flags = [
            check_h1(world, &self.params),
            check_h2(world, &self.params),
            check_h3(world, &self.params),
        ];
        let mut fresh = Vec::new();
        for (kind, flag) in HazardKind::ALL.into_iter().zip(flags) {
            let slot = &mut self.first[kind as usize];
            if flag && slot.is_none() {
                *slot = Some(world.t);
                fresh.push(HazardEvent { kind, t: world.t });
            }
        }
        if self.collision.is_none() && is_collision(world) {
            self.collision = Some(world.t);
        }
        fresh
    }

    pub fn first_occurrence(&self, kind: HazardKind) -> Option<T> {
        self.first[kind as usize]
    }

    pub fn collision(&self) -> Option<T> {
        self.collision
    }

    /// Hazard events in kind order.
    pub fn events(&self) -> Vec<HazardEvent<T>> {
        HazardKind::ALL
            .iter()
            .filter_map(|&kind| self.first_occurrence(kind).map(|t| HazardEvent { kind, t }))
            .collect()
    }
}
