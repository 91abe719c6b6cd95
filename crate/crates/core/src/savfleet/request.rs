use serde::{Deserialize, Serialize};

use crate::network::LinkIdx;
use crate::Time;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestStatus {
    Submitted,
    Scheduled,
    PickedUp,
    Completed,
    Rejected,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("request {id}: illegal transition {from:?} -> {to:?}")]
pub struct IllegalTransition {
    pub id: u32,
    pub from: RequestStatus,
    pub to: RequestStatus,
}

/// One on-demand trip.
#[derive(Clone, Debug, PartialEq)]
pub struct Request {
    pub id: u32,
    pub person: u32,
    pub origin: LinkIdx,
    pub dest: LinkIdx,
    pub submit_time: Time,
    /// Unshared drive time estimated at submission.
    pub direct_time: Time,
    /// Length of the unshared route estimated at submission, meters.
    pub direct_distance: f64,
    pub status: RequestStatus,
    pub vehicle: Option<u32>,
    /// Accepted under the extended-detour tier (ride above the detour cap).
    pub extended: bool,
    /// Upper bound on ride time once accepted.
    pub max_ride: f64,
    pub pickup_time: Option<Time>,
    pub dropoff_time: Option<Time>,
}

impl Request {
    pub fn new(
        id: u32,
        person: u32,
        origin: LinkIdx,
        dest: LinkIdx,
        submit_time: Time,
        direct_time: Time,
        direct_distance: f64,
    ) -> Self {
        Request {
            id,
            person,
            origin,
            dest,
            submit_time,
            direct_time,
            direct_distance,
            status: RequestStatus::Submitted,
            vehicle: None,
            extended: false,
            max_ride: f64::INFINITY,
            pickup_time: None,
            dropoff_time: None,
        }
    }

    fn advance(&mut self, to: RequestStatus) -> Result<(), IllegalTransition> {
        use RequestStatus::*;
        let ok = matches!(
            (self.status, to),
            (Submitted, Scheduled) | (Submitted, Rejected) | (Scheduled, PickedUp) | (PickedUp, Completed)
        );
        if !ok {
            return Err(IllegalTransition {
                id: self.id,
                from: self.status,
                to,
            });
        }
        self.status = to;
        Ok(())
    }

    pub fn schedule(&mut self, vehicle: u32, max_ride: f64, extended: bool) -> Result<(), IllegalTransition> {
        self.advance(RequestStatus::Scheduled)?;
        self.vehicle = Some(vehicle);
        self.max_ride = max_ride;
        self.extended = extended;
        Ok(())
    }

    /// Rejection is only possible straight after submission.
    pub fn reject(&mut self) -> Result<(), IllegalTransition> {
        self.advance(RequestStatus::Rejected)
    }

    pub fn pick_up(&mut self, t: Time) -> Result<(), IllegalTransition> {
        self.advance(RequestStatus::PickedUp)?;
        self.pickup_time = Some(t);
        Ok(())
    }

    pub fn complete(&mut self, t: Time) -> Result<(), IllegalTransition> {
        self.advance(RequestStatus::Completed)?;
        self.dropoff_time = Some(t);
        Ok(())
    }
}
