use std::collections::HashMap;

use super::{LinkIdx, Network};
use crate::events::{Event, EventKind, EventStreamError, VehicleRef};

/// Per-link, per-time-bin average traversal times.
///
/// Every stored value is at least the link's free-flow time; queries past the
/// last bin use the last bin.
#[derive(Clone, Debug, PartialEq)]
pub struct TravelTimeProfile {
    bin_width: f64,
    num_bins: usize,
    free_flow: Vec<f64>,
    times: Vec<f64>,
}

impl TravelTimeProfile {
    pub fn free_flow(net: &Network, bin_width: f64, horizon_s: f64) -> Self {
        assert!(bin_width > 0.0, "bin width must be positive");
        let num_bins = ((horizon_s / bin_width).ceil() as usize).max(1);
        let free_flow: Vec<f64> = net.links().iter().map(|l| l.free_flow_time()).collect();
        let times = free_flow
            .iter()
            .flat_map(|&ff| std::iter::repeat_n(ff, num_bins))
            .collect();
        TravelTimeProfile {
            bin_width,
            num_bins,
            free_flow,
            times,
        }
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    #[inline]
    pub fn bin_of(&self, t: f64) -> usize {
        if t <= 0.0 {
            0
        } else {
            ((t / self.bin_width) as usize).min(self.num_bins - 1)
        }
    }

    #[inline]
    pub fn travel_time(&self, link: LinkIdx, t: f64) -> f64 {
        self.times[link.index() * self.num_bins + self.bin_of(t)]
    }

    #[inline]
    pub fn bin_time(&self, link: LinkIdx, bin: usize) -> f64 {
        self.times[link.index() * self.num_bins + bin.min(self.num_bins - 1)]
    }

    pub fn free_flow_time(&self, link: LinkIdx) -> f64 {
        self.free_flow[link.index()]
    }

    /// Stores a bin value, clamped from below at free flow.
    pub fn set(&mut self, link: LinkIdx, bin: usize, value: f64) {
        let ff = self.free_flow[link.index()];
        self.times[link.index() * self.num_bins + bin] = value.max(ff);
    }
}

/// Rebuilds a profile from the link traversals of private cars in an event stream.
///
/// Fleet vehicles follow the profile they were dispatched with, so their
/// traversals carry no new information and are ignored. Each traversal is
/// attributed to the bin of its entry time.
pub fn update_travel_times(
    net: &Network,
    events: &[Event],
    bin_width: f64,
    horizon_s: f64,
) -> Result<TravelTimeProfile, EventStreamError> {
    let mut profile = TravelTimeProfile::free_flow(net, bin_width, horizon_s);
    let nb = profile.num_bins;
    let mut sums = vec![0.0f64; net.num_links() * nb];
    let mut counts = vec![0u32; net.num_links() * nb];
    let mut open: HashMap<VehicleRef, (LinkIdx, i64)> = HashMap::new();

    for ev in events {
        let (Some(vehicle), Some(link)) = (ev.vehicle, ev.link) else {
            continue;
        };
        match ev.kind {
            EventKind::LinkEnter => {
                open.insert(vehicle, (link, ev.time));
            }
            EventKind::LinkLeave => match open.remove(&vehicle) {
                Some((entered, t0)) if entered == link => {
                    if matches!(vehicle, VehicleRef::Car(_)) {
                        let k = link.index() * nb + profile.bin_of(t0 as f64);
                        sums[k] += (ev.time - t0) as f64;
                        counts[k] += 1;
                    }
                }
                _ => {
                    return Err(EventStreamError::LeaveWithoutEnter {
                        time: ev.time,
                        vehicle: vehicle.to_string(),
                        link: net.link(link).id.clone(),
                    })
                }
            },
            _ => {}
        }
    }

    for link in net.link_indices() {
        for bin in 0..nb {
            let k = link.index() * nb + bin;
            if counts[k] > 0 {
                profile.set(link, bin, sums[k] / counts[k] as f64);
            }
        }
    }
    Ok(profile)
}
