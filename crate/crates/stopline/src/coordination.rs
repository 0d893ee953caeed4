//! Sample-aligned outflow exchange between neighboring controllers.
//!
//! After a controller accepts a plan, each scheduled cluster member gets a
//! concrete stop-line crossing time, and adding the link travel time gives
//! its arrival at the downstream intersection. Senders package those
//! arrivals per sample and per exit link; receivers splice sample `j` of
//! every incoming message into their own sample `j`, so a downstream
//! controller optimizes against the same joint turn realizations its
//! neighbor already committed to, rather than an uncorrelated average.
//!
//! Exchange is a synchronous round: all controllers decide on the messages
//! published in the previous round, so the information is one decision old.
//! The receiver re-draws its own turn uncertainty for projected vehicles;
//! only their arrival times and identities travel across the link.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{IntersectionId, RoadId, VehicleId};
use crate::sampler::DetectedVehicle;
use crate::scheduler::{ClusterSchedule, Fragment};

use crate::model::InflowSample;

#[derive(Debug, Error)]
pub enum CoordinationError {
    #[error("message from {from} on link {link} carries {got} samples, expected {want}")]
    SampleCountMismatch { from: IntersectionId, link: RoadId, got: usize, want: usize },
    #[error("no travel time known for incoming link {0}")]
    UnknownLink(RoadId),
}

/// One vehicle an upstream neighbor expects to send down a link.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ProjectedVehicle {
    pub id: VehicleId,
    /// Arrival at the receiving intersection's stop line, absolute seconds.
    pub arrival: f64,
    pub weight: f64,
}

/// Per-sample arrival projections for one exit link of one sender.
#[derive(Clone, PartialEq, Debug)]
pub struct OutflowMessage {
    pub from: IntersectionId,
    pub link: RoadId,
    /// `per_sample[j]` pairs with sample `j` at the receiver.
    pub per_sample: Vec<Vec<ProjectedVehicle>>,
}

/// Crossing time of a given service offset within a cluster's fragments.
/// Offsets run over `[0, cluster length]` along the concatenated fragments.
fn departure_at(frags: &[Fragment], offset: f64) -> f64 {
    let mut consumed = 0.0;
    for (i, f) in frags.iter().enumerate() {
        if offset < consumed + f.length || i + 1 == frags.len() {
            return f.start + (offset - consumed).max(0.0).min(f.length);
        }
        consumed += f.length;
    }
    debug_assert!(frags.is_empty(), "offset {offset} beyond fragments");
    f64::NAN
}

/// Projects a dispatch schedule into per-link outflow messages.
///
/// Cluster members are served in stored (arrival) order, each at the service
/// offset where its share of the cluster's weight begins; a member of weight
/// `w` in a cluster of weight `W` and length `l` occupies `w * l / W`
/// seconds of stop-line time. Links absent from `travel_times` lead out of
/// the modeled network and are skipped. Message and vehicle order are
/// deterministic: links ascend, vehicles follow service order.
pub fn project_outflows(
    schedule: &ClusterSchedule,
    samples: &[InflowSample],
    from: IntersectionId,
    travel_times: &BTreeMap<RoadId, f64>,
) -> Vec<OutflowMessage> {
    let n = samples.len();
    let mut per_link: BTreeMap<RoadId, Vec<Vec<ProjectedVehicle>>> = BTreeMap::new();
    for (s, (frag_phases, sample)) in schedule.per_sample.iter().zip(samples).enumerate() {
        for (frag_clusters, clusters) in frag_phases.iter().zip(&sample.per_phase) {
            for (frags, cluster) in frag_clusters.iter().zip(clusters) {
                if cluster.count <= 0.0 || cluster.length <= 0.0 {
                    continue;
                }
                let per_weight = cluster.length / cluster.count;
                let mut cum = 0.0;
                for m in &cluster.members {
                    let offset = cum * per_weight;
                    cum += m.weight;
                    let Some(&travel) = travel_times.get(&m.exit) else { continue };
                    let departure = departure_at(frags, offset);
                    per_link.entry(m.exit).or_insert_with(|| vec![Vec::new(); n])[s].push(
                        ProjectedVehicle {
                            id: m.vehicle,
                            arrival: departure + travel,
                            weight: m.weight,
                        },
                    );
                }
            }
        }
    }
    per_link
        .into_iter()
        .map(|(link, mut per_sample)| {
            for vehicles in &mut per_sample {
                vehicles.sort_by(|a, b| a.arrival.total_cmp(&b.arrival).then(a.id.cmp(&b.id)));
            }
            OutflowMessage { from, link, per_sample }
        })
        .collect()
}

/// How far past a link's minimum travel time projected arrivals are still
/// worth planning against, seconds.
pub const PROJECTION_EXTENSION: f64 = 20.0;

/// Splices neighbor projections into the local observation, one list per
/// sample.
///
/// Per sample `j`, the result is the local detections plus message sample
/// `j` of every incoming link, filtered to arrivals within `now + travel +
/// extension` of that link. A projected vehicle whose id is already detected
/// locally is dropped (the local observation is fresher), and arrivals are
/// clamped to `now` so one-round-old messages cannot claim the past. Lists
/// are sorted by arrival then id, making downstream turn draws reproducible.
pub fn merge_nonlocal(
    local: &[DetectedVehicle],
    messages: &[OutflowMessage],
    travel_times: &BTreeMap<RoadId, f64>,
    now: f64,
    n_samples: usize,
    extension: f64,
) -> Result<Vec<Vec<DetectedVehicle>>, CoordinationError> {
    let known: std::collections::BTreeSet<VehicleId> = local.iter().map(|v| v.id).collect();
    let mut merged = vec![local.to_vec(); n_samples];
    for msg in messages {
        if msg.per_sample.len() != n_samples {
            return Err(CoordinationError::SampleCountMismatch {
                from: msg.from,
                link: msg.link,
                got: msg.per_sample.len(),
                want: n_samples,
            });
        }
        let travel =
            *travel_times.get(&msg.link).ok_or(CoordinationError::UnknownLink(msg.link))?;
        let horizon = now + travel + extension;
        for (j, vehicles) in msg.per_sample.iter().enumerate() {
            for v in vehicles {
                if v.arrival > horizon || known.contains(&v.id) {
                    continue;
                }
                merged[j].push(DetectedVehicle {
                    id: v.id,
                    entry: msg.link,
                    eta: v.arrival.max(now),
                    weight: v.weight,
                });
            }
        }
    }
    for list in &mut merged {
        list.sort_by(|a, b| a.eta.total_cmp(&b.eta).then(a.id.cmp(&b.id)));
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cluster, ClusterMember};

    fn member(id: u64, eta: f64, exit: u32, weight: f64) -> ClusterMember {
        ClusterMember { vehicle: VehicleId(id), eta, exit: RoadId(exit), weight }
    }

    fn one_cluster_schedule(
        frags: Vec<Fragment>,
        members: Vec<ClusterMember>,
    ) -> (ClusterSchedule, Vec<InflowSample>) {
        let count: f64 = members.iter().map(|m| m.weight).sum();
        let arrival = members.first().map_or(0.0, |m| m.eta);
        let length: f64 = frags.iter().map(|f| f.length).sum();
        let cluster = Cluster { arrival, length, count, members };
        let schedule = ClusterSchedule { per_sample: vec![vec![vec![frags]]] };
        let samples = vec![InflowSample { per_phase: vec![vec![cluster]] }];
        (schedule, samples)
    }

    fn links(entries: &[(u32, f64)]) -> BTreeMap<RoadId, f64> {
        entries.iter().map(|&(r, t)| (RoadId(r), t)).collect()
    }

    #[test]
    fn service_order_spaces_departures_across_one_fragment() {
        // Three unit-weight vehicles in a 7.5 s cluster dispatched whole at
        // t=10 on a 30 s link: crossings 10, 12.5, 15; arrivals 40, 42.5, 45.
        let frags = vec![Fragment { start: 10.0, length: 7.5, slot: Some(0) }];
        let members =
            vec![member(1, 3.0, 7, 1.0), member(2, 4.0, 7, 1.0), member(3, 5.0, 7, 1.0)];
        let (schedule, samples) = one_cluster_schedule(frags, members);
        let msgs =
            project_outflows(&schedule, &samples, IntersectionId(0), &links(&[(7, 30.0)]));
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].link, RoadId(7));
        let arrivals: Vec<f64> = msgs[0].per_sample[0].iter().map(|v| v.arrival).collect();
        assert_eq!(arrivals, vec![40.0, 42.5, 45.0]);
    }

    #[test]
    fn split_clusters_put_late_offsets_into_later_fragments() {
        // 7.5 s cluster split 4 + 3.5: offsets 0 and 2.5 cross in the first
        // fragment, offset 5 crosses 1 s into the second.
        let frags = vec![
            Fragment { start: 10.0, length: 4.0, slot: Some(0) },
            Fragment { start: 20.0, length: 3.5, slot: Some(2) },
        ];
        let members =
            vec![member(1, 3.0, 7, 1.0), member(2, 4.0, 7, 1.0), member(3, 5.0, 7, 1.0)];
        let (schedule, samples) = one_cluster_schedule(frags, members);
        let msgs =
            project_outflows(&schedule, &samples, IntersectionId(0), &links(&[(7, 30.0)]));
        let arrivals: Vec<f64> = msgs[0].per_sample[0].iter().map(|v| v.arrival).collect();
        assert_eq!(arrivals, vec![40.0, 42.5, 51.0]);
    }

    #[test]
    fn members_split_by_exit_into_separate_link_messages() {
        let frags = vec![Fragment { start: 0.0, length: 5.0, slot: Some(0) }];
        let members = vec![member(1, 0.0, 7, 1.0), member(2, 1.0, 9, 1.0)];
        let (schedule, samples) = one_cluster_schedule(frags, members);
        let msgs = project_outflows(
            &schedule,
            &samples,
            IntersectionId(3),
            &links(&[(7, 30.0), (9, 12.0)]),
        );
        assert_eq!(msgs.len(), 2);
        assert_eq!((msgs[0].link, msgs[1].link), (RoadId(7), RoadId(9)));
        assert_eq!(msgs[0].per_sample[0][0].id, VehicleId(1));
        assert_eq!(msgs[1].per_sample[0][0].id, VehicleId(2));
        assert_eq!(msgs[1].per_sample[0][0].arrival, 2.5 + 12.0);
        assert!(msgs.iter().all(|m| m.from == IntersectionId(3)));
    }

    #[test]
    fn exits_leaving_the_network_are_not_projected() {
        let frags = vec![Fragment { start: 0.0, length: 2.5, slot: Some(0) }];
        let members = vec![member(1, 0.0, 42, 1.0)];
        let (schedule, samples) = one_cluster_schedule(frags, members);
        let msgs = project_outflows(&schedule, &samples, IntersectionId(0), &links(&[(7, 30.0)]));
        assert!(msgs.is_empty());
    }

    #[test]
    fn fractional_weights_share_the_service_profile() {
        // Expected-traffic copies: 0.6 toward link 7, 0.4 toward link 9,
        // from a cluster of total weight 1 and length 2.5. The second copy
        // starts after the first's 0.6 share: offset 1.5.
        let frags = vec![Fragment { start: 10.0, length: 2.5, slot: Some(0) }];
        let members = vec![member(1, 0.0, 7, 0.6), member(1, 0.0, 9, 0.4)];
        let (schedule, samples) = one_cluster_schedule(frags, members);
        let msgs = project_outflows(
            &schedule,
            &samples,
            IntersectionId(0),
            &links(&[(7, 30.0), (9, 30.0)]),
        );
        assert_eq!(msgs[0].per_sample[0][0].arrival, 40.0);
        assert_eq!(msgs[0].per_sample[0][0].weight, 0.6);
        assert_eq!(msgs[1].per_sample[0][0].arrival, 10.0 + 1.5 + 30.0);
        assert_eq!(msgs[1].per_sample[0][0].weight, 0.4);
    }

    #[test]
    fn merge_filters_to_the_link_horizon() {
        let msg = OutflowMessage {
            from: IntersectionId(1),
            link: RoadId(7),
            per_sample: vec![vec![
                ProjectedVehicle { id: VehicleId(10), arrival: 45.0, weight: 1.0 },
                ProjectedVehicle { id: VehicleId(11), arrival: 200.0, weight: 1.0 },
            ]],
        };
        let merged =
            merge_nonlocal(&[], &[msg], &links(&[(7, 30.0)]), 0.0, 1, PROJECTION_EXTENSION)
                .unwrap();
        // Horizon is 0 + 30 + 20 = 50: the 45 s arrival passes, 200 s drops.
        assert_eq!(merged[0].len(), 1);
        assert_eq!(merged[0][0].id, VehicleId(10));
        assert_eq!(merged[0][0].entry, RoadId(7));
    }

    #[test]
    fn merge_prefers_the_local_observation_and_clamps_stale_arrivals() {
        let local = vec![DetectedVehicle {
            id: VehicleId(10),
            entry: RoadId(3),
            eta: 12.0,
            weight: 1.0,
        }];
        let msg = OutflowMessage {
            from: IntersectionId(1),
            link: RoadId(7),
            per_sample: vec![vec![
                // Same id as the local detection: dropped.
                ProjectedVehicle { id: VehicleId(10), arrival: 14.0, weight: 1.0 },
                // Arrival before now: clamped up to now.
                ProjectedVehicle { id: VehicleId(11), arrival: 8.0, weight: 1.0 },
            ]],
        };
        let merged =
            merge_nonlocal(&local, &[msg], &links(&[(7, 30.0)]), 10.0, 1, PROJECTION_EXTENSION)
                .unwrap();
        assert_eq!(merged[0].len(), 2);
        assert_eq!(merged[0][0].id, VehicleId(11));
        assert_eq!(merged[0][0].eta, 10.0);
        assert_eq!(merged[0][1].entry, RoadId(3));
    }

    #[test]
    fn merge_splices_sample_j_with_sample_j() {
        let msg = OutflowMessage {
            from: IntersectionId(1),
            link: RoadId(7),
            per_sample: vec![
                vec![ProjectedVehicle { id: VehicleId(1), arrival: 20.0, weight: 1.0 }],
                vec![ProjectedVehicle { id: VehicleId(2), arrival: 25.0, weight: 1.0 }],
            ],
        };
        let merged =
            merge_nonlocal(&[], &[msg], &links(&[(7, 30.0)]), 0.0, 2, PROJECTION_EXTENSION)
                .unwrap();
        assert_eq!(merged[0][0].id, VehicleId(1));
        assert_eq!(merged[1][0].id, VehicleId(2));
    }

    #[test]
    fn merge_rejects_sample_count_mismatches() {
        let msg = OutflowMessage {
            from: IntersectionId(1),
            link: RoadId(7),
            per_sample: vec![Vec::new()],
        };
        let err = merge_nonlocal(&[], &[msg], &links(&[(7, 30.0)]), 0.0, 4, PROJECTION_EXTENSION)
            .unwrap_err();
        assert!(matches!(err, CoordinationError::SampleCountMismatch { got: 1, want: 4, .. }));
    }
}
