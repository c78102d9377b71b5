//! Single-source shortest paths over one airplane type's routes.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{AirNetwork, AirplaneType, AirportId, PlaneTypeId, Route};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Sum of flight times.
    #[default]
    Time,
    /// Sum of flight costs.
    Cost,
}

impl Metric {
    pub fn weight(self, route: &Route) -> f64 {
        match self {
            Metric::Time => f64::from(route.flight_time),
            Metric::Cost => route.flight_cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Airports visited after the origin; empty when origin equals target.
    pub hops: Vec<AirportId>,
    pub total: f64,
}

#[derive(Clone)]
struct Label {
    total: f64,
    secondary: f64,
    nodes: Vec<AirportId>,
}

impl Label {
    fn better_than(&self, other: &Label) -> bool {
        match self.total.total_cmp(&other.total).then(self.secondary.total_cmp(&other.secondary)) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.nodes < other.nodes,
        }
    }
}

/// Dijkstra from `from` with (primary, secondary) edge weights given by
/// `weight`; routes mapped to `None` are skipped. Remaining ties are broken
/// by the lexicographically smallest airport sequence. Returns the best
/// label for every reachable airport.
fn labels(
    net: &AirNetwork,
    plane_type: PlaneTypeId,
    from: AirportId,
    weight: &dyn Fn(&Route) -> Option<(f64, f64)>,
) -> BTreeMap<AirportId, Label> {
    let mut best: BTreeMap<AirportId, Label> = BTreeMap::new();
    let mut settled: BTreeMap<AirportId, Label> = BTreeMap::new();
    best.insert(from, Label { total: 0.0, secondary: 0.0, nodes: vec![from] });
    loop {
        let next = best
            .iter()
            .filter(|(a, _)| !settled.contains_key(a))
            .min_by(|a, b| {
                if a.1.better_than(b.1) {
                    Ordering::Less
                } else if b.1.better_than(a.1) {
                    Ordering::Greater
                } else {
                    Ordering::Equal
                }
            })
            .map(|(a, l)| (*a, l.clone()));
        let Some((node, label)) = next else { break };
        for route in net.routes_from(node, plane_type) {
            let Some((w, w2)) = weight(route) else { continue };
            if settled.contains_key(&route.to) {
                continue;
            }
            let mut nodes = label.nodes.clone();
            nodes.push(route.to);
            let cand = Label { total: label.total + w, secondary: label.secondary + w2, nodes };
            match best.get(&route.to) {
                Some(cur) if !cand.better_than(cur) => {}
                _ => {
                    best.insert(route.to, cand);
                }
            }
        }
        settled.insert(node, label);
    }
    settled
}

/// Minimum path under a lexicographic (primary, secondary) weight;
/// `Path::total` reports the primary sum.
pub fn shortest_path_lex(
    net: &AirNetwork,
    plane_type: PlaneTypeId,
    from: AirportId,
    to: AirportId,
    weight: &dyn Fn(&Route) -> Option<(f64, f64)>,
) -> Option<Path> {
    if from == to {
        return Some(Path { hops: Vec::new(), total: 0.0 });
    }
    let label = labels(net, plane_type, from, weight).remove(&to)?;
    Some(Path { hops: label.nodes[1..].to_vec(), total: label.total })
}

pub fn shortest_path_by(
    net: &AirNetwork,
    plane_type: PlaneTypeId,
    from: AirportId,
    to: AirportId,
    weight: &dyn Fn(&Route) -> Option<f64>,
) -> Option<Path> {
    shortest_path_lex(net, plane_type, from, to, &|r| weight(r).map(|w| (w, 0.0)))
}

/// Minimum-metric path over currently available routes of `plane_type`;
/// `None` when the target is unreachable.
pub fn shortest_path(
    net: &AirNetwork,
    plane_type: PlaneTypeId,
    from: AirportId,
    to: AirportId,
    metric: Metric,
) -> Option<Path> {
    shortest_path_by(net, plane_type, from, to, &|r| r.available.then(|| metric.weight(r)))
}

/// Like [`shortest_path`] but ignoring route availability.
pub fn static_shortest_path(
    net: &AirNetwork,
    plane_type: PlaneTypeId,
    from: AirportId,
    to: AirportId,
    metric: Metric,
) -> Option<Path> {
    shortest_path_by(net, plane_type, from, to, &|r| Some(metric.weight(r)))
}

/// Steps for one airplane to carry cargo from `source` to `destination` on
/// the static network: flight time plus one processing period per landing
/// and one at pickup, minimized over types able to lift `weight`.
pub fn fastest_delivery_time(
    net: &AirNetwork,
    types: &[AirplaneType],
    source: AirportId,
    destination: AirportId,
    weight: f64,
) -> Option<u32> {
    types
        .iter()
        .filter(|t| t.max_capacity >= weight)
        .filter_map(|t| {
            let p = f64::from(t.processing_time);
            let path = shortest_path_by(net, t.id, source, destination, &|r| Some(f64::from(r.flight_time) + p))?;
            Some(path.total as u32 + t.processing_time)
        })
        .min()
}

/// Cheapest single-type flight cost from `source` to `destination` on the
/// static network.
pub fn min_delivery_cost(
    net: &AirNetwork,
    types: &[AirplaneType],
    source: AirportId,
    destination: AirportId,
) -> Option<f64> {
    types
        .iter()
        .filter_map(|t| static_shortest_path(net, t.id, source, destination, Metric::Cost).map(|p| p.total))
        .min_by(f64::total_cmp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Airport, Point, RouteKey, Zone};

    fn ty() -> AirplaneType {
        AirplaneType {
            id: PlaneTypeId(0),
            name: String::new(),
            speed: 1.0,
            max_range: 100.0,
            max_capacity: 10.0,
            processing_time: 1,
            cost_per_distance: 1.0,
        }
    }

    /// Undirected network with explicit edge lengths (speed 1, so time = length).
    fn graph(n: u32, edges: &[(u32, u32, f64)]) -> AirNetwork {
        let t = ty();
        let mut net = AirNetwork::default();
        for i in 0..n {
            let id = AirportId(i);
            net.airports.insert(
                id,
                Airport { id, position: Point::new(f64::from(i), 0.0), working_capacity: 1, zone: Zone::Neutral },
            );
        }
        for &(a, b, d) in edges {
            for (x, y) in [(a, b), (b, a)] {
                let r = Route::derive(AirportId(x), AirportId(y), &t, d);
                net.routes.insert(r.key(), r);
            }
        }
        net
    }

    #[test]
    fn identity_path_is_empty() {
        let net = graph(2, &[(0, 1, 3.0)]);
        let p = shortest_path(&net, PlaneTypeId(0), AirportId(1), AirportId(1), Metric::Time).unwrap();
        assert!(p.hops.is_empty());
        assert_eq!(p.total, 0.0);
    }

    #[test]
    fn two_hops_beat_longer_direct_edge() {
        let net = graph(3, &[(0, 1, 5.0), (1, 2, 5.0), (0, 2, 11.0)]);
        let p = shortest_path(&net, PlaneTypeId(0), AirportId(0), AirportId(2), Metric::Time).unwrap();
        assert_eq!(p.hops, vec![AirportId(1), AirportId(2)]);
        assert_eq!(p.total, 10.0);
    }

    #[test]
    fn ties_pick_lexicographically_smallest_sequence() {
        let net = graph(4, &[(0, 2, 2.0), (2, 3, 2.0), (0, 1, 2.0), (1, 3, 2.0)]);
        let p = shortest_path(&net, PlaneTypeId(0), AirportId(0), AirportId(3), Metric::Time).unwrap();
        assert_eq!(p.hops, vec![AirportId(1), AirportId(3)]);
    }

    #[test]
    fn unavailable_edges_are_skipped() {
        let mut net = graph(3, &[(0, 1, 1.0)]);
        let key = RouteKey { from: AirportId(0), to: AirportId(1), plane_type: PlaneTypeId(0) };
        net.routes.get_mut(&key).unwrap().available = false;
        assert!(shortest_path(&net, PlaneTypeId(0), AirportId(0), AirportId(1), Metric::Time).is_none());
        assert!(static_shortest_path(&net, PlaneTypeId(0), AirportId(0), AirportId(1), Metric::Time).is_some());
        assert!(shortest_path(&net, PlaneTypeId(0), AirportId(0), AirportId(2), Metric::Time).is_none());
    }

    #[test]
    fn delivery_time_counts_processing_per_landing() {
        // 0 -1- 1 -1- 2, processing 1: direct-equivalent two hops = 2 flights + 3 processing.
        let net = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(fastest_delivery_time(&net, &[ty()], AirportId(0), AirportId(2), 1.0), Some(5));
        assert_eq!(fastest_delivery_time(&net, &[ty()], AirportId(0), AirportId(1), 1.0), Some(3));
        assert_eq!(fastest_delivery_time(&net, &[ty()], AirportId(0), AirportId(1), 11.0), None);
    }
}
