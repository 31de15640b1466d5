//! Track seeding: doublets on adjacent layers, triplets from doublet pairs
//! sharing their middle hit, and quadruplet links between triplets that
//! overlap in two hits.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::detector::{angle_difference, normalize_angle, Event, Hit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedingCuts {
    pub max_dphi: f64,
    pub max_dz_dr: f64,
    pub max_curvature: f64,
    pub max_dz_residual: f64,
}

impl Default for SeedingCuts {
    fn default() -> Self {
        Self {
            max_dphi: 0.1,
            max_dz_dr: 1.5,
            max_curvature: 8.0,
            max_dz_residual: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Doublet {
    pub hit_a: u64,
    pub hit_b: u64,
    /// `phi(b) - phi(a)` wrapped into `(-π, π]`.
    pub dphi: f64,
    /// `Δz / Δr` between the two hits.
    pub dz_dr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    /// Index of this triplet in the candidate list.
    pub id: usize,
    /// Hit ids, innermost first.
    pub hits: [u64; 3],
    /// Signed inverse circumradius in the transverse plane; positive for a
    /// counter-clockwise turn.
    pub curvature: f64,
    pub dz_slope_residual: f64,
    /// Azimuth of the innermost hit.
    pub phi: f64,
    /// Circular mean azimuth of the three hits.
    pub phi_mean: f64,
    pub truth_flag: bool,
}

impl Triplet {
    pub fn doublets(&self) -> [(u64, u64); 2] {
        [(self.hits[0], self.hits[1]), (self.hits[1], self.hits[2])]
    }

    pub fn shares_hit(&self, other: &Triplet) -> bool {
        self.hits.iter().any(|h| other.hits.contains(h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadrupletLink {
    pub triplet_i: usize,
    pub triplet_j: usize,
    pub shared_hits: (u64, u64),
}

/// Signed inverse radius of the circle through three transverse points.
/// Collinear points give exactly zero.
pub fn signed_curvature(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    if cross == 0.0 {
        return 0.0;
    }
    let ab = (b.0 - a.0).hypot(b.1 - a.1);
    let bc = (c.0 - b.0).hypot(c.1 - b.1);
    let ca = (a.0 - c.0).hypot(a.1 - c.1);
    2.0 * cross / (ab * bc * ca)
}

fn dz_dr(a: &Hit, b: &Hit) -> f64 {
    let dr = b.radius() - a.radius();
    (b.z - a.z) / dr
}

/// All adjacent-layer hit pairs passing the azimuth and slope cuts, sorted
/// by `(hit_a, hit_b)`.
pub fn build_doublets(event: &Event, max_dphi: f64, max_dz_dr: f64) -> Vec<Doublet> {
    let n_layers = event.hits.iter().map(|h| h.layer + 1).max().unwrap_or(0);
    let mut by_layer: Vec<Vec<(f64, &Hit)>> = vec![Vec::new(); n_layers];
    for h in &event.hits {
        by_layer[h.layer].push((h.phi(), h));
    }
    for layer in &mut by_layer {
        layer.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.id.cmp(&y.1.id)));
    }

    let mut out = Vec::new();
    for l in 0..n_layers.saturating_sub(1) {
        let outer = &by_layer[l + 1];
        for &(phi_a, a) in &by_layer[l] {
            for (_, b) in phi_window(outer, phi_a, max_dphi) {
                let dphi = angle_difference(b.phi(), phi_a);
                let slope = dz_dr(a, b);
                if dphi.abs() <= max_dphi && slope.abs() <= max_dz_dr {
                    out.push(Doublet {
                        hit_a: a.id,
                        hit_b: b.id,
                        dphi,
                        dz_dr: slope,
                    });
                }
            }
        }
    }
    out.sort_by_key(|d| (d.hit_a, d.hit_b));
    out
}

/// Entries of a phi-sorted layer whose azimuth is within `half_width` of
/// `center`, accounting for the wrap at 2π. Each entry is yielded once.
fn phi_window<'a>(
    sorted: &'a [(f64, &'a Hit)],
    center: f64,
    half_width: f64,
) -> impl Iterator<Item = &'a (f64, &'a Hit)> {
    use std::f64::consts::TAU;
    let ranges: Vec<(f64, f64)> = if half_width >= std::f64::consts::PI {
        vec![(f64::NEG_INFINITY, f64::INFINITY)]
    } else {
        let (lo, hi) = (center - half_width, center + half_width);
        let mut r = vec![(lo.max(0.0), hi.min(TAU))];
        if lo < 0.0 {
            r.push((lo + TAU, TAU));
        }
        if hi > TAU {
            r.push((0.0, hi - TAU));
        }
        r
    };
    // A small pad keeps entries that sit right on the boundary; the exact
    // cut is applied by the caller.
    let pad = 1e-12;
    let mut picks: Vec<usize> = ranges
        .into_iter()
        .flat_map(|(lo, hi)| {
            let start = sorted.partition_point(|e| e.0 < lo - pad);
            let end = sorted.partition_point(|e| e.0 <= hi + pad);
            start..end.max(start)
        })
        .collect();
    picks.sort_unstable();
    picks.dedup();
    picks.into_iter().map(move |i| &sorted[i])
}

/// Combines doublets `(a, b)` and `(b, c)` into triplets, keeping those
/// within the curvature and slope-residual cuts. Output is sorted by hit
/// ids and `Triplet::id` is the position in that order.
pub fn build_triplets(
    event: &Event,
    doublets: &[Doublet],
    max_curvature: f64,
    max_dz_residual: f64,
) -> Vec<Triplet> {
    let hits = event.hit_index();
    let mut by_first: HashMap<u64, Vec<&Doublet>> = HashMap::new();
    for d in doublets {
        by_first.entry(d.hit_a).or_default().push(d);
    }

    let mut out = Vec::new();
    for d1 in doublets {
        let Some(nexts) = by_first.get(&d1.hit_b) else {
            continue;
        };
        for d2 in nexts {
            let (a, b, c) = (hits[&d1.hit_a], hits[&d1.hit_b], hits[&d2.hit_b]);
            let curvature = signed_curvature((a.x, a.y), (b.x, b.y), (c.x, c.y));
            let residual = (d1.dz_dr - d2.dz_dr).abs();
            if curvature.abs() > max_curvature || residual > max_dz_residual {
                continue;
            }
            let truth_flag = a.truth_particle.is_some()
                && a.truth_particle == b.truth_particle
                && b.truth_particle == c.truth_particle
                && b.layer == a.layer + 1
                && c.layer == b.layer + 1;
            let (sx, cx) = [a, b, c]
                .iter()
                .fold((0.0, 0.0), |(s, cs), h| (s + h.phi().sin(), cs + h.phi().cos()));
            out.push(Triplet {
                id: 0,
                hits: [a.id, b.id, c.id],
                curvature,
                dz_slope_residual: residual,
                phi: a.phi(),
                phi_mean: normalize_angle(sx.atan2(cx)),
                truth_flag,
            });
        }
    }
    out.sort_by_key(|t| t.hits);
    for (i, t) in out.iter_mut().enumerate() {
        t.id = i;
    }
    out
}

/// All ordered pairs `(i, j)` where the last two hits of triplet `i` are the
/// first two hits of triplet `j`. Sorted.
pub fn find_quadruplet_links(triplets: &[Triplet]) -> Vec<QuadrupletLink> {
    let mut by_head: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (j, t) in triplets.iter().enumerate() {
        by_head.entry((t.hits[0], t.hits[1])).or_default().push(j);
    }
    let mut links = Vec::new();
    for (i, t) in triplets.iter().enumerate() {
        let tail = (t.hits[1], t.hits[2]);
        if let Some(js) = by_head.get(&tail) {
            links.extend(js.iter().map(|&j| QuadrupletLink {
                triplet_i: i,
                triplet_j: j,
                shared_hits: tail,
            }));
        }
    }
    links.sort();
    links
}

/// Doublets, triplets and links for one event under `cuts`.
pub fn seed_event(event: &Event, cuts: &SeedingCuts) -> (Vec<Triplet>, Vec<QuadrupletLink>) {
    let doublets = build_doublets(event, cuts.max_dphi, cuts.max_dz_dr);
    let triplets = build_triplets(event, &doublets, cuts.max_curvature, cuts.max_dz_residual);
    let links = find_quadruplet_links(&triplets);
    (triplets, links)
}

/// Debug dump: `triplet_id,hit_a,hit_b,hit_c,curvature,phi,truth_flag`.
pub fn triplets_to_csv(triplets: &[Triplet]) -> String {
    let mut out = String::from("triplet_id,hit_a,hit_b,hit_c,curvature,phi,truth_flag\n");
    for t in triplets {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.9e},{:.9e},{}",
            t.id, t.hits[0], t.hits[1], t.hits[2], t.curvature, t.phi, t.truth_flag as u8
        );
    }
    out
}

pub fn save_triplets_csv(triplets: &[Triplet], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, triplets_to_csv(triplets)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::detector::{generate_event, DetectorGeometry};

    fn hit(id: u64, layer: usize, x: f64, y: f64, z: f64, pid: Option<u64>) -> Hit {
        Hit {
            id,
            x,
            y,
            z,
            layer,
            truth_particle: pid,
        }
    }

    fn straight_track() -> Event {
        let hits = (0..3)
            .map(|l| {
                let r = 0.05 * (l as f64 + 1.0);
                hit(l as u64, l, r, 0.0, 0.1 * r, Some(0))
            })
            .collect();
        Event {
            hits,
            particles: vec![],
            density: 1,
        }
    }

    fn loose() -> SeedingCuts {
        SeedingCuts {
            max_dphi: 1.0,
            max_dz_dr: 10.0,
            max_curvature: 1e3,
            max_dz_residual: 10.0,
        }
    }

    #[test]
    fn two_hits_one_doublet() {
        let mut ev = straight_track();
        ev.hits.truncate(2);
        let d = build_doublets(&ev, 0.5, 2.0);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].hit_a, d[0].hit_b), (0, 1));
        assert!((d[0].dz_dr - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_dphi_cut_on_smeared_hits_is_empty() {
        let ev = generate_event(&DetectorGeometry::default(), 10, 50e-6, 3).unwrap();
        assert!(build_doublets(&ev, 0.0, 1.5).is_empty());
    }

    #[test]
    fn doublets_match_all_pairs_scan() {
        let ev = generate_event(&DetectorGeometry::default(), 5, 50e-6, 21).unwrap();
        assert_eq!(ev.hits.len(), 20);
        for &(dphi, slope) in &[(0.1, 1.5), (0.03, 0.5), (3.5, 10.0)] {
            let mut oracle = BTreeSet::new();
            for a in &ev.hits {
                for b in &ev.hits {
                    if b.layer != a.layer + 1 {
                        continue;
                    }
                    let mut d = (b.y.atan2(b.x) - a.y.atan2(a.x)).abs();
                    if d > std::f64::consts::PI {
                        d = std::f64::consts::TAU - d;
                    }
                    let s = (b.z - a.z) / (b.x.hypot(b.y) - a.x.hypot(a.y));
                    if d <= dphi && s.abs() <= slope {
                        oracle.insert((a.id, b.id));
                    }
                }
            }
            let got: BTreeSet<_> = build_doublets(&ev, dphi, slope)
                .iter()
                .map(|d| (d.hit_a, d.hit_b))
                .collect();
            assert_eq!(got, oracle, "cuts {dphi} {slope}");
        }
    }

    #[test]
    fn collinear_triplet_has_zero_curvature() {
        let ev = straight_track();
        let d = build_doublets(&ev, 0.5, 2.0);
        let t = build_triplets(&ev, &d, 8.0, 0.2);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].curvature, 0.0);
        assert!(t[0].truth_flag);
    }

    #[test]
    fn helix_triplet_curvature() {
        use crate::detector::Particle;
        let g = DetectorGeometry::default();
        let p = Particle {
            id: 0,
            charge: 1,
            pt: 1.0,
            phi0: 1.0,
            z0: 0.0,
            cot_theta: 0.3,
        };
        let hits = g
            .layer_radii()
            .iter()
            .take(3)
            .enumerate()
            .map(|(l, &r)| {
                let [x, y, z] = p.crossing(r, g.magnetic_field()).unwrap();
                hit(l as u64, l, x, y, z, Some(0))
            })
            .collect();
        let ev = Event {
            hits,
            particles: vec![p],
            density: 1,
        };
        let t = build_triplets(&ev, &build_doublets(&ev, 0.1, 1.5), 8.0, 0.2);
        assert_eq!(t.len(), 1);
        assert!((t[0].curvature.abs() - 0.6).abs() < 1e-6, "{}", t[0].curvature);
        // positive charge turns clockwise
        assert!(t[0].curvature < 0.0);
    }

    #[test]
    fn truth_flag_requires_one_particle() {
        let mut ev = straight_track();
        ev.hits[2].truth_particle = Some(7);
        let t = build_triplets(&ev, &build_doublets(&ev, 0.5, 2.0), 8.0, 0.2);
        assert_eq!(t.len(), 1);
        assert!(!t[0].truth_flag);
    }

    #[test]
    fn every_clean_particle_gives_layers_minus_two_truth_triplets() {
        let g = DetectorGeometry::default();
        let ev = generate_event(&g, 30, 0.0, 8).unwrap();
        let (triplets, _) = seed_event(&ev, &loose());
        for p in &ev.particles {
            let layers = ev
                .hits
                .iter()
                .filter(|h| h.truth_particle == Some(p.id))
                .count();
            let hit_ids: Vec<u64> = ev
                .hits
                .iter()
                .filter(|h| h.truth_particle == Some(p.id))
                .map(|h| h.id)
                .collect();
            let n_true = triplets
                .iter()
                .filter(|t| t.truth_flag && hit_ids.contains(&t.hits[0]))
                .count();
            assert_eq!(n_true, layers - 2, "particle {}", p.id);
        }
    }

    #[test]
    fn default_cuts_keep_truth_triplets() {
        let g = DetectorGeometry::default();
        let mut truth = 0;
        let mut kept = 0;
        for seed in 0..5 {
            let ev = generate_event(&g, 50, 50e-6, seed).unwrap();
            let (t, _) = seed_event(&ev, &SeedingCuts::default());
            kept += t.iter().filter(|t| t.truth_flag).count();
            truth += 2 * ev.particles.len();
        }
        assert!(kept as f64 >= 0.99 * truth as f64, "{kept}/{truth}");
    }

    #[test]
    fn seeding_ignores_hit_order() {
        let ev = generate_event(&DetectorGeometry::default(), 20, 50e-6, 4).unwrap();
        let mut shuffled = ev.clone();
        shuffled.hits.reverse();
        shuffled.hits.swap(3, 17);
        let cuts = SeedingCuts::default();
        assert_eq!(
            build_doublets(&ev, cuts.max_dphi, cuts.max_dz_dr),
            build_doublets(&shuffled, cuts.max_dphi, cuts.max_dz_dr)
        );
        assert_eq!(seed_event(&ev, &cuts), seed_event(&shuffled, &cuts));
    }

    #[test]
    fn mirroring_flips_curvature_sign() {
        let ev = generate_event(&DetectorGeometry::default(), 10, 50e-6, 6).unwrap();
        let mut mirrored = ev.clone();
        for h in &mut mirrored.hits {
            h.y = -h.y;
        }
        let (a, _) = seed_event(&ev, &SeedingCuts::default());
        let (b, _) = seed_event(&mirrored, &SeedingCuts::default());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.hits, y.hits);
            assert!((x.curvature + y.curvature).abs() < 1e-9);
        }
    }

    fn triplet_with_hits(hits: [u64; 3]) -> Triplet {
        Triplet {
            id: 0,
            hits,
            curvature: 0.0,
            dz_slope_residual: 0.0,
            phi: 0.0,
            phi_mean: 0.0,
            truth_flag: false,
        }
    }

    #[test]
    fn quadruplet_links_by_example() {
        let t = vec![triplet_with_hits([1, 2, 3]), triplet_with_hits([2, 3, 4])];
        let links = find_quadruplet_links(&t);
        assert_eq!(links.len(), 1);
        assert_eq!((links[0].triplet_i, links[0].triplet_j), (0, 1));
        assert_eq!(links[0].shared_hits, (2, 3));

        let t = vec![triplet_with_hits([1, 2, 3]), triplet_with_hits([3, 4, 5])];
        assert!(find_quadruplet_links(&t).is_empty());
    }

    #[test]
    fn quadruplet_links_match_pairwise_scan() {
        // 50 triplets over a small hit alphabet so overlaps are common
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) % 6
        };
        let mut t = Vec::new();
        for i in 0..50 {
            let base = if i < 40 { 0 } else { 10 };
            let (a, b, c) = (next(), next(), next());
            t.push(triplet_with_hits([base + a, base + 10 + b, base + 20 + c]));
        }
        assert_eq!(t.len(), 50);
        let mut oracle = BTreeSet::new();
        for (i, x) in t.iter().enumerate() {
            for (j, y) in t.iter().enumerate() {
                if x.hits[1] == y.hits[0] && x.hits[2] == y.hits[1] {
                    oracle.insert((i, j));
                }
            }
        }
        let got: BTreeSet<_> = find_quadruplet_links(&t)
            .iter()
            .map(|l| (l.triplet_i, l.triplet_j))
            .collect();
        assert_eq!(got, oracle);
    }
}
