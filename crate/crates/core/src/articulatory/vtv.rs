//! Tract variables from pellet positions.
//!
//! Pellet tracks hold `x, y` pairs in [`PELLET_NAMES`] order. Lip
//! protrusion is the upper-lip x relative to a per-speaker origin, lip
//! aperture the distance between the lip pellets. Constriction degree is
//! the distance from a tongue pellet to the palate curve and constriction
//! location the arc length from the front of the palate domain to the
//! closest palate point. The tongue tip is `T1`; the tongue body is
//! whichever of `T2..T4` is closest to the palate in that frame.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

use super::palate::{fit_palate, PalateModel};
use super::sequence::{ArticKind, ArticulatorySequence};

pub const PELLET_NAMES: [&str; 8] = ["UL", "LL", "T1", "T2", "T3", "T4", "MI", "MM"];

const UL: usize = 0;
const LL: usize = 1;
const T1: usize = 2;
const BODY: [usize; 3] = [3, 4, 5];
const MI: usize = 6;
const MM: usize = 7;

fn pellet(row: &[f64], p: usize) -> (f64, f64) {
    (row[2 * p], row[2 * p + 1])
}

/// Per-speaker reference geometry for tract-variable extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerGeometry {
    pub palate: PalateModel,
    /// Origin of lip protrusion: the speaker's mean upper-lip x.
    pub lip_origin_x: f64,
}

impl SpeakerGeometry {
    pub fn translated(&self, dx: f64, dy: f64) -> SpeakerGeometry {
        SpeakerGeometry {
            palate: self.palate.translated(dx, dy),
            lip_origin_x: self.lip_origin_x + dx,
        }
    }
}

fn check_pellets(seq: &ArticulatorySequence) -> Result<()> {
    if seq.kind != ArticKind::Pellets {
        return Err(Error::data(format!(
            "expected a pellet track, got {}",
            seq.kind.as_str()
        )));
    }
    Ok(())
}

/// Mean upper-lip x over all frames of a speaker.
pub fn lip_origin(tracks: &[&ArticulatorySequence]) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in tracks {
        check_pellets(t)?;
        for r in 0..t.len() {
            sum += pellet(t.frames.row(r), UL).0;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::data("no pellet frames for lip origin"));
    }
    Ok(sum / n as f64)
}

/// Fits the palate to the upper envelope of all tongue pellet samples and
/// sets the lip origin from the same tracks.
pub fn fit_speaker_geometry(tracks: &[&ArticulatorySequence]) -> Result<SpeakerGeometry> {
    let mut points = Vec::new();
    for t in tracks {
        check_pellets(t)?;
        for r in 0..t.len() {
            let row = t.frames.row(r);
            points.extend([T1, BODY[0], BODY[1], BODY[2]].map(|p| pellet(row, p)));
        }
    }
    Ok(SpeakerGeometry {
        palate: fit_palate(&points)?,
        lip_origin_x: lip_origin(tracks)?,
    })
}

/// Tract variables plus a per-frame flag for tongue pellets that fell
/// outside the palate domain.
#[derive(Debug, Clone, PartialEq)]
pub struct VtvExtraction {
    pub sequence: ArticulatorySequence,
    pub flagged: Vec<bool>,
}

impl VtvExtraction {
    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|f| **f).count()
    }
}

/// `[LP, LA, TTCL, TTCD, TBCL, TBCD]` for a single pellet frame.
pub fn frame_vtvs(row: &[f64], geom: &SpeakerGeometry) -> ([f64; 6], bool) {
    let palate = &geom.palate;
    let (ulx, uly) = pellet(row, UL);
    let (llx, lly) = pellet(row, LL);
    let lp = ulx - geom.lip_origin_x;
    let la = (ulx - llx).hypot(uly - lly);

    let (tx, ty) = pellet(row, T1);
    let tip = palate.nearest(tx, ty);
    let body = BODY
        .iter()
        .map(|&p| {
            let (x, y) = pellet(row, p);
            palate.nearest(x, y)
        })
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
        .expect("three body pellets");
    let clamped = tip.clamped
        || BODY.iter().any(|&p| {
            let x = pellet(row, p).0;
            x < palate.x_min || x > palate.x_max
        });
    (
        [
            lp,
            la,
            palate.arc_length(tip.x),
            tip.distance,
            palate.arc_length(body.x),
            body.distance,
        ],
        clamped,
    )
}

pub fn pellets_to_vtvs(seq: &ArticulatorySequence, geom: &SpeakerGeometry) -> Result<VtvExtraction> {
    check_pellets(seq)?;
    let mut data = Vec::with_capacity(seq.len() * 6);
    let mut flagged = Vec::with_capacity(seq.len());
    for r in 0..seq.len() {
        let (v, clamped) = frame_vtvs(seq.frames.row(r), geom);
        data.extend_from_slice(&v);
        flagged.push(clamped);
    }
    let frames = Tensor::matrix(seq.len(), 6, data)?;
    Ok(VtvExtraction {
        sequence: ArticulatorySequence::new(
            frames,
            ArticKind::TractVariables,
            seq.frame_period_us,
            &seq.speaker,
        )?,
        flagged,
    })
}

/// Vertical offset of the lower lip below the upper lip in [`pellets_for_vtvs`].
const LIP_HEIGHT: f64 = 0.0;
/// Extra clearance of the two non-constricting body pellets.
const BODY_CLEARANCE: f64 = 6.0;
/// Arc spacing between neighbouring body pellets.
const BODY_SPACING: f64 = 8.0;

/// Point `distance` below the palate at arc length `s`, along the normal.
fn below_palate(palate: &PalateModel, s: f64, distance: f64) -> (f64, f64) {
    let x = palate.x_at_arc_length(s);
    let y = palate.eval(x);
    let slope = palate.slope(x);
    let norm = (1.0 + slope * slope).sqrt();
    // downward unit normal
    (x + distance * slope / norm, y - distance / norm)
}

/// Places pellets realizing the given tract variables, the inverse of
/// [`frame_vtvs`] when constriction degrees are smaller than the palate's
/// radius of curvature. Used to synthesize pellet tracks.
pub fn pellets_for_vtvs(vtv: &[f64; 6], geom: &SpeakerGeometry) -> [f64; 16] {
    let [lp, la, ttcl, ttcd, tbcl, tbcd] = *vtv;
    let palate = &geom.palate;
    let mut out = [0.0; 16];
    let mut put = |p: usize, (x, y): (f64, f64)| {
        out[2 * p] = x;
        out[2 * p + 1] = y;
    };
    let ul = (geom.lip_origin_x + lp, palate.eval(palate.x_max) - LIP_HEIGHT);
    put(UL, ul);
    put(LL, (ul.0, ul.1 - la));
    put(T1, below_palate(palate, ttcl, ttcd));
    put(BODY[1], below_palate(palate, tbcl, tbcd));
    put(BODY[0], below_palate(palate, tbcl + BODY_SPACING, tbcd + BODY_CLEARANCE));
    put(BODY[2], below_palate(palate, tbcl - BODY_SPACING, tbcd + BODY_CLEARANCE));
    put(MI, (ul.0 - 5.0, ul.1 - la - 10.0));
    put(MM, (palate.x_min - 20.0, palate.eval(palate.x_min) - 30.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame(pellets: [(f64, f64); 8]) -> Vec<f64> {
        pellets.iter().flat_map(|&(x, y)| [x, y]).collect()
    }

    fn seq(rows: &[Vec<f64>]) -> ArticulatorySequence {
        let data: Vec<f64> = rows.concat();
        ArticulatorySequence::new(
            Tensor::matrix(rows.len(), 16, data).unwrap(),
            ArticKind::Pellets,
            10_000,
            "s",
        )
        .unwrap()
    }

    fn flat_geometry() -> SpeakerGeometry {
        SpeakerGeometry {
            palate: PalateModel::new([0.0, 0.0, 0.0], -50.0, 50.0).unwrap(),
            lip_origin_x: 60.0,
        }
    }

    fn dome() -> SpeakerGeometry {
        SpeakerGeometry {
            palate: PalateModel::new([-0.004, 0.1, 12.0], -60.0, 20.0).unwrap(),
            lip_origin_x: 35.0,
        }
    }

    #[test]
    fn flat_palate_distances_are_heights() {
        let f = frame([
            (62.0, 3.0),
            (62.0, -4.0),
            (20.0, -3.5),
            (0.0, -7.25),
            (-10.0, -2.0),
            (-30.0, -9.0),
            (55.0, -20.0),
            (-70.0, -30.0),
        ]);
        let (v, clamped) = frame_vtvs(&f, &flat_geometry());
        assert!(!clamped);
        assert!((v[0] - 2.0).abs() < 1e-12);
        assert!((v[1] - 7.0).abs() < 1e-12);
        assert!((v[2] - 70.0).abs() < 1e-9);
        assert!((v[3] - 3.5).abs() < 1e-9);
        // body pellet T3 is the closest
        assert!((v[4] - 40.0).abs() < 1e-9);
        assert!((v[5] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn coincident_lips_and_contact() {
        let g = dome();
        let p = &g.palate;
        let f = frame([
            (30.0, 5.0),
            (30.0, 5.0),
            (-5.0, p.eval(-5.0)),
            (-20.0, 0.0),
            (-30.0, 0.0),
            (-40.0, 0.0),
            (30.0, -10.0),
            (-80.0, 0.0),
        ]);
        let (v, _) = frame_vtvs(&f, &g);
        assert_eq!(v[1], 0.0);
        assert!(v[3] < 1e-9, "{}", v[3]);
    }

    #[test]
    fn out_of_domain_pellet_is_flagged() {
        let mut f = frame([(60.0, 0.0); 8]);
        f[4] = 80.0; // T1 x
        f[5] = -2.0;
        let ex = pellets_to_vtvs(&seq(&[f]), &flat_geometry()).unwrap();
        assert_eq!(ex.flagged, vec![true]);
        // clamped to the domain edge (50, 0)
        assert!((ex.sequence.frames.get(0, 3) - 30f64.hypot(2.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_vtv_input() {
        let t = ArticulatorySequence::new(Tensor::zeros(&[2, 6]), ArticKind::TractVariables, 1, "s").unwrap();
        assert!(pellets_to_vtvs(&t, &flat_geometry()).is_err());
    }

    #[test]
    fn geometry_fit_from_tracks() {
        let g = dome();
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let s = i as f64 * 0.4;
                let v = [
                    (i % 7) as f64 - 3.0,
                    5.0,
                    s,
                    if i % 3 == 0 { 0.0 } else { 4.0 },
                    80.0 - s,
                    if i % 5 == 0 { 0.0 } else { 3.0 },
                ];
                pellets_for_vtvs(&v, &g).to_vec()
            })
            .collect();
        let s = seq(&rows);
        let fit = fit_speaker_geometry(&[&s]).unwrap();
        assert!((fit.lip_origin_x - g.lip_origin_x).abs() < 0.5);
        // the envelope follows the contact frames, so the fit hugs the palate
        for x in [-40.0, -20.0, 0.0] {
            assert!((fit.palate.eval(x) - g.palate.eval(x)).abs() < 1.0);
        }
    }

    proptest! {
        #[test]
        fn inverse_placement_round_trips(
            lp in -3.0f64..3.0, la in 0.0f64..15.0,
            ttcl in 5.0f64..75.0, ttcd in 0.0f64..12.0,
            tbcl in 12.0f64..70.0, tbcd in 0.0f64..12.0,
        ) {
            let g = dome();
            let want = [lp, la, ttcl, ttcd, tbcl, tbcd];
            let (got, clamped) = frame_vtvs(&pellets_for_vtvs(&want, &g), &g);
            prop_assert!(!clamped);
            for (a, b) in got.iter().zip(want) {
                prop_assert!((a - b).abs() < 1e-6, "{got:?} vs {want:?}");
            }
        }

        #[test]
        fn translation_invariance(dx in -20.0f64..20.0, dy in -20.0f64..20.0) {
            let g = dome();
            let v = [1.0, 6.0, 30.0, 2.0, 50.0, 4.0];
            let f = pellets_for_vtvs(&v, &g);
            let shifted: Vec<f64> = f.chunks(2).flat_map(|p| [p[0] + dx, p[1] + dy]).collect();
            let (a, _) = frame_vtvs(&f, &g);
            let (b, _) = frame_vtvs(&shifted, &g.translated(dx, dy));
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-7);
            }
        }
    }
}
