use serde::{Deserialize, Serialize};

use crate::array::{wrap_azimuth, Direction};
use crate::error::{domain, Result};

/// A rectangle `[φ_lo, φ_hi) × [θ_lo, θ_hi)` of candidate directions, degrees.
///
/// Azimuth intervals are kept unwrapped: `az_lo` lies in `[0, 360)` and
/// `az_hi` may exceed 360 for a band that straddles the x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub az_lo: f64,
    pub az_hi: f64,
    pub el_lo: f64,
    pub el_hi: f64,
    /// Zoom stage that produced the band; stage 0 is the coarse grid.
    pub depth: usize,
}

impl Band {
    pub fn new(az: (f64, f64), el: (f64, f64), depth: usize) -> Result<Self> {
        let band = Self {
            az_lo: az.0,
            az_hi: az.1,
            el_lo: el.0,
            el_hi: el.1,
            depth,
        };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..360.0).contains(&self.az_lo)
            && self.az_hi >= self.az_lo
            && self.az_hi - self.az_lo <= 360.0
            && (0.0..=90.0).contains(&self.el_lo)
            && self.el_hi >= self.el_lo
            && self.el_hi <= 90.0;
        if !ok {
            return domain(format!("invalid band {self:?}"));
        }
        Ok(())
    }

    /// The whole search rectangle `[0, 360) × [0, 90]`.
    pub fn full() -> Self {
        Self {
            az_lo: 0.0,
            az_hi: 360.0,
            el_lo: 0.0,
            el_hi: 90.0,
            depth: 0,
        }
    }

    pub fn az_width(&self) -> f64 {
        self.az_hi - self.az_lo
    }

    pub fn el_width(&self) -> f64 {
        self.el_hi - self.el_lo
    }

    /// Area in square degrees.
    pub fn area_deg2(&self) -> f64 {
        self.az_width() * self.el_width()
    }

    /// Half-open membership test; the top elevation edge at 90° is closed.
    pub fn contains(&self, d: Direction) -> bool {
        let offset = wrap_azimuth(d.azimuth_deg - self.az_lo);
        let in_az = offset < self.az_width();
        let in_el = d.elevation_deg >= self.el_lo
            && (d.elevation_deg < self.el_hi || (self.el_hi == 90.0 && d.elevation_deg == 90.0));
        in_az && in_el
    }

    /// Membership with both edges closed and a slack in degrees.
    pub fn contains_closed(&self, d: Direction, slack: f64) -> bool {
        let mut offset = wrap_azimuth(d.azimuth_deg - self.az_lo);
        if offset > 360.0 - slack {
            offset -= 360.0;
        }
        offset >= -slack
            && offset <= self.az_width() + slack
            && d.elevation_deg >= self.el_lo - slack
            && d.elevation_deg <= self.el_hi + slack
    }

    /// Splits into `az_count × el_count` children that tile the band.
    /// Children are ordered elevation-major.
    pub fn split(&self, az_count: usize, el_count: usize) -> Vec<Band> {
        let az_edges = edges(self.az_lo, self.az_hi, az_count);
        let el_edges = edges(self.el_lo, self.el_hi, el_count);
        let mut out = Vec::with_capacity(az_count * el_count);
        for el in el_edges.windows(2) {
            for az in az_edges.windows(2) {
                out.push(Band {
                    az_lo: az[0],
                    az_hi: az[1],
                    el_lo: el[0],
                    el_hi: el[1],
                    depth: self.depth + 1,
                });
            }
        }
        out
    }

    /// True when the two bands share an edge or a corner (azimuth wraps).
    pub fn touches(&self, other: &Band, slack: f64) -> bool {
        let el_ok = self.el_lo <= other.el_hi + slack && other.el_lo <= self.el_hi + slack;
        if !el_ok {
            return false;
        }
        // compare azimuth intervals on the circle by shifting `other` by ±360
        [-360.0, 0.0, 360.0].iter().any(|shift| {
            let lo = other.az_lo + shift;
            let hi = other.az_hi + shift;
            self.az_lo <= hi + slack && lo <= self.az_hi + slack
        })
    }
}

/// `count + 1` edges from `lo` to `hi`; the last edge is exactly `hi`.
fn edges(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let width = hi - lo;
    (0..=count)
        .map(|i| {
            if i == count {
                hi
            } else {
                lo + width * i as f64 / count as f64
            }
        })
        .collect()
}

/// Midpoint of each interval, azimuth wrapped into `[0, 360)`.
pub fn band_center(band: &Band) -> Direction {
    Direction::new(
        wrap_azimuth(0.5 * (band.az_lo + band.az_hi)),
        0.5 * (band.el_lo + band.el_hi),
    )
}

/// The current set of candidate bands and the splits that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandGrid {
    bands: Vec<Band>,
    /// `(azimuth, elevation)` band counts per stage so far.
    schedule: Vec<(usize, usize)>,
}

impl BandGrid {
    /// Stage-0 grid tiling the full rectangle with `az_count × el_count` bands.
    pub fn uniform(az_count: usize, el_count: usize) -> Result<Self> {
        if az_count == 0 || el_count == 0 {
            return domain("band counts must be positive");
        }
        let mut bands = Band::full().split(az_count, el_count);
        bands.iter_mut().for_each(|b| b.depth = 0);
        Ok(Self {
            bands,
            schedule: vec![(az_count, el_count)],
        })
    }

    /// Grid from explicit bands, e.g. a single band covering everything.
    pub fn from_bands(bands: Vec<Band>) -> Result<Self> {
        if bands.is_empty() {
            return domain("a band grid needs at least one band");
        }
        bands.iter().try_for_each(Band::validate)?;
        Ok(Self {
            bands,
            schedule: Vec::new(),
        })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn schedule(&self) -> &[(usize, usize)] {
        &self.schedule
    }

    /// Index of the band holding `d`, if any.
    pub fn locate(&self, d: Direction) -> Option<usize> {
        self.bands.iter().position(|b| b.contains(d))
    }

    /// Keeps only the `active` bands and splits each into
    /// `split.0 × split.1` (azimuth × elevation) children.
    pub fn refine(&self, active: &[usize], split: (usize, usize)) -> Result<BandGrid> {
        if active.is_empty() {
            return domain("refinement needs at least one active band");
        }
        if split.0 == 0 || split.1 == 0 {
            return domain("split counts must be positive");
        }
        let mut idx = active.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.bands.len()) {
            return domain(format!("active index {bad} out of range for {} bands", self.bands.len()));
        }
        let bands = idx
            .iter()
            .flat_map(|&i| self.bands[i].split(split.0, split.1))
            .collect();
        let mut schedule = self.schedule.clone();
        schedule.push(split);
        Ok(BandGrid { bands, schedule })
    }
}

/// Refines `grid` by `split`; see [`BandGrid::refine`].
pub fn refine(grid: &BandGrid, active: &[usize], split: (usize, usize)) -> Result<BandGrid> {
    grid.refine(active, split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_area(bands: &[Band]) -> f64 {
        bands.iter().map(Band::area_deg2).sum()
    }

    #[test]
    fn stage_zero_tiles_the_rectangle() {
        let g = BandGrid::uniform(120, 30).unwrap();
        assert_eq!(g.len(), 3600);
        assert!((total_area(g.bands()) - 360.0 * 90.0).abs() < 1e-6);
        // every band edge is shared exactly with its neighbour
        for (q, b) in g.bands().iter().enumerate() {
            if q % 120 != 119 {
                assert_eq!(b.az_hi, g.bands()[q + 1].az_lo);
            } else {
                assert_eq!(b.az_hi, 360.0);
            }
        }
        assert_eq!(g.bands()[0].az_lo, 0.0);
        assert_eq!(g.bands()[3599].el_hi, 90.0);
    }

    #[test]
    fn every_direction_has_exactly_one_band() {
        let g = BandGrid::uniform(12, 6).unwrap();
        for &(az, el) in &[(0.0, 0.0), (359.999, 90.0), (30.0, 15.0), (45.0, 89.0), (183.2, 44.9)] {
            let d = Direction::new(az, el);
            assert_eq!(g.bands().iter().filter(|b| b.contains(d)).count(), 1, "{az} {el}");
        }
    }

    #[test]
    fn refine_by_ten_gives_hundred_children() {
        let g = BandGrid::uniform(120, 30).unwrap();
        let r = g.refine(&[777], (10, 10)).unwrap();
        assert_eq!(r.len(), 100);
        let parent = g.bands()[777];
        assert!((total_area(r.bands()) - parent.area_deg2()).abs() < 1e-9);
        assert!(r.bands().iter().all(|b| b.depth == 1));
        assert_eq!(r.schedule(), &[(120, 30), (10, 10)]);
    }

    #[test]
    fn unit_split_is_identity() {
        let g = BandGrid::uniform(8, 4).unwrap();
        let r = g.refine(&[3, 5], (1, 1)).unwrap();
        assert_eq!(r.bands()[0].az_lo, g.bands()[3].az_lo);
        assert_eq!(r.bands()[0].az_hi, g.bands()[3].az_hi);
        assert_eq!(r.bands()[1].el_hi, g.bands()[5].el_hi);
    }

    #[test]
    fn nested_refinement_tiles_the_original() {
        let band = Band::new((10.0, 13.0), (30.0, 33.0), 0).unwrap();
        let g = BandGrid::from_bands(vec![band]).unwrap();
        let r = g.refine(&[0], (3, 3)).unwrap();
        let r2 = r.refine(&[4], (3, 3)).unwrap();
        assert_eq!(r2.len(), 9);
        let middle = r.bands()[4];
        assert!((total_area(r2.bands()) - middle.area_deg2()).abs() < 1e-12);
        let az_min = r2.bands().iter().map(|b| b.az_lo).fold(f64::INFINITY, f64::min);
        let az_max = r2.bands().iter().map(|b| b.az_hi).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((az_min, az_max), (middle.az_lo, middle.az_hi));
        // all nine grandchildren of the full band cover it once refined everywhere
        let all = r.refine(&(0..9).collect::<Vec<_>>(), (3, 3)).unwrap();
        assert!((total_area(all.bands()) - band.area_deg2()).abs() < 1e-12);
    }

    #[test]
    fn refine_rejects_empty_active_set() {
        let g = BandGrid::uniform(4, 4).unwrap();
        assert!(g.refine(&[], (2, 2)).is_err());
        assert!(g.refine(&[16], (2, 2)).is_err());
    }

    #[test]
    fn centers() {
        let b = Band::new((10.0, 20.0), (30.0, 40.0), 0).unwrap();
        assert_eq!(band_center(&b), Direction::new(15.0, 35.0));
        let p = Band::new((12.5, 12.5), (7.0, 7.0), 0).unwrap();
        assert_eq!(band_center(&p), Direction::new(12.5, 7.0));
        let wrap = Band::new((359.0, 361.0), (0.0, 1.0), 0).unwrap();
        assert_eq!(band_center(&wrap).azimuth_deg, 0.0);
    }

    #[test]
    fn final_stage_center_is_within_half_width() {
        // 360/120/10/3 = 0.1° wide in azimuth, 90/30/10/3 = 0.1° in elevation
        let g = BandGrid::uniform(120, 30).unwrap();
        let r = g.refine(&[0], (10, 10)).unwrap().refine(&[0], (3, 3)).unwrap();
        let b = r.bands()[0];
        assert!((b.az_width() - 0.1).abs() < 1e-12 && (b.el_width() - 0.1).abs() < 1e-12);
        let c = band_center(&b);
        for i in 0..=10 {
            let f = i as f64 / 10.0;
            let az = b.az_lo + f * b.az_width();
            let el = b.el_lo + f * b.el_width();
            assert!((c.azimuth_deg - az).abs() <= 0.05 + 1e-12);
            assert!((c.elevation_deg - el).abs() <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn touching_bands_wrap_in_azimuth() {
        let a = Band::new((0.0, 1.0), (10.0, 11.0), 0).unwrap();
        let b = Band::new((359.0, 360.0), (11.0, 12.0), 0).unwrap();
        let c = Band::new((2.0, 3.0), (10.0, 11.0), 0).unwrap();
        assert!(a.touches(&b, 1e-9));
        assert!(!a.touches(&c, 1e-9));
    }
}
