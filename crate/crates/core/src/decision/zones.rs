use serde::{Deserialize, Serialize};

use super::DecisionError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Front,
    Left,
    Rear,
    Right,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Front, Side::Left, Side::Rear, Side::Right];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zone {
    pub label: char,
    pub side: Side,
}

/// Eight monitoring zones around a square footprint, two per side, one
/// camera/laser module per side.
///
/// Robot frame: x forward, y to the left, origin at the footprint centre.
/// Labels run A–H counter-clockwise seen from above, starting at the left
/// half of the front side; `zones` lists each side's pair in that walking
/// order. Corner squares belong to the front and rear strips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneLayout {
    pub d_amr_mm: f64,
    pub d_nf_mm: f64,
    pub zones: Vec<Zone>,
}

impl Default for ZoneLayout {
    fn default() -> Self {
        let z = |label, side| Zone { label, side };
        Self {
            d_amr_mm: 1000.0,
            d_nf_mm: 400.0,
            zones: vec![
                z('H', Side::Front),
                z('A', Side::Front),
                z('B', Side::Left),
                z('C', Side::Left),
                z('D', Side::Rear),
                z('E', Side::Rear),
                z('F', Side::Right),
                z('G', Side::Right),
            ],
        }
    }
}

impl ZoneLayout {
    pub fn validate(&self) -> Result<(), DecisionError> {
        let bad = |m: String| Err(DecisionError::Zone(m));
        if !(self.d_nf_mm > 0.0 && self.d_amr_mm > 0.0) {
            return bad(format!("d_nf {} and d_amr {} must be positive", self.d_nf_mm, self.d_amr_mm));
        }
        let mut labels: Vec<char> = self.zones.iter().map(|z| z.label).collect();
        labels.sort_unstable();
        if labels != ('A'..='H').collect::<Vec<_>>() {
            return bad(format!("labels {labels:?} are not A–H exactly once"));
        }
        for side in Side::ALL {
            let n = self.zones.iter().filter(|z| z.side == side).count();
            if n != 2 {
                return bad(format!("{side:?} side has {n} zones, expected 2"));
            }
        }
        Ok(())
    }

    pub fn side_of(&self, label: char) -> Option<Side> {
        self.zones.iter().find(|z| z.label == label).map(|z| z.side)
    }

    /// Labels on one side in counter-clockwise order.
    pub fn zones_on(&self, side: Side) -> Vec<char> {
        self.zones.iter().filter(|z| z.side == side).map(|z| z.label).collect()
    }

    /// Zone containing robot-frame point (x, y), or `None` inside the
    /// footprint or beyond the near-field depth.
    pub fn zone_at(&self, x_mm: f64, y_mm: f64) -> Option<char> {
        let half = self.d_amr_mm / 2.0;
        let outer = half + self.d_nf_mm;
        if x_mm.abs() > outer || y_mm.abs() > outer || (x_mm.abs() < half && y_mm.abs() < half) {
            return None;
        }
        // Which half comes first when walking the side counter-clockwise.
        let (side, first_half) = if x_mm >= half {
            (Side::Front, y_mm < 0.0)
        } else if x_mm <= -half {
            (Side::Rear, y_mm > 0.0)
        } else if y_mm >= half {
            (Side::Left, x_mm > 0.0)
        } else {
            (Side::Right, x_mm < 0.0)
        };
        let pair = self.zones_on(side);
        Some(if first_half { pair[0] } else { pair[1] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_pairs() {
        let z = ZoneLayout::default();
        z.validate().unwrap();
        assert_eq!(z.zones_on(Side::Front), vec!['H', 'A']);
        assert_eq!(z.zones_on(Side::Left), vec!['B', 'C']);
        assert_eq!(z.zones_on(Side::Rear), vec!['D', 'E']);
        assert_eq!(z.zones_on(Side::Right), vec!['F', 'G']);
        assert_eq!(z.side_of('E'), Some(Side::Rear));
        assert_eq!(z.side_of('Z'), None);
    }

    #[test]
    fn zones_tile_the_ring() {
        let z = ZoneLayout::default();
        let (half, outer) = (500.0f64, 900.0f64);
        let mut seen = std::collections::BTreeSet::new();
        let mut y = -outer;
        while y <= outer {
            let mut x = -outer;
            while x <= outer {
                let inside = x.abs() < half && y.abs() < half;
                match z.zone_at(x, y) {
                    Some(l) => {
                        assert!(!inside, "({x}, {y}) is inside the footprint");
                        seen.insert(l);
                    }
                    None => assert!(inside, "({x}, {y}) in the ring has no zone"),
                }
                x += 25.0;
            }
            y += 25.0;
        }
        assert_eq!(seen.len(), 8);
        assert_eq!(z.zone_at(950.0, 0.0), None);
    }

    #[test]
    fn counter_clockwise_walk_visits_a_to_h() {
        let z = ZoneLayout::default();
        let mut walk = String::new();
        for k in 0..360 {
            let a = (k as f64).to_radians();
            // Square path through the middle of the ring.
            let r = 700.0 / a.cos().abs().max(a.sin().abs());
            let l = z.zone_at(r * a.cos(), r * a.sin()).unwrap();
            if !walk.ends_with(l) {
                walk.push(l);
            }
        }
        assert_eq!(walk, "ABCDEFGH");
    }

    #[test]
    fn invalid_layouts() {
        let mut z = ZoneLayout::default();
        z.zones[2].side = Side::Front;
        assert!(z.validate().is_err());
        let mut z = ZoneLayout::default();
        z.zones[0].label = 'B';
        assert!(z.validate().is_err());
        let z = ZoneLayout {
            d_nf_mm: 0.0,
            ..ZoneLayout::default()
        };
        assert!(z.validate().is_err());
    }
}
