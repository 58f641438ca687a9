//! Random-waypoint mobility inside a rectangle.

use rand::Rng;

use super::config::MobilityConfig;
use crate::radio::Point;

pub const MPH_TO_MPS: f64 = 0.44704;

/// Where a mobile UE is heading and how fast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub target: Point,
    pub speed_mps: f64,
    pub pause_left_s: f64,
}

impl Waypoint {
    pub fn draw<R: Rng>(rng: &mut R, area: [f64; 2], cfg: &MobilityConfig) -> Self {
        let target = Point::new(rng.random_range(0.0..=area[0]), rng.random_range(0.0..=area[1]));
        let speed_mph = if cfg.speed_max_mph > cfg.speed_min_mph {
            rng.random_range(cfg.speed_min_mph..=cfg.speed_max_mph)
        } else {
            cfg.speed_min_mph
        };
        Waypoint {
            target,
            speed_mps: speed_mph * MPH_TO_MPS,
            pause_left_s: 0.0,
        }
    }
}

/// Moves `pos` toward its waypoint for `dt` seconds, drawing a new waypoint
/// (after the configured pause) whenever one is reached.
pub fn advance<R: Rng>(pos: &mut Point, wp: &mut Waypoint, dt: f64, area: [f64; 2], cfg: &MobilityConfig, rng: &mut R) {
    let mut left = dt;
    // bounded: each pass either exhausts `left` or reaches a waypoint
    for _ in 0..64 {
        if left <= 0.0 {
            break;
        }
        if wp.pause_left_s > 0.0 {
            let used = wp.pause_left_s.min(left);
            wp.pause_left_s -= used;
            left -= used;
            continue;
        }
        let dist = pos.distance_to(&wp.target);
        let step = wp.speed_mps * left;
        if step < dist {
            let f = step / dist;
            pos.x += (wp.target.x - pos.x) * f;
            pos.y += (wp.target.y - pos.y) * f;
            break;
        }
        *pos = wp.target;
        if wp.speed_mps > 0.0 {
            left -= dist / wp.speed_mps;
        }
        *wp = Waypoint::draw(rng, area, cfg);
        wp.pause_left_s = cfg.pause_s;
        if wp.speed_mps == 0.0 && cfg.pause_s == 0.0 {
            break;
        }
    }
    pos.x = reflect(pos.x, area[0]);
    pos.y = reflect(pos.y, area[1]);
}

fn reflect(v: f64, hi: f64) -> f64 {
    if v < 0.0 {
        (-v).min(hi)
    } else if v > hi {
        (2.0 * hi - v).max(0.0)
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stays_in_area_and_respects_speed() {
        let cfg = MobilityConfig::default();
        let area = [4000.0, 4000.0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pos = Point::new(10.0, 3990.0);
        let mut wp = Waypoint::draw(&mut rng, area, &cfg);
        let vmax = cfg.speed_max_mph * MPH_TO_MPS;
        for _ in 0..20_000 {
            let before = pos;
            advance(&mut pos, &mut wp, 0.01, area, &cfg, &mut rng);
            assert!((0.0..=4000.0).contains(&pos.x) && (0.0..=4000.0).contains(&pos.y));
            assert!(before.distance_to(&pos) <= vmax * 0.01 + 1e-9);
        }
    }

    #[test]
    fn reflect_folds_back() {
        assert_eq!(reflect(-5.0, 100.0), 5.0);
        assert_eq!(reflect(105.0, 100.0), 95.0);
        assert_eq!(reflect(50.0, 100.0), 50.0);
    }
}
