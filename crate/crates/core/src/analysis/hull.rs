use robust::{orient2d, Coord};

pub type Point = (f64, f64);

/// Sign of the turn `a → b → c`: positive for counterclockwise, zero when
/// collinear. Exact for all finite inputs.
pub fn orientation(a: Point, b: Point, c: Point) -> f64 {
    orient2d(
        Coord { x: a.0, y: a.1 },
        Coord { x: b.0, y: b.1 },
        Coord { x: c.0, y: c.1 },
    )
}

/// Andrew's monotone chain. Returns the hull counterclockwise starting at the
/// lexicographically smallest point, without collinear boundary points.
/// One distinct point yields `[p]`; collinear input yields its two extremes.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() + 1);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && orientation(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        // The last point of each chain starts the other one.
        hull.pop();
    }
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.truncate(1);
    }
    hull
}

/// True when `p` is inside or on the boundary of a hull returned by
/// [`convex_hull`].
pub fn contains(hull: &[Point], p: Point) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == p,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            orientation(a, b, p) == 0.0
                && p.0 >= a.0.min(b.0)
                && p.0 <= a.0.max(b.0)
                && p.1 >= a.1.min(b.1)
                && p.1 <= a.1.max(b.1)
        }
        n => (0..n).all(|i| orientation(hull[i], hull[(i + 1) % n], p) >= 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_centre() {
        let h = convex_hull(&[(0.0, 0.0), (1.0, 1.0), (0.5, 0.5), (1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(h, vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(convex_hull(&[]).is_empty());
        assert_eq!(convex_hull(&[(2.0, 3.0)]), vec![(2.0, 3.0)]);
        assert_eq!(convex_hull(&[(2.0, 3.0), (2.0, 3.0)]), vec![(2.0, 3.0)]);
        assert_eq!(
            convex_hull(&[(1.0, 1.0), (0.0, 0.0), (2.0, 2.0)]),
            vec![(0.0, 0.0), (2.0, 2.0)]
        );
    }

    #[test]
    fn collinear_edge_points_dropped() {
        let h = convex_hull(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
        assert_eq!(h, vec![(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]);
        assert!(contains(&h, (1.0, 0.0)));
        assert!(!contains(&h, (3.0, 0.0)));
    }

    #[test]
    fn segment_containment() {
        let h = convex_hull(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert!(contains(&h, (1.0, 1.0)));
        assert!(!contains(&h, (3.0, 3.0)));
        assert!(!contains(&h, (1.0, 0.0)));
    }
}
