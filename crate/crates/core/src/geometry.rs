//! Small fixed-size vector helpers. Points are stored as `[f64; 3]`; in two
//! dimensions the third coordinate is zero and ignored.

pub type Point = [f64; 3];
pub type Tensor = [[f64; 3]; 3];

pub const ZERO: Point = [0.0; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

/// Signed measure of a `dim`-simplex given by `dim + 1` points.
pub fn simplex_signed_measure(dim: usize, pts: &[Point]) -> f64 {
    match dim {
        2 => {
            let e1 = sub(&pts[1], &pts[0]);
            let e2 = sub(&pts[2], &pts[0]);
            0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
        }
        3 => {
            let e1 = sub(&pts[1], &pts[0]);
            let e2 = sub(&pts[2], &pts[0]);
            let e3 = sub(&pts[3], &pts[0]);
            dot(&e1, &cross(&e2, &e3)) / 6.0
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Measure of a `(dim-1)`-simplex embedded in `dim` space.
pub fn facet_measure(dim: usize, pts: &[Point]) -> f64 {
    match dim {
        2 => distance(&pts[0], &pts[1]),
        3 => 0.5 * norm(&cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0]))),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Unit normal of a facet (orientation arbitrary).
pub fn facet_normal(dim: usize, pts: &[Point]) -> Point {
    let n = match dim {
        2 => {
            let t = sub(&pts[1], &pts[0]);
            [t[1], -t[0], 0.0]
        }
        3 => cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0])),
        _ => panic!("unsupported dimension {dim}"),
    };
    scale(&n, 1.0 / norm(&n))
}

pub fn centroid(pts: &[Point]) -> Point {
    let mut c = ZERO;
    for p in pts {
        c = add(&c, p);
    }
    scale(&c, 1.0 / pts.len() as f64)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in pts {
            for k in 0..3 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        BoundingBox { min, max }
    }

    pub fn center(&self) -> Point {
        scale(&add(&self.min, &self.max), 0.5)
    }

    pub fn half_extent(&self) -> Point {
        scale(&sub(&self.max, &self.min), 0.5)
    }

    pub fn contains(&self, p: &Point, dim: usize, tol: f64) -> bool {
        (0..dim).all(|k| p[k] >= self.min[k] - tol && p[k] <= self.max[k] + tol)
    }
}
