use crate::error::{Error, Result};

/// Point sets up to this size get a dense distance table.
pub const DENSE_CACHE_LIMIT: usize = 4096;

/// Relative slack used by every real comparison in the crate.
pub const REL_TOL: f64 = 1e-9;

/// `a <= b` up to `REL_TOL` scaled by the larger operand.
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs()).max(1e-3)
}

pub fn approx_eq(a: f64, b: f64) -> bool {
    approx_le(a, b) && approx_le(b, a)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    Euclidean { dim: usize, coords: Vec<f64> },
    Matrix { data: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct MetricSpace {
    n: usize,
    kind: MetricKind,
    cache: Option<Vec<f64>>,
}

impl MetricSpace {
    /// Points given as rows of coordinates, all of length `dim`.
    pub fn euclidean(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("euclidean metric needs dim >= 1".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (idx, pt) in points.iter().enumerate() {
            if pt.len() != dim {
                return Err(Error::Input(format!(
                    "point {idx} has {} coordinates, expected {dim}",
                    pt.len()
                )));
            }
            if pt.iter().any(|c| !c.is_finite()) {
                return Err(Error::Input(format!("point {idx} has a non-finite coordinate")));
            }
            coords.extend_from_slice(pt);
        }
        let mut space = MetricSpace { n: points.len(), kind: MetricKind::Euclidean { dim, coords }, cache: None };
        if space.n <= DENSE_CACHE_LIMIT {
            let n = space.n;
            let mut cache = vec![0.0; n * n];
            for a in 0..n {
                for b in (a + 1)..n {
                    let d = space.raw(a, b);
                    cache[a * n + b] = d;
                    cache[b * n + a] = d;
                }
            }
            space.cache = Some(cache);
        }
        Ok(space)
    }

    /// Explicit symmetric matrix; triangle inequality is checked.
    pub fn matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (a, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Input(format!("matrix row {a} has length {}, expected {n}", row.len())));
            }
            data.extend_from_slice(row);
        }
        for a in 0..n {
            if data[a * n + a] != 0.0 {
                return Err(Error::Input(format!("matrix diagonal entry {a} is nonzero")));
            }
            for b in 0..n {
                let v = data[a * n + b];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Input(format!("matrix entry ({a},{b}) = {v} is not a nonnegative real")));
                }
                if v != data[b * n + a] {
                    return Err(Error::Input(format!("matrix is not symmetric at ({a},{b})")));
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = data[a * n + b];
                for c in 0..n {
                    let ac = data[a * n + c];
                    let via = ab + data[b * n + c];
                    if ac > via + REL_TOL * ac.max(via) {
                        return Err(Error::Input(format!(
                            "triangle inequality fails: d({a},{c}) = {ac} > d({a},{b}) + d({b},{c}) = {via}"
                        )));
                    }
                }
            }
        }
        Ok(MetricSpace { n, kind: MetricKind::Matrix { data }, cache: None })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            MetricKind::Euclidean { dim, .. } => Some(*dim),
            MetricKind::Matrix { .. } => None,
        }
    }

    pub fn coords(&self, a: usize) -> Option<&[f64]> {
        match &self.kind {
            MetricKind::Euclidean { dim, coords } => Some(&coords[a * dim..(a + 1) * dim]),
            MetricKind::Matrix { .. } => None,
        }
    }

    fn raw(&self, a: usize, b: usize) -> f64 {
        match &self.kind {
            MetricKind::Euclidean { dim, coords } => {
                let (pa, pb) = (&coords[a * dim..(a + 1) * dim], &coords[b * dim..(b + 1) * dim]);
                pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
            MetricKind::Matrix { data } => data[a * self.n + b],
        }
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        match (&self.cache, &self.kind) {
            (Some(c), _) => c[a * self.n + b],
            (None, MetricKind::Matrix { data }) => data[a * self.n + b],
            _ => self.raw(a, b),
        }
    }

    pub fn checked_dist(&self, a: usize, b: usize) -> Result<f64> {
        if a >= self.n || b >= self.n {
            return Err(Error::Input(format!("point index out of range: ({a},{b}) with {} points", self.n)));
        }
        Ok(self.dist(a, b))
    }

    /// `d(a,b)^p`.
    pub fn power_distance(&self, a: usize, b: usize, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Input(format!("exponent p = {p} must be >= 1")));
        }
        Ok(pow(self.checked_dist(a, b)?, p))
    }
}

#[inline]
pub fn pow(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d
    } else if p == 2.0 {
        d * d
    } else {
        d.powf(p)
    }
}
