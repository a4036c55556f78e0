use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{pow, MetricKind, MetricSpace};

/// Clients and facilities as indices into a shared metric.
///
/// Several facility entries may point at the same metric point; splitting
/// relies on this to create co-located pieces of one facility.
#[derive(Debug, Clone)]
pub struct Instance {
    metric: Arc<MetricSpace>,
    clients: Vec<usize>,
    facilities: Vec<usize>,
    k: usize,
    p: f64,
}

impl Instance {
    pub fn new(metric: MetricSpace, clients: Vec<usize>, facilities: Vec<usize>, k: usize, p: f64) -> Result<Self> {
        Self::from_shared(Arc::new(metric), clients, facilities, k, p)
    }

    pub fn from_shared(
        metric: Arc<MetricSpace>,
        clients: Vec<usize>,
        facilities: Vec<usize>,
        k: usize,
        p: f64,
    ) -> Result<Self> {
        if clients.is_empty() {
            return Err(Error::Input("instance has no clients".into()));
        }
        if facilities.is_empty() {
            return Err(Error::Input("instance has no facilities".into()));
        }
        if k == 0 {
            return Err(Error::Input("k must be at least 1".into()));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Input(format!("exponent p = {p} must be a finite real >= 1")));
        }
        if let Some(&bad) = clients.iter().chain(&facilities).find(|&&x| x >= metric.len()) {
            return Err(Error::Input(format!("point index {bad} out of range ({} points)", metric.len())));
        }
        Ok(Instance { metric, clients, facilities, k, p })
    }

    /// Euclidean instance where clients and facilities are distinct point lists.
    pub fn euclidean(clients: &[Vec<f64>], facilities: &[Vec<f64>], k: usize, p: f64) -> Result<Self> {
        let dim = clients.first().or(facilities.first()).map_or(0, |c| c.len());
        let pts: Vec<Vec<f64>> = clients.iter().chain(facilities).cloned().collect();
        let metric = MetricSpace::euclidean(dim, &pts)?;
        let nc = clients.len();
        Self::new(metric, (0..nc).collect(), (nc..nc + facilities.len()).collect(), k, p)
    }

    pub fn metric(&self) -> &MetricSpace {
        &self.metric
    }

    pub fn shared_metric(&self) -> Arc<MetricSpace> {
        Arc::clone(&self.metric)
    }

    pub fn n_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn n_facilities(&self) -> usize {
        self.facilities.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn client_point(&self, j: usize) -> usize {
        self.clients[j]
    }

    pub fn facility_point(&self, i: usize) -> usize {
        self.facilities[i]
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::from_shared(self.shared_metric(), self.clients.clone(), self.facilities.clone(), k, self.p)
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::from_shared(self.shared_metric(), self.clients.clone(), self.facilities.clone(), self.k, p)
    }

    /// Same clients, facility entries replaced by `entries` (indices into this
    /// instance's facility list, repeats allowed).
    pub fn with_facility_entries(&self, entries: &[usize]) -> Result<Self> {
        let facilities = entries.iter().map(|&i| self.facilities[i]).collect();
        Self::from_shared(self.shared_metric(), self.clients.clone(), facilities, self.k, self.p)
    }

    #[inline]
    pub fn d_cf(&self, j: usize, i: usize) -> f64 {
        self.metric.dist(self.clients[j], self.facilities[i])
    }

    #[inline]
    pub fn d_ff(&self, a: usize, b: usize) -> f64 {
        self.metric.dist(self.facilities[a], self.facilities[b])
    }

    #[inline]
    pub fn d_cc(&self, a: usize, b: usize) -> f64 {
        self.metric.dist(self.clients[a], self.clients[b])
    }

    /// `d(j,i)^p`.
    #[inline]
    pub fn cost(&self, j: usize, i: usize) -> f64 {
        pow(self.d_cf(j, i), self.p)
    }

    #[inline]
    pub fn pow(&self, d: f64) -> f64 {
        pow(d, self.p)
    }

    /// Facilities sorted by (distance from client j, index).
    pub fn facilities_by_distance(&self, j: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_facilities()).collect();
        order.sort_by(|&a, &b| self.d_cf(j, a).total_cmp(&self.d_cf(j, b)).then(a.cmp(&b)));
        order
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from_instance(self))?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub p: f64,
    pub k: usize,
    pub metric: MetricFile,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MetricFileKind {
    Euclidean,
    Matrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointList {
    Indices(Vec<usize>),
    Coords(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricFile {
    pub kind: MetricFileKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub clients: PointList,
    pub facilities: PointList,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        let m = self.metric;
        match m.kind {
            MetricFileKind::Euclidean => {
                if m.matrix.is_some() {
                    return Err(Error::Input("euclidean metric must not carry a matrix".into()));
                }
                let as_coords = |list: PointList, what: &str| match list {
                    PointList::Coords(c) => Ok(c),
                    PointList::Indices(v) if v.is_empty() => Ok(Vec::new()),
                    PointList::Indices(_) => Err(Error::Input(format!("euclidean {what} must be coordinate lists"))),
                };
                let clients = as_coords(m.clients, "clients")?;
                let facilities = as_coords(m.facilities, "facilities")?;
                let dim = m.dim.or(clients.first().map(|c| c.len())).unwrap_or(0);
                let pts: Vec<Vec<f64>> = clients.iter().chain(&facilities).cloned().collect();
                let metric = MetricSpace::euclidean(dim, &pts)?;
                let nc = clients.len();
                Instance::new(metric, (0..nc).collect(), (nc..nc + facilities.len()).collect(), self.k, self.p)
            }
            MetricFileKind::Matrix => {
                let rows = m.matrix.ok_or_else(|| Error::Input("matrix metric needs a \"matrix\" field".into()))?;
                if m.dim.is_some() {
                    return Err(Error::Input("matrix metric does not take \"dim\"".into()));
                }
                let as_indices = |list: PointList, what: &str| match list {
                    PointList::Indices(v) => Ok(v),
                    PointList::Coords(_) => Err(Error::Input(format!("matrix {what} must be point indices"))),
                };
                let clients = as_indices(m.clients, "clients")?;
                let facilities = as_indices(m.facilities, "facilities")?;
                Instance::new(MetricSpace::matrix(&rows)?, clients, facilities, self.k, self.p)
            }
        }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let metric = inst.metric();
        let file = match metric.kind() {
            MetricKind::Euclidean { dim, .. } => {
                let coords = |pts: &[usize]| {
                    PointList::Coords(pts.iter().map(|&a| metric.coords(a).unwrap().to_vec()).collect())
                };
                MetricFile {
                    kind: MetricFileKind::Euclidean,
                    dim: Some(*dim),
                    clients: coords(&inst.clients),
                    facilities: coords(&inst.facilities),
                    matrix: None,
                }
            }
            MetricKind::Matrix { .. } => {
                let n = metric.len();
                let rows = (0..n).map(|a| (0..n).map(|b| metric.dist(a, b)).collect()).collect();
                MetricFile {
                    kind: MetricFileKind::Matrix,
                    dim: None,
                    clients: PointList::Indices(inst.clients.clone()),
                    facilities: PointList::Indices(inst.facilities.clone()),
                    matrix: Some(rows),
                }
            }
        };
        InstanceFile { p: inst.p(), k: inst.k(), metric: file }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_euclidean() {
        let text = r#"{"p": 2, "k": 1, "metric": {"kind": "euclidean", "dim": 2,
            "clients": [[0,0],[1,0]], "facilities": [[0,1]]}}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.n_clients(), 2);
        assert!((inst.d_cf(1, 0) - 2f64.sqrt()).abs() < 1e-12);
        let back = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(back.d_cf(1, 0), inst.d_cf(1, 0));
    }

    #[test]
    fn json_matrix_and_unknown_fields() {
        let text = r#"{"p": 1, "k": 1, "metric": {"kind": "matrix",
            "clients": [0,1,2], "facilities": [1], "matrix": [[0,1,2],[1,0,1],[2,1,0]]}}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.d_cf(2, 0), 1.0);
        let extra = r#"{"p": 1, "k": 1, "extra": 3, "metric": {"kind": "matrix",
            "clients": [0], "facilities": [0], "matrix": [[0]]}}"#;
        assert!(Instance::from_json(extra).is_err());
        let nested = r#"{"p": 1, "k": 1, "metric": {"kind": "matrix", "weights": 1,
            "clients": [0], "facilities": [0], "matrix": [[0]]}}"#;
        assert!(Instance::from_json(nested).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = vec![vec![0.0]];
        assert!(Instance::euclidean(&c, &c, 0, 1.0).is_err());
        assert!(Instance::euclidean(&c, &c, 1, 0.5).is_err());
        assert!(Instance::euclidean(&c, &[], 1, 1.0).is_err());
    }
}
