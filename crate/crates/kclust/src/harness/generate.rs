use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::metric::MetricSpace;
use crate::rng::{stream, tag};

/// Instance families. Every random family is deterministic in its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Clients and facilities uniform in the unit cube, drawn separately.
    Euclidean { n_clients: usize, n_facilities: usize, dim: usize, seed: u64 },
    /// Shortest-path metric of a random connected graph; every node is both
    /// a client and a facility.
    GraphMetric { n: usize, edge_density: f64, seed: u64 },
    /// Points 0, 1, ..., n−1 on a line, each a client and a facility.
    Line { n: usize },
    /// Planar clusters: `points_per_center` points uniform in a square of
    /// half-width `spread` around each of `centers` centers in [0, 10)².
    Clustered { centers: usize, spread: f64, seed: u64, points_per_center: usize },
}

pub const DEFAULT_POINTS_PER_CENTER: usize = 4;

pub fn generate_instance(spec: &GeneratorSpec, k: usize, p: f64) -> Result<Instance> {
    match *spec {
        GeneratorSpec::Euclidean { n_clients, n_facilities, dim, seed } => {
            if n_clients == 0 || n_facilities == 0 || dim == 0 {
                return Err(Error::Config("euclidean generator needs positive sizes".into()));
            }
            let mut rng = stream(seed, tag::GENERATOR, 0);
            let mut draw = |n: usize| -> Vec<Vec<f64>> {
                (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect()
            };
            let clients = draw(n_clients);
            let facilities = draw(n_facilities);
            Instance::euclidean(&clients, &facilities, k, p)
        }
        GeneratorSpec::GraphMetric { n, edge_density, seed } => {
            if n == 0 || !(0.0..=1.0).contains(&edge_density) {
                return Err(Error::Config("graph generator needs n > 0 and density in [0, 1]".into()));
            }
            let mut rng = stream(seed, tag::GENERATOR, 1);
            let mut d = vec![vec![f64::INFINITY; n]; n];
            for (a, row) in d.iter_mut().enumerate() {
                row[a] = 0.0;
            }
            let link = |d: &mut Vec<Vec<f64>>, a: usize, b: usize, w: f64| {
                if w < d[a][b] {
                    d[a][b] = w;
                    d[b][a] = w;
                }
            };
            // a random path keeps the graph connected
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            for pair in perm.windows(2) {
                let w = rng.gen_range(1.0..10.0);
                link(&mut d, pair[0], pair[1], w);
            }
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.gen::<f64>() < edge_density {
                        let w = rng.gen_range(1.0..10.0);
                        link(&mut d, a, b, w);
                    }
                }
            }
            for m in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let via = d[a][m] + d[m][b];
                        if via < d[a][b] {
                            d[a][b] = via;
                        }
                    }
                }
            }
            let metric = MetricSpace::matrix(&d)?;
            Instance::new(metric, (0..n).collect(), (0..n).collect(), k, p)
        }
        GeneratorSpec::Line { n } => {
            if n == 0 {
                return Err(Error::Config("line generator needs n > 0".into()));
            }
            let pts: Vec<Vec<f64>> = (0..n).map(|v| vec![v as f64]).collect();
            Instance::euclidean(&pts, &pts, k, p)
        }
        GeneratorSpec::Clustered { centers, spread, seed, points_per_center } => {
            if centers == 0 || points_per_center == 0 || !(spread >= 0.0) {
                return Err(Error::Config("clustered generator needs centers, points and spread >= 0".into()));
            }
            let mut rng = stream(seed, tag::GENERATOR, 2);
            let mut pts = Vec::with_capacity(centers * points_per_center);
            for _ in 0..centers {
                let c = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
                for _ in 0..points_per_center {
                    let dx = if spread > 0.0 { rng.gen_range(-spread..=spread) } else { 0.0 };
                    let dy = if spread > 0.0 { rng.gen_range(-spread..=spread) } else { 0.0 };
                    pts.push(vec![c[0] + dx, c[1] + dy]);
                }
            }
            Instance::euclidean(&pts, &pts, k, p)
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::Euclidean { n_clients, n_facilities, dim, seed } => {
                write!(f, "euclidean:clients={n_clients},facilities={n_facilities},dim={dim},seed={seed}")
            }
            GeneratorSpec::GraphMetric { n, edge_density, seed } => write!(f, "graph:n={n},density={edge_density},seed={seed}"),
            GeneratorSpec::Line { n } => write!(f, "line:n={n}"),
            GeneratorSpec::Clustered { centers, spread, seed, points_per_center } => {
                write!(f, "clustered:centers={centers},spread={spread},seed={seed},points={points_per_center}")
            }
        }
    }
}

/// Parses `kind:key=value,...`, for example `euclidean:clients=20,facilities=10,dim=2,seed=7`.
impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut fields = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (key, value) =
                part.split_once('=').ok_or_else(|| Error::Config(format!("generator field `{part}` is not key=value")))?;
            fields.insert(key.trim().to_string(), value.trim().to_string());
        }
        let take = |fields: &mut std::collections::BTreeMap<String, String>, key: &str, default: Option<&str>| -> Result<String> {
            match fields.remove(key) {
                Some(v) => Ok(v),
                None => default.map(str::to_string).ok_or_else(|| Error::Config(format!("generator `{kind}` needs `{key}`"))),
            }
        };
        fn num<T: FromStr>(key: &str, v: String) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("generator field `{key}` has bad value `{v}`")))
        }
        let spec = match kind {
            "euclidean" => GeneratorSpec::Euclidean {
                n_clients: num("clients", take(&mut fields, "clients", None)?)?,
                n_facilities: num("facilities", take(&mut fields, "facilities", None)?)?,
                dim: num("dim", take(&mut fields, "dim", Some("2"))?)?,
                seed: num("seed", take(&mut fields, "seed", Some("0"))?)?,
            },
            "graph" => GeneratorSpec::GraphMetric {
                n: num("n", take(&mut fields, "n", None)?)?,
                edge_density: num("density", take(&mut fields, "density", Some("0.3"))?)?,
                seed: num("seed", take(&mut fields, "seed", Some("0"))?)?,
            },
            "line" => GeneratorSpec::Line { n: num("n", take(&mut fields, "n", None)?)? },
            "clustered" => GeneratorSpec::Clustered {
                centers: num("centers", take(&mut fields, "centers", None)?)?,
                spread: num("spread", take(&mut fields, "spread", Some("0.5"))?)?,
                seed: num("seed", take(&mut fields, "seed", Some("0"))?)?,
                points_per_center: num("points", take(&mut fields, "points", Some("4"))?)?,
            },
            other => return Err(Error::Config(format!("unknown generator `{other}`"))),
        };
        if let Some(key) = fields.keys().next() {
            return Err(Error::Config(format!("generator `{kind}` has no field `{key}`")));
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_of_three() {
        let inst = generate_instance(&GeneratorSpec::Line { n: 3 }, 1, 1.0).unwrap();
        assert_eq!(inst.n_clients(), 3);
        assert_eq!(inst.d_cf(0, 2), 2.0);
        assert_eq!(inst.d_cf(1, 1), 0.0);
    }

    #[test]
    fn euclidean_is_deterministic() {
        let spec = GeneratorSpec::Euclidean { n_clients: 5, n_facilities: 4, dim: 3, seed: 11 };
        let a = generate_instance(&spec, 2, 2.0).unwrap().to_json().unwrap();
        let b = generate_instance(&spec, 2, 2.0).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parse_round_trip() {
        let spec: GeneratorSpec = "clustered:centers=3,spread=0.2,seed=5".parse().unwrap();
        assert_eq!(spec, GeneratorSpec::Clustered { centers: 3, spread: 0.2, seed: 5, points_per_center: 4 });
        assert_eq!(spec.to_string().parse::<GeneratorSpec>().unwrap(), spec);
        assert!("line:n=3,bogus=1".parse::<GeneratorSpec>().is_err());
        assert!("torus:n=3".parse::<GeneratorSpec>().is_err());
    }
}
