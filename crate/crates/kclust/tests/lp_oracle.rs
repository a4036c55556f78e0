//! LP relaxation against oracles written independently of the library:
//! a grid search over the opening vector on three facilities and a
//! subset enumeration for the integral optimum.

use kclust::lp::{solve_relaxation, DEFAULT_ACCURACY};
use kclust::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Cheapest fractional assignment of one client under opening `y`.
fn client_cost(costs: &[f64], y: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
    let (mut need, mut total) = (1.0f64, 0.0);
    for i in order {
        let take = need.min(y[i]);
        total += take * costs[i];
        need -= take;
        if need <= 0.0 {
            break;
        }
    }
    if need > 1e-12 {
        f64::INFINITY
    } else {
        total
    }
}

struct Case {
    clients: Vec<Vec<f64>>,
    facilities: Vec<Vec<f64>>,
    k: usize,
    p: f64,
}

impl Case {
    fn random(rng: &mut ChaCha8Rng, n_facilities: usize, k: usize, p: f64) -> Self {
        let pt = |rng: &mut ChaCha8Rng| vec![rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)];
        let nc = rng.gen_range(1..=6);
        Case {
            clients: (0..nc).map(|_| pt(rng)).collect(),
            facilities: (0..n_facilities).map(|_| pt(rng)).collect(),
            k,
            p,
        }
    }

    fn costs(&self) -> Vec<Vec<f64>> {
        self.clients.iter().map(|c| self.facilities.iter().map(|f| dist(c, f).powf(self.p)).collect()).collect()
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.costs().iter().map(|row| client_cost(row, y)).sum()
    }

    fn instance(&self) -> Instance {
        Instance::euclidean(&self.clients, &self.facilities, self.k, self.p).unwrap()
    }

    fn integral_opt(&self) -> f64 {
        let n = self.facilities.len();
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == self.k)
            .map(|m| {
                let y: Vec<f64> = (0..n).map(|i| f64::from(m >> i & 1)).collect();
                self.value(&y)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[test]
fn three_facility_grid_search() {
    const STEPS: u32 = 120;
    let h = 1.0 / f64::from(STEPS);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case_no in 0..40 {
        let p = if case_no % 2 == 0 { 1.0 } else { 2.0 };
        let k = 1 + case_no % 2;
        let case = Case::random(&mut rng, 3, k, p);
        let mut grid_min = f64::INFINITY;
        for a in 0..=STEPS {
            for b in 0..=STEPS {
                let (y0, y1) = (f64::from(a) * h, f64::from(b) * h);
                let y2 = k as f64 - y0 - y1;
                if (-1e-12..=1.0 + 1e-12).contains(&y2) {
                    grid_min = grid_min.min(case.value(&[y0, y1, y2.clamp(0.0, 1.0)]));
                }
            }
        }
        let lipschitz: f64 = case.costs().iter().map(|row| row.iter().cloned().fold(0.0, f64::max)).sum();
        let lp = solve_relaxation(&case.instance(), DEFAULT_ACCURACY).unwrap();
        let value = case.value(&lp.y);
        assert!(value <= grid_min + 1e-6, "case {case_no}: lp {value} above grid {grid_min}");
        assert!(value >= grid_min - 4.0 * h * lipschitz - 1e-9, "case {case_no}: lp {value} far below grid {grid_min}");
        assert!(lp.y.iter().sum::<f64>() <= k as f64 + 1e-6);
    }
}

#[test]
fn relaxation_bounds_integral_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case_no in 0..40 {
        let nf = rng.gen_range(2..=6);
        let k = rng.gen_range(1..=nf);
        let p = [1.0, 2.0, 3.0][case_no % 3];
        let case = Case::random(&mut rng, nf, k, p);
        let lp = solve_relaxation(&case.instance(), DEFAULT_ACCURACY).unwrap();
        let value = case.value(&lp.y);
        let opt = case.integral_opt();
        assert!(value <= opt * (1.0 + 1e-7) + 1e-9, "case {case_no}: lp {value} > opt {opt}");
        if k == nf {
            assert!((value - opt).abs() <= 1e-7 * opt.max(1.0), "all open: lp {value} opt {opt}");
        }
    }
}

#[test]
fn single_client_is_nearest_facility() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let mut case = Case::random(&mut rng, 5, 2, 1.0);
        case.clients.truncate(1);
        let nearest = case.costs()[0].iter().cloned().fold(f64::INFINITY, f64::min);
        let lp = solve_relaxation(&case.instance(), DEFAULT_ACCURACY).unwrap();
        assert!((case.value(&lp.y) - nearest).abs() < 1e-7);
    }
}

/// Two clients at the ends of a segment with facilities at both ends and
/// k = 1: the relaxation can do no better than one full unit of distance.
#[test]
fn two_point_gap_instance() {
    let pts = vec![vec![0.0], vec![1.0]];
    let inst = Instance::euclidean(&pts, &pts, 1, 1.0).unwrap();
    let lp = solve_relaxation(&inst, DEFAULT_ACCURACY).unwrap();
    let case = Case { clients: pts.clone(), facilities: pts, k: 1, p: 1.0 };
    assert!((case.value(&lp.y) - 1.0).abs() < 1e-7);
}
