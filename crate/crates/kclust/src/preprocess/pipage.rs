use rand::Rng;

use crate::error::{Error, Result};

/// Scaled values within this distance of an integer are snapped.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PipageOutcome {
    /// Rounded opening, each entry a multiple of the granularity.
    pub y: Vec<f64>,
    /// `y[i] / g` as an exact integer.
    pub units: Vec<u64>,
}

fn snap(v: &mut f64) {
    let r = v.round();
    if (*v - r).abs() < SNAP {
        *v = r;
    }
}

fn frac(v: f64) -> f64 {
    v - v.floor()
}

fn is_frac(v: f64) -> bool {
    v != v.floor()
}

/// Validates laminarity and returns the deduplicated sets ordered so that
/// every set comes after all sets it contains.
fn order_family(family: &[Vec<usize>], n: usize) -> Result<Vec<Vec<usize>>> {
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(family.len());
    for s in family {
        let mut s = s.clone();
        s.sort_unstable();
        s.dedup();
        if let Some(&bad) = s.iter().find(|&&i| i >= n) {
            return Err(Error::Input(format!("family set refers to facility {bad} of {n}")));
        }
        if !s.is_empty() && !sets.contains(&s) {
            sets.push(s);
        }
    }
    for a in 0..sets.len() {
        for b in (a + 1)..sets.len() {
            let common = sets[a].iter().filter(|i| sets[b].binary_search(i).is_ok()).count();
            if common > 0 && common < sets[a].len().min(sets[b].len()) {
                return Err(Error::Input(format!(
                    "family is not laminar: set {a} {:?} crosses set {b} {:?}",
                    sets[a], sets[b]
                )));
            }
        }
    }
    sets.sort_by_key(|s| s.len());
    Ok(sets)
}

/// Dependent rounding of `yprime` to multiples of `g` that keeps every
/// set sum of the laminar `family` (and the total) within one unit of `g`.
///
/// Inside each set the fractional entries are paired in index order until at
/// most one remains; the remainder is passed up to the enclosing set. The last
/// remainder at the top is rounded up with probability equal to its fraction.
pub fn pipage_round<R: Rng>(yprime: &[f64], family: &[Vec<usize>], g: f64, rng: &mut R) -> Result<PipageOutcome> {
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::Input(format!("granularity {g} must lie in (0, 1]")));
    }
    let n = yprime.len();
    let sets = order_family(family, n)?;

    // innermost set of every facility; sets are ordered by size, so the
    // first containing set is the innermost one
    let mut home = vec![usize::MAX; n];
    for (s, members) in sets.iter().enumerate() {
        for &i in members {
            if home[i] == usize::MAX {
                home[i] = s;
            }
        }
    }
    // parent set of every set
    let parent: Vec<usize> = (0..sets.len())
        .map(|s| {
            (s + 1..sets.len())
                .find(|&t| sets[t].len() > sets[s].len() && sets[t].binary_search(&sets[s][0]).is_ok())
                .unwrap_or(usize::MAX)
        })
        .collect();

    let mut v: Vec<f64> = yprime.iter().map(|&x| x / g).collect();
    for x in &mut v {
        snap(x);
    }

    let mut carried: Vec<Vec<usize>> = vec![Vec::new(); sets.len()];
    let mut top: Vec<usize> = (0..n).filter(|&i| home[i] == usize::MAX).collect();
    for s in 0..sets.len() {
        let mut group: Vec<usize> = sets[s].iter().copied().filter(|&i| home[i] == s).collect();
        group.append(&mut carried[s]);
        let left = pair_up(&mut v, group, rng);
        if let Some(i) = left {
            if parent[s] == usize::MAX {
                top.push(i);
            } else {
                carried[parent[s]].push(i);
            }
        }
    }
    if let Some(i) = pair_up(&mut v, top, rng) {
        let f = frac(v[i]);
        v[i] = if rng.gen::<f64>() < f { v[i].ceil() } else { v[i].floor() };
    }

    let units: Vec<u64> = v.iter().map(|&x| x.round().max(0.0) as u64).collect();
    let y = units.iter().map(|&u| u as f64 * g).collect();
    Ok(PipageOutcome { y, units })
}

/// Pairs fractional entries of `group` in index order; returns the single
/// fractional survivor, if any.
fn pair_up<R: Rng>(v: &mut [f64], mut group: Vec<usize>, rng: &mut R) -> Option<usize> {
    group.sort_unstable();
    let mut current: Option<usize> = None;
    for i in group {
        if !is_frac(v[i]) {
            continue;
        }
        let Some(a) = current else {
            current = Some(i);
            continue;
        };
        let (fa, fb) = (frac(v[a]), frac(v[i]));
        let up = (1.0 - fa).min(fb);
        let down = fa.min(1.0 - fb);
        if rng.gen::<f64>() < down / (up + down) {
            v[a] += up;
            v[i] -= up;
        } else {
            v[a] -= down;
            v[i] += down;
        }
        snap(&mut v[a]);
        snap(&mut v[i]);
        current = match (is_frac(v[a]), is_frac(v[i])) {
            (true, _) => Some(a),
            (false, true) => Some(i),
            (false, false) => None,
        };
    }
    current
}
