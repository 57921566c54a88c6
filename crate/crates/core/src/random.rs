//! Seeded random instances: groupoids, mutants, modules, cocycle
//! representations and correspondences.
//!
//! All generators take an explicit `SplitMix64`, so an `(inputs, seed)`
//! pair determines the output on every platform.

use crate::fingroupoid::{build_preset, isotropy_characters, FiniteGroupoid, Group, MeasuredGroupoid, Preset};
use crate::hilbmod::{BasisVector, Correspondence};
use crate::linalg::{c, haar_unitary, CMat, C64};
use crate::reps::{fibres, from_cocycle, CocycleFamily, Representation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use std::sync::Arc;

pub type Rng64 = SplitMix64;

pub fn rng_from_seed(seed: u64) -> Rng64 {
    SplitMix64::seed_from_u64(seed)
}

fn random_group<R: Rng + ?Sized>(max_order: usize, rng: &mut R) -> Group {
    let mut options: Vec<Group> = (1..=max_order.min(4)).map(Group::cyclic).collect();
    if max_order >= 4 {
        options.push(Group::klein());
    }
    if max_order >= 6 {
        options.push(Group::symmetric3());
    }
    let k = rng.random_range(0..options.len());
    options.swap_remove(k)
}

/// A disjoint union of components `P_k × Γ` with at most `max_objects`
/// objects and `max_arrows` arrows in total, arrows shuffled.
pub fn random_groupoid<R: Rng + ?Sized>(max_objects: usize, max_arrows: usize, rng: &mut R) -> FiniteGroupoid {
    assert!(max_objects >= 1 && max_arrows >= 1);
    let mut comps = Vec::new();
    let mut objects = 0;
    let mut arrows = 0;
    loop {
        let room_o = max_objects - objects;
        let room_a = max_arrows - arrows;
        // the largest k with k² ≤ room_a
        let kmax = (1..=room_o).take_while(|k| k * k <= room_a).last().unwrap_or(0);
        if kmax == 0 {
            break;
        }
        let k = rng.random_range(1..=kmax);
        let gr = random_group(room_a / (k * k), rng);
        objects += k;
        arrows += k * k * gr.order();
        comps.push(build_preset(Preset::PairTimesGroup(k, gr)).expect("valid preset"));
        if objects == max_objects || !rng.random_bool(0.4) {
            break;
        }
    }
    let g = if comps.len() == 1 { comps.pop().unwrap() } else { build_preset(Preset::DisjointUnion(comps)).expect("valid union") };
    let mut perm: Vec<usize> = (0..g.n_arrows()).collect();
    perm.shuffle(rng);
    g.permute_arrows(&perm)
}

/// Haar weights `c(x)` drawn log-uniformly from `[1/4, 4]`.
pub fn random_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| 4f64.powf(rng.random_range(-1.0..1.0))).collect()
}

/// Random groupoid with random positive `c`.
pub fn random_measured<R: Rng + ?Sized>(name: &str, rng: &mut R) -> MeasuredGroupoid {
    let g = random_groupoid(4, 12, rng);
    let c = random_weights(g.n_objects(), rng);
    MeasuredGroupoid::new(name, g, c).expect("random groupoid is valid")
}

/// Random groupoid with counting Haar system.
pub fn random_etale<R: Rng + ?Sized>(name: &str, rng: &mut R) -> MeasuredGroupoid {
    MeasuredGroupoid::counting(name, random_groupoid(4, 12, rng)).expect("random groupoid is valid")
}

/// The groupoid of units on `1..=4` points.
pub fn random_space<R: Rng + ?Sized>(name: &str, rng: &mut R) -> MeasuredGroupoid {
    let n = rng.random_range(1..=4);
    let g = build_preset(Preset::Space(n)).expect("space preset");
    MeasuredGroupoid::new(name, g, random_weights(n, rng)).expect("space groupoid is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    /// Redirect one defined product to a different arrow.
    Compose,
    /// Remove one product of a composable pair.
    DropCompose,
    /// Point one inverse at a different arrow.
    Inverse,
    /// Point one unit at a different arrow.
    Unit,
    /// Rescale the Haar weight of one arrow.
    Haar,
}

#[derive(Debug, Clone)]
pub struct Mutant {
    pub kind: MutationKind,
    pub groupoid: FiniteGroupoid,
    /// Arrow weights `c(s(g))`, possibly mutated.
    pub weights: Vec<f64>,
    pub description: String,
}

/// One random defect in the tables of a valid measured groupoid.
pub fn mutate<R: Rng + ?Sized>(mg: &MeasuredGroupoid, rng: &mut R) -> Mutant {
    let g = &mg.g;
    let n1 = g.n_arrows();
    let mut kinds = vec![MutationKind::DropCompose, MutationKind::Haar];
    if n1 > 1 {
        kinds.extend([MutationKind::Compose, MutationKind::Inverse, MutationKind::Unit]);
    }
    let kind = kinds[rng.random_range(0..kinds.len())];
    let mut out = g.clone();
    let mut weights = mg.haar.arrow_weights(g);
    let other = |k: usize, rng: &mut R| {
        let j = rng.random_range(0..n1 - 1);
        if j >= k {
            j + 1
        } else {
            j
        }
    };
    let description = match kind {
        MutationKind::Compose | MutationKind::DropCompose => {
            let (a, b) = mg.nerve.pairs[rng.random_range(0..mg.nerve.n_pairs())];
            let ab = g.mul(a, b);
            if kind == MutationKind::Compose {
                let k = other(ab, rng);
                out.comp[a][b] = Some(k);
                format!("{}·{} := {}", g.arrow_ids[a], g.arrow_ids[b], g.arrow_ids[k])
            } else {
                out.comp[a][b] = None;
                format!("{}·{} undefined", g.arrow_ids[a], g.arrow_ids[b])
            }
        }
        MutationKind::Inverse => {
            let a = rng.random_range(0..n1);
            let k = other(g.inv[a], rng);
            out.inv[a] = k;
            format!("inv({}) := {}", g.arrow_ids[a], g.arrow_ids[k])
        }
        MutationKind::Unit => {
            let x = rng.random_range(0..g.n_objects());
            let k = other(g.unit[x], rng);
            out.unit[x] = k;
            format!("unit({}) := {}", g.object_ids[x], g.arrow_ids[k])
        }
        MutationKind::Haar => {
            let a = rng.random_range(0..n1);
            // Doubling is invisible to left invariance when `a` is alone in
            // its source fibre; a sign flip always breaks full support.
            let f = if g.source_fiber(g.src[a]).len() > 1 && rng.random_bool(0.5) { 2.0 } else { -1.0 };
            weights[a] *= f;
            format!("weight({}) *= {f}", g.arrow_ids[a])
        }
    };
    Mutant { kind, groupoid: out, weights, description }
}

/// Fibre dimensions in `0..=max_dim`, constant on orbits, not all zero;
/// basis weights log-uniform in `[1/2, 2]` when `weighted`.
pub fn random_module<R: Rng + ?Sized>(g: &FiniteGroupoid, n_coeff: usize, max_dim: usize, weighted: bool, rng: &mut R) -> Correspondence {
    let orbits = g.orbits();
    let mut dims = vec![vec![0; n_coeff]; g.n_objects()];
    for orbit in &orbits {
        for w in 0..n_coeff {
            let d = rng.random_range(0..=max_dim);
            for &x in orbit {
                dims[x][w] = d;
            }
        }
    }
    if dims.iter().flatten().all(|&d| d == 0) {
        let w = rng.random_range(0..n_coeff);
        for &x in &orbits[0] {
            dims[x][w] = 1;
        }
    }
    let mut basis = Vec::new();
    for (x, row) in dims.iter().enumerate() {
        for (w, &d) in row.iter().enumerate() {
            for _ in 0..d {
                let weight = if weighted { 2f64.powf(rng.random_range(-1.0..1.0)) } else { 1.0 };
                basis.push(BasisVector { left: x, right: w, weight });
            }
        }
    }
    Correspondence { n_left: g.n_objects(), n_right: n_coeff, basis }
}

fn phase(turns: f64) -> C64 {
    let t = 2.0 * std::f64::consts::PI * turns;
    c(t.cos(), t.sin())
}

/// A cocycle on the given fibres: on each orbit an isotropy representation
/// `ρ = W·diag(χ₁,…,χ_d)·W*` at a base object, transported along a
/// spanning tree with Haar unitaries `T_y`:
/// `U_g = T_{r(g)} ρ(t_{r(g)}⁻¹ g t_{s(g)}) T_{s(g)}*`.
pub fn random_cocycle<R: Rng + ?Sized>(g: &FiniteGroupoid, module: &Correspondence, rng: &mut R) -> CocycleFamily {
    let fib = fibres(module);
    let n_coeff = module.n_right;
    let mut blocks: Vec<Vec<CMat>> =
        (0..g.n_arrows()).map(|a| (0..n_coeff).map(|w| CMat::zeros(fib[g.rng[a]][w].len(), fib[g.src[a]][w].len())).collect()).collect();
    for orbit in g.orbits() {
        let x0 = orbit[0];
        let iso = g.isotropy(x0);
        let chars = isotropy_characters(g, x0);
        let tree: Vec<usize> = orbit.iter().map(|&y| g.arrow_between(x0, y).expect("same orbit")).collect();
        let pos = |y: usize| orbit.iter().position(|&z| z == y).unwrap();
        for w in 0..n_coeff {
            let d = fib[x0][w].len();
            if d == 0 {
                continue;
            }
            let wm = haar_unitary(d, rng);
            let picks: Vec<usize> = (0..d).map(|_| rng.random_range(0..chars.len())).collect();
            let rho = |a: usize| {
                let k = iso.iter().position(|&b| b == a).expect("isotropy arrow");
                let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(d, picks.iter().map(|&p| phase(chars[p][k]))));
                &wm * diag * wm.adjoint()
            };
            let t: Vec<CMat> = orbit.iter().map(|&y| if y == x0 { CMat::identity(d, d) } else { haar_unitary(d, rng) }).collect();
            for a in 0..g.n_arrows() {
                let (x, y) = (g.src[a], g.rng[a]);
                if !orbit.contains(&x) {
                    continue;
                }
                let (tx, ty) = (tree[pos(x)], tree[pos(y)]);
                let core = g.mul(g.mul(g.inv[ty], a), tx);
                blocks[a][w] = &t[pos(y)] * rho(core) * t[pos(x)].adjoint();
            }
        }
    }
    CocycleFamily { blocks }
}

/// A valid representation with weighted fibres of dimension at most 3
/// (at most 2 when `n_coeff > 1`).
pub fn random_representation<R: Rng + ?Sized>(mg: Arc<MeasuredGroupoid>, n_coeff: usize, rng: &mut R) -> Representation {
    let max_dim = if n_coeff > 1 { 2 } else { 3 };
    let module = random_module(&mg.g, n_coeff, max_dim, true, rng);
    let fam = random_cocycle(&mg.g, &module, rng);
    from_cocycle(mg, module, &fam).expect("random cocycle has matching shapes")
}

/// `C(X) → C(Y)` correspondence with fibre dimensions in `0..=max_dim` and
/// weights log-uniform in `[1/2, 2]`.
pub fn random_correspondence<R: Rng + ?Sized>(n_left: usize, n_right: usize, max_dim: usize, rng: &mut R) -> Correspondence {
    let mut basis = Vec::new();
    for x in 0..n_left {
        for y in 0..n_right {
            for _ in 0..rng.random_range(0..=max_dim) {
                basis.push(BasisVector { left: x, right: y, weight: 2f64.powf(rng.random_range(-1.0..1.0)) });
            }
        }
    }
    Correspondence { n_left, n_right, basis }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingroupoid::validate_haar;
    use crate::reps::check_representation;

    #[test]
    fn random_groupoids_are_valid_and_bounded() {
        let mut rng = rng_from_seed(11);
        for i in 0..50 {
            let mg = random_measured(&format!("r{i}"), &mut rng);
            assert!(mg.g.validate().is_valid());
            assert!(mg.n_objects() <= 4 && mg.n_arrows() <= 12);
        }
    }

    #[test]
    fn mutants_fail_validation() {
        let mut rng = rng_from_seed(12);
        for i in 0..200 {
            let mg = random_measured(&format!("r{i}"), &mut rng);
            let m = mutate(&mg, &mut rng);
            let bad_g = !m.groupoid.validate().is_valid();
            let bad_h = !validate_haar(&m.groupoid, &m.weights).is_valid();
            assert!(bad_g || bad_h, "{:?} {} survived", m.kind, m.description);
        }
    }

    #[test]
    fn random_reps_pass() {
        let mut rng = rng_from_seed(13);
        for i in 0..10 {
            let mg = Arc::new(random_measured(&format!("r{i}"), &mut rng));
            for n in [1, 2] {
                let rep = random_representation(mg.clone(), n, &mut rng);
                let r = check_representation(&rep, 1e-10);
                assert!(r.passed(), "{r}");
            }
        }
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let a = random_groupoid(4, 12, &mut rng_from_seed(5));
        let b = random_groupoid(4, 12, &mut rng_from_seed(5));
        assert_eq!(a, b);
    }
}
