//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `cargo test --test acceptance -- --nocapture`). Covers
//! oracle equivalence, the barcode narrative, transform identities,
//! stability bounds, transport solvers, injectivity sampling, Euler
//! consistency, the classification uplift, and determinism/performance.

use convpers::complex::{
    cubical_lower_star, cubical_upper_star, simplicial_lower_star, Cell, ComplexKind,
    FilteredComplex,
};
use convpers::grid::{
    convolve, linear_combination, region_shape, ConvFilter, GridShape, Image, Stride,
};
use convpers::learn::{run_experiment, BankSpec, ExperimentConfig, FeatureSpec};
use convpers::linalg::Matrix;
use convpers::metrics::{
    bottleneck, bottleneck_bruteforce, operator_norm, wasserstein, wasserstein_bruteforce,
    wasserstein_sinkhorn, OperatorNormSpec,
};
use convpers::persistence::{
    betti_bruteforce, euler_curve, reduce_and_pair, DiagramPoint, PersistenceDiagram,
};
use convpers::transforms::{
    cpt_image, cpt_simplicial, random_filters, Construction, FilterBank, SimplicialConvInput,
};
use convpers::vectorize::CombineMode;
use convpers_cli::synth::{generate_dataset, Family, SyntheticSpec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

// ------------------------------------------------------------ shared helpers

fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Image {
    let shape = GridShape::new(vec![rows, cols]).unwrap();
    let values = (0..rows * cols)
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    Image::single_channel(shape, values).unwrap()
}

/// Random simplicial complex (<= `max_cells` cells, dimension <= 2) with a
/// generic monotone filtration: lower-star values bumped upward in
/// dimension order.
fn random_monotone_complex(rng: &mut ChaCha8Rng, max_cells: usize) -> FilteredComplex {
    loop {
        let vertices = rng.random_range(4..=7);
        let mut simplices: Vec<Vec<usize>> = Vec::new();
        for a in 0..vertices {
            for b in (a + 1)..vertices {
                if rng.random_bool(0.35) {
                    simplices.push(vec![a, b]);
                }
            }
        }
        for a in 0..vertices {
            for b in (a + 1)..vertices {
                for c in (b + 1)..vertices {
                    if rng.random_bool(0.12) {
                        simplices.push(vec![a, b, c]);
                    }
                }
            }
        }
        let values: Vec<f64> = (0..vertices).map(|_| rng.random_range(0.0..1.0)).collect();
        let base = simplicial_lower_star(&simplices, &values).unwrap();
        if base.len() > max_cells {
            continue;
        }
        let mut positions: Vec<usize> = (0..base.cells().len()).collect();
        positions.sort_by_key(|&p| base.cells()[p].dim);
        let mut value_of = std::collections::HashMap::new();
        let mut cells = Vec::new();
        for &pos in &positions {
            let cell = &base.cells()[pos];
            let floor = cell
                .faces
                .iter()
                .map(|f| value_of[f])
                .fold(cell.value, f64::max);
            let bump = if rng.random_bool(0.5) {
                rng.random_range(0.0..0.4)
            } else {
                0.0
            };
            value_of.insert(cell.id, floor + bump);
            cells.push(Cell::new(
                cell.id,
                cell.dim,
                cell.faces.clone(),
                floor + bump,
            ));
        }
        return FilteredComplex::from_cells(cells, ComplexKind::Simplicial).unwrap();
    }
}

fn random_diagram(rng: &mut ChaCha8Rng, max_points: usize) -> PersistenceDiagram {
    let count = rng.random_range(0..=max_points);
    let points = (0..count)
        .map(|_| {
            let birth = rng.random_range(0.0..1.0);
            let pers = rng.random_range(0.2..1.2);
            DiagramPoint::new(birth, birth + pers, 0)
        })
        .collect();
    PersistenceDiagram::new(points, 0)
}

// ------------------------------------------------------------- criterion 1

#[test]
fn criterion_01_persistent_betti_match_bruteforce_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..30 {
        let complex = random_monotone_complex(&mut rng, 40);
        assert!(complex.len() <= 40);
        let diagram = reduce_and_pair(&complex).unwrap();
        for &alpha in complex.value_set().iter() {
            for q in 0..=2usize {
                let from_diagram = diagram
                    .points_of_dim(q)
                    .filter(|p| p.birth <= alpha && alpha < p.death)
                    .count();
                assert_eq!(
                    from_diagram,
                    betti_bruteforce(&complex, alpha, q),
                    "alpha={alpha} q={q}"
                );
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "PASS criterion 1: diagram counts equal brute-force Betti on 30 complexes ({elapsed:?})"
    );
}

// ------------------------------------------------------------- criterion 2

#[test]
fn criterion_02_barcode_narrative_complex() {
    // Four components at 0; two die at 1, one at 2, one lives forever.
    // Three loops appear at 2; a 2-cell kills one of them at 3.
    let cells = vec![
        Cell::new(0, 0, vec![], 0.0),
        Cell::new(1, 0, vec![], 0.0),
        Cell::new(2, 0, vec![], 0.0),
        Cell::new(3, 0, vec![], 0.0),
        Cell::new(4, 1, vec![0, 1], 1.0),
        Cell::new(5, 1, vec![2, 3], 1.0),
        Cell::new(6, 1, vec![1, 2], 2.0),
        Cell::new(7, 1, vec![0, 1], 2.0),
        Cell::new(8, 1, vec![2, 3], 2.0),
        Cell::new(9, 1, vec![0, 3], 2.0),
        Cell::new(10, 2, vec![4, 7], 3.0),
    ];
    let complex = FilteredComplex::from_cells(cells, ComplexKind::Cubical).unwrap();
    let diagram = reduce_and_pair(&complex).unwrap();

    let h0: Vec<(f64, f64)> = diagram
        .points_of_dim(0)
        .map(|p| (p.birth, p.death))
        .collect();
    assert_eq!(
        h0,
        vec![(0.0, 1.0), (0.0, 1.0), (0.0, 2.0), (0.0, f64::INFINITY)]
    );
    let h1: Vec<(f64, f64)> = diagram
        .points_of_dim(1)
        .map(|p| (p.birth, p.death))
        .collect();
    assert_eq!(
        h1,
        vec![(2.0, 3.0), (2.0, f64::INFINITY), (2.0, f64::INFINITY)]
    );
    println!("PASS criterion 2: hand-built complex reproduces the narrated barcode");
}

// ------------------------------------------------------------- criterion 3

#[test]
fn criterion_03_trivial_filter_reproduces_ordinary_diagram() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let bank = FilterBank::trivial(1);
    for trial in 0..20 {
        let f = random_image(&mut rng, 5 + trial % 3, 5 + trial % 2);
        for construction in [Construction::Lower, Construction::Upper] {
            let cpt = cpt_image(&f, &bank, &Stride::unit(2), 2, construction).unwrap();
            let complex = match construction {
                Construction::Lower => cubical_lower_star(&f, 2).unwrap(),
                Construction::Upper => cubical_upper_star(&f, 2).unwrap(),
            };
            let ordinary = reduce_and_pair(&complex).unwrap();
            assert_eq!(cpt.entries[0].1, ordinary);
        }
    }
    println!("PASS criterion 3: trivial-filter transform is bit-identical to ordinary persistence");
}

// ------------------------------------------------------------- criterion 4

#[test]
fn criterion_04_image_convolution_stability() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let stride = Stride::unit(2);
    for _ in 0..200 {
        let f1 = random_image(&mut rng, 8, 8);
        let noise: Vec<f64> = (0..64).map(|_| rng.random_range(-0.2..0.2)).collect();
        let f2_values: Vec<f64> = f1.values().iter().zip(&noise).map(|(a, n)| a + n).collect();
        let f2 = Image::single_channel(f1.shape().clone(), f2_values).unwrap();
        let g_values: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = ConvFilter::new("g", GridShape::new(vec![3, 3]).unwrap(), 1, g_values).unwrap();

        let d1 =
            reduce_and_pair(&cubical_lower_star(&convolve(&f1, &g, &stride).unwrap(), 2).unwrap())
                .unwrap();
        let d2 =
            reduce_and_pair(&cubical_lower_star(&convolve(&f2, &g, &stride).unwrap(), 2).unwrap())
                .unwrap();

        let g_l1 = g.l1_norm();
        let diff_inf = noise.iter().map(|n| n.abs()).fold(0.0, f64::max);
        let w_inf = bottleneck(&d1, &d2);
        assert!(
            w_inf <= g_l1 * diff_inf + 1e-9,
            "W_inf {w_inf} above {g_l1} * {diff_inf}"
        );

        let diff_l1: f64 = noise.iter().map(|n| n.abs()).sum();
        let w1 = wasserstein(&d1, &d2, 1.0).unwrap();
        let bound = 5.0 * g_l1 * diff_l1; // (3^2 - 2^2) on the 2-skeleton
        assert!(w1 <= bound + 1e-9, "W_1 {w1} above {bound}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("PASS criterion 4: convolution stability bounds held for 200 trials ({elapsed:?})");
}

// ------------------------------------------------------------- criterion 5

#[test]
fn criterion_05_simplicial_convolution_stability() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let n = 10;
    for _ in 0..200 {
        // Random complex on 10 vertices; filtration values come from the
        // convolution, so the initial ones are ignored.
        let mut simplices = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.random_bool(0.3) {
                    simplices.push(vec![a, b]);
                }
            }
        }
        let complex = simplicial_lower_star(&simplices, &vec![0.0; n]).unwrap();

        let d = 3;
        let a = Matrix::from_rows(
            &(0..n)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect::<Vec<_>>(),
        );
        let x1 = Matrix::from_rows(
            &(0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect::<Vec<_>>(),
        );
        let x2 = Matrix::from_rows(
            &(0..n)
                .map(|i| {
                    (0..d)
                        .map(|j| x1.get(i, j) + rng.random_range(-0.3..0.3))
                        .collect()
                })
                .collect::<Vec<_>>(),
        );
        let mut w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
        w.iter_mut().for_each(|x| *x /= norm);

        let in1 = SimplicialConvInput::new(complex.clone(), a.clone(), x1.clone()).unwrap();
        let in2 = SimplicialConvInput::new(complex.clone(), a.clone(), x2.clone()).unwrap();
        let d1 = cpt_simplicial(&in1, &[w.clone()]).unwrap().remove(0).1;
        let d2 = cpt_simplicial(&in2, &[w.clone()]).unwrap().remove(0).1;

        let diff = Matrix::from_rows(
            &(0..n)
                .map(|i| (0..d).map(|j| x1.get(i, j) - x2.get(i, j)).collect())
                .collect::<Vec<_>>(),
        );
        let bound = operator_norm(&a, OperatorNormSpec::LInf).unwrap()
            * operator_norm(&diff, OperatorNormSpec::LInf).unwrap()
            * w.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let w_inf = bottleneck(&d1, &d2);
        assert!(w_inf <= bound + 1e-9, "W_inf {w_inf} above {bound}");
    }
    println!("PASS criterion 5: simplicial stability bound held for 200 trials");
}

// ------------------------------------------------------------- criterion 6

#[test]
fn criterion_06_transport_oracle_and_sinkhorn() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for _ in 0..100 {
        let d1 = random_diagram(&mut rng, 4);
        let d2 = random_diagram(&mut rng, 4);
        for p in [1.0, 2.0] {
            let exact = wasserstein(&d1, &d2, p).unwrap();
            let brute = wasserstein_bruteforce(&d1, &d2, p).unwrap();
            assert!((exact - brute).abs() <= 1e-12, "p={p}: {exact} vs {brute}");
        }
        let exact = bottleneck(&d1, &d2);
        let brute = bottleneck_bruteforce(&d1, &d2).unwrap();
        assert!((exact - brute).abs() <= 1e-12, "{exact} vs {brute}");
    }

    let mut checked = 0;
    while checked < 20 {
        let d1 = random_diagram(&mut rng, 6);
        let d2 = random_diagram(&mut rng, 6);
        if d1.is_empty() && d2.is_empty() {
            continue;
        }
        let scale = d1
            .points()
            .iter()
            .chain(d2.points())
            .flat_map(|p| [p.birth.abs(), p.death.abs()])
            .fold(0.0, f64::max);
        let epsilon = 0.01 * scale;
        let exact = wasserstein(&d1, &d2, 1.0).unwrap();
        if exact <= 0.0 {
            continue;
        }
        let run = wasserstein_sinkhorn(&d1, &d2, 1.0, epsilon, 100_000).unwrap();
        let rel = (run.value - exact).abs() / exact;
        assert!(rel <= 0.05, "relative error {rel} at epsilon {epsilon}");
        checked += 1;
    }
    println!("PASS criterion 6: exact transport matches the oracle; Sinkhorn within 5%");
}

// ------------------------------------------------------------- criterion 7

/// Reduced fraction over i128 for the exact null-space computation.
#[derive(Clone, Copy, PartialEq)]
struct Frac {
    num: i128,
    den: i128,
}

impl Frac {
    fn new(num: i128, den: i128) -> Self {
        assert!(den != 0);
        let g = gcd(num.abs(), den.abs()).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Self {
            num: sign * num / g,
            den: sign * den / g,
        }
    }
    fn zero() -> Self {
        Self { num: 0, den: 1 }
    }
    fn is_zero(&self) -> bool {
        self.num == 0
    }
    fn sub(self, other: Frac) -> Frac {
        Frac::new(
            self.num * other.den - other.num * self.den,
            self.den * other.den,
        )
    }
    fn mul(self, other: Frac) -> Frac {
        Frac::new(self.num * other.num, self.den * other.den)
    }
    fn div(self, other: Frac) -> Frac {
        Frac::new(self.num * other.den, self.den * other.num)
    }
    fn neg(self) -> Frac {
        Frac::new(-self.num, self.den)
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact integer vector in the null space of an integer matrix with more
/// columns than rank, via rational Gauss-Jordan elimination.
fn integer_null_vector(rows: &[Vec<i128>]) -> Vec<i128> {
    let nrows = rows.len();
    let ncols = rows[0].len();
    let mut m: Vec<Vec<Frac>> = rows
        .iter()
        .map(|row| row.iter().map(|&v| Frac::new(v, 1)).collect())
        .collect();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c];
        for entry in &mut m[r][c..] {
            *entry = entry.div(inv);
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let factor = row[c];
                for (entry, pv) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                    *entry = entry.sub(factor.mul(*pv));
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free = (0..ncols)
        .find(|c| !pivot_cols.contains(c))
        .expect("wide matrix has a free column");
    let mut x = vec![Frac::zero(); ncols];
    x[free] = Frac::new(1, 1);
    for (i, &pc) in pivot_cols.iter().enumerate() {
        x[pc] = m[i][free].neg();
    }
    let lcm = x.iter().fold(1i128, |acc, f| acc / gcd(acc, f.den) * f.den);
    x.iter().map(|f| f.num * (lcm / f.den)).collect()
}

#[test]
fn criterion_07_convolutionally_orthogonal_filters_change_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let b_shape = GridShape::new(vec![3, 3]).unwrap();
    let stride = Stride::unit(2);
    for _ in 0..20 {
        // Integer image so the convolutions are exact in f64.
        let f_ints: Vec<i128> = (0..16).map(|_| rng.random_range(0..10)).collect();
        let f = Image::single_channel(
            GridShape::new(vec![4, 4]).unwrap(),
            f_ints.iter().map(|&v| v as f64).collect(),
        )
        .unwrap();

        // Patch matrix rows are the four 3x3 windows of f; its null space
        // holds every filter convolutionally orthogonal to f.
        let patches = convpers::grid::extract_patches(&f, &b_shape, &stride).unwrap();
        let int_rows: Vec<Vec<i128>> = patches
            .iter()
            .map(|p| p.iter().map(|&v| v as i128).collect())
            .collect();
        let h_ints = integer_null_vector(&int_rows);
        for row in &int_rows {
            let dot: i128 = row.iter().zip(&h_ints).map(|(a, b)| a * b).sum();
            assert_eq!(dot, 0, "null vector is not orthogonal to a patch");
        }
        let h = ConvFilter::new(
            "h",
            b_shape.clone(),
            1,
            h_ints.iter().map(|&v| v as f64).collect(),
        )
        .unwrap();
        let conv_h = convolve(&f, &h, &stride).unwrap();
        assert!(conv_h.values().iter().all(|&v| v == 0.0));

        let g_ints: Vec<i128> = (0..9).map(|_| rng.random_range(-5..=5)).collect();
        let g = ConvFilter::new(
            "g",
            b_shape.clone(),
            1,
            g_ints.iter().map(|&v| v as f64).collect(),
        )
        .unwrap();
        let g_plus_h = linear_combination(&[g.clone(), h], &[1.0, 1.0]).unwrap();

        let d_g =
            reduce_and_pair(&cubical_lower_star(&convolve(&f, &g, &stride).unwrap(), 2).unwrap())
                .unwrap();
        let d_gh = reduce_and_pair(
            &cubical_lower_star(&convolve(&f, &g_plus_h, &stride).unwrap(), 2).unwrap(),
        )
        .unwrap();
        assert_eq!(d_g, d_gh);
    }
    println!(
        "PASS criterion 7: adding a convolutionally orthogonal filter leaves diagrams unchanged"
    );
}

// ------------------------------------------------------------- criterion 8

#[test]
fn criterion_08_generic_injectivity_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let bank = random_filters(&GridShape::new(vec![3, 3]).unwrap(), 1, 25, 1008).unwrap();
    let stride = Stride::unit(2);
    let mut separated = 0;
    for _ in 0..50 {
        let f1 = random_image(&mut rng, 6, 6);
        let f2 = random_image(&mut rng, 6, 6);
        let c1 = cpt_image(&f1, &bank, &stride, 2, Construction::Lower).unwrap();
        let c2 = cpt_image(&f2, &bank, &stride, 2, Construction::Lower).unwrap();
        if c1
            .entries
            .iter()
            .zip(&c2.entries)
            .any(|((_, a), (_, b))| bottleneck(a, b) > 1e-9)
        {
            separated += 1;
        }
    }
    assert!(separated >= 49, "only {separated}/50 pairs separated");

    // A pair with identical ordinary persistence: a generic image and its
    // mirror. Asymmetric filters still tell them apart.
    let f1 = random_image(&mut rng, 4, 4);
    let mirrored: Vec<f64> = (0..16)
        .map(|i| {
            let (r, c) = (i / 4, i % 4);
            f1.values()[r * 4 + (3 - c)]
        })
        .collect();
    let f2 = Image::single_channel(f1.shape().clone(), mirrored).unwrap();
    assert_ne!(f1, f2);
    let d1 = reduce_and_pair(&cubical_lower_star(&f1, 2).unwrap()).unwrap();
    let d2 = reduce_and_pair(&cubical_lower_star(&f2, 2).unwrap()).unwrap();
    assert_eq!(d1, d2, "mirror images should share their ordinary diagram");
    let c1 = cpt_image(&f1, &bank, &stride, 2, Construction::Lower).unwrap();
    let c2 = cpt_image(&f2, &bank, &stride, 2, Construction::Lower).unwrap();
    let separated_pair = c1
        .entries
        .iter()
        .zip(&c2.entries)
        .any(|((_, a), (_, b))| bottleneck(a, b) > 1e-9);
    assert!(separated_pair, "no filter separated the mirror pair");
    println!("PASS criterion 8: {separated}/50 random pairs and the equal-diagram pair separated");
}

// ------------------------------------------------------------- criterion 9

#[test]
fn criterion_09_region_arithmetic() {
    let r = region_shape(
        &GridShape::new(vec![4, 3]).unwrap(),
        &GridShape::new(vec![2, 2]).unwrap(),
        &Stride::new(vec![2, 1]).unwrap(),
    )
    .unwrap();
    assert_eq!(r.extents(), &[2, 2]);
    println!("PASS criterion 9: a 2x2 filter strides a 4x3 grid in four placements");
}

// ------------------------------------------------------------ criterion 10

#[test]
fn criterion_10_euler_curves_match_betti_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    for _ in 0..20 {
        let complex = random_monotone_complex(&mut rng, 40);
        let thresholds = complex.value_set();
        let curve = euler_curve(&complex, &thresholds).unwrap();
        for (i, &alpha) in thresholds.iter().enumerate() {
            let chi: i64 = (0..=2)
                .map(|q| {
                    let betti = betti_bruteforce(&complex, alpha, q) as i64;
                    if q % 2 == 0 {
                        betti
                    } else {
                        -betti
                    }
                })
                .sum();
            assert_eq!(curve.values()[i], chi, "alpha={alpha}");
        }
    }
    println!("PASS criterion 10: Euler curves equal alternating Betti sums on 20 complexes");
}

// ------------------------------------------------------------ criterion 11

#[test]
fn criterion_11_classification_uplift() {
    let start = Instant::now();
    let spec = SyntheticSpec {
        family: Family::Stripes,
        classes: 3,
        size: 12,
        noise: 0.05,
        count_per_class: 100,
        seed: 7,
    };
    let samples = generate_dataset(&spec);
    assert_eq!(samples.len(), 300);
    let class_names: Vec<String> = (0..3).map(|c| spec.class_name(c)).collect();

    let base_config = ExperimentConfig {
        construction: Construction::Upper,
        bank: BankSpec::Trivial,
        vectorization: FeatureSpec::TotalPersistence,
        combine: CombineMode::Concat,
        test_fraction: 0.2,
        seeds: vec![1, 2, 3, 4, 5],
        stride: vec![1, 1],
        max_dim: 2,
        knn_k: 3,
    };
    let conv_config = ExperimentConfig {
        bank: BankSpec::Random {
            count: 25,
            shape: vec![3, 3],
        },
        ..base_config.clone()
    };

    let baseline = run_experiment(&samples, &class_names, &base_config).unwrap();
    let convolved = run_experiment(&samples, &class_names, &conv_config).unwrap();
    let uplift = convolved.mean - baseline.mean;
    assert!(
        uplift >= 0.05,
        "uplift {uplift:.4} (baseline {:.4}, convolved {:.4})",
        baseline.mean,
        convolved.mean
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "PASS criterion 11: convolved 3-NN beats baseline by {:.1} points ({:.3} vs {:.3}, {elapsed:?})",
        100.0 * uplift,
        convolved.mean,
        baseline.mean
    );
}

// ------------------------------------------------------------ criterion 12

#[test]
fn criterion_12_determinism_and_speed() {
    let mut rng = ChaCha8Rng::seed_from_u64(112);
    let f = random_image(&mut rng, 8, 8);
    let bank = random_filters(&GridShape::new(vec![3, 3]).unwrap(), 1, 25, 1012).unwrap();
    let stride = Stride::unit(2);

    // Time inside a dedicated pool (best of three) so concurrently running
    // tests sharing the global rayon pool cannot stall the measurement.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let mut reference = None;
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let start = Instant::now();
        let run = pool.install(|| cpt_image(&f, &bank, &stride, 2, Construction::Upper).unwrap());
        best = best.min(start.elapsed().as_secs_f64());
        reference = Some(run);
    }
    let reference = reference.unwrap();
    assert!(best < 1.0, "pipeline took {best}s");

    for threads in [1usize, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let result =
            pool.install(|| cpt_image(&f, &bank, &stride, 2, Construction::Upper).unwrap());
        assert_eq!(
            result, reference,
            "thread count {threads} changed the output"
        );
    }
    println!(
        "PASS criterion 12: 25-filter pipeline ran in {:.3}ms and is thread-count invariant",
        1e3 * best
    );
}
