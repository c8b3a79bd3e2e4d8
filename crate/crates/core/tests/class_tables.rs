//! Reference classifications of small configuration ensembles.

use std::collections::HashMap;

use num_complex::Complex64 as C;

use quadnet::ensemble::{self, ClassPartition, ConfigurationFamily};
use quadnet::Network;

/// All 36 three-node configurations with seven edges, row-major adjacency bits, labelled by
/// spectral class (letter) and asymptotic class (numeral).
const TRIPLES: [(&str, &str); 36] = [
    ("111110110", "Ai"),
    ("110111110", "Ai"),
    ("110110111", "Biv"),
    ("111111100", "Aii"),
    ("111110101", "Ci"),
    ("110111101", "Dv"),
    ("111101110", "Ei"),
    ("111100111", "Aii"),
    ("110101111", "Fiii"),
    ("111101101", "Ai"),
    ("101111110", "Fiii"),
    ("101110111", "Dv"),
    ("100111111", "Bvi"),
    ("101111101", "Biv"),
    ("101101111", "Ai"),
    ("111111010", "Aii"),
    ("111110011", "Dv"),
    ("110111011", "Ci"),
    ("111111001", "Bvi"),
    ("111101011", "Fiii"),
    ("101111011", "Dv"),
    ("111011110", "Fiii"),
    ("111010111", "Bvi"),
    ("110011111", "Dv"),
    ("111011101", "Dv"),
    ("111001111", "Aii"),
    ("101011111", "Ci"),
    ("111011011", "Biv"),
    ("011111110", "Ei"),
    ("011110111", "Fiii"),
    ("010111111", "Aii"),
    ("011111101", "Fiii"),
    ("011101111", "Ai"),
    ("001111111", "Aii"),
    ("011111011", "Ai"),
    ("011011111", "Ai"),
];

/// The one entry whose letter disagrees with its spectrum: its characteristic polynomial is
/// that of class E.
const MISLETTERED: &str = "011101111";

const BIPARTITE_LABELS: &str = "Ai Bii Biii Civ Biii Civ Ai Bii Bii Ai Civ Biii Civ Biii Bii Ai";

fn triple(bits: &str) -> Network {
    let b: Vec<u8> = bits.bytes().map(|c| c - b'0').collect();
    Network::uniform(b.chunks(3).map(<[u8]>::to_vec).collect(), 1.0 / 3.0).unwrap()
}

fn partition_of<T: std::hash::Hash + Eq + Clone>(labels: &[T]) -> Vec<Vec<usize>> {
    let mut groups: HashMap<T, Vec<usize>> = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry(l.clone()).or_default().push(i);
    }
    let mut out: Vec<_> = groups.into_values().collect();
    out.sort();
    out
}

fn sorted_classes(p: &ClassPartition) -> Vec<Vec<usize>> {
    let mut c = p.classes();
    c.sort();
    c
}

/// Faddeev–LeVerrier on an integer matrix: coefficients of det(λI − A), leading 1 first.
fn char_poly(a: &[Vec<i64>]) -> Vec<i64> {
    let n = a.len();
    let mul = |x: &[Vec<i64>], y: &[Vec<i64>]| -> Vec<Vec<i64>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect()).collect()
    };
    let mut coeffs = vec![1i64];
    let mut m = vec![vec![0i64; n]; n];
    for k in 1..=n {
        let mut next = mul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += coeffs[k - 1];
        }
        m = next;
        let am = mul(a, &m);
        let trace: i64 = (0..n).map(|i| am[i][i]).sum();
        assert_eq!(trace % k as i64, 0);
        coeffs.push(-trace / k as i64);
    }
    coeffs
}

fn integer_adjacency(net: &Network) -> Vec<Vec<i64>> {
    net.adjacency_rows().iter().map(|r| r.iter().map(|&b| b as i64).collect()).collect()
}

#[test]
fn faddeev_leverrier_small_cases() {
    assert_eq!(char_poly(&[vec![2, 0], vec![0, 3]]), vec![1, -5, 6]);
    assert_eq!(char_poly(&[vec![0, 1], vec![1, 0]]), vec![1, 0, -1]);
    assert_eq!(char_poly(&[vec![1, 1, 1], vec![1, 1, 1], vec![1, 1, 1]]), vec![1, -3, 0, 0]);
}

#[test]
fn triples_enumeration_matches_reference_set() {
    let configs = ensemble::enumerate(&ConfigurationFamily::edge_count(3, 7)).unwrap();
    let mut ours: Vec<Vec<Vec<u8>>> = configs.iter().map(Network::adjacency_rows).collect();
    let mut reference: Vec<Vec<Vec<u8>>> = TRIPLES.iter().map(|(b, _)| triple(b).adjacency_rows()).collect();
    ours.sort();
    reference.sort();
    assert_eq!(ours, reference);
}

#[test]
fn triples_asymptotic_classes_match_reference() {
    let configs: Vec<Network> = TRIPLES.iter().map(|(b, _)| triple(b)).collect();
    let numerals: Vec<&str> = TRIPLES.iter().map(|(_, l)| &l[1..]).collect();
    let expected = partition_of(&numerals);
    for c in [C::new(-1.15, 0.26), C::new(-0.13, 1.0)] {
        let p = ensemble::partition_asymptotic(&configs, c, &ensemble::default_z_grid(), 50, 20.0).unwrap();
        assert_eq!(p.class_count, 6, "c = {c}");
        assert_eq!(sorted_classes(&p), expected, "c = {c}");
    }
}

#[test]
fn triples_spectral_classes_match_characteristic_polynomials() {
    let configs: Vec<Network> = TRIPLES.iter().map(|(b, _)| triple(b)).collect();
    let polys: Vec<Vec<i64>> = configs.iter().map(|n| char_poly(&integer_adjacency(n))).collect();
    let p = ensemble::partition_spectral(&configs).unwrap();
    assert_eq!(p.class_count, 6);
    assert_eq!(sorted_classes(&p), partition_of(&polys));

    // the letters agree with the spectrum everywhere except one entry, which has E's polynomial
    let letters: Vec<String> = TRIPLES.iter().map(|(b, l)| if *b == MISLETTERED { "E".to_string() } else { l[..1].to_string() }).collect();
    assert_eq!(sorted_classes(&p), partition_of(&letters));
    let odd = TRIPLES.iter().position(|(b, _)| *b == MISLETTERED).unwrap();
    assert_eq!(polys[odd], vec![1, -1, -3, -1]);
    let e_rows: Vec<usize> = (0..36).filter(|&i| TRIPLES[i].1.starts_with('E')).collect();
    assert!(e_rows.iter().all(|&i| polys[i] == polys[odd]));
    let as_printed: Vec<&str> = TRIPLES.iter().map(|(_, l)| &l[..1]).collect();
    assert_ne!(sorted_classes(&p), partition_of(&as_printed));
}

#[test]
fn triples_class_invariance_across_c() {
    let configs: Vec<Network> = TRIPLES.iter().map(|(b, _)| triple(b)).collect();
    let cs = [C::new(-1.15, 0.26), C::new(-0.13, 1.0)];
    let report = ensemble::class_invariance_experiment(&configs, &cs, &ensemble::default_z_grid(), 50, 20.0).unwrap();
    assert!(report.all_identical);
    assert_eq!(report.first_difference, None);
}

#[test]
fn bipartite_classes_match_reference() {
    let configs = ensemble::enumerate(&ConfigurationFamily::bipartite(2, 1, 3, 0.5)).unwrap();
    let labels: Vec<&str> = BIPARTITE_LABELS.split(' ').collect();
    assert_eq!(configs.len(), labels.len());
    let asym = ensemble::partition_asymptotic(&configs, C::new(-0.117, -0.856), &ensemble::default_z_grid(), 50, 20.0).unwrap();
    let spectral = ensemble::partition_spectral(&configs).unwrap();
    assert_eq!(sorted_classes(&asym), partition_of(&labels.iter().map(|l| &l[1..]).collect::<Vec<_>>()));
    assert_eq!(sorted_classes(&spectral), partition_of(&labels.iter().map(|l| &l[..1]).collect::<Vec<_>>()));
}
