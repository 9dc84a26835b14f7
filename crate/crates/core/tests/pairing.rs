use htsim::decoder::{greedy_pairing, mwpm, parity_crossings};
use htsim::{rng_stream, Geometry};
use rand::seq::SliceRandom;
use rand::Rng;

/// Crossing parity of correction strings against the coboundary of a vertex
/// set U equals |D ∩ U| mod 2 for any complete pairing of D.
#[test]
fn crossing_parity_is_pairing_invariant() {
    let g = Geometry::new(9, 3).unwrap();
    let mut rng = rng_stream(40, 0);
    for trial in 0..10_000 {
        let c = (trial % 3) as u8;
        let verts: Vec<u32> = g.vertices_of_color(c).collect();
        let n = 2 * rng.gen_range(1..=5);
        let ds: Vec<u32> = verts.choose_multiple(&mut rng, n).copied().collect();
        let in_u: Vec<bool> = (0..g.n_vertices()).map(|_| rng.gen_bool(0.5)).collect();
        let boundary: Vec<bool> = (0..g.n_edges())
            .map(|e| {
                let [a, b] = g.edge_vertices[e];
                g.edge_color[e] == c && in_u[a as usize] != in_u[b as usize]
            })
            .collect();
        let want = ds.iter().filter(|&&v| in_u[v as usize]).count() % 2 == 1;
        let d = |i: usize, j: usize| g.vertex_distance(ds[i], ds[j]);
        for pairing in [greedy_pairing(n, d).unwrap(), mwpm(n, d).unwrap()] {
            let paths: Vec<Vec<u32>> = pairing.iter().map(|&(i, j)| g.vertex_path(ds[i], ds[j])).collect();
            assert_eq!(parity_crossings(paths.iter().map(|p| p.as_slice()), &boundary), want, "trial {trial}");
        }
    }
}
