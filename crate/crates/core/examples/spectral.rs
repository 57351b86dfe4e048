//! Spectral constants of a few trees and the Laplacian factorisation.

use rand::SeedableRng;
use swarmlink::graph::TreeNetwork;

fn main() -> swarmlink::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let trees = [
        ("path of 6", TreeNetwork::path(6)?),
        ("star of 6", TreeNetwork::star(6)?),
        ("random tree of 6", TreeNetwork::random(6, &mut rng)?),
    ];
    for (name, tree) in &trees {
        let s = tree.spectral();
        println!("{name}: edges {:?}", tree.pairs());
        println!("  algebraic connectivity {:.6}, largest eigenvalue {:.6}", s.lambda_l, s.lambda_l_max);
    }

    let tree = &trees[0].1;
    let weights = [1.0, 2.0, 0.5, 1.5, 3.0];
    let d = tree.incidence_matrix();
    let w = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&weights));
    let residual = (tree.weighted_laplacian(&weights)? - &d * w * d.transpose()).abs().max();
    println!("path: |L_w - D W D^T| = {residual:.1e}");
    println!("edge Laplacian D^T D:\n{}", tree.edge_laplacian());
    Ok(())
}
