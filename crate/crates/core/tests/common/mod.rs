use nalgebra::{DMatrix, DVector};
use wsnloc::admm::NodeState;
use wsnloc::{Network, Point};

/// Two anchors and three free nodes, every free node with at least three links.
pub fn five_nodes() -> Network {
    let pts = vec![
        Point::new(-0.4, -0.4, 0.0),
        Point::new(0.4, -0.4, 0.0),
        Point::new(0.0, 0.4, 0.0),
        Point::new(0.1, 0.0, 0.0),
        Point::new(-0.2, 0.1, 0.0),
    ];
    let edges = [
        (0, 3, 0.62),
        (0, 4, 0.55),
        (1, 3, 0.51),
        (1, 2, 0.93),
        (2, 3, 0.41),
        (2, 4, 0.38),
        (3, 4, 0.33),
    ];
    Network::new(2, pts, vec![0, 1], &edges).unwrap()
}

/// `(z⁻, z⁺)` stacked per node, per slot, per coordinate.
pub fn stacked(nodes: &[NodeState], dim: usize) -> DVector<f64> {
    let mut v = Vec::new();
    for st in nodes {
        for k in 0..st.replicas.len() {
            for c in 0..dim {
                v.push(st.z_minus[k][c]);
            }
            for c in 0..dim {
                v.push(st.z_plus[k][c]);
            }
        }
    }
    DVector::from_vec(v)
}

/// Minimizes `Σ_i c_i/2 ‖A_i x_i + λ_i/c_i − z_i‖²` subject to the edge
/// coupling by solving the KKT system.
pub fn z_oracle(net: &Network, nodes: &[NodeState]) -> DVector<f64> {
    let dim = net.dim();
    let mut offset = vec![0; net.len()];
    let mut total = 0;
    for i in 0..net.len() {
        offset[i] = total;
        total += net.degree(i) * 2 * dim;
    }
    let mut h = DMatrix::zeros(total, total);
    let mut hv = DVector::zeros(total);
    for (i, st) in nodes.iter().enumerate() {
        let c = st.penalty;
        for k in 0..st.replicas.len() {
            let vm = st.own - st.replicas[k] + st.lambda_minus[k] / c;
            let vp = st.own + st.replicas[k] + st.lambda_plus[k] / c;
            for q in 0..dim {
                let im = offset[i] + k * 2 * dim + q;
                let ip = im + dim;
                h[(im, im)] = c;
                h[(ip, ip)] = c;
                hv[im] = c * vm[q];
                hv[ip] = c * vp[q];
            }
        }
    }
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for (i, j, _) in net.edges() {
        let ki = net.neighbors(i).iter().position(|&x| x == j).unwrap();
        let kj = net.neighbors(j).iter().position(|&x| x == i).unwrap();
        for q in 0..dim {
            let a = offset[i] + ki * 2 * dim + q;
            let b = offset[j] + kj * 2 * dim + q;
            rows.push((a, b, 1.0));
            rows.push((a + dim, b + dim, -1.0));
        }
    }
    let m = rows.len();
    let mut kkt = DMatrix::zeros(total + m, total + m);
    let mut rhs = DVector::zeros(total + m);
    kkt.view_mut((0, 0), (total, total)).copy_from(&h);
    rhs.rows_mut(0, total).copy_from(&hv);
    for (r, &(a, b, s)) in rows.iter().enumerate() {
        kkt[(total + r, a)] = 1.0;
        kkt[(total + r, b)] = s;
        kkt[(a, total + r)] = 1.0;
        kkt[(b, total + r)] = s;
    }
    let sol = kkt.lu().solve(&rhs).unwrap();
    sol.rows(0, total).into_owned()
}
