use hiertrain::kernel::{backward_range, centralized_step, forward_range, hybrid_step, DenseNet, MessageKind};
use hiertrain::latency::Role;
use hiertrain::profiles::{synthesize_profile, ELEMENT_BYTES};
use hiertrain::simulator::{simulate_iteration, Phase};
use hiertrain::{arch, NetworkSpec, Policy, RoleMapping};
use ndarray::Array2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn batch(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-1.0..=1.0))
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300) || a == b
}

#[test]
fn gradients_match_finite_differences() {
    let net = DenseNet::random(&[4, 5, 3, 2], 21).unwrap();
    let (x, t) = (batch(6, 4, 22), batch(6, 2, 23));
    let (y, cache) = forward_range(&net, 1, 3, &x).unwrap();
    let up = (&y - &t).mapv(|d| 2.0 * d);
    let (grads, _) = backward_range(&net, 3, 1, &up, Some(&cache)).unwrap();
    let b = x.nrows() as f64;
    let eps = 1e-6;
    for i in 0..3 {
        let (gw, gb) = grads.layer(i + 1).unwrap();
        let shape = net.layers[i].weights.dim();
        for r in 0..shape.0 {
            for c in 0..=shape.1 {
                let analytic = if c < shape.1 { gw[[r, c]] } else { gb[r] } / b;
                let probe = |delta: f64| {
                    let mut n = net.clone();
                    if c < shape.1 {
                        n.layers[i].weights[[r, c]] += delta;
                    } else {
                        n.layers[i].bias[r] += delta;
                    }
                    n.loss(&x, &t).unwrap()
                };
                let numeric = (probe(eps) - probe(-eps)) / (2.0 * eps);
                if analytic.abs() > 1e-8 {
                    assert!(rel_close(analytic, numeric, 1e-5), "layer {} ({r},{c}): {analytic} vs {numeric}", i + 1);
                } else {
                    assert!((analytic - numeric).abs() <= 1e-7);
                }
            }
        }
    }
}

#[test]
fn central_step_follows_validated_gradients() {
    let net = DenseNet::random(&[4, 5, 3, 2], 31).unwrap();
    let (x, t) = (batch(8, 4, 32), batch(8, 2, 33));
    let lr = 0.01;
    let next = centralized_step(&net, &x, &t, lr).unwrap();
    let eps = 1e-6;
    for i in 0..3 {
        let delta = &net.layers[i].weights - &next.layers[i].weights;
        let mut n = net.clone();
        n.layers[i].weights[[0, 0]] += eps;
        let plus = n.loss(&x, &t).unwrap();
        n.layers[i].weights[[0, 0]] -= 2.0 * eps;
        let minus = n.loss(&x, &t).unwrap();
        let numeric = (plus - minus) / (2.0 * eps);
        assert!((delta[[0, 0]] / lr - numeric).abs() <= 1e-5 * numeric.abs().max(1e-2));
    }
}

/// Every valid (mapping, m_s, m_l, b_o, b_s, b_l) on a 4-layer net with B = 8.
fn all_policies(n: usize, batch: usize) -> Vec<Policy> {
    let mut out = Vec::new();
    for mapping in RoleMapping::ALL {
        for m_s in 0..=n {
            for m_l in m_s..=n {
                for b_o in 0..=batch {
                    for b_s in 0..=batch - b_o {
                        let p = Policy { mapping, m_s, m_l, b_o, b_s, b_l: batch - b_o - b_s };
                        if p.validate(n).is_ok() {
                            out.push(p);
                        }
                    }
                }
            }
        }
    }
    out
}

#[test]
fn hybrid_equals_central_for_every_policy() {
    let net = DenseNet::random(&[5, 6, 4, 3, 2], 41).unwrap();
    let (x, t) = (batch(8, 5, 42), batch(8, 2, 43));
    let lr = 0.05;
    let central = centralized_step(&net, &x, &t, lr).unwrap();
    let policies = all_policies(4, 8);
    assert!(policies.len() > 1000);
    for p in &policies {
        let out = hybrid_step(&net, p, &x, &t, lr).unwrap();
        assert!(out.replicas_consistent(), "{p}");
        for (a, b) in out.net.layers.iter().zip(&central.layers) {
            for (u, v) in a.weights.iter().zip(&b.weights).chain(a.bias.iter().zip(&b.bias)) {
                assert!(rel_close(*u, *v, 1e-8), "{p}: {u} vs {v}");
            }
        }
    }
}

#[test]
fn message_counts_match_simulated_bytes() {
    let net = DenseNet::random(&[5, 6, 4, 3, 2], 51).unwrap();
    let (x, t) = (batch(8, 5, 52), batch(8, 2, 53));
    let profile = synthesize_profile(&net.model_spec(4 * 5).unwrap(), &arch::t3_workers()).unwrap();
    let bw = NetworkSpec::new(5e6, 3e6).unwrap();
    for p in all_policies(4, 8).iter().step_by(7) {
        let out = hybrid_step(&net, p, &x, &t, 0.1).unwrap();
        let trace = simulate_iteration(p, &profile, &bw).unwrap();
        let bytes = |n: usize| n as u64 * ELEMENT_BYTES;
        let (s, l) = (out.worker(Role::S), out.worker(Role::L));
        assert_eq!(bytes(s.sent(MessageKind::Activation)), trace.bytes(Phase::Fwd1, p.mapping.s), "{p}");
        assert_eq!(bytes(l.sent(MessageKind::Activation)), trace.bytes(Phase::Fwd2, p.mapping.l), "{p}");
        assert_eq!(bytes(s.sent(MessageKind::GradPush)), trace.bytes(Phase::GradPush, p.mapping.s), "{p}");
        assert_eq!(bytes(l.sent(MessageKind::GradPush)), trace.bytes(Phase::GradPush, p.mapping.l), "{p}");
        let o = out.worker(Role::O);
        assert_eq!(
            bytes(o.sent(MessageKind::WeightPull)),
            trace.bytes(Phase::WeightPull, p.mapping.o),
            "{p}"
        );
        assert_eq!(
            bytes(o.sent(MessageKind::Gradient)),
            trace.bytes(Phase::Bwd1, p.mapping.o) + trace.bytes(Phase::Bwd2, p.mapping.o),
            "{p}"
        );
    }
}
