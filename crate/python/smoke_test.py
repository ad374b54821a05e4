"""Smoke test for the Python bindings.

Build and install first, e.g. `maturin develop --release -m crates/python/Cargo.toml`.
"""

import math

import bistatic_ab as ab


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def main():
    cap, p = ab.capacity([[0.9, 0.1], [0.1, 0.9]])
    assert abs(cap / math.log(2) - (1 - h2(0.1))) < 1e-6, cap
    assert abs(p[0] - 0.5) < 1e-9

    spec = ab.GaussianSpec(1.0, 1.0, 2.0, 10.0, n_x=9, n_s=9, n_y=17, n_z=17)
    ch = spec.discretize()
    assert ch.sizes == (9, 9, 17, 17)
    rate, dist = ab.monostatic_reference(ch, 10.0)
    print(f"monostatic: {rate:.4f} bits, distortion {dist:.4f}")

    r = ab.solve(ch, 1.0, 10.0, restarts=1, max_iters=500, seed=1)
    assert r.achieved_distortion <= 1.0 + 1e-8
    assert r.rate_bits <= rate + 1e-3
    assert r.max_chain_decrease() <= 1e-10
    assert len(r.p_ux) == 9 and len(r.estimator) == 9
    print(r)

    m = ch.to_markov()
    h = -sum(q * math.log(q) for q in m.state_prior if q > 0)
    r = ab.solve_ll(m, h, 10.0, restarts=1, max_iters=500)
    assert r.rate_nats <= ab.capacity(m.kernel_y(), [x * x for x in m.input_values], 10.0)[0] + 1e-6
    print(r)

    try:
        ab.solve_ll(ch, 1.0)
    except ValueError as e:
        print(f"rejected as expected: {e}")
    else:
        raise AssertionError("state-dependent channel accepted by solve_ll")

    print("smoke test passed")


if __name__ == "__main__":
    main()
