"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured worst case
against the stated tolerance, then asserts.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from markowitz import (
    Case,
    MarketSpec,
    MarkowitzError,
    canonical_model,
    canonicalize,
    efficient_frontier,
    find_arbitrage,
    invariants_dual,
    is_morphism,
    isomorphic,
    load_market,
    make_market,
    min_risk_portfolio,
    morphism_residual,
    mutual_funds,
    phi,
    pushforward,
    risk,
    save_market,
)
from markowitz.cli import main
from strategies import oracle_min_risk, random_canonical, random_invertible, random_nondegenerate, svd_kernel

HERE = Path(__file__).parent
DATA = HERE / "data"
GOLDEN = HERE / "golden"
FIXTURES = ("a_ii", "a_i", "zero_cost")


def rel(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}")
    assert ok, detail


def fixture_market(name):
    spec = load_market(DATA / f"{name}.json")
    return make_market(spec.r, spec.c, spec.p)


def test_criterion_1_classification_round_trip(capsys):
    rng = np.random.default_rng(20240101)
    cases = list(Case)
    mismatches, worst_inv, worst_res, failed_morphism = 0, 0.0, 0.0, 0
    for t in range(500):
        case = cases[t % 3]
        params, model = random_canonical(rng, case, int(rng.integers(1, 11)))
        cond = 10 ** rng.uniform(0.0, 4.0)
        T = random_invertible(rng, model.n, cond)
        m = pushforward(model, T)
        f = canonicalize(m)
        if (f.case, f.k) != (params["case"], params["k"]):
            mismatches += 1
            continue
        for name in ("m", "i"):
            if params[name] is not None:
                worst_inv = max(worst_inv, rel(getattr(f, name), params[name]))
        if params["g_defined"]:
            worst_inv = max(worst_inv, rel(f.g, params["g"]))
        worst_res = max(worst_res, f.residual, morphism_residual(m, f.model(), f.T))
        failed_morphism += not is_morphism(m, f.model(), f.T)
    ok = mismatches == 0 and worst_inv <= 1e-6 and worst_res <= 1e-8 and failed_morphism == 0
    report(capsys, 1, "classification round trip", ok,
           f"500 models, (case,k) mismatches={mismatches}, worst invariant rel err={worst_inv:.2e} (<=1e-6), "
           f"worst witness residual={worst_res:.2e} (<=1e-8), is_morphism failures={failed_morphism}")


def test_criterion_2_two_route_invariants(capsys):
    rng = np.random.default_rng(20240102)
    worst, kept, dropped = 0.0, 0, 0
    while kept < 1000:
        m = random_nondegenerate(rng, int(rng.integers(2, 11)))
        # population is nondegenerate markets: r + c c^T invertible to tolerance
        s = np.linalg.svd(m.r + np.outer(m.c, m.c), compute_uv=False)
        if s[-1] <= m.tol.tol_rank * s[0]:
            dropped += 1
            continue
        f, d = canonicalize(m), invariants_dual(m)
        # the pairings reproduce the closed forms in (m, g, i)
        closed = (1.0 / (1.0 + d.m ** 2), d.i / (1.0 + d.m ** 2), d.i ** 2 / (1.0 + d.m ** 2) + d.g ** 2)
        worst = max(worst, rel(f.m, d.m), rel(f.g, d.g), rel(f.i, d.i),
                    rel(closed[0], d.rhat_cc), rel(closed[1], d.rhat_pc), rel(closed[2], d.rhat_pp))
        kept += 1
    report(capsys, 2, "two-route invariants", worst <= 1e-7,
           f"1000 markets ({dropped} singular-to-tolerance draws skipped), "
           f"worst rel err={worst:.2e} (<=1e-7)")


def test_criterion_3_optimizer_oracle(capsys):
    rng = np.random.default_rng(20240103)
    worst_risk, worst_span = 0.0, 0.0
    for _ in range(200):
        m = random_nondegenerate(rng, int(rng.integers(2, 11)))
        w = rng.normal(size=m.n)
        cost, payoff = float(m.c @ w), float(m.p @ w)
        v = min_risk_portfolio(m, cost, payoff)
        _, expected = oracle_min_risk(m.r, m.c, m.p, cost, payoff)
        worst_risk = max(worst_risk, abs(risk(m, v) - expected) / max(1.0, expected))
        F = mutual_funds(m).matrix()
        coef, *_ = np.linalg.lstsq(F, v.coords, rcond=None)
        span = np.linalg.norm(F @ coef - v.coords) / max(1.0, np.linalg.norm(v.coords))
        worst_span = max(worst_span, float(span))
    ok = worst_risk <= 1e-6 and worst_span <= 1e-8
    report(capsys, 3, "optimizer oracle", ok,
           f"200 triples, worst rel risk err={worst_risk:.2e} (<=1e-6), "
           f"worst span residual={worst_span:.2e} (<=1e-8)")


def test_criterion_4_frontier_identity(capsys):
    rng = np.random.default_rng(20240104)
    worst = 0.0
    for _ in range(100):
        m = random_nondegenerate(rng, int(rng.integers(2, 11)))
        curve = efficient_frontier(m)
        g2 = curve.g ** 2
        for payoff in rng.uniform(-10.0, 10.0, size=100):
            pt = phi(m, min_risk_portfolio(m, 1.0, float(payoff)))
            x, y = pt.rr, pt.er
            lhs = abs(g2 * (x * x - curve.m ** 2) - (y + 1.0 - curve.i) ** 2)
            worst = max(worst, lhs / max(1.0, g2 * x * x))
    report(capsys, 4, "frontier identity", worst <= 1e-8,
           f"100 markets x 100 payoffs, worst scaled residual={worst:.2e} (<=1e-8)")


def _arbitrage_market(rng, planted):
    """Market in block coordinates (risky block, riskless block), then mixed by a random T.

    Planted: one riskless direction is costless with non-zero payoff.
    Free: full rank, or every costless riskless direction has zero payoff.
    """
    n = int(rng.integers(2, 9))
    d = int(rng.integers(1, n + 1)) if planted else int(rng.integers(0, n + 1))
    risky = n - d
    A = rng.normal(size=(risky, risky))
    r = np.zeros((n, n))
    r[:risky, :risky] = A @ A.T
    c, p = rng.normal(size=n), rng.normal(size=n)
    if d:
        kernel = slice(risky, n)
        if planted:
            c[n - 1] = 0.0
            p[n - 1] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)
        else:
            # riskless directions are payoffless, except possibly the last one,
            # which then carries cost
            c[kernel] = 0.0
            p[kernel] = 0.0
            if rng.integers(0, 2):
                c[n - 1] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)
                p[n - 1] = rng.normal()
    T = random_invertible(rng, n, 10 ** rng.uniform(0.0, 3.0))
    return pushforward(make_market(r, c, p), T)


def test_criterion_5_arbitrage_detector(capsys):
    rng = np.random.default_rng(20240105)
    false_verdicts, oracle_disagreements, bad_witnesses = 0, 0, 0
    for t in range(200):
        planted = t % 2 == 0
        m = _arbitrage_market(rng, planted)
        w = find_arbitrage(m)
        false_verdicts += (w is not None) != planted
        # exhaustive search over an independently computed basis of ker r ∩ ker c
        # c is only known to vanish on the computed kernel up to its rounding
        # contamination, hence the looser cut relative to |c|
        K = svd_kernel(m.r, 1e-9)
        c_scale = max(1.0, float(np.linalg.norm(m.c)))
        W = K @ svd_kernel(m.c @ K / c_scale, 1e-7) if K.shape[1] else K
        scale = max(1.0, float(np.linalg.norm(m.p)))
        found = W.shape[1] > 0 and float(np.max(np.abs(m.p @ W))) > 1e-6 * scale
        oracle_disagreements += found != planted
        if w is not None:
            v = w.coords
            lam_max = float(np.linalg.eigvalsh(m.r)[-1])
            nv = float(np.linalg.norm(v))
            ok = (risk(m, v) <= np.sqrt(m.tol.tol_rank * max(1.0, lam_max)) * nv
                  and abs(m.c @ v) <= 1e-7 * max(1.0, float(np.linalg.norm(m.c))) * nv
                  and m.p @ v > 0.0)
            bad_witnesses += not ok
    ok = false_verdicts == 0 and oracle_disagreements == 0 and bad_witnesses == 0
    report(capsys, 5, "arbitrage detector", ok,
           f"200 markets (100 planted), false verdicts={false_verdicts}, "
           f"kernel-search disagreements={oracle_disagreements}, invalid witnesses={bad_witnesses}")


def test_criterion_6_equivalence_handling(capsys):
    rng = np.random.default_rng(20240106)
    k1_failures, k2_failures, k1_pairs, pairs = 0, 0, 0, 0
    for n in range(1, 7):
        for m_val, i_val in ((1.0, 1.5), (0.3, -2.0), (4.0, 0.0)):
            g_a, g_b = rng.uniform(0.1, 5.0, size=2)
            a = canonical_model(n, 1, m_val, g_a, i_val)
            b = pushforward(canonical_model(n, 1, m_val, g_b, i_val), random_invertible(rng, n, 100.0))
            k1_failures += not isomorphic(a, b)
            k1_pairs += 1
            if n >= 2:
                for k in range(2, n + 1):
                    a = canonical_model(n, k, m_val, 2.0, i_val)
                    b = pushforward(canonical_model(n, k, m_val, 2.5, i_val), random_invertible(rng, n, 100.0))
                    k2_failures += isomorphic(a, b)
                    pairs += 1
    # the one-asset example: r=[[1]], c=(1), p=(1.5) against a rescaled copy
    k1_failures += not isomorphic(make_market([[1.0]], [1.0], [1.5]), make_market([[4.0]], [2.0], [3.0]))
    k1_pairs += 1
    ok = k1_failures == 0 and k2_failures == 0
    report(capsys, 6, "equivalence handling", ok,
           f"k=1 pairs judged non-isomorphic={k1_failures} of {k1_pairs}, "
           f"k>=2 g-differing pairs judged isomorphic={k2_failures} of {pairs}")


def _invariants(f):
    return {"m": f.m, "g": f.g, "i": f.i}


def test_criterion_7_continuity(capsys):
    rng = np.random.default_rng(20240107)
    eps = 1e-6
    bound = 1e-2
    details, ok = [], True
    for name in FIXTURES:
        m0 = fixture_market(name)
        f0 = canonicalize(m0)
        worst, exits = 0.0, 0
        for _ in range(200):
            # PSD-preserving entrywise perturbation of r, |entries| <= eps
            u = rng.uniform(-1.0, 1.0, size=m0.n)
            r = m0.r + eps * np.outer(u, u)
            # a zero-cost market stays zero-cost: m and i do not exist on one side of c = 0
            c = m0.c if name == "zero_cost" else m0.c + eps * rng.uniform(-1.0, 1.0, size=m0.n)
            p = m0.p + eps * rng.uniform(-1.0, 1.0, size=m0.n)
            try:
                f = canonicalize(make_market(r, c, p))
            except MarkowitzError:
                # the perturbed market has no invariants to compare
                exits += 1
                continue
            for key, value in _invariants(f0).items():
                if value is not None:
                    worst = max(worst, abs(_invariants(f)[key] - value))
        ok = ok and exits == 0 and worst <= bound
        details.append(f"{name}: worst change={worst:.2e}, left classifiable domain {exits}/200")
    report(capsys, 7, "continuity", ok, "eps=1e-6, bound 1e-2; " + "; ".join(details))


def _cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, _ = capsys.readouterr()
    return code, out


def test_criterion_8_cli_end_to_end(capsys, tmp_path):
    failures = []

    def expect(label, got, want):
        if got != want:
            failures.append(label)

    for name in FIXTURES:
        code, out = _cli(capsys, "classify", DATA / f"{name}.json")
        expect(f"classify {name}", (code, out), (0, (GOLDEN / f"classify_{name}.txt").read_text()))

        m = fixture_market(name)
        T = np.array([[2.0, 1.0, 0.0], [0.0, 1.0, -1.0], [1.0, 0.0, 3.0]])
        moved = pushforward(m, T)
        save_market(MarketSpec(3, moved.r, moved.c, moved.p), tmp_path / f"{name}_moved.json")
        code, out = _cli(capsys, "isomorphic", DATA / f"{name}.json", tmp_path / f"{name}_moved.json")
        expect(f"isomorphic {name}", (code, out.splitlines()[0]), (0, "isomorphic"))

    code, out = _cli(capsys, "isomorphic", DATA / "a_ii.json", DATA / "a_ii_g3.json")
    expect("isomorphic g differs", (code, out), (2, (GOLDEN / "isomorphic_a_ii_g3.txt").read_text()))

    for name, cost, payoff in (("a_ii", 1, 3), ("a_i", 1, 1.55), ("zero_cost", 0, 6)):
        code, out = _cli(capsys, "optimize", DATA / f"{name}.json", "--cost", cost, "--payoff", payoff)
        expect(f"optimize {name}", (code, out), (0, (GOLDEN / f"optimize_{name}.txt").read_text()))

    for name, lo, hi, count in (("a_ii", -4, 4, 5), ("a_i", -1.95, 2.05, 5)):
        out_csv = tmp_path / f"frontier_{name}.csv"
        code, _ = _cli(capsys, "frontier", DATA / f"{name}.json", "--ymin", lo, "--ymax", hi,
                       "--count", count, "--out", out_csv)
        expect(f"frontier {name}", (code, out_csv.read_text()),
               (0, (GOLDEN / f"frontier_{name}.csv").read_text()))
        meta = json.loads(Path(f"{out_csv}.meta.json").read_text())
        expect(f"frontier {name} meta", meta, json.loads((GOLDEN / f"frontier_{name}.csv.meta.json").read_text()))

    code, _ = _cli(capsys, "frontier", DATA / "zero_cost.json", "--ymin", 0, "--ymax", 1,
                   "--count", 3, "--out", tmp_path / "none.csv")
    expect("frontier zero_cost refused", code, 2)

    # vertex row (y = i - 1, x = m) present exactly on a grid that does not contain it
    for name in FIXTURES[:2]:
        f = canonicalize(fixture_market(name))
        out_csv = tmp_path / f"vertex_{name}.csv"
        _cli(capsys, "frontier", DATA / f"{name}.json", "--ymin", -3.3, "--ymax", 4.1,
             "--count", 7, "--out", out_csv)
        rows = out_csv.read_text().splitlines()[1:]
        expect(f"vertex row {name}", f"{f.i - 1.0:.17g},{f.m:.17g}" in rows, True)

    code, _ = _cli(capsys, "estimate", "--returns", DATA / "returns.csv", "--prices", DATA / "prices.csv",
                   "--out", tmp_path / "est.json")
    expect("estimate", (code, (tmp_path / "est.json").read_text()), (0, (GOLDEN / "estimate.json").read_text()))

    report(capsys, 8, "CLI end to end", not failures,
           "all golden comparisons match" if not failures else f"mismatches: {', '.join(failures)}")
