"""``weylstates`` command-line entry point.

Each command reads a scenario, runs the corresponding checks and writes a
JSON report (sorted keys, no timestamps, embedding the resolved config).
Exit codes: 0 all asserted checks pass, 1 a check failed, 2 invalid config,
3 a numerical routine did not converge.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .classical_measures import (
    IllConditionedError,
    QuadratureBudgetError,
    QuadratureSpec,
    mass_defect,
    recover_point_weights,
    theorem_witness,
)
from .gns_finite import clock_shift, gns_action, gns_gram, relation_residual
from .phase_space import PhasePoint, symplectic_form_array
from .quantization import (
    FieldGrid,
    classical_limit,
    verify_dirac_property,
    verify_norm_continuity,
    verify_product_property,
)
from .reduction import (
    AnnihilatorNotIdeal,
    BlockAlgebra,
    FunctionalSubspace,
    annihilator,
    check_condition_ii,
    functional_sup,
    homomorphism_residual,
    reduce,
)
from .scenario import (
    ConfigError,
    Scenario,
    _matrix,
    build_scenario,
    json_ready,
    parse_element,
    parse_level,
    parse_point,
    parse_points,
    parse_states,
    parse_tol_overrides,
    read_config,
)
from .state_space import FockDensity, Gaussian, bochner_certificate, quantum_admissible
from .weyl_algebra import NormConvergenceError, NormOptions, WeylElement, commutator, estimate_norm

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

COMMANDS = ("algebra", "bochner", "field", "limit", "witness", "measure", "gns", "clockshift", "reduce")


class Checks:
    def __init__(self):
        self.items = []

    def add(self, name: str, passed: bool, value=None, tol=None, **extra):
        self.items.append({"name": name, "passed": bool(passed), "value": value, "tol": tol, **extra})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.items)


def _table(rows, headers) -> str:
    rows = [[str(c) for c in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    line = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    out = [line, "  ".join("-" * w for w in widths)]
    out += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(out)


def _rng(sc: Scenario) -> np.random.Generator:
    return np.random.default_rng(sc.seed)


def _random_rational(rng, max_num: int, max_den: int) -> Fraction:
    return Fraction(int(rng.integers(-max_num, max_num + 1)), int(rng.integers(1, max_den + 1)))


def _random_point(rng, n: int, max_num: int = 9, max_den: int = 8) -> PhasePoint:
    return PhasePoint([_random_rational(rng, max_num, max_den) for _ in range(2 * n)])


# ------------------------------------------------------------------ commands


def cmd_algebra(sc: Scenario, args, checks: Checks):
    sec = sc.section("algebra")
    rng = _rng(sc)
    pairs = int(sec.get("pairs", 200))
    levels = [parse_level(h, "algebra.levels") for h in sec.get("levels", [1.0, 0.5, 0.25])]
    tol = sc.tolerances["phase"]
    worst_prod = worst_comm = worst_adj = 0.0
    for _ in range(pairs):
        x, y = _random_point(rng, sc.n), _random_point(rng, sc.n)
        # float reference for the twist, independent of the exact-rational path
        s = float(symplectic_form_array(x.to_array(), y.to_array()))
        for h in levels:
            Wx, Wy = WeylElement.generator(x, h), WeylElement.generator(y, h)
            P = Wx * Wy
            worst_prod = max(worst_prod, abs(P.coefficient(x + y) - np.exp(0.5j * h * s)))
            C = commutator(Wx, Wy)
            worst_comm = max(worst_comm, abs(C.coefficient(x + y) - 2j * math.sin(0.5 * h * s)))
            worst_adj = max(worst_adj, abs((Wx.adjoint() * Wx).coefficient(PhasePoint.origin(sc.n)) - 1.0))
    checks.add("product phase", worst_prod <= tol, worst_prod, tol)
    checks.add("commutator phase", worst_comm <= tol, worst_comm, tol)
    checks.add("unitarity W(x)*W(x) = 1", worst_adj <= tol, worst_adj, tol)
    demos = []
    elements = [parse_element(e, sc.n, f"algebra.elements[{i}]") for i, e in enumerate(sec.get("elements", []))]
    opts = NormOptions(tol=sc.tolerances["norm"])
    for i, A in enumerate(elements):
        demos.append({"element": A.to_records(), "h": A.h, "norm": estimate_norm(A, opts).as_dict()})
    if len(elements) >= 2:
        A, B = elements[0], elements[1]
        demos.append({"product": (A * B).to_records(), "commutator": commutator(A, B).to_records()})
    table = _table(
        [[c["name"], f"{c['value']:.3e}", c["tol"], "pass" if c["passed"] else "FAIL"] for c in checks.items],
        ["check", "max error", "tol", "status"],
    )
    return {"pairs": pairs, "levels": levels, "demos": demos}, table


def _point_sets(sc: Scenario, sec: dict, rng) -> list[list[PhasePoint]]:
    if "points" in sec:
        return [parse_points(sec["points"], sc.n, "bochner.points")]
    spec = sec.get("random_sets", {}) or {}
    count, max_size = int(spec.get("count", 50)), int(spec.get("max_size", 24))
    max_num, max_den = int(spec.get("max_numerator", 12)), int(spec.get("max_denominator", 4))
    sets = []
    for _ in range(count):
        size = int(rng.integers(2, max_size + 1))
        pts = list(dict.fromkeys(_random_point(rng, sc.n, max_num, max_den) for _ in range(size)))
        sets.append(pts)
    return sets


def cmd_bochner(sc: Scenario, args, checks: Checks):
    sec = sc.section("bochner")
    rng = _rng(sc)
    states = parse_states(sc, rng)
    sets = _point_sets(sc, sec, rng)
    results, rows = [], []
    for name, st, spec in states:
        tol = sc.tolerances["psd_fock" if isinstance(st.family, FockDensity) else "psd"]
        certs = [bochner_certificate(st, pts, tol) for pts in sets]
        worst = min(certs, key=lambda c: c.min_eigenvalue)
        expect = spec.get("expect", "PSD")
        ok = all(c.is_psd for c in certs) if expect == "PSD" else not worst.is_psd
        checks.add(f"{name}: {expect}", ok, worst.min_eigenvalue, tol)
        entry = {"name": name, "state": st.describe(), "sets": len(certs), "expect": expect, "worst": worst.as_dict()}
        if isinstance(st.family, Gaussian) and st.h > 0:
            entry["quantum_admissible"] = quantum_admissible(st.family.cov, st.h)
        results.append(entry)
        rows.append([name, st.h, len(certs), f"{worst.min_eigenvalue:.3e}", worst.verdict, "pass" if ok else "FAIL"])
    table = _table(rows, ["state", "h", "sets", "min eigenvalue", "verdict", "status"])
    return {"states": results}, table


def _field_elements(sc: Scenario, sec: dict):
    if "A" in sec and "B" in sec:
        A = parse_element(sec["A"], sc.n, "field.A")
        B = parse_element(sec["B"], sc.n, "field.B")
    elif sc.n == 1:
        A = WeylElement.generator(PhasePoint([1, 0]))
        B = WeylElement.generator(PhasePoint([0, 1]))
    else:
        raise ConfigError("elements A and B are required when n > 1", "field")
    if A.h != 0.0 or B.h != 0.0:
        raise ConfigError("field elements must be classical (h = 0)", "field")
    C = parse_element(sec["norm_element"], sc.n, "field.norm_element") if "norm_element" in sec else A + B
    return A, B, C


def cmd_field(sc: Scenario, args, checks: Checks):
    sec = sc.section("field")
    A, B, C = _field_elements(sc, sec)
    try:
        grid = FieldGrid(tuple(sec["levels"])) if "levels" in sec else FieldGrid.dyadic(int(sec.get("k_max", 8)))
    except ValueError as err:
        raise ConfigError(str(err), "field.levels") from None
    opts = NormOptions(tol=sc.tolerances["norm"], seed=sc.seed)
    dirac = verify_dirac_property(A, B, grid, opts, args.threads)
    product = verify_product_property(A, B, grid, opts, args.threads)
    norm_levels = tuple(float(h) for h in sec.get("norm_levels", [1.0, 0.1, 0.01]))
    cont = verify_norm_continuity(C, norm_levels, opts, args.threads)
    checks.add("dirac defect within bound", dirac.bounded(), float(dirac.defects().max()))
    checks.add("product defect within bound", product.bounded(), float(product.defects().max()))
    for rep in (dirac, product):
        exp = (sec.get("expect_slopes") or {}).get(rep.property_name)
        if exp is not None:
            target, width = float(exp[0]), float(exp[1])
            ok = rep.slope is not None and abs(rep.slope - target) <= width
            checks.add(f"{rep.property_name} slope", ok, rep.slope, width, target=target)
    gap_tol = float(sec.get("continuity_tol", 0.05))
    checks.add("norm continuity at smallest h", cont.gap_at_smallest <= gap_tol, cont.gap_at_smallest, gap_tol)
    if args.out:
        csv_path = Path(args.out).with_suffix(".rates.csv")
        header, *body = dirac.to_csv().splitlines()
        lines = ["property," + header] + [f"dirac,{r}" for r in body]
        lines += [f"product,{r}" for r in product.to_csv().splitlines()[1:]]
        csv_path.write_text("\n".join(lines) + "\n")
    rows = [
        [f"{r.h:.6g}", f"{r.defect:.6e}", f"{p.defect:.6e}"] for r, p in zip(dirac.rows, product.rows)
    ]
    table = _table(rows, ["h", "dirac defect", "product defect"])
    table += f"\nslopes: dirac {dirac.slope:.4f}, product {product.slope:.4f}"
    table += "\nnorms: " + ", ".join(f"h={h:g}: {v:.6f}" for h, v in zip(cont.levels, cont.values))
    table += f" (h=0: {cont.classical.value:.6f})"
    return {
        "A": A.to_records(),
        "B": B.to_records(),
        "norm_element": C.to_records(),
        "dirac": dirac.as_dict(),
        "product": product.as_dict(),
        "continuity": cont.as_dict(),
    }, table


def _default_grid(n: int, half: int = 2, step: str = "1/2") -> list[PhasePoint]:
    st = Fraction(step)
    axis = [k * st for k in range(-half, half + 1)]
    pts = [[]]
    for _ in range(2 * n):
        pts = [p + [a] for p in pts for a in axis]
    return [PhasePoint(p) for p in pts]


def cmd_limit(sc: Scenario, args, checks: Checks):
    sec = sc.section("limit")
    rng = _rng(sc)
    states = parse_states(sc, rng)
    pts = parse_points(sec["points"], sc.n, "limit.points") if "points" in sec else _default_grid(sc.n)
    tol = sc.tolerances["psd"]
    results, rows = [], []
    for name, st, spec in states:
        lim = classical_limit(st)
        quantum = bochner_certificate(st, pts, sc.tolerances["psd_fock" if isinstance(st.family, FockDensity) else "psd"])
        classical = bochner_certificate(lim, pts, tol)
        entry = {
            "name": name,
            "state": st.describe(),
            "quantum_certificate": quantum.as_dict(),
            "limit_certificate": classical.as_dict(),
        }
        expect = spec.get("expect_limit")
        status = "report"
        if expect is not None:
            ok = classical.verdict == expect
            checks.add(f"{name}: limit {expect}", ok, classical.min_eigenvalue, tol)
            status = "pass" if ok else "FAIL"
        results.append(entry)
        rows.append([name, st.h, quantum.verdict, classical.verdict, f"{classical.min_eigenvalue:.3e}", status])
    table = _table(rows, ["state", "h", "twisted", "limit", "limit min eig", "status"])
    return {"points": [p.to_strings() for p in pts], "states": results}, table


def _quad(sec: dict) -> QuadratureSpec:
    q = sec.get("quadrature", {}) or {}
    try:
        return QuadratureSpec(
            nodes=int(q.get("nodes", 129)),
            half_width=float(q.get("half_width", 8.0)),
            shifted=bool(q.get("shifted", True)),
            budget=int(q.get("budget", 4_000_000)),
        )
    except ValueError as err:
        raise ConfigError(str(err), "quadrature") from None


def cmd_witness(sc: Scenario, args, checks: Checks):
    sec = sc.section("witness")
    rng = _rng(sc)
    states = parse_states(sc, rng)
    R_max = float(sec.get("R_max", 50.0))
    quad = _quad(sec)
    tol = sc.tolerances["defect"]
    results, rows = [], []
    for name, st, spec in states:
        if st.h <= 0:
            raise ConfigError("witness states need h > 0", f"states[{name}]")
        rep = theorem_witness(st, R_max=R_max, defect_tol=tol, quad=quad, threads=args.threads)
        checks.add(f"{name}: witness", rep.verdict != "inconsistent", rep.mass.defect if rep.mass else None, tol, verdict=rep.verdict)
        results.append({"name": name, "state": st.describe(), "report": rep.as_dict()})
        defect = f"{rep.mass.defect:.4g}" if rep.mass else "n/a"
        rows.append([name, st.h, rep.regularity.verdict, defect, rep.verdict])
    table = _table(rows, ["state", "h", "regularity", "defect", "verdict"])
    return {"R_max": R_max, "quadrature": quad.__dict__, "states": results}, table


def cmd_measure(sc: Scenario, args, checks: Checks):
    sec = sc.section("measure")
    rng = _rng(sc)
    states = parse_states(sc, rng)
    quad = _quad(sec)
    R_max = float(sec.get("R_max", 50.0))
    radii = sec.get("radii")
    results, rows = [], []
    for name, st, spec in states:
        lim = classical_limit(st)
        entry = {"name": name, "state": st.describe()}
        rep = mass_defect(lim, R_max, quad, radii, threads=args.threads)
        entry["mass"] = rep.as_dict()
        exp = spec.get("expect", {}) or {}
        if "defect_max" in exp:
            checks.add(f"{name}: defect <= {exp['defect_max']}", rep.defect <= float(exp["defect_max"]), rep.defect)
        if "defect_min" in exp:
            checks.add(f"{name}: defect >= {exp['defect_min']}", rep.defect >= float(exp["defect_min"]), rep.defect)
        if exp.get("gaussian_closed_form"):
            if not isinstance(st.family, Gaussian):
                raise ConfigError("closed form applies to Gaussian states only", f"states[{name}]")
            fam = st.family
            if np.any(fam.mean != 0) or not np.allclose(fam.cov, np.eye(2 * sc.n)):
                raise ConfigError("closed form needs mean 0 and identity covariance", f"states[{name}]")
            errs = [abs(c.value - (R * R / (R * R + 1)) ** sc.n) for R, c in zip(rep.radii, rep.captures)]
            checks.add(f"{name}: closed form", max(errs) <= 1e-6, max(errs), 1e-6)
        rec_row = ""
        if "candidates" in spec:
            try:
                rec = recover_point_weights(lim, spec["candidates"], residual_tol=sc.tolerances["residual"])
            except ValueError as err:
                raise ConfigError(str(err), f"states[{name}].candidates") from None
            entry["recovery"] = rec.as_dict()
            rec_row = f"{rec.residual:.2e}"
            if "weights" in exp:
                err = float(np.abs(rec.weights - np.asarray(exp["weights"], dtype=float)).max())
                checks.add(f"{name}: recovered weights", err <= 1e-8, err, 1e-8)
            if "model_ok" in exp:
                checks.add(f"{name}: point model {'fits' if exp['model_ok'] else 'rejected'}", rec.model_ok == bool(exp["model_ok"]), rec.residual, rec.residual_tol)
        results.append(entry)
        rows.append([name, f"{rep.captured.max():.6f}", f"{rep.defect:.4g}", rec_row])
    table = _table(rows, ["state", "max captured", "defect", "recovery residual"])
    return {"quadrature": quad.__dict__, "states": results}, table


def _dense(M) -> dict:
    M = np.asarray(M)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def cmd_gns(sc: Scenario, args, checks: Checks):
    sec = sc.section("gns")
    rng = _rng(sc)
    results, rows = [], []
    states = parse_states(sc, rng) if "states" in sc.params else []
    for name, st, spec in states:
        pts = parse_points(spec.get("points"), sc.n, f"states[{name}].points")
        try:
            data = gns_gram(st, pts, sc.tolerances["rank"])
        except ValueError as err:
            raise ConfigError(str(err), f"states[{name}].points") from None
        entry = {"name": name, "state": st.describe(), "gns": data.as_dict()}
        checks.add(f"{name}: vector state", data.vector_state_residual == 0.0, data.vector_state_residual, 0.0)
        psd_tol = sc.tolerances["psd_fock" if isinstance(st.family, FockDensity) else "psd"]
        checks.add(f"{name}: gram PSD", data.eigenvalues[0] >= -psd_tol, float(data.eigenvalues[0]), psd_tol)
        if "expect_rank" in spec:
            checks.add(f"{name}: rank", data.rank == int(spec["expect_rank"]), data.rank, None, expected=int(spec["expect_rank"]))
        actions = []
        for i, y in enumerate(spec.get("shifts", [])):
            act = gns_action(data, parse_point(y, sc.n, f"states[{name}].shifts[{i}]"))
            actions.append({**act.as_dict(), "matrix": _dense(act.matrix)})
            checks.add(f"{name}: W({','.join(act.shift.to_strings())}) isometric", act.isometry_residual <= 1e-12, act.isometry_residual, 1e-12)
        entry["actions"] = actions
        results.append(entry)
        rows.append([name, st.h, len(pts), data.rank, f"{data.eigenvalues[0]:.3e}"])
    disp = []
    for i, d in enumerate(sec.get("displacements", [])):
        path = f"gns.displacements[{i}]"
        x, y = parse_point(d.get("x"), sc.n, f"{path}.x"), parse_point(d.get("y"), sc.n, f"{path}.y")
        h, N = parse_level(d.get("h", 1.0), f"{path}.h"), int(d.get("N", 64))
        if h <= 0 or N < 2:
            raise ConfigError("displacements need h > 0 and N >= 2", path)
        r = relation_residual(x, y, h, N, d.get("block"))
        disp.append({"x": x.to_strings(), "y": y.to_strings(), "h": h, **r.as_dict()})
        checks.add(f"displacement relation {i}", r.relation <= sc.tolerances["displacement"], r.relation, sc.tolerances["displacement"])
        checks.add(f"displacement unitarity {i}", r.unitarity <= sc.tolerances["unitarity"], r.unitarity, sc.tolerances["unitarity"])
    table = _table(rows, ["state", "h", "points", "rank", "min eigenvalue"])
    if disp:
        table += "\n" + _table(
            [[",".join(d["x"]), ",".join(d["y"]), d["h"], d["N"], f"{d['relation']:.2e}", f"{d['unitarity']:.2e}"] for d in disp],
            ["x", "y", "h", "N", "relation", "unitarity"],
        )
    return {"states": results, "displacements": disp}, table


def cmd_clockshift(sc: Scenario, args, checks: Checks):
    sec = sc.section("clockshift")
    tol = sc.tolerances["clock"]
    results, rows = [], []
    for i, pq in enumerate(sec.get("pairs", [[1, 2], [1, 3], [1, 5], [1, 7]])):
        try:
            rep = clock_shift(*pq)
        except (ValueError, TypeError) as err:
            raise ConfigError(str(err), f"clockshift.pairs[{i}]") from None
        d = rep.as_dict()
        checks.add(f"p={rep.p} q={rep.q} relation", d["relation_residual"] <= tol, d["relation_residual"], tol)
        checks.add(f"p={rep.p} q={rep.q} unitarity", d["unitarity_residual"] <= tol, d["unitarity_residual"], tol)
        checks.add(f"p={rep.p} q={rep.q} monomial rank", d["monomial_rank"] == rep.q**2, d["monomial_rank"], None, expected=rep.q**2)
        results.append(d)
        rows.append([rep.p, rep.q, f"{d['relation_residual']:.2e}", d["monomial_rank"]])
    return {"representations": results}, _table(rows, ["p", "q", "relation residual", "monomial rank"])


def _subspace(alg: BlockAlgebra, sec: dict) -> FunctionalSubspace:
    try:
        if "dual_blocks" in sec:
            return FunctionalSubspace.block_dual(alg, sec["dual_blocks"])
        if sec.get("full_dual"):
            return FunctionalSubspace.full_dual(alg)
        fs = []
        for i, F in enumerate(sec.get("functionals", [])):
            fs.append([_matrix(b, f"reduce.functionals[{i}]") for b in F])
        return FunctionalSubspace(alg, tuple(fs))
    except (ValueError, IndexError) as err:
        raise ConfigError(str(err), "reduce") from None


def cmd_reduce(sc: Scenario, args, checks: Checks):
    sec = sc.section("reduce")
    try:
        alg = BlockAlgebra(tuple(sec.get("block_dims", [])))
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err), "reduce.block_dims") from None
    V = _subspace(alg, sec)
    N = annihilator(alg, V)
    out = {"block_dims": list(alg.block_dims), "dim_V": V.dim, "dim_annihilator": N.dim}
    expect = sec.get("expect", "reduces")
    rows = [["dim V", V.dim], ["dim N(V)", N.dim]]
    try:
        red = reduce(alg, V, sc.tolerances["ideal"])
    except AnnihilatorNotIdeal as err:
        out["not_ideal"] = {"message": str(err), "witness": err.witness.as_dict()}
        checks.add("annihilator is an ideal" if expect == "reduces" else "annihilator not an ideal", expect == "not_ideal", err.witness.distance)
        rows.append(["result", "AnnihilatorNotIdeal"])
    else:
        out["reduction"] = red.as_dict()
        hom = homomorphism_residual(red, seed=sc.seed)
        again = reduce(red.quotient, red.induced(V))
        out["homomorphism_residual"] = hom
        checks.add("reduction expected", expect == "reduces", None)
        checks.add("dual pullback", red.pullback_residual <= sc.tolerances["pullback"], red.pullback_residual, sc.tolerances["pullback"])
        checks.add("dual rank", red.dual_rank_ok)
        checks.add("*-homomorphism", hom <= 1e-12, hom, 1e-12)
        checks.add("idempotent", again.quotient == red.quotient and len(again.dropped) == 0)
        rows.append(["quotient blocks", list(red.quotient.block_dims)])
    sups = []
    for i, e in enumerate(sec.get("sup_elements", [])):
        A = [_matrix(b, f"reduce.sup_elements[{i}]") for b in e["element"]]
        try:
            val = functional_sup(V, A)
        except ValueError as err:
            raise ConfigError(str(err), f"reduce.sup_elements[{i}]") from None
        sups.append({"value": val})
        if "expect" in e:
            checks.add(f"sup {i}", abs(val - float(e["expect"])) <= 1e-6, val, 1e-6, expected=float(e["expect"]))
        rows.append([f"sup {i}", f"{val:.9f}"])
    out["sups"] = sups
    cond = sec.get("condition")
    if cond is not None and V.dim:
        rep = check_condition_ii(alg, V, int(cond.get("trials", 32)), int(cond.get("seed", sc.seed)), args.threads)
        out["condition_ii"] = rep.as_dict()
        if "expect" in cond:
            want = cond["expect"] == "violated"
            checks.add(f"condition (ii) {cond['expect']}", rep.violated == want, rep.max_margin, rep.tol)
        rows.append(["condition (ii) max margin", f"{rep.max_margin:.4g}"])
    return out, _table(rows, ["item", "value"])


HANDLERS = {
    "algebra": cmd_algebra,
    "bochner": cmd_bochner,
    "field": cmd_field,
    "limit": cmd_limit,
    "witness": cmd_witness,
    "measure": cmd_measure,
    "gns": cmd_gns,
    "clockshift": cmd_clockshift,
    "reduce": cmd_reduce,
}


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weylstates", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML scenario file, or builtin:<name> for a bundled scenario")
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--threads", type=int, default=None, help="worker threads for sweeps")
    p.add_argument("--tol-overrides", default=None, help="comma-separated key=value tolerance overrides")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(json_ready(report), sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    table_stream = sys.stdout if args.out else sys.stderr
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed must be nonnegative", "seed")
        sc = build_scenario(read_config(args.config), args.seed, parse_tol_overrides(args.tol_overrides))
        checks = Checks()
        results, table = HANDLERS[args.command](sc, args, checks)
    except ConfigError as err:
        diag = {"error": "validation", "path": err.path, "message": err.detail, "command": args.command}
        sys.stderr.write(json.dumps(diag, sort_keys=True) + "\n")
        return EXIT_CONFIG
    except (NormConvergenceError, QuadratureBudgetError, IllConditionedError) as err:
        diag = {"error": "non-convergence", "type": type(err).__name__, "message": str(err), "command": args.command}
        sys.stderr.write(json.dumps(diag, sort_keys=True) + "\n")
        return EXIT_NUMERIC
    report = {
        "tool": "weylstates",
        "version": __version__,
        "command": args.command,
        "config": sc.resolved(),
        "passed": checks.passed,
        "checks": checks.items,
        "results": results,
    }
    _emit(report, args.out)
    print(table, file=table_stream)
    print(f"{args.command}: {'PASS' if checks.passed else 'FAIL'} ({sum(c['passed'] for c in checks.items)}/{len(checks.items)} checks)", file=table_stream)
    return EXIT_OK if checks.passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
