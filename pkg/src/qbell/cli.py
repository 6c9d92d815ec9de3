"""Command-line front end: reproducible exclusion runs, face sweeps,
self-test reports and game diagnostics.

All commands are deterministic given --seed: sweep samples are drawn from
per-task seeds derived by hashing, so worker count never changes results.
Exit codes: 0 decided/success, 1 usage or I/O failure, 2 numerically
undecided (an SDP value inside the tolerance band).
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from .boxes import (
    FLOAT,
    RATIONAL,
    box_from_json,
    box_to_json,
    pr_box,
)
from .certificates import certificate_to_json_dict, exclude_by_analytic
from .chains import canonical_placements  # noqa: F401  (warm import for workers)
from .faces import FaceSpec, face_box, face_spec_from_json, pr_neighbors
from .graphs import build_orthogonality_graph
from .sdp import solve_certificate_sdp, solve_elliptope_bias
from .selftest import (
    angle_table,
    boundary_residual,
    boundary_weights,
    box_from_model,
    canonical_chained_model,
    chain_value,
    classical_chain_max,
    correlators_from_model,
    model_from_json_dict,
    pair_angle_residuals,
    swap_isometry_fidelity,
    tlm_residual,
    verify_self_test_conditions,
)
from .xorgames import (
    build_game,
    classical_bias,
    game_to_csv,
    general_position_check,
    is_diagonal_in_hadamard_basis,
    lexicographic_vectors,
    verify_block_structure,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNDECIDED = 2


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _emit(report: dict, out_path: str | None):
    payload = json.dumps(report, indent=2, sort_keys=True, default=str)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)


def _num_mode(default: str) -> str:
    mode = os.environ.get("QBT_NUM_MODE", default)
    if mode not in (RATIONAL, FLOAT):
        raise ValueError(f"QBT_NUM_MODE must be rational or float, got {mode!r}")
    return mode


def _fmt_value(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return v


# --- exclude ----------------------------------------------------------------

def cmd_exclude(args) -> int:
    t0 = time.monotonic()
    digests = {}
    face = None
    if args.box:
        with open(args.box, encoding="utf-8") as fh:
            text = fh.read()
        digests["box"] = _digest(text)
        box = box_from_json(text)
    elif args.pr:
        box = pr_box(args.pr, _num_mode(RATIONAL))
    else:
        with open(args.face, encoding="utf-8") as fh:
            text = fh.read()
        digests["face"] = _digest(text)
        face = face_spec_from_json(text)
        box = face_box(face)
    digests["box_canonical"] = _digest(box_to_json(box))

    results = {"excluded": False, "method": None, "value": None}
    rc = EXIT_OK
    if args.method in ("analytic", "both"):
        rep = exclude_by_analytic(box, face=face)
        results["analytic"] = {
            "excluded": rep.excluded,
            "template": rep.template,
            "value": _fmt_value(rep.value),
            "note": rep.note,
        }
        if rep.excluded:
            results["excluded"] = True
            results["method"] = "analytic"
            results["value"] = _fmt_value(rep.value)
            results["certificate"] = certificate_to_json_dict(rep.certificate)
    if args.method in ("sdp", "both"):
        graph = build_orthogonality_graph(box.scenario)
        sdp = solve_certificate_sdp(box.as_float(), graph, tol=args.tol)
        results["sdp"] = {
            "value": sdp.value,
            "status": sdp.status,
            "iterations": sdp.iterations,
            "min_eigenvalue": sdp.min_eigenvalue,
        }
        if sdp.value > args.tol:
            if not results["excluded"]:
                results["excluded"] = True
                results["method"] = "sdp"
                results["value"] = sdp.value
        elif not results["excluded"]:
            # inside the tolerance band: membership in the theta body is
            # plausible but not certified
            rc = EXIT_UNDECIDED
    report = {
        "command": "exclude",
        "argv": sys.argv[1:],
        "inputs_digest": digests,
        "results": results,
        "wall_time_s": time.monotonic() - t0,
        "version": __version__,
    }
    _emit(report, args.out)
    return rc


# --- faces-sweep ------------------------------------------------------------

def _sample_weights(rng: random.Random, d: int):
    """c_NS uniform on [0.05, 0.95] (step 1/1000), remainder split by a
    quantized Dirichlet draw."""
    c = Fraction(rng.randint(50, 950), 1000)
    cuts = sorted(rng.randint(0, 1000) for _ in range(d - 1))
    parts = []
    prev = 0
    for cut in cuts + [1000]:
        parts.append(cut - prev)
        prev = cut
    total = sum(parts)
    if total == 0:
        parts = [1] * d
        total = d
    rest = [(1 - c) * Fraction(p, total) for p in parts]
    # keep every chosen neighbor strictly on the face
    eps = Fraction(1, 10**6)
    rest = [max(w, eps) for w in rest]
    scale = (1 - c) / sum(rest)
    rest = [w * scale for w in rest]
    return (c, *rest)


def _sweep_subset(task):
    k, subset, grid, seed, method, tol = task
    neighbors = pr_neighbors(k)
    rows = []
    sub_seed = int(hashlib.sha256(f"{seed}:{subset}".encode()).hexdigest()[:12], 16)
    rng = random.Random(sub_seed)
    graph = build_orthogonality_graph(pr_box(k).scenario) if method != "analytic" else None
    for sample in range(grid):
        weights = _sample_weights(rng, len(subset))
        spec = FaceSpec(k, subset, weights)
        box = face_box(spec, neighbors)
        rep = exclude_by_analytic(box, face=spec, search_relabelings=False)
        excluded = rep.excluded
        method_used = "analytic" if rep.excluded else ""
        value = rep.value
        template = rep.template or ""
        if not excluded and method in ("sdp", "both"):
            sdp = solve_certificate_sdp(box.as_float(), graph, tol=tol)
            if sdp.value > tol:
                excluded = True
                method_used = "sdp"
                value = sdp.value
        rows.append({
            "k": k,
            "dim": len(subset),
            "neighbors": ";".join(str(i) for i in subset),
            "sample": sample,
            "c_ns": f"{weights[0].numerator}/{weights[0].denominator}",
            "weights": ";".join(f"{w.numerator}/{w.denominator}" for w in weights),
            "method": method_used,
            "template": template,
            "value": _fmt_value(value) if value is not None else "",
            "excluded": int(excluded),
        })
    return rows


SWEEP_COLUMNS = ["k", "dim", "neighbors", "sample", "c_ns", "weights",
                 "method", "template", "value", "excluded"]


def cmd_faces_sweep(args) -> int:
    t0 = time.monotonic()
    k, d = args.k, args.dim
    if d < 1 or d > 4 * k - 4:
        print(f"dimension must lie in 1..{4 * k - 4}", file=sys.stderr)
        return EXIT_ERROR
    if args.grid < 1:
        print("grid must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    subsets = list(itertools.combinations(range(4 * k), d))
    if args.max_subsets and len(subsets) > args.max_subsets:
        rng = random.Random(args.seed)
        subsets = sorted(rng.sample(subsets, args.max_subsets))
    tasks = [(k, s, args.grid, args.seed, args.method, args.tol) for s in subsets]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            chunks = list(pool.map(_sweep_subset, tasks))
    else:
        chunks = [_sweep_subset(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    import csv as _csv

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    excluded = sum(r["excluded"] for r in rows)
    print(f"{len(rows)} rows, {excluded} excluded "
          f"({100.0 * excluded / len(rows):.1f}%), "
          f"{time.monotonic() - t0:.1f}s -> {args.out}")
    return EXIT_OK


# --- selftest ---------------------------------------------------------------

def cmd_selftest(args) -> int:
    t0 = time.monotonic()
    digests = {}
    if args.model:
        with open(args.model, encoding="utf-8") as fh:
            text = fh.read()
        digests["model"] = _digest(text)
        model = model_from_json_dict(json.loads(text))
    else:
        model = canonical_chained_model(args.m)
    try:
        table = correlators_from_model(model)
        angles = angle_table(table)
        chain = boundary_weights(angles)
        report_st = verify_self_test_conditions(model)
        fid = swap_isometry_fidelity(model)
    except ValueError as exc:
        print(f"degenerate model: {exc}", file=sys.stderr)
        return EXIT_ERROR
    results = {
        "m": model.m,
        "theta_a": list(model.theta_a),
        "theta_b": list(model.theta_b),
        "correlators": [list(r) for r in table.E],
        "boundary_residual": boundary_residual(angles),
        "chain_value": chain_value(table, chain),
        "classical_chain_max": classical_chain_max(chain),
        "chain_weights_total": chain.total(),
        "selftest_residuals": {
            "z_match": report_st.z_match,
            "x_match": report_st.x_match,
            "anticommutator_a": report_st.anticommutator_a,
            "anticommutator_b": report_st.anticommutator_b,
            "zz_expectation": report_st.zz_expectation,
            "xx_expectation": report_st.xx_expectation,
        },
        "isometry_fidelity": fid,
        "pair_angle_residuals": list(pair_angle_residuals(model)),
        "box_no_signaling": True,
    }
    gap = results["chain_value"] - results["classical_chain_max"]
    results["chain_gap_normalized"] = gap / chain.total()
    if model.m == 2:
        best = None
        for pivot in ((1, 1), (1, 2), (2, 1), (2, 2)):
            for xi in (1, -1):
                r = abs(tlm_residual(table, pivot, xi))
                if best is None or r < best[0]:
                    best = (r, pivot, xi)
        results["tlm"] = {"residual": best[0], "pivot": list(best[1]), "xi": best[2]}
    digests["box_canonical"] = _digest(box_to_json(box_from_model(model)))
    report = {
        "command": "selftest",
        "argv": sys.argv[1:],
        "inputs_digest": digests,
        "results": results,
        "wall_time_s": time.monotonic() - t0,
        "version": __version__,
    }
    _emit(report, args.out)
    return EXIT_OK


# --- xorgame ----------------------------------------------------------------

def cmd_xorgame(args) -> int:
    t0 = time.monotonic()
    if args.k < 2 or 2**args.k > 4096:
        print("k must satisfy 2 <= k and 2^k <= 4096", file=sys.stderr)
        return EXIT_ERROR
    game = build_game(args.k)
    results = {"k": args.k, "size": int(game.shape[0])}
    if args.verify_hadamard:
        results["hadamard_diagonal"] = bool(is_diagonal_in_hadamard_basis(game))
    if args.verify_blocks:
        block = verify_block_structure(game, args.k)
        results["blocks_ok"] = bool(block.ok)
        if not block.ok:
            results["block_failures"] = [list(f) for f in block.failures]
    vs = lexicographic_vectors(args.k + 1, 2 ** (args.k + 1))
    results["general_position"] = bool(general_position_check(vs))
    results["classical_bias"] = int(classical_bias(game))
    if args.bias:
        results["quantum_bias"] = float(solve_elliptope_bias(game))
    results["game"] = [[int(v) for v in row] for row in game]
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(game_to_csv(game))
    report = {
        "command": "xorgame",
        "argv": sys.argv[1:],
        "inputs_digest": {},
        "results": results,
        "wall_time_s": time.monotonic() - t0,
        "version": __version__,
    }
    _emit(report, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbell",
        description="Quantum Bell inequality certificates and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exclude", help="decide quantum-set exclusion of one box")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--box", help="box JSON file")
    src.add_argument("--pr", type=int, help="use the k-outcome PR box")
    src.add_argument("--face", help="face spec JSON file")
    p.add_argument("--method", choices=["analytic", "sdp", "both"], default="analytic")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_exclude)

    p = sub.add_parser("faces-sweep", help="exclusion sweep over face samples")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--grid", type=int, default=100, help="samples per subset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["analytic", "sdp", "both"], default="both")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--max-subsets", type=int, default=0,
                   help="sample at most this many neighbor subsets (0 = all)")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_faces_sweep)

    p = sub.add_parser("selftest", help="boundary and self-testing report")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="planar model JSON file")
    src.add_argument("--canonical-chained", dest="m_flag", action="store_true",
                     help="use the equal-spacing chained model for --m")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("xorgame", help="build and verify a sign-vector game")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--verify-hadamard", action="store_true")
    p.add_argument("--verify-blocks", action="store_true")
    p.add_argument("--bias", action="store_true", help="also solve the quantum bias")
    p.add_argument("--csv", help="write the game matrix as integer CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_xorgame)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
