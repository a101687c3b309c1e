"""Command-line interface.

Subcommands: betti (relative Betti numbers), check (the three structural
condition checkers), harmonic (dimension table of all graded harmonic
spaces plus the Betti dimension identities), chain (the full isomorphism
chain verification for every form degree), and solve (the discrete
Hodge-Laplace problem on the conforming complex with a built-in source).

Meshes come from a JSON file or from the built-in catalog via
``catalog:name`` or ``catalog:name:size``.  Structured output is canonical
JSON with sorted keys and fixed float formatting, so identical
configurations produce byte-identical reports.  The exit status is zero
exactly when every requested verification passes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ddforms import distrib
from ddforms.assembly import export_matrix, operator_D, operator_T
from ddforms.hilbert import harmonic_space, hodge_laplacian, laplace_solve
from ddforms.mesh import (MeshError, betti_numbers, build_complex,
                          generate_mesh, load_mesh_file)
from ddforms.polyforms import Family

CATALOG = ("interval", "triangle", "tetrahedron", "square_grid", "annulus",
           "cube_tet", "solid_ring", "sphere_boundary")


def parse_mesh_file(path):
    """Load a mesh file, with context attached to any failure."""
    if not os.path.exists(path):
        raise MeshError(f"mesh file not found: {path}")
    return load_mesh_file(path)


def resolve_mesh(spec, mark):
    """Build the mesh a --mesh argument names, applying the marking mode."""
    if spec.startswith("catalog:"):
        parts = spec.split(":")
        name = parts[1]
        size = int(parts[2]) if len(parts) > 2 else 1
        if mark == "file":
            raise MeshError("marking mode 'file' needs a mesh file")
        return generate_mesh(name, size, mark)
    pair = parse_mesh_file(spec)
    if mark == "file":
        return pair
    cells = [list(s.vertices) for s in pair.simplices(pair.top_dim)]
    coords = [list(p) for p in pair.coords]
    if mark == "none":
        marked = []
    elif mark == "full":
        marked = [list(f.vertices) for f in pair.boundary_facets()]
    elif mark == "half":
        from ddforms.mesh import _half_marked
        marked = _half_marked(pair)
    else:
        raise MeshError(f"unknown marking mode {mark!r}")
    return build_complex(cells, coords, marked)


def make_family(name, degree):
    if degree < 1:
        raise MeshError(f"family degree must be >= 1, got {degree}")
    if name not in ("trimmed", "full"):
        raise MeshError(f"unknown family {name!r}")
    return Family(name, degree)


def mesh_summary(pair):
    return {
        "top_dim": pair.top_dim,
        "simplices": {str(m): len(pair.simplices(m))
                      for m in range(pair.top_dim + 1)},
        "marked": len(pair.marked),
        "betti": betti_numbers(pair),
    }


# -- subcommand runners ---------------------------------------------------


def run_betti(pair, family, args):
    return {"betti": betti_numbers(pair)}, True


def run_check(pair, family, args):
    rep = distrib.check_conditions(pair, family)
    out = {
        "local_exactness": {str(m): r["passed"]
                            for m, r in rep["local_exactness"].items()},
        "decomposition": {str(k): r["passed"]
                          for k, r in rep["decomposition"].items()},
        "patch": {
            "passed": rep["patch"]["passed"],
            "failures": [list(v) for v in rep["patch"]["failures"]],
        },
        "passed": rep["passed"],
    }
    return out, rep["passed"]


def run_harmonic(pair, family, args):
    fam_rep = distrib.harmonic_family(pair, family)
    betti = betti_numbers(pair)
    n = pair.top_dim
    identities = {}
    ok = True
    for k in range(n + 1):
        conf = fam_rep["conforming"][k]
        chain = fam_rep["chain"][n - k]
        good = conf == chain == betti[n - k]
        identities[str(k)] = {"conforming": conf, "chain": chain,
                              "betti": betti[n - k], "ok": good}
        ok = ok and good
    out = {
        "degree_graded": {f"{k},{b}": v
                          for (k, b), v in sorted(fam_rep["lambda"].items())},
        "stratum_graded": {f"{m},{b}": v
                           for (m, b), v in sorted(fam_rep["gamma"].items())},
        "conforming": {str(k): v for k, v in fam_rep["conforming"].items()},
        "chain": {str(m): v for m, v in fam_rep["chain"].items()},
        "identities": identities,
        "passed": ok,
    }
    return out, ok


def run_chain(pair, family, args):
    n = pair.top_dim
    out = {}
    ok = True
    for k in range(n + 1):
        rep = distrib.verify_chain(pair, family, k)
        steps = {}
        for s in rep["steps"]:
            entry = {"ok": s["ok"]}
            if "dims" in s:
                entry["dims"] = list(s["dims"])
            if "smin" in s:
                entry["smin"] = _num(s["smin"])
            if "defect" in s:
                entry["defect"] = _num(s["defect"])
            steps[s["label"]] = entry
        out[str(k)] = {
            "betti": rep["betti"],
            "dims": rep["chain_dims"],
            "steps": steps,
            "passed": rep["passed"],
        }
        ok = ok and rep["passed"]
    out["passed"] = ok
    return out, ok


def run_solve(pair, family, args):
    cx = distrib.conforming_complex(pair, family)
    tol = args.tol
    out = {}
    ok = True
    rng = np.random.default_rng(20240823)
    for i in range(len(cx)):
        dim = cx.spaces[i].dim
        if dim == 0:
            out[str(i)] = {"dim": 0, "residual": 0.0, "harmonic_overlap": 0.0,
                           "ok": True}
            continue
        f = rng.standard_normal(dim)
        u, p = laplace_solve(cx, i, f)
        lap = hodge_laplacian(cx, i)
        gram = cx.spaces[i].gram
        rhs = f - p
        res_vec = lap.matrix @ u - rhs
        scale = max(np.sqrt(rhs @ gram @ rhs), 1e-30)
        residual = float(np.sqrt(res_vec @ gram @ res_vec) / scale)
        h = harmonic_space(cx, i)
        overlap = float(np.linalg.norm(h.basis.T @ gram @ u)) if h.dim else 0.0
        good = residual < tol and overlap < tol
        out[str(i)] = {"dim": dim, "harmonic_dim": h.dim,
                       "residual": _num(residual),
                       "harmonic_overlap": _num(overlap), "ok": good}
        ok = ok and good
    out["passed"] = ok
    return out, ok


RUNNERS = {
    "betti": run_betti,
    "check": run_check,
    "harmonic": run_harmonic,
    "chain": run_chain,
    "solve": run_solve,
}


def dump_operators(pair, family, directory):
    """Write every stratum operator and total-complex differential as
    coordinate-format text files."""
    os.makedirs(directory, exist_ok=True)
    n = pair.top_dim
    for m in range(n + 1):
        for k in range(m + 1):
            if k < m:
                op = operator_D(pair, m, k, family)
                export_matrix(op.matrix,
                              os.path.join(directory, f"D_{m}_{k}.txt"))
            if m >= 1 and k <= m - 1:
                op = operator_T(pair, m, k, family)
                export_matrix(op.matrix,
                              os.path.join(directory, f"T_{m}_{k}.txt"))
    cx = distrib.total_complex(pair, family)
    for i, d in enumerate(cx.diffs):
        export_matrix(d.matrix, os.path.join(directory, f"d_total_{i}.txt"))


# -- rendering ------------------------------------------------------------


def _num(x):
    """Fixed-precision float for byte-deterministic reports."""
    return float(f"{float(x):.12e}")


def _render_table(doc, out):
    def walk(prefix, value):
        if isinstance(value, dict):
            for key in value:
                walk(f"{prefix}{key}.", value[key])
        elif isinstance(value, list):
            out.write(f"{prefix[:-1]:<44} {' '.join(str(v) for v in value)}\n")
        else:
            out.write(f"{prefix[:-1]:<44} {value}\n")

    walk("", doc)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ddforms",
        description="Distributional de Rham complexes on simplicial meshes")
    parser.add_argument("command", choices=sorted(RUNNERS))
    parser.add_argument("--mesh", required=True,
                        help="mesh file path or catalog:name[:size]")
    parser.add_argument("--family", default="trimmed",
                        choices=("trimmed", "full"))
    parser.add_argument("--degree", type=int, default=1,
                        help="polynomial degree r of the family")
    parser.add_argument("--mark", default="none",
                        choices=("none", "full", "half", "file"),
                        help="boundary marking mode")
    parser.add_argument("--tol", type=float, default=1e-8,
                        help="verification tolerance")
    parser.add_argument("--format", default="table",
                        choices=("table", "structured"))
    parser.add_argument("--strict", action="store_true",
                        help="fail when the condition checkers warn")
    parser.add_argument("--dump-operators", metavar="DIR",
                        help="export assembled operators to a directory")
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    if args.tol <= 0:
        print("error: tolerance must be positive", file=sys.stderr)
        return 2
    try:
        pair = resolve_mesh(args.mesh, args.mark)
        family = make_family(args.family, args.degree)
        passed = True
        warnings = []
        if args.command in ("harmonic", "chain", "solve"):
            cond = distrib.check_conditions(pair, family)
            if not cond["passed"]:
                warnings.append("condition checkers reported failures")
                if args.strict:
                    passed = False
        report, ok = RUNNERS[args.command](pair, family, args)
        passed = passed and ok
        if args.dump_operators:
            dump_operators(pair, family, args.dump_operators)
    except MeshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    doc = {
        "command": args.command,
        "config": {
            "mesh": args.mesh,
            "family": args.family,
            "degree": args.degree,
            "mark": args.mark,
            "tol": _num(args.tol),
        },
        "mesh": mesh_summary(pair),
        "report": report,
        "warnings": warnings,
        "passed": passed,
    }
    if args.format == "structured":
        out.write(json.dumps(doc, sort_keys=True, separators=(",", ":")))
        out.write("\n")
    else:
        _render_table(doc, out)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
