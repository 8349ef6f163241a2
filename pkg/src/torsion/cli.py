"""Command-line front end: ``torsion <command> ...``.

Exit status is 0 when every reported invariant holds, 1 when one fails and 2
for unreadable or invalid input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import sympy as sp

from . import __version__
from . import exact as ex
from . import io
from .errors import TorsionError

EXIT_OK, EXIT_INVARIANT, EXIT_INPUT = 0, 1, 2


@dataclass
class RunReport:
    """Everything a command computed, in a JSON-ready layout."""

    command: list[str]
    inputs: dict[str, str] = field(default_factory=dict)
    formula: str = ""
    values: dict = field(default_factory=dict)
    invariants: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    mode: str = "serial"

    def add_input(self, name) -> Path:
        p = io.resolve_path(name)
        self.inputs[str(name)] = hashlib.sha256(p.read_bytes()).hexdigest()
        return p

    def value(self, key: str, v) -> None:
        self.values[key] = _encode(v)

    def check(self, name: str, passed: bool, **info) -> bool:
        self.invariants.append({"name": name, "passed": bool(passed), **{k: _encode(v) for k, v in info.items()}})
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(i["passed"] for i in self.invariants)

    def to_json(self) -> dict:
        return asdict(self) | {"passed": self.passed}

    def render(self) -> str:
        lines = [f"torsion {' '.join(self.command)}"]
        if self.formula:
            lines.append(f"  formula: {self.formula}")
        for k, v in self.values.items():
            lines.append(f"  {k} = {_show(v)}")
        for inv in self.invariants:
            extra = ", ".join(f"{k}={_show(v)}" for k, v in inv.items() if k not in ("name", "passed"))
            lines.append(f"  [{'ok' if inv['passed'] else 'FAIL'}] {inv['name']}" + (f" ({extra})" if extra else ""))
        lines.append(f"  time {sum(self.timings.values()):.3f} s, {self.mode}")
        return "\n".join(lines)


def _encode(v):
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_encode(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_encode(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _encode(x) for k, x in v.items()}
    if isinstance(v, sp.Basic):
        return str(v)
    return v


def _show(v) -> str:
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, float) for x in v):
        re_, im = v
        return f"{re_:.12g}" if im == 0 else f"{re_:.12g}{im:+.12g}j"
    if isinstance(v, float):
        return f"{v:.6g}"
    return json.dumps(v) if isinstance(v, (list, dict)) else str(v)


def parse_complex(text: str) -> complex:
    """``"2"``, ``"2,0"`` or ``"0.3,-1.2"`` (real, imaginary)."""
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) == 1:
        return complex(parts[0].replace("i", "j"))
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise argparse.ArgumentTypeError(f"cannot read {text!r} as a complex number")


def parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def parse_cycle(text: str) -> dict[str, int]:
    """``"t:1"`` or ``"x:1,y:-2"``: integer coefficients on edges."""
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        name, _, coef = item.partition(":")
        try:
            out[name.strip()] = int(coef) if coef else 1
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad cycle term {item!r}") from None
    return out


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_complex(args, report: RunReport) -> None:
    from .complex_core import (
        chirality_torsion,
        refined_torsion_element,
        signature_torsion,
        validate_exact_complex,
    )

    p = report.add_input(args.file)
    C, G = io.load_complex(p)
    report.value("dims", list(C.dims))
    report.check("acyclic", C.is_acyclic, betti=list(C.betti))
    tol = args.tol if args.tol is not None else 1e-9
    t0 = time.perf_counter()
    if args.chirality or args.signature:
        if G is None:
            raise TorsionError(f"{args.file} has no chirality blocks")
        report.formula = "chirality torsion: refined torsion of the bases (c_j, G c_j) times (-1)^m"
        tau = chirality_torsion(C, G)
        report.value("torsion", tau)
        if args.signature:
            sig = signature_torsion(C, G)
            report.value("signature_torsion", sig)
            err = abs(sig - tau) / max(abs(tau), 1e-300)
            report.check("signature formula agrees", err < tol, rel_err=err, tol=tol)
    else:
        report.formula = "refined torsion with respect to the standard bases"
        tau = refined_torsion_element(C)
        report.value("torsion", tau)
    report.timings["float"] = time.perf_counter() - t0
    if args.exact:
        t0 = time.perf_counter()
        K = ex.QQ_I
        E = validate_exact_complex([ex.matrix(C.d(k), K, C.d(k).shape) for k in range(C.n)], K, C.dims)
        if args.chirality or args.signature:
            blocks = [ex.matrix(b, K, b.shape) for b in G.blocks]
            val = chirality_torsion(E, blocks)
        else:
            val = refined_torsion_element(E)
        exact_value = sp.nsimplify(K.to_sympy(val))
        report.value("torsion_exact", exact_value)
        diff = abs(complex(sp.N(exact_value, 30)) - tau)
        report.check("float agrees with exact", diff <= 1e-9 * max(1.0, abs(tau)), abs_err=diff)
        report.timings["exact"] = time.perf_counter() - t0


def cmd_contact(args, report: RunReport) -> None:
    from .contact_model import random_resonance_model, signature_condition, verify_computetorsion

    rng = np.random.default_rng(args.seed)
    report.formula = "tau(C, G)^{-1} = (-1)^Q grdet(L_X); grdet(L_X + s)^{(-1)^{q+1}} = (s - s0)^m"
    tol = args.tol if args.tol is not None else 1e-9
    if args.model:
        models = [io.load_resonance_model(report.add_input(args.model))]
    else:
        models = [random_resonance_model(args.r, args.w_dim, args.s0, int(rng.integers(0, 2)), rng)
                  for _ in range(args.trials)]
    t0 = time.perf_counter()
    worst_id = worst_lie = 0.0
    min_sig = np.inf
    first = None
    for m in models:
        min_sig = min(min_sig, signature_condition(m))
        rep = verify_computetorsion(m, rng)
        worst_id = max(worst_id, rep.rel_error)
        worst_lie = max(worst_lie, rep.detlie_max_error)
        first = first or rep
    report.timings["verify"] = time.perf_counter() - t0
    report.value("models", len(models))
    report.value("s0", models[0].s0)
    report.value("torsion_inverse", first.lhs)
    report.value("signed_grdet", first.rhs)
    report.value("Q", first.Q)
    report.value("order", first.order)
    report.check("signature operator invertible", min_sig > 1e-10, min_sigma_ratio=min_sig)
    report.check("torsion identity", worst_id < tol, rel_err=worst_id, tol=tol)
    report.check("graded determinant order", worst_lie < 1e-8, rel_err=worst_lie, tol=1e-8)


def cmd_turaev(args, report: RunReport) -> None:
    from .morse_turaev import pair_det_rep, turaev_torsion

    cw = io.load_cw(report.add_input(args.cw))
    ls = io.load_rep(report.add_input(args.rep), cw)
    euler = io.load_euler(report.add_input(args.euler), cw) if args.euler else None
    report.formula = "refined torsion of the twisted cochain complex, bases transported along a spider"
    t0 = time.perf_counter()
    tau = turaev_torsion(cw, ls, euler)
    report.value("space", cw.name)
    report.value("torsion", tau)
    report.value("modulus", abs(tau))
    report.timings["float"] = time.perf_counter() - t0
    if args.exact:
        if ls.cyclotomic is None:
            raise TorsionError("--exact needs a cyclotomic character")
        t0 = time.perf_counter()
        val = sp.nsimplify(turaev_torsion(cw, ls, euler, exact=True))
        report.value("torsion_exact", sp.simplify(val))
        diff = abs(complex(sp.N(val, 30)) - tau)
        report.check("float agrees with exact", diff < 1e-9 * max(1.0, abs(tau)), abs_err=diff)
        report.timings["exact"] = time.perf_counter() - t0
    if args.shift_cycle:
        from .morse_turaev import tree_spider

        h = args.shift_cycle
        base = euler if euler is not None else tree_spider(cw).euler_chain(cw)
        shifted = turaev_torsion(cw, ls, base.shifted(cw, h))
        pairing = pair_det_rep(cw, ls, h)
        report.value("shifted_torsion", shifted)
        report.value("det_pairing", pairing)
        err = abs(shifted - pairing * tau) / max(abs(shifted), 1e-300)
        tol = args.tol if args.tol is not None else 1e-10
        report.check("Euler structure shift rule", err < tol, rel_err=err, tol=tol)


def _closed_form_exact(system, s: complex):
    """Closed form as a sympy rational function of ``x = e^{-s}`` and its value."""
    x = sp.Symbol("x")
    t = abs(system.trace)
    sigma = system.trace_sign
    expr = (1 - t * x + x ** 2) / (1 - sigma * x) ** 2
    value = expr.subs(x, sp.exp(-(sp.nsimplify(s.real) + sp.I * sp.nsimplify(s.imag))))
    return expr, sp.N(value, 30)


def cmd_zeta(args, report: RunReport) -> None:
    from .zeta_orbits import (
        RepOnMappingTorus,
        SuspensionSystem,
        catalog_suspension,
        divisor_identity,
        zeta_exact_suspension,
        zeta_partial,
    )

    system = SuspensionSystem.from_entries(args.matrix)
    rep = io.load_torus_rep(report.add_input(args.rep), system) if args.rep else RepOnMappingTorus.trivial()
    report.formula = "product over primitive orbits of det(1 - rho(gamma) e^{-s l(gamma)}), l(gamma) <= lmax"
    lmax = int(args.lmax)
    t0 = time.perf_counter()
    catalog = catalog_suspension(system, lmax, resolve_classes=not rep.fiber_is_trivial, threads=args.threads)
    report.timings["catalog"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    value = zeta_partial(catalog, rep, args.s, lmax)
    report.timings["product"] = time.perf_counter() - t0
    report.value("partial_product", value)
    report.value("primitive_orbits", catalog.total_orbits())
    ident = divisor_identity(catalog)
    report.check("orbit count divisor identity", all(a == b for _, a, b in ident), periods=len(ident))
    if rep.fiber_is_trivial:
        closed = zeta_exact_suspension(system, rep.t, args.s)
        report.value("closed_form", closed)
        report.value("truncation_error", abs(value - closed))
        if args.exact and rep.dim == 1 and np.allclose(rep.t, 1):
            expr, exact_value = _closed_form_exact(system, args.s)
            report.value("closed_form_in_x", str(expr))
            report.value("closed_form_exact", str(exact_value))
            report.check("closed form agrees with exact", abs(complex(exact_value) - closed) < 1e-12)
    elif args.exact:
        raise TorsionError("--exact is available for the trivial representation only")


def cmd_dyn(args, report: RunReport) -> None:
    from .dyntorsion import cut_invariance_report

    spec = io.load_spectrum(report.add_input(args.spectrum), args.seed)
    report.formula = "(-1)^Q zeta^(lambda, inf)(0)^{(-1)^q} tau(C_[0, lambda], G)"
    t0 = time.perf_counter()
    rep = cut_invariance_report(spec, args.cuts)
    report.timings["cuts"] = time.perf_counter() - t0
    report.value("q", spec.q)
    report.value("resonances", [e.s0 for e in spec.entries])
    for res in rep.results:
        report.value(f"torsion[cut={res.cut:g}]", res.value)
    if args.report:
        for res in rep.results:
            report.value(f"factors[cut={res.cut:g}]", {"sign": res.sign, "zeta": res.zeta_factor,
                                                      "torsion": res.torsion_factor, "inside": list(res.inside)})
        report.value("moved", [{"from": a, "to": b, "factors": list(n)} for a, b, n in rep.moved])
    tol = args.tol if args.tol is not None else 1e-8
    report.check("cut invariance", rep.max_deviation < tol, rel_err=rep.max_deviation, tol=tol)


def cmd_verify_all(args, report: RunReport) -> None:
    from .verify import run_all

    report.formula = "property suites of every module"
    for res in run_all(args.seed, args.trials):
        report.timings[res.name] = res.seconds
        report.check(res.name, res.passed, **res.metrics)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--json", action="store_true", help="print the run report as JSON")
    p.add_argument("--seed", type=int, help="seed of the single random generator (default 0)")
    p.add_argument("--threads", type=int, help="worker threads for orbit enumeration (default 1)")
    p.add_argument("--tol", type=float, help="override the invariant tolerance")
    p.add_argument("--exact", action="store_true", help="also evaluate in exact arithmetic where available")
    return p


DEFAULTS = {"json": False, "seed": 0, "threads": 1, "tol": None, "exact": False}


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="torsion", parents=[common],
                                     description="Torsion invariants of complexes, CW spaces and flows.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complex", parents=[common], help="torsion of a complex.v1 file")
    p.add_argument("file")
    p.add_argument("--chirality", action="store_true", help="use the chirality stored in the file")
    p.add_argument("--signature", action="store_true", help="also evaluate the signature-operator formula")
    p.set_defaults(func=cmd_complex)

    p = sub.add_parser("contact", parents=[common], help="contact resonance models")
    csub = p.add_subparsers(dest="action", required=True)
    v = csub.add_parser("verify", parents=[common], help="check the torsion identity on random models")
    v.add_argument("--r", type=int, default=1)
    v.add_argument("--s0", type=parse_complex, default=complex(2.0))
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--w-dim", type=int, default=1)
    v.add_argument("--model", help="resonance_model.v1 file instead of random models")
    v.set_defaults(func=cmd_contact)

    p = sub.add_parser("turaev", parents=[common], help="Turaev torsion of a cw.v1 space with a rep.v1 system")
    p.add_argument("cw")
    p.add_argument("rep")
    p.add_argument("--euler", help="euler.v1 file (tree spider by default)")
    p.add_argument("--shift-cycle", type=parse_cycle, help="1-cycle h, e.g. 't:1'; checks the shift rule")
    p.set_defaults(func=cmd_turaev)

    p = sub.add_parser("zeta", parents=[common], help="twisted zeta of a cat-map suspension")
    zsub = p.add_subparsers(dest="action", required=True)
    z = zsub.add_parser("suspension", parents=[common])
    z.add_argument("--matrix", type=parse_ints, default=[2, 1, 1, 1])
    z.add_argument("--s", type=parse_complex, default=complex(2.0))
    z.add_argument("--lmax", type=int, default=18)
    z.add_argument("--rep", help="rep.v1 file for the mapping torus (trivial by default)")
    z.set_defaults(func=cmd_zeta)

    p = sub.add_parser("dyn", parents=[common], help="dynamical torsion with spectral cuts")
    p.add_argument("--spectrum", required=True)
    p.add_argument("--cuts", type=parse_floats, default=[0.3, 0.7])
    p.add_argument("--report", action="store_true", help="show the factor decomposition per cut")
    p.set_defaults(func=cmd_dyn)

    p = sub.add_parser("verify-all", parents=[common], help="run every property suite")
    p.add_argument("--trials", type=int, default=None, help="instances per randomized suite")
    p.set_defaults(func=cmd_verify_all)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    for k, v in DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    report = RunReport(command=argv, mode="serial" if args.threads <= 1 else f"parallel({args.threads})")
    try:
        args.func(args, report)
    except (TorsionError, OSError, KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        if args.json:
            print(json.dumps({"command": argv, "error": msg, "passed": False}))
        else:
            print(f"torsion: error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps(report.to_json(), indent=2) if args.json else report.render())
    return EXIT_OK if report.passed else EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
