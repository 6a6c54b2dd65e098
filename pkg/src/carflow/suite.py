"""Named checks, the suite runner and report emission."""
import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from carflow import __version__
from carflow.config import ALL_CHECKS
from carflow.errors import CapExceeded, CarflowError
from carflow.flow import (
    defining_relation_check,
    flow_context,
    intertwiner_check,
    semigroup_check,
    source_validity,
    supported_modes,
    symmetry_witness,
)
from carflow.fock import (
    annihilation,
    anticommutator,
    creation,
    FockOperator,
    second_quantization,
)
from carflow.lattice import (
    add,
    kernel_decomposition_check,
    kernel_dimension_profile,
    opposite_module,
    symmetry_check,
)
from carflow.oracles import random_isometry, second_quantization_dense
from carflow.product import (
    GRADED,
    LITERAL,
    TWISTED,
    Fiber,
    ShiftSystem,
    aligned,
    distance,
    fiber,
    forward_product,
    inner,
    left_embedding,
    multiplicativity_check,
    opposite_product,
    phi_antihomomorphism_check,
    phi_map,
    random_element,
    reflect_element,
)
from carflow.rng import SplitMix64

REPORT_SCHEMA = 1
PARITY_NAMES = {0: "even", 1: "odd"}


@dataclass
class Record:
    name: str
    verdict: str
    residual: Optional[float] = None
    witness: Optional[list] = None
    sign_table: Optional[dict] = None
    details: dict = field(default_factory=dict)
    inputs: str = ""
    elapsed_ms: Optional[float] = None

    @property
    def passed(self):
        return self.verdict in ("pass", "skipped")

    def to_dict(self):
        return {
            "name": self.name,
            "verdict": self.verdict,
            "residual": self.residual,
            "witness": self.witness,
            "sign_table": self.sign_table,
            "details": self.details,
            "inputs": self.inputs,
            "elapsed_ms": self.elapsed_ms,
        }


@dataclass
class Report:
    config: dict
    records: list
    version: str = __version__

    @property
    def verdict(self):
        if not self.records:
            return "vacuous pass"
        return "pass" if all(r.passed for r in self.records) else "fail"

    @property
    def exit_code(self):
        if any(r.verdict == "error" and r.details.get("error_type") == "CapExceeded"
               for r in self.records):
            return 3
        return 0 if self.verdict != "fail" else 1

    def to_dict(self):
        return {
            "schema_version": REPORT_SCHEMA,
            "version": self.version,
            "config": self.config,
            "records": [r.to_dict() for r in self.records],
            "verdict": self.verdict,
        }

    @classmethod
    def from_dict(cls, doc):
        records = [Record(**{k: v for k, v in r.items()}) for r in doc["records"]]
        return cls(config=doc["config"], records=records, version=doc["version"])


def _digest(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _verdict(ok):
    return "pass" if ok else "fail"


class Suite:
    """All state shared by the checks of one configuration."""

    def __init__(self, config):
        self.config = config
        self.module = config.module()
        self.cone = config.cone
        self.tol = config.tolerance
        self.shifts = config.cone_shifts()
        self.generators = list(config.cone.generators)
        self.fiber_window = config.fiber_window or config.window
        self._ctx = None

    @property
    def ctx(self):
        if self._ctx is None:
            self._ctx = flow_context(self.module, self.cone, self.config.window,
                                     self.config.max_modes)
        return self._ctx

    def rng(self, name):
        return SplitMix64(self.config.seed).spawn(name)

    def fiber(self, x):
        return fiber(self.module, x, self.fiber_window)

    def core_fiber(self, y, x):
        """Windowed kernel points of ``y`` that stay inside the flow window after ``+x``."""
        modes = set(self.ctx.modes)
        pts = [p for p in fiber(self.module, y, self.config.window).points
               if add(p, x) in modes]
        return Fiber(ShiftSystem(self.module, 1), y, tuple(pts))

    # checks ---------------------------------------------------------------

    def car_relations(self):
        rng = self.rng("car_relations")
        worst = 0.0
        for k in range(self.config.samples):
            n = 2 + k % 9
            f = np.array(rng.complex_vector(n))
            g = np.array(rng.complex_vector(n))
            a_f, a_g = annihilation(f), annihilation(g)
            mixed = anticommutator(a_f, a_g.adjoint()) - np.vdot(f, g) * FockOperator.identity(n)
            worst = max(worst, mixed.norm(), anticommutator(a_f, a_g).norm())
        return Record("car_relations", _verdict(worst <= self.tol), residual=worst,
                      details={"pairs": self.config.samples, "modes": "2..10"})

    def second_quantization(self):
        rng = self.rng("second_quantization")
        worst = 0.0
        shapes = [(m, n) for m in range(1, 9) for n in range(0, min(m, 5) + 1)]
        for k in range(self.config.samples):
            m, n = shapes[(7 * k) % len(shapes)]
            w = random_isometry(m, n, rng)
            diff = second_quantization(w).toarray() - second_quantization_dense(w)
            worst = max(worst, float(np.abs(diff).max()))
        return Record("second_quantization", _verdict(worst <= self.tol), residual=worst,
                      details={"isometries": self.config.samples, "max_shape": [8, 5]})

    def functoriality(self):
        rng = self.rng("functoriality")
        worst = 0.0
        for k in range(self.config.samples):
            n = 1 + k % 3
            mid = n + k % 2
            m = mid + 1 + k % 2
            w2 = random_isometry(mid, n, rng)
            w1 = random_isometry(m, mid, rng)
            diff = second_quantization(w1 @ w2) - second_quantization(w1) @ second_quantization(w2)
            worst = max(worst, diff.norm())
        return Record("functoriality", _verdict(worst <= self.tol), residual=worst,
                      details={"pairs": self.config.samples})

    def kernel_decomposition(self):
        failures = []
        checked = 0
        for x in self.shifts:
            for y in self.shifts:
                rep = kernel_decomposition_check(self.module, x, y, self.config.window)
                checked += 1
                if not rep.passed:
                    failures.append({"x": list(x), "y": list(y),
                                     "missing": len(rep.missing), "extra": len(rep.extra),
                                     "overlap": len(rep.overlap)})
        return Record("kernel_decomposition", _verdict(not failures),
                      residual=float(len(failures)),
                      details={"pairs": checked, "failures": failures})

    def fiber_isometry(self):
        rng = self.rng("fiber_isometry")
        modes = self.ctx.modes
        worst = 0.0
        tested = 0
        for x in self.shifts:
            fib = fiber(self.module, x, self.config.window)
            if fib.n_modes == 0 or fib.n_modes > 6:
                continue
            q = source_validity(self.ctx, x)
            for conv in (LITERAL, TWISTED):
                for p in (0, 1):
                    e1 = random_element(fib, rng, p)
                    e2 = random_element(fib, rng, p)
                    t1 = left_embedding(e1, modes, conv)
                    t2 = left_embedding(e2, modes, conv)
                    # <f, g> is conjugate-linear in f: T_g* T_f = <g, f> Q
                    diff = t2.adjoint() @ t1 - inner(e2, e1) * q
                    worst = max(worst, diff.norm())
                    tested += 1
        return Record("fiber_isometry", _verdict(worst <= self.tol), residual=worst,
                      details={"pairs": tested, "identity": "T_g* T_f = <g, f> Q_valid"})

    def _pair_shifts(self):
        fibs = [x for x in self.generators if fiber(self.module, x, self.config.window).n_modes]
        return fibs[0] if fibs else None

    def multiplicativity_sign_table(self):
        rng = self.rng("multiplicativity_sign_table")
        x = self._pair_shifts()
        if x is None:
            return Record("multiplicativity_sign_table", "skipped",
                          details={"reason": "no generator with a non-empty windowed kernel"})
        f1 = self.core_fiber(x, x)
        f0 = fiber(self.module, x, self.config.window)
        table = {}
        worst = 0.0
        for conv in (LITERAL, TWISTED):
            table[conv] = {}
            for p1 in (0, 1):
                for p2 in (0, 1):
                    signs = set()
                    for _ in range(3):
                        e1 = random_element(f0, rng, p1)
                        e2 = random_element(f1, rng, p2) if f1.n_modes else None
                        if e2 is None:
                            signs.add(None)
                            continue
                        rep = multiplicativity_check(e1, e2, self.ctx.modes, conv, self.tol)
                        signs.add(rep.sign)
                        worst = max(worst, min(rep.residual_plus, rep.residual_minus))
                    key = f"{PARITY_NAMES[p1]},{PARITY_NAMES[p2]}"
                    table[conv][key] = signs.pop() if len(signs) == 1 else None
        ok = all(v is not None for t in table.values() for v in t.values())
        ok &= all(t[k] == 1 for t in table.values() for k in t if k.startswith("even"))
        return Record("multiplicativity_sign_table", _verdict(ok), residual=worst,
                      sign_table=table, details={"x": list(x), "y": list(x)})

    def product_laws(self):
        rng = self.rng("product_laws")
        gens = self.generators
        fibs = {x: self.fiber(x) for x in gens}
        worst_assoc = worst_norm = 0.0
        for _ in range(self.config.samples):
            xs = [rng.choice(gens) for _ in range(3)]
            e1, e2, e3 = (random_element(fibs[x], rng) for x in xs)
            for prod in (forward_product, opposite_product):
                left = prod(prod(e1, e2), e3)
                right = prod(e1, prod(e2, e3))
                worst_assoc = max(worst_assoc, distance(left, right))
                worst_norm = max(worst_norm, abs(prod(e1, e2).norm() - e1.norm() * e2.norm()))
        worst = max(worst_assoc, worst_norm)
        return Record("product_laws", _verdict(worst <= self.tol), residual=worst,
                      details={"triples": self.config.samples,
                               "associativity": worst_assoc, "norm": worst_norm})

    def phi_antihomomorphism(self):
        rng = self.rng("phi_antihomomorphism")
        gens = self.generators
        fibs = {x: self.fiber(x) for x in gens}
        b = opposite_module(self.module)
        graded = unitarity = reflected = 0.0
        for _ in range(self.config.samples):
            x, y = rng.choice(gens), rng.choice(gens)
            e1, e2 = random_element(fibs[x], rng), random_element(fibs[y], rng)
            graded = max(graded, phi_antihomomorphism_check(e1, e2, GRADED))
            for e in (e1, e2):
                unitarity = max(unitarity, abs(phi_map(e, LITERAL).norm() - e.norm()),
                                abs(phi_map(e, GRADED).norm() - e.norm()))

            def chi(e):
                return reflect_element(phi_map(e, GRADED), b)

            lhs = chi(forward_product(e1, e2))
            rhs = forward_product(chi(e2), chi(e1))
            reflected = max(reflected, distance(lhs, rhs))
        table = {}
        for p1 in (0, 1):
            for p2 in (0, 1):
                x = gens[0]
                if fibs[x].n_modes == 0 and 1 in (p1, p2):
                    table[f"{PARITY_NAMES[p1]},{PARITY_NAMES[p2]}"] = None
                    continue
                e1 = random_element(fibs[x], rng, p1)
                e2 = random_element(fibs[x], rng, p2)
                lhs = phi_map(forward_product(e1, e2), LITERAL)
                rhs = forward_product(phi_map(e2, LITERAL), phi_map(e1, LITERAL))
                a, c = aligned(lhs, rhs)
                key = f"{PARITY_NAMES[p1]},{PARITY_NAMES[p2]}"
                if (a.vector - c.vector).norm() <= self.tol:
                    table[key] = 1
                elif (a.vector + c.vector).norm() <= self.tol:
                    table[key] = -1
                else:
                    table[key] = None
        worst = max(graded, unitarity, reflected)
        return Record("phi_antihomomorphism", _verdict(worst <= self.tol), residual=worst,
                      sign_table={"literal": table},
                      details={"pairs": self.config.samples, "graded": graded,
                               "unitarity": unitarity, "reflected_composite": reflected})

    def defining_relation(self):
        rng = self.rng("defining_relation")
        worst = 0.0
        tested = []
        for x in self.shifts:
            support = supported_modes(self.ctx, x)
            if not support:
                continue
            f = np.zeros(self.ctx.n_modes, dtype=complex)
            f[support] = rng.complex_vector(len(support))
            worst = max(worst, defining_relation_check(self.ctx, x, f))
            tested.append(list(x))
        return Record("defining_relation", _verdict(worst <= self.tol), residual=worst,
                      details={"shifts": tested})

    def semigroup(self):
        tol = 10 * self.tol
        worst = 0.0
        pairs = []
        for x in self.shifts:
            for y in self.shifts:
                if sum(map(abs, x)) + sum(map(abs, y)) > 3:
                    continue
                worst = max(worst, semigroup_check(self.ctx, x, y))
                pairs.append([list(x), list(y)])
        return Record("semigroup", _verdict(worst <= tol), residual=worst,
                      details={"pairs": pairs, "tolerance": tol})

    def intertwiner_table(self):
        rng = self.rng("intertwiner_table")
        x = self._pair_shifts()
        if x is None:
            return Record("intertwiner_table", "skipped",
                          details={"reason": "no generator with a non-empty windowed kernel"})
        fib = fiber(self.module, x, self.config.window)
        table = {}
        for conv in (LITERAL, TWISTED):
            table[conv] = {}
            for p in (0, 1):
                e = random_element(fib, rng, p)
                t = left_embedding(e, self.ctx.modes, conv)
                rows = intertwiner_check(self.ctx, x, t)
                table[conv][PARITY_NAMES[p]] = max((r for _, r in rows), default=0.0)
        worst = max(table[TWISTED].values())
        ok = worst <= self.tol and table[LITERAL]["even"] <= self.tol
        return Record("intertwiner_table", _verdict(ok), residual=worst,
                      sign_table={c: {k: v <= self.tol for k, v in t.items()}
                                  for c, t in table.items()},
                      details={"x": list(x), "residuals": table})

    def symmetry_classification(self):
        window = self.config.verification_window or self.config.search_box
        result = symmetry_check(self.module, self.config.search_box, window)
        self._witness = result.witness
        profile = kernel_dimension_profile(self.module, self.generators, self.config.window)
        return Record("symmetry_classification", "pass",
                      witness=None if result.witness is None else list(result.witness),
                      details={"classification": result.verdict, "kernel_profile": profile})

    def symmetry_witness(self):
        if not hasattr(self, "_witness"):
            window = self.config.verification_window or self.config.search_box
            self._witness = symmetry_check(self.module, self.config.search_box, window).witness
        if self._witness is None:
            return Record("symmetry_witness", "skipped",
                          details={"reason": "no witness in box"})
        window = self.config.verification_window or self.config.search_box
        res = symmetry_witness(self.module, self.cone, self._witness, window,
                               self.rng("symmetry_witness"), pairs=self.config.samples,
                               shifts=self.generators, fiber_window=self.fiber_window)
        return Record("symmetry_witness", _verdict(res.residual <= self.tol),
                      residual=res.residual, witness=list(res.z),
                      details={"pairs": res.pairs, "literal_residual": res.literal_residual})


def run_suite(config, timings=False):
    """Run the selected checks in declaration order."""
    suite = Suite(config)
    selected = [name for name in ALL_CHECKS if name in config.suite]
    records = []
    for name in selected:
        start = time.perf_counter()
        try:
            rec = getattr(suite, name)()
        except CarflowError as exc:
            rec = Record(name, "error",
                         details={"error": str(exc), "error_type": type(exc).__name__})
        if timings:
            rec.elapsed_ms = round(1000 * (time.perf_counter() - start), 3)
        rec.inputs = _digest({"seed": config.seed, "check": name,
                              "config": config.to_dict()})
        records.append(rec)
    return Report(config=config.to_dict(), records=records)


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def _sign(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "ok" if v else "FAIL"
    return f"{v:+d}"


def emit_report(report, fmt="json"):
    if fmt == "json":
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"carflow {report.version}  config: {report.config.get('name') or '-'}",
             f"{'check':<30} {'verdict':<8} {'residual':>10}  witness"]
    for r in report.records:
        lines.append(f"{r.name:<30} {r.verdict:<8} {_fmt(r.residual):>10}  {_fmt(r.witness)}")
    for r in report.records:
        if r.sign_table:
            lines.append("")
            lines.append(f"{r.name} sign table")
            for conv, table in r.sign_table.items():
                cells = "  ".join(f"{k}: {_sign(v)}" for k, v in table.items())
                lines.append(f"  {conv:<8} {cells}")
    lines.append("")
    lines.append(f"overall: {report.verdict}")
    return ("\n".join(lines) + "\n").encode()
