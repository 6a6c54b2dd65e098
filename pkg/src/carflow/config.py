"""Experiment configuration: a versioned JSON document.

Example::

    {
      "schema_version": 1,
      "name": "halfplane",
      "cone": {"dimension": 2, "generators": [[1, 0], [0, 1]]},
      "module": {"form": "halfspace", "normals": [[1, 1]], "offsets": [0]},
      "window": {"lower": [-1, -1], "upper": [2, 1]},
      "search_box": {"lower": [-5, -5], "upper": [5, 5]},
      "tolerance": 1e-10,
      "fock_cap": 4096,
      "seed": 20240601,
      "suite": ["car_relations", "symmetry_classification"]
    }

Lattice data must be integers.  Optional keys: ``verification_window`` (for
the symmetry search; defaults to the search box), ``fiber_window`` (random
product-system elements; defaults to ``window``), ``shifts`` (cone elements
to test; defaults to all cone elements with ``|x|_1 <= 3``) and ``samples``.
"""
import json
from dataclasses import dataclass
from typing import Optional

from carflow.errors import CarflowError
from carflow.lattice import ConeSpec, HalfspaceModule, TranslateModule, Window

SCHEMA_VERSION = 1
MAX_FOCK_CAP = 1 << 14

ALL_CHECKS = (
    "car_relations",
    "second_quantization",
    "functoriality",
    "kernel_decomposition",
    "fiber_isometry",
    "multiplicativity_sign_table",
    "product_laws",
    "phi_antihomomorphism",
    "defining_relation",
    "semigroup",
    "intertwiner_table",
    "symmetry_classification",
    "symmetry_witness",
)


class ConfigError(CarflowError):
    def __init__(self, message, path=None, line=None, column=None):
        self.message = message
        self.path = path
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}, column {column}")
        if path:
            where.append(path)
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class ExperimentConfig:
    cone: ConeSpec
    module_form: str
    module_data: dict
    window: Window
    search_box: Window
    verification_window: Optional[Window] = None
    fiber_window: Optional[Window] = None
    shifts: Optional[tuple] = None
    tolerance: float = 1e-10
    fock_cap: int = 1 << 12
    seed: int = 0
    samples: int = 20
    suite: tuple = ALL_CHECKS
    name: str = ""

    @property
    def dimension(self):
        return self.cone.dimension

    @property
    def max_modes(self):
        return self.fock_cap.bit_length() - 1

    def module(self):
        if self.module_form == "halfspace":
            return HalfspaceModule(self.module_data["normals"], self.module_data["offsets"])
        return TranslateModule(self.cone, self.module_data["points"])

    def cone_shifts(self):
        if self.shifts is not None:
            return list(self.shifts)
        return [x for x in self.cone.elements(3) if any(x) and sum(map(abs, x)) <= 3]

    def to_dict(self):
        def box(w):
            return None if w is None else {"lower": list(w.lower), "upper": list(w.upper)}

        out = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "cone": {"dimension": self.dimension,
                     "generators": [list(g) for g in self.cone.generators]},
            "module": {"form": self.module_form,
                       **{k: [list(v) if isinstance(v, tuple) else v for v in vals]
                          for k, vals in self.module_data.items()}},
            "window": box(self.window),
            "search_box": box(self.search_box),
            "tolerance": self.tolerance,
            "fock_cap": self.fock_cap,
            "seed": self.seed,
            "samples": self.samples,
            "suite": list(self.suite),
        }
        if self.verification_window is not None:
            out["verification_window"] = box(self.verification_window)
        if self.fiber_window is not None:
            out["fiber_window"] = box(self.fiber_window)
        if self.shifts is not None:
            out["shifts"] = [list(x) for x in self.shifts]
        return out


def _int_vector(value, path, dim=None):
    if not isinstance(value, list) or not all(
            isinstance(c, int) and not isinstance(c, bool) for c in value):
        raise ConfigError("expected a list of integers", path)
    if dim is not None and len(value) != dim:
        raise ConfigError(f"expected {dim} coordinates, got {len(value)}", path)
    return tuple(value)


def _box(doc, key, dim, required=True):
    if key not in doc:
        if required:
            raise ConfigError("missing key", key)
        return None
    spec = doc[key]
    if not isinstance(spec, dict) or set(spec) != {"lower", "upper"}:
        raise ConfigError("expected an object with 'lower' and 'upper'", key)
    lo = _int_vector(spec["lower"], f"{key}.lower", dim)
    hi = _int_vector(spec["upper"], f"{key}.upper", dim)
    if any(a > b for a, b in zip(lo, hi)):
        raise ConfigError("window corners inverted", key)
    try:
        return Window(lo, hi)
    except CarflowError as exc:
        raise ConfigError(str(exc), key) from exc


def parse_config(text):
    """Parse and validate a JSON configuration."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {version}", "schema_version")
    known = {"schema_version", "name", "cone", "module", "window", "search_box",
             "verification_window", "fiber_window", "shifts", "tolerance", "fock_cap",
             "seed", "samples", "suite"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown keys {unknown}")

    cone_doc = doc.get("cone")
    if not isinstance(cone_doc, dict) or "generators" not in cone_doc:
        raise ConfigError("expected an object with 'generators'", "cone")
    gens = cone_doc["generators"]
    if not isinstance(gens, list) or not gens:
        raise ConfigError("expected a non-empty list", "cone.generators")
    dim = cone_doc.get("dimension", len(gens[0]) if isinstance(gens[0], list) else None)
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError("dimension must be a positive integer", "cone.dimension")
    gens = [_int_vector(g, f"cone.generators[{i}]", dim) for i, g in enumerate(gens)]
    try:
        cone = ConeSpec(tuple(gens))
    except (CarflowError, ValueError) as exc:
        raise ConfigError(str(exc), "cone") from exc

    mod = doc.get("module")
    if not isinstance(mod, dict) or "form" not in mod:
        raise ConfigError("expected an object with 'form'", "module")
    form = mod["form"]
    if form == "halfspace":
        if set(mod) != {"form", "normals", "offsets"}:
            raise ConfigError("halfspace form takes 'normals' and 'offsets'", "module")
        normals = [_int_vector(n, f"module.normals[{i}]", dim)
                   for i, n in enumerate(mod["normals"])]
        offsets = mod["offsets"]
        if (not isinstance(offsets, list) or len(offsets) != len(normals)
                or not all(isinstance(c, int) for c in offsets)):
            raise ConfigError("one integer offset per normal", "module.offsets")
        if not normals:
            raise ConfigError("at least one constraint required", "module.normals")
        data = {"normals": tuple(normals), "offsets": tuple(offsets)}
        probe = HalfspaceModule(data["normals"], data["offsets"])
        bad = probe.dual_cone_violations(cone)
        if bad:
            n, g = bad[0]
            i = normals.index(n)
            raise ConfigError(
                f"normal {list(n)} is not in the dual cone: <n, g> < 0 for generator {list(g)}",
                f"module.normals[{i}]")
    elif form == "translates":
        if set(mod) != {"form", "points"}:
            raise ConfigError("translates form takes 'points'", "module")
        if not isinstance(mod["points"], list) or not mod["points"]:
            raise ConfigError("expected a non-empty list", "module.points")
        data = {"points": tuple(_int_vector(p, f"module.points[{i}]", dim)
                                for i, p in enumerate(mod["points"]))}
    else:
        raise ConfigError(f"unknown module form {form!r}", "module.form")

    window = _box(doc, "window", dim)
    search_box = _box(doc, "search_box", dim)
    verification = _box(doc, "verification_window", dim, required=False)
    fiber_window = _box(doc, "fiber_window", dim, required=False)

    shifts = doc.get("shifts")
    if shifts is not None:
        if not isinstance(shifts, list):
            raise ConfigError("expected a list", "shifts")
        shifts = tuple(_int_vector(x, f"shifts[{i}]", dim) for i, x in enumerate(shifts))
        for i, x in enumerate(shifts):
            if not cone.contains(x):
                raise ConfigError(f"{list(x)} is not in the cone", f"shifts[{i}]")

    tol = doc.get("tolerance", 1e-10)
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or not tol > 0:
        raise ConfigError("tolerance must be a positive number", "tolerance")
    cap = doc.get("fock_cap", 1 << 12)
    if not isinstance(cap, int) or cap < 1:
        raise ConfigError("fock_cap must be a positive integer", "fock_cap")
    if cap > MAX_FOCK_CAP:
        raise ConfigError("cap exceeds 2^14", "fock_cap")
    if cap & (cap - 1):
        raise ConfigError("fock_cap must be a power of two", "fock_cap")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 1 << 64:
        raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
    samples = doc.get("samples", 20)
    if not isinstance(samples, int) or samples < 1:
        raise ConfigError("samples must be a positive integer", "samples")
    suite = doc.get("suite", list(ALL_CHECKS))
    if not isinstance(suite, list):
        raise ConfigError("expected a list of check names", "suite")
    for i, name in enumerate(suite):
        if name not in ALL_CHECKS:
            raise ConfigError(f"unknown check {name!r}", f"suite[{i}]")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ConfigError("expected a string", "name")

    return ExperimentConfig(
        cone=cone, module_form=form, module_data=data, window=window,
        search_box=search_box, verification_window=verification,
        fiber_window=fiber_window, shifts=shifts, tolerance=float(tol),
        fock_cap=cap, seed=seed, samples=samples, suite=tuple(suite), name=name,
    )


def bundled_names():
    from importlib import resources
    return sorted(p.name[:-5] for p in resources.files("carflow.fixtures").iterdir()
                  if p.name.endswith(".json"))


def bundled_text(name):
    from importlib import resources
    name = name[:-5] if name.endswith(".json") else name
    return (resources.files("carflow.fixtures") / f"{name}.json").read_text()


def load_config(path_or_name):
    """Read a config file; bare names resolve to the bundled fixtures."""
    from pathlib import Path
    path = Path(path_or_name)
    if path.exists():
        return parse_config(path.read_text(encoding="utf-8"))
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    if stem in bundled_names():
        return parse_config(bundled_text(stem))
    raise ConfigError(f"no such config file: {path_or_name}")
