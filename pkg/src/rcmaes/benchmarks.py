"""CEC-style benchmark generator: classic base functions composed with random
shifts, orthogonal rotations, hybrid variable partitions, and Gaussian-weighted
compositions.  Every instance has a known optimum (x* = shift, f* = bias > 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Bounds, ContractError, Objective


class ConfigurationError(ValueError):
    """Unknown base-function identifier."""


class SuiteParseError(ValueError):
    """Malformed suite file; message carries line diagnostics."""


# ---------------------------------------------------------------------------
# Base functions, all vectorized over row stacks z of shape (n, D), all with
# minimum value 0 at z = 0.

def _sphere(z):
    return (z**2).sum(axis=1)


def _elliptic(z):
    d = z.shape[1]
    expo = 6.0 * np.arange(d) / max(d - 1, 1)
    return (10.0**expo * z**2).sum(axis=1)


def _bent_cigar(z):
    return z[:, 0] ** 2 + 1e6 * (z[:, 1:] ** 2).sum(axis=1)


def _discus(z):
    return 1e6 * z[:, 0] ** 2 + (z[:, 1:] ** 2).sum(axis=1)


def _rosenbrock(z):
    w = z + 1.0  # canonical optimum at the all-ones point, moved to the origin
    a = w[:, :-1]
    b = w[:, 1:]
    return (100.0 * (a**2 - b) ** 2 + (a - 1.0) ** 2).sum(axis=1)


def _rastrigin(z):
    return (z**2 - 10.0 * np.cos(2.0 * np.pi * z) + 10.0).sum(axis=1)


def _ackley(z):
    d = z.shape[1]
    s1 = np.sqrt((z**2).sum(axis=1) / d)
    s2 = np.cos(2.0 * np.pi * z).sum(axis=1) / d
    return -20.0 * np.exp(-0.2 * s1) - np.exp(s2) + 20.0 + math.e


def _griewank(z):
    d = z.shape[1]
    idx = np.sqrt(np.arange(1, d + 1))
    return (z**2).sum(axis=1) / 4000.0 - np.cos(z / idx).prod(axis=1) + 1.0


def _schwefel(z):
    d = z.shape[1]
    zh = z + 4.209687462275036e2
    az = np.abs(zh)
    g = np.where(
        az <= 500.0,
        zh * np.sin(np.sqrt(az)),
        np.where(
            zh > 500.0,
            (500.0 - np.mod(zh, 500.0)) * np.sin(np.sqrt(np.abs(500.0 - np.mod(zh, 500.0))))
            - (zh - 500.0) ** 2 / (10000.0 * d),
            (np.mod(az, 500.0) - 500.0) * np.sin(np.sqrt(np.abs(np.mod(az, 500.0) - 500.0)))
            - (zh + 500.0) ** 2 / (10000.0 * d),
        ),
    )
    return 418.9828872724338 * d - g.sum(axis=1)


def _zakharov(z):
    d = z.shape[1]
    s1 = (z**2).sum(axis=1)
    s2 = (0.5 * np.arange(1, d + 1) * z).sum(axis=1)
    return s1 + s2**2 + s2**4


def _levy(z):
    w = 1.0 + z / 4.0
    head = np.sin(np.pi * w[:, 0]) ** 2
    mid = ((w[:, :-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:, :-1] + 1.0) ** 2)).sum(axis=1)
    tail = (w[:, -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[:, -1]) ** 2)
    return head + mid + tail


def _schaffer_pair(a, b):
    s = a**2 + b**2
    return 0.5 + (np.sin(np.sqrt(s)) ** 2 - 0.5) / (1.0 + 0.001 * s) ** 2


def _schaffer_f6(z):
    nxt = np.roll(z, -1, axis=1)
    return _schaffer_pair(z, nxt).sum(axis=1)


def _happycat(z):
    d = z.shape[1]
    w = z - 1.0
    s = (w**2).sum(axis=1)
    return np.abs(s - d) ** 0.25 + (0.5 * s + w.sum(axis=1)) / d + 0.5


def _hgbat(z):
    d = z.shape[1]
    w = z - 1.0
    s2 = (w**2).sum(axis=1)
    s1 = w.sum(axis=1)
    return np.abs(s2**2 - s1**2) ** 0.5 + (0.5 * s2 + s1) / d + 0.5


BASE_FUNCTIONS = {
    "sphere": _sphere,
    "elliptic": _elliptic,
    "bent_cigar": _bent_cigar,
    "discus": _discus,
    "rosenbrock": _rosenbrock,
    "rastrigin": _rastrigin,
    "ackley": _ackley,
    "griewank": _griewank,
    "schwefel": _schwefel,
    "zakharov": _zakharov,
    "levy": _levy,
    "schaffer_f6": _schaffer_f6,
    "happycat": _happycat,
    "hgbat": _hgbat,
}

# Input scaling applied after shift+rotation, matching the usual CEC shrink
# factors for [-100, 100] bounds.  The optimum identity is scale-independent.
BASE_SCALES = {
    "rosenbrock": 2.048 / 100.0,
    "rastrigin": 5.12 / 100.0,
    "griewank": 6.0 / 100.0,
    "schwefel": 10.0,
    "levy": 5.12 / 100.0,
    "happycat": 5.0 / 100.0,
    "hgbat": 5.0 / 100.0,
}

DEFAULT_LOWER = -100.0
DEFAULT_UPPER = 100.0


def base_scale(base_id: str) -> float:
    return BASE_SCALES.get(base_id, 1.0)


def eval_base(base_id: str, z: np.ndarray):
    """Evaluate a catalog base function at z (vector or row stack); min 0 at the origin."""
    if base_id not in BASE_FUNCTIONS:
        raise ConfigurationError(f"unknown base function {base_id!r}")
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        return float(BASE_FUNCTIONS[base_id](z[None, :])[0])
    return BASE_FUNCTIONS[base_id](z)


# ---------------------------------------------------------------------------
# Problem structure

@dataclass
class HybridSpec:
    parts: list                 # [(base_id, fraction), ...], fractions sum to 1
    permutation: np.ndarray     # coordinate shuffle applied before chunking

    def block_sizes(self, dim: int) -> list[int]:
        # largest-remainder allocation, each block at least one coordinate
        fracs = np.array([f for _, f in self.parts], dtype=float)
        sizes = np.maximum(np.floor(fracs * dim).astype(int), 1)
        while sizes.sum() > dim:
            sizes[int(np.argmax(sizes))] -= 1
        while sizes.sum() < dim:
            rema = fracs * dim - sizes
            sizes[int(np.argmax(rema))] += 1
        return [int(s) for s in sizes]


@dataclass
class CompositionComponent:
    base: str
    shift: np.ndarray
    rotation: np.ndarray
    sigma: float            # width of the Gaussian locality weight
    weight_bias: float      # additive handicap; 0 for the component holding the optimum


@dataclass
class ProblemSpec:
    base: str                       # base id, or "hybrid" / "composition"
    shift: np.ndarray
    rotation: np.ndarray
    bias: float
    structure: str = "simple"       # simple | hybrid | composition
    hybrid: Optional[HybridSpec] = None
    components: list = field(default_factory=list)


@dataclass
class ProblemInstance:
    """A realized bound-constrained objective with known optimum location and value."""

    spec: ProblemSpec
    bounds: Bounds
    name: str = ""

    def __post_init__(self) -> None:
        if not self.spec.bias > 0:
            raise ContractError("bias must be strictly positive")
        if not self.bounds.contains(self.spec.shift):
            raise ContractError("shift must lie inside the bounds")

    @property
    def dim(self) -> int:
        return self.bounds.dim

    @property
    def optimum_x(self) -> np.ndarray:
        return self.spec.shift

    @property
    def optimum_f(self) -> float:
        return self.spec.bias

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.evaluate_many(np.asarray(x, dtype=float)[None, :])[0])

    def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if xs.shape[1] != self.dim:
            raise ContractError(f"expected vectors of length {self.dim}")
        s = self.spec
        if s.structure == "simple":
            z = (xs - s.shift) @ s.rotation.T * base_scale(s.base)
            return s.bias + eval_base(s.base, z)
        if s.structure == "hybrid":
            return s.bias + self._hybrid_value(xs)
        return s.bias + self._composition_value(xs)

    def _hybrid_value(self, xs: np.ndarray) -> np.ndarray:
        s = self.spec
        z = (xs - s.shift) @ s.rotation.T
        z = z[:, s.hybrid.permutation]
        total = np.zeros(xs.shape[0])
        start = 0
        for (base_id, _), size in zip(s.hybrid.parts, s.hybrid.block_sizes(self.dim)):
            block = z[:, start:start + size] * base_scale(base_id)
            total += eval_base(base_id, block)
            start += size
        return total

    def _composition_value(self, xs: np.ndarray) -> np.ndarray:
        d = self.dim
        k = len(self.spec.components)
        gs = np.empty((k, xs.shape[0]))
        ws = np.empty((k, xs.shape[0]))
        d2 = np.empty((k, xs.shape[0]))
        for i, comp in enumerate(self.spec.components):
            diff = xs - comp.shift
            d2[i] = (diff**2).sum(axis=1)
            z = diff @ comp.rotation.T * base_scale(comp.base)
            gs[i] = eval_base(comp.base, z) + comp.weight_bias
            with np.errstate(divide="ignore"):
                ws[i] = np.exp(-d2[i] / (2.0 * d * comp.sigma**2)) / np.sqrt(d2[i])
        out = np.empty(xs.shape[0])
        for j in range(xs.shape[0]):
            col = ws[:, j]
            if np.any(d2[:, j] == 0.0):           # sitting exactly on a component optimum
                out[j] = gs[int(np.argmin(d2[:, j])), j]
            elif col.sum() == 0.0:                # all weights underflowed far from everything
                out[j] = gs[:, j].mean()
            else:
                out[j] = (col / col.sum()) @ gs[:, j]
        return out

    def as_objective(self) -> Objective:
        return Objective(fn=self.evaluate, bounds=self.bounds,
                         optimum_x=self.optimum_x, optimum_f=self.optimum_f,
                         batch_fn=self.evaluate_many, name=self.name)


# ---------------------------------------------------------------------------
# Suite generation

def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix from QR of a Gaussian matrix, sign-fixed for determinism."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def _random_shift(dim: int, bounds: Bounds, rng: np.random.Generator) -> np.ndarray:
    center = (bounds.lower + bounds.upper) / 2.0
    half = 0.4 * bounds.range  # uniform in the central 80% of the box
    return rng.uniform(center - half, center + half)


_SIMPLE_CYCLE = ["sphere", "elliptic", "rastrigin", "rosenbrock", "ackley", "bent_cigar",
                 "discus", "griewank", "schwefel", "zakharov", "levy", "schaffer_f6",
                 "happycat", "hgbat"]
_HYBRID_MENU = [("elliptic", "rastrigin", "zakharov"), ("bent_cigar", "griewank", "schaffer_f6"),
                ("discus", "levy", "happycat")]
_COMPOSITION_MENU = [("rastrigin", "griewank", "sphere"), ("ackley", "elliptic", "schwefel"),
                     ("rosenbrock", "hgbat", "rastrigin")]


def generate_suite(seed: int, dim: int, count: int,
                   lower: float = DEFAULT_LOWER, upper: float = DEFAULT_UPPER) -> list[ProblemInstance]:
    """Deterministic mix of simple, hybrid, and composition problems.

    Biases follow the 100 * (index + 1) convention; shifts fall in the central
    80% of the box; all rotations come from seeded QR orthogonalization.
    """
    if count < 1:
        raise ContractError("count must be >= 1")
    if dim < 2:
        raise ContractError("suite dimensions start at 2")
    rng = np.random.default_rng(seed)
    bounds = Bounds(np.full(dim, lower), np.full(dim, upper))
    suite = []
    for i in range(count):
        bias = 100.0 * (i + 1)
        shift = _random_shift(dim, bounds, rng)
        rotation = random_rotation(dim, rng)
        kind = i % 4
        if kind == 2 and dim >= 3:
            bases = _HYBRID_MENU[(i // 4) % len(_HYBRID_MENU)]
            fractions = (0.3, 0.3, 0.4)
            hybrid = HybridSpec(parts=list(zip(bases, fractions)),
                                permutation=rng.permutation(dim))
            spec = ProblemSpec(base="hybrid", shift=shift, rotation=rotation, bias=bias,
                               structure="hybrid", hybrid=hybrid)
            tag = "hybrid"
        elif kind == 3:
            bases = _COMPOSITION_MENU[(i // 4) % len(_COMPOSITION_MENU)]
            comps = [CompositionComponent(base=bases[0], shift=shift, rotation=rotation,
                                          sigma=10.0, weight_bias=0.0)]
            for j, b in enumerate(bases[1:], start=1):
                comps.append(CompositionComponent(
                    base=b, shift=_random_shift(dim, bounds, rng),
                    rotation=random_rotation(dim, rng),
                    sigma=10.0 * (j + 1), weight_bias=100.0 * j))
            spec = ProblemSpec(base="composition", shift=shift, rotation=rotation, bias=bias,
                               structure="composition", components=comps)
            tag = "composition"
        else:
            base = _SIMPLE_CYCLE[(2 * (i // 4) + kind) % len(_SIMPLE_CYCLE)]
            spec = ProblemSpec(base=base, shift=shift, rotation=rotation, bias=bias)
            tag = base
        suite.append(ProblemInstance(spec=spec, bounds=bounds, name=f"f{i + 1:02d}_{tag}"))
    return suite


# ---------------------------------------------------------------------------
# Suite file format (.suite): whitespace-separated text, 17 significant digits.
# Per problem: a header line "base dim bias structure", the shift row, dim
# rotation rows, then structure-specific extras.

def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _fmt_row(row: np.ndarray) -> str:
    return " ".join(_fmt(v) for v in row)


def save_suite(path, suite: list[ProblemInstance]) -> None:
    lines = []
    b = suite[0].bounds
    lines.append(f"suite {len(suite)} {_fmt(b.lower[0])} {_fmt(b.upper[0])}")
    for inst in suite:
        s = inst.spec
        lines.append(f"{s.base} {inst.dim} {_fmt(s.bias)} {s.structure}")
        lines.append(_fmt_row(s.shift))
        for row in s.rotation:
            lines.append(_fmt_row(row))
        if s.structure == "hybrid":
            lines.append(f"parts {len(s.hybrid.parts)}")
            for base_id, frac in s.hybrid.parts:
                lines.append(f"{base_id} {_fmt(frac)}")
            lines.append(" ".join(str(p) for p in s.hybrid.permutation))
        elif s.structure == "composition":
            lines.append(f"components {len(s.components)}")
            for comp in s.components:
                lines.append(f"{comp.base} {_fmt(comp.sigma)} {_fmt(comp.weight_bias)}")
                lines.append(_fmt_row(comp.shift))
                for row in comp.rotation:
                    lines.append(_fmt_row(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class _LineReader:
    def __init__(self, path):
        with open(path) as fh:
            self.lines = fh.read().splitlines()
        self.pos = 0

    def next(self, what: str) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        raise SuiteParseError(f"unexpected end of file while reading {what} (line {self.pos})")

    def next_floats(self, n: int, what: str) -> np.ndarray:
        line = self.next(what)
        parts = line.split()
        if len(parts) != n:
            raise SuiteParseError(f"{what}: expected {n} values, got {len(parts)} (line {self.pos})")
        try:
            return np.array([float(p) for p in parts])
        except ValueError as exc:
            raise SuiteParseError(f"{what}: {exc} (line {self.pos})") from None


def load_suite(path) -> list[ProblemInstance]:
    rd = _LineReader(path)
    head = rd.next("suite header").split()
    if len(head) != 4 or head[0] != "suite":
        raise SuiteParseError("missing 'suite <count> <lower> <upper>' header (line 1)")
    try:
        count = int(head[1])
        lo, hi = float(head[2]), float(head[3])
    except ValueError as exc:
        raise SuiteParseError(f"suite header: {exc}") from None

    suite = []
    for i in range(count):
        head = rd.next("problem header").split()
        if len(head) != 4:
            raise SuiteParseError(f"problem header needs 4 fields, got {len(head)} (line {rd.pos})")
        base, structure = head[0], head[3]
        try:
            dim = int(head[1])
            bias = float(head[2])
        except ValueError as exc:
            raise SuiteParseError(f"problem header: {exc} (line {rd.pos})") from None
        if structure not in ("simple", "hybrid", "composition"):
            raise SuiteParseError(f"unknown structure {structure!r} (line {rd.pos})")
        if structure == "simple" and base not in BASE_FUNCTIONS:
            raise SuiteParseError(f"unknown base {base!r} (line {rd.pos})")
        shift = rd.next_floats(dim, "shift row")
        rotation = np.vstack([rd.next_floats(dim, f"rotation row {r + 1}") for r in range(dim)])
        hybrid = None
        components = []
        tag = base
        if structure == "hybrid":
            head = rd.next("parts header").split()
            if len(head) != 2 or head[0] != "parts":
                raise SuiteParseError(f"expected 'parts <k>' (line {rd.pos})")
            parts = []
            for _ in range(int(head[1])):
                fields = rd.next("hybrid part").split()
                if len(fields) != 2 or fields[0] not in BASE_FUNCTIONS:
                    raise SuiteParseError(f"bad hybrid part line (line {rd.pos})")
                parts.append((fields[0], float(fields[1])))
            perm = np.array([int(p) for p in rd.next("permutation").split()])
            if sorted(perm.tolist()) != list(range(dim)):
                raise SuiteParseError(f"permutation must cover 0..{dim - 1} once (line {rd.pos})")
            hybrid = HybridSpec(parts=parts, permutation=perm)
            tag = "hybrid"
        elif structure == "composition":
            head = rd.next("components header").split()
            if len(head) != 2 or head[0] != "components":
                raise SuiteParseError(f"expected 'components <k>' (line {rd.pos})")
            for _ in range(int(head[1])):
                fields = rd.next("component header").split()
                if len(fields) != 3 or fields[0] not in BASE_FUNCTIONS:
                    raise SuiteParseError(f"bad component header (line {rd.pos})")
                cshift = rd.next_floats(dim, "component shift")
                crot = np.vstack([rd.next_floats(dim, f"component rotation row {r + 1}") for r in range(dim)])
                components.append(CompositionComponent(
                    base=fields[0], shift=cshift, rotation=crot,
                    sigma=float(fields[1]), weight_bias=float(fields[2])))
            tag = "composition"
        spec = ProblemSpec(base=base, shift=shift, rotation=rotation, bias=bias,
                           structure=structure, hybrid=hybrid, components=components)
        bounds = Bounds(np.full(dim, lo), np.full(dim, hi))
        suite.append(ProblemInstance(spec=spec, bounds=bounds, name=f"f{i + 1:02d}_{tag}"))
    return suite
