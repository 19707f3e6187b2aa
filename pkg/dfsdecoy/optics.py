"""
Exact sparse Fock-state simulation of the photon-number-splitting attack on two-pair emissions.

States are sparse maps from (occupation pattern, ancilla label) to complex amplitudes. The attack splits both
spatial modes on a beam splitter, post-selects one photon per split mode and then applies two isometries, each
followed by a projection of Eve's ancilla register.
"""
import collections
import dataclasses
import enum
import itertools
import logging
import math
from typing import Iterable, Mapping, Sequence, TypeAlias

import numpy as np

logger = logging.getLogger(__name__)

PRUNE_EPSILON: float = 1e-14
ISOMETRY_TOLERANCE: float = 1e-12

SPATIAL_MODES: tuple[str, ...] = ("a", "b", "a1", "a2", "b1", "b2")
POLARIZATIONS: tuple[str, ...] = ("H", "V")
SOURCE_MODES: tuple[str, ...] = ("a", "b")
SPLIT_MODES: tuple[str, ...] = ("a1", "a2", "b1", "b2")

# Stage probabilities stated for the attack, next to the ones the simulation produces
PRINTED_STAGE_PROBABILITIES: tuple[float, float, float] = (0.25, 0.75, 0.40)
PRINTED_SUCCESS: float = 0.30
EXACT_STAGE_PROBABILITIES: tuple[float, float, float] = (1 / 4, 5 / 6, 2 / 5)
EXACT_SUCCESS: float = 1 / 3


@dataclasses.dataclass(frozen=True, order=True)
class ModeLabel:
    """
    A bosonic mode: a spatial mode together with a polarization.
    """
    spatial: str
    polarization: str

    def __post_init__(self):
        if self.spatial not in SPATIAL_MODES or self.polarization not in POLARIZATIONS:
            raise ValueError(f"Unknown mode {self.spatial}{self.polarization}.")

    def __str__(self):
        return f"{self.spatial}{self.polarization}"


MODES: tuple[ModeLabel, ...] = tuple(ModeLabel(s, p) for s in SPATIAL_MODES for p in POLARIZATIONS)
MODE_INDEX: dict[ModeLabel, int] = {m: i for i, m in enumerate(MODES)}


def mode(name: str) -> ModeLabel:
    """
    Parse a mode written like `a1H`.
    """
    return ModeLabel(name[:-1], name[-1])


class Ancilla(enum.Enum):
    E0 = "E0"
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"
    NONE = "none"

    def __str__(self):
        return self.value


Occupation: TypeAlias = tuple[int, ...]
Key: TypeAlias = tuple[Occupation, Ancilla]

# Garbage vector orthogonal to every physical occupation pattern
SINK: Occupation = ()
VACUUM: Occupation = (0,) * len(MODES)


class DomainCoverageError(ValueError):
    pass


@dataclasses.dataclass(frozen=True, eq=False)
class FockState:
    """
    Sparse superposition of occupation patterns over `MODES`, each tagged with an ancilla label.
    """
    terms: Mapping[Key, complex]

    @classmethod
    def from_terms(cls, terms: Mapping[Key, complex], *, epsilon: float = PRUNE_EPSILON) -> "FockState":
        return cls({k: complex(v) for k, v in terms.items() if abs(v) >= epsilon})

    @classmethod
    def vacuum(cls) -> "FockState":
        return cls({(VACUUM, Ancilla.NONE): 1 + 0j})

    @classmethod
    def empty(cls) -> "FockState":
        return cls({})

    @property
    def is_empty(self) -> bool:
        return not self.terms

    @property
    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def normalized(self) -> "FockState":
        norm = math.sqrt(self.norm2)
        if norm == 0:
            return FockState.empty()
        return FockState.from_terms({k: a / norm for k, a in self.terms.items()})

    def inner(self, other: "FockState") -> complex:
        """
        <self|other>
        """
        return complex(sum(a.conjugate() * other.terms.get(k, 0) for k, a in self.terms.items()))

    def fidelity(self, other: "FockState") -> float:
        """
        Phase-insensitive overlap |<self|other>|^2.
        """
        return abs(self.inner(other)) ** 2

    def occupied_modes(self) -> set[ModeLabel]:
        occupied = set()
        for occupation, _ in self.terms:
            occupied.update(MODES[i] for i, n in enumerate(occupation) if n)
        return occupied

    def has_sink(self) -> bool:
        return any(occupation == SINK for occupation, _ in self.terms)


def from_creation_polynomial(polynomial: Mapping[Sequence[ModeLabel], complex], *,
                             ancilla: Ancilla = Ancilla.NONE) -> FockState:
    """
    Apply a polynomial in creation operators to the vacuum.

    Each monomial is given as the sequence of modes whose creation operators it multiplies, so
    `(mode("aH"), mode("aH"))` stands for the square of the creation operator of `aH`.
    :param polynomial: mapping from monomial to coefficient
    :param ancilla: ancilla label attached to every term
    :return: the resulting state including the bosonic sqrt(k!) factors
    """
    terms: dict[Key, complex] = collections.defaultdict(complex)
    for monomial, coefficient in polynomial.items():
        occupation = [0] * len(MODES)
        for m in monomial:
            occupation[MODE_INDEX[m]] += 1
        factor = math.sqrt(math.prod(math.factorial(k) for k in occupation))
        terms[(tuple(occupation), ancilla)] += coefficient * factor
    return FockState.from_terms(terms)


def substitute_modes(state: FockState, substitution: Mapping[ModeLabel, Sequence[tuple[ModeLabel, complex]]]) \
        -> FockState:
    """
    Replace creation operators of the substituted modes by linear combinations of other creation operators.
    :param state: the input state, must not contain the sink vector
    :param substitution: for each replaced mode the list of (output mode, coefficient) pairs
    :return: the transformed state
    """
    source_indices = [MODE_INDEX[m] for m in substitution]
    result: dict[Key, complex] = collections.defaultdict(complex)
    for (occupation, ancilla), amplitude in state.terms.items():
        if occupation == SINK:
            raise ValueError("Cannot apply a mode substitution to the sink vector.")
        rest = list(occupation)
        counts = {}
        for i in source_indices:
            counts[i] = rest[i]
            rest[i] = 0
        # |n> = (a^dagger)^n / sqrt(n!) |0>
        norm = math.sqrt(math.prod(math.factorial(n) for n in counts.values()))
        current: dict[Occupation, complex] = {tuple(rest): amplitude / norm}
        for i, n in counts.items():
            outputs = [(MODE_INDEX[out], coefficient) for out, coefficient in substitution[MODES[i]]]
            for _ in range(n):
                following: dict[Occupation, complex] = collections.defaultdict(complex)
                for occ, c in current.items():
                    for j, coefficient in outputs:
                        raised = list(occ)
                        raised[j] += 1
                        following[tuple(raised)] += c * coefficient * math.sqrt(raised[j])
                current = following
        for occ, c in current.items():
            result[(occ, ancilla)] += c
    return FockState.from_terms(result)


_SQRT_HALF = 1 / math.sqrt(2)

BEAMSPLITTER: dict[ModeLabel, tuple[tuple[ModeLabel, complex], ...]] = {
    mode(f"{s}{p}"): ((mode(f"{s}1{p}"), _SQRT_HALF), (mode(f"{s}2{p}"), -_SQRT_HALF))
    for s in SOURCE_MODES for p in POLARIZATIONS
}


def _lives_on(state: FockState, spatial_modes: Iterable[str]) -> bool:
    allowed = set(spatial_modes)
    return all(m.spatial in allowed for m in state.occupied_modes()) and not state.has_sink()


def apply_beamsplitter(state: FockState) -> FockState:
    """
    Split modes `a` and `b` on 50/50 beam splitters into `a1`, `a2` and `b1`, `b2`.
    """
    if not _lives_on(state, SOURCE_MODES):
        raise ValueError("The beam splitter expects a state on modes a and b only, "
                         "the state already occupies split modes.")
    return substitute_modes(state, BEAMSPLITTER)


def _photons_per_spatial_mode(occupation: Occupation, spatial: str) -> int:
    return occupation[MODE_INDEX[ModeLabel(spatial, "H")]] + occupation[MODE_INDEX[ModeLabel(spatial, "V")]]


def postselect_one_per_mode(state: FockState) -> tuple[FockState, float]:
    """
    Keep the components with exactly one photon in each of `a1`, `a2`, `b1` and `b2`.
    :param state: a state on the split modes
    :return: the normalized surviving state and its probability; an empty state with probability 0 if nothing
        survives
    """
    if not _lives_on(state, SPLIT_MODES):
        raise ValueError("Post-selection expects a state on the split modes only.")
    kept = FockState.from_terms({
        key: a for key, a in state.terms.items()
        if all(_photons_per_spatial_mode(key[0], s) == 1 for s in SPLIT_MODES)
    })
    total = state.norm2
    probability = kept.norm2 / total if total else 0.0
    if probability == 0:
        return FockState.empty(), 0.0
    return kept.normalized(), probability


Output: TypeAlias = tuple[Occupation, Ancilla, complex]


@dataclasses.dataclass(frozen=True, eq=False)
class Isometry:
    """
    A map from occupation patterns on `modes` (with a fresh ancilla register) to superpositions of patterns on the
    same modes, or the sink vector, tagged with ancilla labels.

    Patterns are local: one entry per mode in `modes`. Inner-product preservation is checked on construction.
    """
    name: str
    modes: tuple[ModeLabel, ...]
    rules: Mapping[Occupation, tuple[Output, ...]]

    def __post_init__(self):
        for pattern, outputs in self.rules.items():
            if len(pattern) != len(self.modes):
                raise ValueError(f"{self.name}: pattern {pattern} does not match {len(self.modes)} modes.")
            for out, _, _ in outputs:
                if out != SINK and len(out) != len(self.modes):
                    raise ValueError(f"{self.name}: output {out} does not match {len(self.modes)} modes.")
        deviation = check_isometry(self)
        if deviation > ISOMETRY_TOLERANCE:
            raise ValueError(f"{self.name} does not preserve inner products (deviation {deviation:.3g}).")

    def describe(self, pattern: Occupation) -> str:
        return ",".join(f"{m}={n}" for m, n in zip(self.modes, pattern) if n) or "vac"


def check_isometry(iso: Isometry) -> float:
    """
    Largest deviation of the Gram matrix of the images of all domain patterns from the identity.
    """
    images = [{(out, anc): c for out, anc, c in outputs} for outputs in iso.rules.values()]
    gram = np.array([[sum(a.get(k, 0).conjugate() * v for k, v in b.items()) for b in images] for a in images],
                    dtype=complex)
    return float(np.max(np.abs(gram - np.eye(len(images))))) if images else 0.0


def apply_isometry_and_project(state: FockState, iso: Isometry, keep: Ancilla) -> tuple[FockState, float]:
    """
    Attach a fresh ancilla register, apply `iso`, project the register onto `keep` and discard it.
    :param state: a state without ancilla labels
    :param iso: the isometry, its domain must cover every pattern of `state` on `iso.modes`
    :param keep: the ancilla label to post-select
    :return: the normalized projected state and the probability of the projection
    """
    indices = [MODE_INDEX[m] for m in iso.modes]
    result: dict[Key, complex] = collections.defaultdict(complex)
    for (occupation, ancilla), amplitude in state.terms.items():
        if ancilla is not Ancilla.NONE:
            raise ValueError(f"{iso.name} expects a fresh ancilla register, found {ancilla}.")
        if occupation == SINK:
            raise DomainCoverageError(f"{iso.name} is not defined on the sink vector.")
        local = tuple(occupation[i] for i in indices)
        if local not in iso.rules:
            raise DomainCoverageError(f"{iso.name} is not defined on pattern {iso.describe(local)}.")
        for out, out_ancilla, coefficient in iso.rules[local]:
            if out_ancilla is not keep:
                continue
            if out == SINK:
                target = SINK
            else:
                replaced = list(occupation)
                for i, n in zip(indices, out):
                    replaced[i] = n
                target = tuple(replaced)
            result[(target, Ancilla.NONE)] += amplitude * coefficient
    projected = FockState.from_terms(result)
    total = state.norm2
    probability = projected.norm2 / total if total else 0.0
    logger.debug("%s projected onto %s with probability %.12g", iso.name, keep, probability)
    if probability == 0:
        return FockState.empty(), 0.0
    return projected.normalized(), probability


def _local(modes: Sequence[ModeLabel], occupied: Iterable[str]) -> Occupation:
    names = set(occupied)
    return tuple(int(str(m) in names) for m in modes)


_ONE_MODES = tuple(mode(n) for n in ("a1H", "a1V", "b2H", "b2V"))

# Flags whether the photons in a1 and b2 have different polarizations
ISOMETRY_ONE = Isometry(
    name="U1",
    modes=_ONE_MODES,
    rules={
        _local(_ONE_MODES, ("a1H", "b2V")): ((_local(_ONE_MODES, ("a1H", "b2V")), Ancilla.E1, 1),),
        _local(_ONE_MODES, ("a1V", "b2H")): ((_local(_ONE_MODES, ("a1V", "b2H")), Ancilla.E1, 1),),
        _local(_ONE_MODES, ("a1H", "b2H")): ((_local(_ONE_MODES, ("a1H", "b2H")), Ancilla.E2, 1),),
        _local(_ONE_MODES, ("a1V", "b2V")): ((_local(_ONE_MODES, ("a1V", "b2V")), Ancilla.E2, 1),),
    },
)

_TWO_MODES = tuple(ModeLabel(s, p) for s in SPLIT_MODES for p in POLARIZATIONS)
_X1 = _local(_TWO_MODES, ("a1H", "b1V", "a2H", "b2V"))
_X2 = _local(_TWO_MODES, ("a1V", "b1H", "a2V", "b2H"))
_Y1 = _local(_TWO_MODES, ("a1H", "b1H", "a2V", "b2V"))
_Y2 = _local(_TWO_MODES, ("a1V", "b1V", "a2H", "b2H"))
_S = math.sqrt(3) / (2 * math.sqrt(2))

# |X> = (x1 + x2)/sqrt2 -> (sqrt3 |Z>|E1> + |X>|E2>)/2, |X'> = (x1 - x2)/sqrt2 -> (sqrt3 |Z>|E3> + |X'>|E2>)/2,
# |Y> -> |Y>|E2>, written out on the basis patterns
ISOMETRY_TWO = Isometry(
    name="U2",
    modes=_TWO_MODES,
    rules={
        _X1: ((SINK, Ancilla.E1, _S), (SINK, Ancilla.E3, _S), (_X1, Ancilla.E2, 0.5)),
        _X2: ((SINK, Ancilla.E1, _S), (SINK, Ancilla.E3, -_S), (_X2, Ancilla.E2, 0.5)),
        _Y1: ((_Y1, Ancilla.E2, 1),),
        _Y2: ((_Y2, Ancilla.E2, 1),),
    },
)


class Code(enum.Enum):
    MINUS = "minus"
    PLUS = "plus"
    ZERO = "zero"
    ONE = "one"

    @property
    def phase(self) -> complex:
        """
        Relative phase c of the single-pair encoding (HV + c VH)/sqrt2.
        """
        return {Code.MINUS: -1, Code.PLUS: 1, Code.ZERO: 1j, Code.ONE: -1j}[self]

    def __str__(self):
        return self.value


def encoded_pair_state(code: Code) -> FockState:
    """
    Two-pair emission carrying `code` on modes `a` and `b`.

    (H_a V_b + c V_a H_b)^2 / (2 sqrt3) applied to the vacuum.
    """
    c = code.phase
    aH, aV, bH, bV = (mode(n) for n in ("aH", "aV", "bH", "bV"))
    scale = 1 / (2 * math.sqrt(3))
    return from_creation_polynomial({
        (aH, aH, bV, bV): scale,
        (aH, aV, bH, bV): 2 * c * scale,
        (aV, aV, bH, bH): c * c * scale,
    })


def single_pair_state(code: Code, first: str, second: str) -> FockState:
    """
    One pair (H_first V_second + c V_first H_second)/sqrt2 on two spatial modes.
    """
    return from_creation_polynomial({
        (ModeLabel(first, "H"), ModeLabel(second, "V")): _SQRT_HALF,
        (ModeLabel(first, "V"), ModeLabel(second, "H")): code.phase * _SQRT_HALF,
    })


def expected_final_state(code: Code) -> FockState:
    """
    The product of a pair on (a1, b2) and a pair on (a2, b1), each carrying `code`.
    """
    c = code.phase
    a1H, a1V, a2H, a2V, b1H, b1V, b2H, b2V = (mode(n) for n in
                                              ("a1H", "a1V", "a2H", "a2V", "b1H", "b1V", "b2H", "b2V"))
    polynomial = {}
    for (kept, kc), (sent, sc) in itertools.product((((a1H, b2V), 1), ((a1V, b2H), c)),
                                                    (((a2H, b1V), 1), ((a2V, b1H), c))):
        polynomial[kept + sent] = 0.5 * kc * sc
    return from_creation_polynomial(polynomial)


def product_fidelity(state: FockState, code: Code) -> float:
    """
    Overlap of `state` with the product of one `code` pair kept on (a1, b2) and one sent on (a2, b1).
    """
    return state.fidelity(expected_final_state(code))


@dataclasses.dataclass(frozen=True)
class AttackStage:
    name: str
    probability: float
    state: FockState


@dataclasses.dataclass(frozen=True)
class AttackTrace:
    """
    Per-stage record of the attack on one encoded two-pair state.
    """
    code: Code
    encoded: FockState
    split: FockState
    stages: tuple[AttackStage, ...]

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(s.probability for s in self.stages)

    @property
    def conditional_success(self) -> float:
        """
        Success probability given that the post-selection after the beam splitter succeeded.
        """
        return math.prod(s.probability for s in self.stages[1:])

    @property
    def intermediate_state(self) -> FockState:
        return self.stages[1].state

    @property
    def final_state(self) -> FockState:
        return self.stages[-1].state


def run_full_attack(code: Code) -> AttackTrace:
    encoded = encoded_pair_state(code)
    split = apply_beamsplitter(encoded)
    selected, p_select = postselect_one_per_mode(split)
    intermediate, p_one = apply_isometry_and_project(selected, ISOMETRY_ONE, Ancilla.E1)
    final, p_two = apply_isometry_and_project(intermediate, ISOMETRY_TWO, Ancilla.E2)
    trace = AttackTrace(code=code, encoded=encoded, split=split, stages=(
        AttackStage("postselection", p_select, selected),
        AttackStage("U1/P1", p_one, intermediate),
        AttackStage("U2/P2", p_two, final),
    ))
    logger.debug("Attack on %s: stage probabilities %s", code, trace.probabilities)
    return trace


# Local pair basis over (first H, first V, second H, second V)
PAIR_BASIS: tuple[Occupation, ...] = ((1, 0, 0, 1), (0, 1, 1, 0), (1, 0, 1, 0), (0, 1, 0, 1))
_KEPT_MODES = tuple(mode(n) for n in ("a1H", "a1V", "b2H", "b2V"))
_SENT_MODES = tuple(mode(n) for n in ("a2H", "a2V", "b1H", "b1V"))


def pair_matrix(state: FockState) -> np.ndarray:
    """
    Amplitudes of a one-photon-per-split-mode state as a matrix between the (a1, b2) and (a2, b1) pair bases.
    """
    matrix = np.zeros((len(PAIR_BASIS), len(PAIR_BASIS)), dtype=complex)
    row_index = {p: i for i, p in enumerate(PAIR_BASIS)}
    kept = [MODE_INDEX[m] for m in _KEPT_MODES]
    sent = [MODE_INDEX[m] for m in _SENT_MODES]
    for (occupation, ancilla), amplitude in state.terms.items():
        if occupation == SINK or ancilla is not Ancilla.NONE:
            raise ValueError("Only photonic terms without ancilla can be arranged as a pair matrix.")
        row = tuple(occupation[i] for i in kept)
        column = tuple(occupation[i] for i in sent)
        if row not in row_index or column not in row_index or sum(occupation) != 4:
            raise ValueError("The state is not a pair on (a1, b2) times a pair on (a2, b1).")
        matrix[row_index[row], row_index[column]] += amplitude
    return matrix


def singular_values(state: FockState) -> np.ndarray:
    return np.linalg.svd(pair_matrix(state), compute_uv=False)


def pair_factors(state: FockState) -> tuple[np.ndarray, np.ndarray]:
    """
    Leading singular vectors of the pair matrix: the pair Eve keeps on (a1, b2) and the pair sent on (a2, b1).

    Both are returned as vectors over `PAIR_BASIS`, defined up to a global phase.
    """
    u, _, vh = np.linalg.svd(pair_matrix(state))
    return u[:, 0], vh[0, :]


def single_pair_vector(code: Code) -> np.ndarray:
    return np.array([1, code.phase, 0, 0], dtype=complex) / math.sqrt(2)


def vector_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


def _split_basis_state(*terms: tuple[Sequence[str], complex]) -> FockState:
    return from_creation_polynomial({tuple(mode(n) for n in names): c for names, c in terms})


NAMED_VECTORS: dict[str, FockState] = {
    "X": _split_basis_state((("a1H", "b1V", "a2H", "b2V"), _SQRT_HALF), (("a1V", "b1H", "a2V", "b2H"), _SQRT_HALF)),
    "X'": _split_basis_state((("a1H", "b1V", "a2H", "b2V"), _SQRT_HALF),
                             (("a1V", "b1H", "a2V", "b2H"), -_SQRT_HALF)),
    "Y": _split_basis_state((("a1H", "b1H", "a2V", "b2V"), _SQRT_HALF), (("a1V", "b1V", "a2H", "b2H"), _SQRT_HALF)),
}


def intermediate_decomposition(state: FockState) -> dict[str, complex]:
    """
    Components of `state` along |X>, |X'> and |Y>.
    """
    return {name: vector.inner(state) for name, vector in NAMED_VECTORS.items()}


def _format_coefficient(c: complex) -> str:
    for value, text in ((1, "+"), (-1, "-"), (1j, "+i"), (-1j, "-i")):
        if abs(c - value) < 1e-9:
            return text
    return f"+({c.real:.6g}{c.imag:+.6g}i)"


def intermediate_signature(state: FockState) -> str:
    """
    The state after the first projection written as (2|L> s|Y>)/sqrt5 with L the dominant of X and X'.
    """
    parts = intermediate_decomposition(state)
    lead = max(("X", "X'"), key=lambda n: abs(parts[n]))
    ratio = 2 * parts["Y"] / parts[lead] if parts[lead] else complex("nan")
    return f"(2|{lead}> {_format_coefficient(ratio)}|Y>)/sqrt(5)"


def _describe_occupation(occupation: Occupation) -> str:
    if occupation == SINK:
        return "Z"
    return ",".join(f"{MODES[i]}={n}" for i, n in enumerate(occupation) if n) or "vac"


def format_state(state: FockState) -> str:
    """
    Tab-separated debug table: occupation pattern, ancilla, real part, imaginary part.
    """
    lines = ["pattern\tancilla\treal\timag"]
    for (occupation, ancilla), amplitude in sorted(state.terms.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        lines.append(f"{_describe_occupation(occupation)}\t{ancilla}\t{amplitude.real:.15g}\t{amplitude.imag:.15g}")
    return "\n".join(lines) + "\n"
