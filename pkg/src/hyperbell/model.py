"""Physical content of the two-photon polarization-path experiment.

Conventions (fixed, shared by every module):

- kets |H> = (1, 0), |V> = (0, 1) for polarization; |l> = (1, 0),
  |r> = (0, 1) for the two path modes;
- global tensor order (u-polarization) x (d-polarization) x (u-path) x
  (d-path), first factor slowest, so the full state is literally
  (polarization pair) x (path pair);
- photon u owns measurement names A and a, photon d owns B and b.

The eight dichotomic observables are stored in their ket-bra form; the
equivalent Pauli combinations are asserted in tests, not assumed here.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from . import qcore

POLARIZATION = "polarization"
PATH = "path"
KINDS = (POLARIZATION, PATH)

PHOTON_U = "u"
PHOTON_D = "d"
PHOTONS = (PHOTON_U, PHOTON_D)

U_SIDE_NAMES = ("A", "a")
D_SIDE_NAMES = ("B", "b")

_KET = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "l": np.array([1, 0], dtype=complex),
    "r": np.array([0, 1], dtype=complex),
}

_I2 = np.eye(2, dtype=complex)
_SQRT2 = np.sqrt(2.0)


def _ketbra(b: str, k: str) -> np.ndarray:
    return np.outer(_KET[b], _KET[k].conj())


_OBSERVABLES = {
    ("A", POLARIZATION): _ketbra("H", "H") - _ketbra("V", "V"),
    ("a", POLARIZATION): _ketbra("V", "H") + _ketbra("H", "V"),
    ("B", POLARIZATION): (
        _ketbra("H", "H") - _ketbra("V", "V") + _ketbra("V", "H") + _ketbra("H", "V")
    ) / _SQRT2,
    ("b", POLARIZATION): (
        _ketbra("V", "V") - _ketbra("H", "H") + _ketbra("V", "H") + _ketbra("H", "V")
    ) / _SQRT2,
    ("A", PATH): _ketbra("l", "r") + _ketbra("r", "l"),
    ("a", PATH): 1j * (_ketbra("r", "l") - _ketbra("l", "r")),
    ("B", PATH): ((1j + 1) * _ketbra("r", "l") - (1j - 1) * _ketbra("l", "r")) / _SQRT2,
    ("b", PATH): ((1j - 1) * _ketbra("r", "l") - (1j + 1) * _ketbra("l", "r")) / _SQRT2,
}


@dataclass(frozen=True)
class ObservableId:
    """One of the eight measurement observables, e.g. A_pi or b_k."""

    name: str
    kind: str

    def __post_init__(self):
        if self.name not in ("A", "a", "B", "b"):
            raise ValueError(f"unknown observable name {self.name!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown degree-of-freedom kind {self.kind!r}")

    @property
    def side(self) -> str:
        """Photon that owns this name in the canonical assignment."""
        return PHOTON_U if self.name in U_SIDE_NAMES else PHOTON_D

    @property
    def label(self) -> str:
        return f"{self.name}_{'pi' if self.kind == POLARIZATION else 'k'}"


def observable(obs: ObservableId) -> np.ndarray:
    """The 2x2 Hermitian matrix of the observable (eigenvalues +-1)."""
    return _OBSERVABLES[(obs.name, obs.kind)].copy()


def observable_ids(kind: str) -> tuple[ObservableId, ...]:
    """All four observables of one degree of freedom, order (A, a, B, b)."""
    return tuple(ObservableId(n, kind) for n in ("A", "a", "B", "b"))


@dataclass(frozen=True)
class BasisConventions:
    """Frozen record of the basis and tensor-order conventions."""

    kets: dict
    factor_order: tuple
    tensor_endianness: str


def basis_conventions() -> BasisConventions:
    return BasisConventions(
        kets={name: tuple(vec) for name, vec in _KET.items()},
        factor_order=(
            (POLARIZATION, PHOTON_U),
            (POLARIZATION, PHOTON_D),
            (PATH, PHOTON_U),
            (PATH, PHOTON_D),
        ),
        tensor_endianness="big (first factor varies slowest)",
    )


@dataclass(frozen=True)
class QuantumState:
    """Pure or mixed state over N two-photon degrees of freedom (dim 4^N)."""

    dof_count: int
    vector: np.ndarray | None
    rho: np.ndarray

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    @classmethod
    def pure(cls, vector, dof_count: int | None = None) -> "QuantumState":
        v = qcore.as_vector(vector)
        qcore.check_normalized(v)
        n = _infer_dof_count(v.size, dof_count)
        return cls(dof_count=n, vector=v, rho=np.outer(v, v.conj()))

    @classmethod
    def mixed(cls, rho, dof_count: int | None = None) -> "QuantumState":
        r = qcore.as_matrix(rho)
        qcore.check_density_matrix(r)
        n = _infer_dof_count(r.shape[0], dof_count)
        return cls(dof_count=n, vector=None, rho=r)


def _infer_dof_count(dim: int, dof_count: int | None) -> int:
    n = 0
    d = dim
    while d > 1 and d % 4 == 0:
        d //= 4
        n += 1
    if d != 1 or n == 0:
        raise ValueError(f"dimension {dim} is not 4^N for a positive N")
    if dof_count is not None and dof_count != n:
        raise ValueError(f"dimension {dim} does not match dof_count {dof_count}")
    return n


def pair_state(kind: str, phase: float) -> np.ndarray:
    """Two-photon state of a single degree of freedom.

    polarization: (|HH> + e^{i phase}|VV>)/sqrt(2)
    path:         (|lr> + e^{i phase}|rl>)/sqrt(2)
    """
    ph = cmath.exp(1j * phase)
    if kind == POLARIZATION:
        v = np.kron(_KET["H"], _KET["H"]) + ph * np.kron(_KET["V"], _KET["V"])
    elif kind == PATH:
        v = np.kron(_KET["l"], _KET["r"]) + ph * np.kron(_KET["r"], _KET["l"])
    else:
        raise ValueError(f"unknown degree-of-freedom kind {kind!r}")
    return v / _SQRT2


def hyper_state(theta: float, phi: float) -> QuantumState:
    """Hyper-entangled pure state (|HH> + e^{i theta}|VV>) x (|lr> + e^{i phi}|rl>) / 2.

    theta = pi, phi = 0 gives the singlet-signed polarization pair times the
    symmetric path pair produced by the source.
    """
    if not (np.isfinite(theta) and np.isfinite(phi)):
        raise ValueError("phases must be finite")
    full = np.kron(pair_state(POLARIZATION, theta), pair_state(PATH, phi))
    return QuantumState.pure(full, dof_count=2)


@dataclass(frozen=True)
class LocalObservable:
    """A photon's joint polarization-path observable embedded in dim 16.

    ``projectors`` maps each outcome pair (pol, path) in {+1, -1}^2 to its
    rank-4 projector; the four projectors sum to the identity.
    """

    photon: str
    operator: np.ndarray
    projectors: dict


def _embed_pair(pol_matrix: np.ndarray, path_matrix: np.ndarray, photon: str) -> np.ndarray:
    if photon == PHOTON_U:
        return qcore.tensor_all(pol_matrix, _I2, path_matrix, _I2)
    if photon == PHOTON_D:
        return qcore.tensor_all(_I2, pol_matrix, _I2, path_matrix)
    raise ValueError(f"unknown photon {photon!r}")


def pair_projectors(pol_matrix, path_matrix, photon: str) -> dict:
    """Joint-outcome projectors for explicit 2x2 dichotomic observables.

    No name/side bookkeeping: this is the raw embedding used wherever an
    observable is measured on the photon that does not own its name (the
    element-of-reality checks need e.g. A_pi on photon d).
    """
    pm = qcore.as_matrix(pol_matrix)
    km = qcore.as_matrix(path_matrix)
    out = {}
    for s in (+1, -1):
        p_pol = (_I2 + s * pm) / 2.0
        for t in (+1, -1):
            p_path = (_I2 + t * km) / 2.0
            out[(s, t)] = _embed_pair(p_pol, p_path, photon)
    return out


def local_setting_operator(pol: ObservableId, path: ObservableId, photon: str) -> LocalObservable:
    """Embed a photon's (polarization x path) product observable in dim 16.

    The observable names must belong to the requested photon and the kinds
    must match the argument slots.
    """
    if pol.kind != POLARIZATION:
        raise ValueError(f"{pol.label} is not a polarization observable")
    if path.kind != PATH:
        raise ValueError(f"{path.label} is not a path observable")
    if photon not in PHOTONS:
        raise ValueError(f"unknown photon {photon!r}")
    if pol.side != photon or path.side != photon:
        raise ValueError(
            f"observables ({pol.label}, {path.label}) do not belong to photon {photon}"
        )
    op = _embed_pair(observable(pol), observable(path), photon)
    return LocalObservable(
        photon=photon,
        operator=op,
        projectors=pair_projectors(observable(pol), observable(path), photon),
    )


NOISE_NONE = "none"
NOISE_WHITE = "white"
NOISE_DEPHASING = "dephasing"
NOISE_KINDS = (NOISE_NONE, NOISE_WHITE, NOISE_DEPHASING)


@dataclass(frozen=True)
class NoiseModel:
    """Scalar-visibility stand-in for the apparatus imperfections.

    white:     rho_dof -> v rho_dof + (1 - v) I/4, independently per degree
               of freedom;
    dephasing: off-diagonal coherences of each degree of freedom's pair
               block scaled by v;
    none:      identity channel (v_pi = v_k = 1 enforced).
    """

    kind: str
    v_pi: float = 1.0
    v_k: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        for tag, v in (("v_pi", self.v_pi), ("v_k", self.v_k)):
            if not (np.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"{tag} must lie in [0, 1], got {v!r}")
        if self.kind == NOISE_NONE and (self.v_pi != 1.0 or self.v_k != 1.0):
            raise ValueError("noise kind 'none' requires v_pi = v_k = 1")


def apply_noise(state: QuantumState, noise: NoiseModel) -> QuantumState:
    """Apply the noise channel to a pure dim-16 state; returns a mixed state."""
    if not state.is_pure:
        raise ValueError("apply_noise expects a pure input state")
    if state.dof_count != 2:
        raise ValueError("noise channels are defined for the two-DOF state")
    rho = np.outer(state.vector, state.vector.conj())
    if noise.kind == NOISE_NONE:
        return QuantumState.mixed(rho, dof_count=2)
    if noise.kind == NOISE_WHITE:
        rho = _white_dof(rho, noise.v_pi, block=0)
        rho = _white_dof(rho, noise.v_k, block=1)
    else:
        rho = _dephase_dof(rho, noise.v_pi, block=0)
        rho = _dephase_dof(rho, noise.v_k, block=1)
    return QuantumState.mixed(rho, dof_count=2)


def _white_dof(rho: np.ndarray, v: float, block: int) -> np.ndarray:
    """v rho + (1 - v) (I/4 on the block) x (partial trace over the block)."""
    r4 = rho.reshape(4, 4, 4, 4)  # (pol_row, path_row, pol_col, path_col)
    eye4 = np.eye(4) / 4.0
    if block == 0:
        rest = np.trace(r4, axis1=0, axis2=2)
        mixed = np.kron(eye4, rest)
    else:
        rest = np.trace(r4, axis1=1, axis2=3)
        mixed = np.kron(rest, eye4)
    return v * rho + (1.0 - v) * mixed


def _dephase_dof(rho: np.ndarray, v: float, block: int) -> np.ndarray:
    """Scale entries whose block row/column pair indices differ by v."""
    r4 = rho.reshape(4, 4, 4, 4).copy()
    same = np.eye(4, dtype=bool)
    if block == 0:
        factor = np.where(same[:, None, :, None], 1.0, v)
    else:
        factor = np.where(same[None, :, None, :], 1.0, v)
    return (r4 * factor).reshape(16, 16)
