"""Simulated experiment: Born probabilities, coincidence sampling, estimators.

A joint setting fixes one polarization and one path observable per photon;
each photon then has four outcomes (polarization sign, path sign), giving
16 joint outcome cells per setting.  Outcome cells are ordered u-major
with per-side order (+,+), (+,-), (-,+), (-,-), polarization sign first.

Sampling is multinomial on the Born distribution, driven by the seeded
generator in ``rng`` (identity ``rng.GENERATOR_ID``); every sampled setting
uses the sub-stream ``rng.derive_seed(seed, stream_index)`` so runs are
reproducible setting by setting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bell as bell_mod
from . import model, qcore, rng
from .model import ObservableId, QuantumState
from .rng import GENERATOR_ID

OUTCOME_PAIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))

_I2 = np.eye(2, dtype=complex)

# Per-cell outcome weights, flattened u-major: cell = 4*i + j.
_W_POL = np.array(
    [[pu * pd for pd, kd in OUTCOME_PAIRS] for pu, ku in OUTCOME_PAIRS], dtype=float
).ravel()
_W_PATH = np.array(
    [[ku * kd for pd, kd in OUTCOME_PAIRS] for pu, ku in OUTCOME_PAIRS], dtype=float
).ravel()
_W_JOINT = _W_POL * _W_PATH


@dataclass(frozen=True)
class JointSetting:
    """One polarization and one path observable per photon."""

    u_pol: ObservableId
    u_path: ObservableId
    d_pol: ObservableId
    d_path: ObservableId

    def __post_init__(self):
        for obs, kind in (
            (self.u_pol, model.POLARIZATION),
            (self.u_path, model.PATH),
            (self.d_pol, model.POLARIZATION),
            (self.d_path, model.PATH),
        ):
            if obs.kind != kind:
                raise ValueError(f"{obs.label} is not a {kind} observable")

    @property
    def u_label(self) -> str:
        return f"{self.u_pol.label} {self.u_path.label}"

    @property
    def d_label(self) -> str:
        return f"{self.d_pol.label} {self.d_path.label}"


_PAIRS = (("A", "B"), ("A", "b"), ("a", "B"), ("a", "b"))


def bell_test_settings() -> tuple:
    """The 16 canonical joint settings, in product-operator term order."""
    out = []
    for pu, pd in _PAIRS:
        for ku, kd in _PAIRS:
            out.append(
                JointSetting(
                    u_pol=ObservableId(pu, model.POLARIZATION),
                    u_path=ObservableId(ku, model.PATH),
                    d_pol=ObservableId(pd, model.POLARIZATION),
                    d_path=ObservableId(kd, model.PATH),
                )
            )
    return tuple(out)


@dataclass(frozen=True)
class OutcomeDistribution:
    setting: JointSetting
    probs: np.ndarray  # 16 cells, u-major


def born_distribution(state: QuantumState, setting: JointSetting) -> OutcomeDistribution:
    """Joint outcome probabilities Tr[rho P_u P_d] for one setting.

    Probabilities more negative than -1e-12 are an error; smaller negative
    rounding residue is clamped to zero and the distribution renormalized.
    """
    if state.dof_count != 2:
        raise ValueError("joint settings are defined for the two-DOF state")
    proj_u = model.pair_projectors(
        model.observable(setting.u_pol), model.observable(setting.u_path), model.PHOTON_U
    )
    proj_d = model.pair_projectors(
        model.observable(setting.d_pol), model.observable(setting.d_path), model.PHOTON_D
    )
    probs = np.empty(16, dtype=float)
    for i, u_out in enumerate(OUTCOME_PAIRS):
        left = proj_u[u_out] @ state.rho
        for j, d_out in enumerate(OUTCOME_PAIRS):
            probs[4 * i + j] = float(np.real(np.trace(proj_d[d_out] @ left)))
    lo = float(probs.min())
    if lo < -1e-12:
        raise ValueError(f"Born probability {lo!r} below the clamping tolerance")
    probs = np.clip(probs, 0.0, None)
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"Born probabilities sum to {total!r}, expected 1")
    return OutcomeDistribution(setting=setting, probs=probs / total)


def analytic_correlations(dist: OutcomeDistribution) -> tuple:
    """(joint, polarization, path) correlations of the exact distribution."""
    p = dist.probs
    return (float(p @ _W_JOINT), float(p @ _W_POL), float(p @ _W_PATH))


def marginals(dist: OutcomeDistribution) -> tuple:
    """(u-side, d-side) outcome marginals, each a length-4 array."""
    grid = dist.probs.reshape(4, 4)
    return grid.sum(axis=1), grid.sum(axis=0)


def signaling_deviation(state: QuantumState) -> float:
    """Largest marginal shift of one side under the other side's setting.

    Scans the 16 canonical settings grouped by each side's local setting;
    quantum states keep this at floating-point rounding scale.
    """
    u_groups: dict = {}
    d_groups: dict = {}
    for setting in bell_test_settings():
        mu, md = marginals(born_distribution(state, setting))
        u_groups.setdefault(setting.u_label, []).append(mu)
        d_groups.setdefault(setting.d_label, []).append(md)
    worst = 0.0
    for groups in (u_groups, d_groups):
        for margs in groups.values():
            stack = np.stack(margs)
            worst = max(worst, float(np.max(stack.max(axis=0) - stack.min(axis=0))))
    return worst


def sample(dist: OutcomeDistribution, n_events: int, seed: int) -> np.ndarray:
    """Multinomial counts over the 16 cells; determined by (dist, n, seed)."""
    return rng.multinomial(dist.probs, n_events, seed)


@dataclass(frozen=True)
class CorrelationRecord:
    label: tuple  # (u setting label, d setting label)
    E: float
    std_err: float
    n_events: int


@dataclass(frozen=True)
class EstimateResult:
    """Joint correlation plus the two single-DOF marginal correlations."""

    joint: CorrelationRecord
    pol: CorrelationRecord
    path: CorrelationRecord


def estimate(counts, setting: JointSetting) -> EstimateResult:
    """Correlation estimates with std_err = sqrt((1 - E^2)/n) from counts."""
    c = np.asarray(counts, dtype=np.int64)
    if c.shape != (16,) or np.any(c < 0):
        raise ValueError("counts must be 16 nonnegative integers")
    n = int(c.sum())
    if n < 2:
        raise ValueError(f"need at least 2 events to estimate, got {n}")

    def record(weights: np.ndarray, label: tuple) -> CorrelationRecord:
        e = float(weights @ c) / n
        return CorrelationRecord(
            label=label,
            E=e,
            std_err=math.sqrt(max(0.0, 1.0 - e * e) / n),
            n_events=n,
        )

    return EstimateResult(
        joint=record(_W_JOINT, (setting.u_label, setting.d_label)),
        pol=record(_W_POL, (setting.u_pol.label, setting.d_pol.label)),
        path=record(_W_PATH, (setting.u_path.label, setting.d_path.label)),
    )


def significance(value: float, std_err: float, bound: float) -> float:
    """Standard deviations by which |value| exceeds the classical bound."""
    excess = abs(value) - bound
    if std_err == 0.0:
        return 0.0 if excess == 0.0 else math.copysign(math.inf, excess)
    return excess / std_err


@dataclass(frozen=True)
class ViolationReport:
    beta_estimate: float  # signed
    beta_std_err: float
    bound: float
    sigmas: float


def violation_report(records, bell: bell_mod.BellOperator, bound: float) -> ViolationReport:
    """Combine per-setting correlations into a Bell-operator estimate.

    ``records`` must match the operator's term list bijectively by
    (u label, d label).
    """
    by_label = {}
    for rec in records:
        if rec.label in by_label:
            raise ValueError(f"duplicate record for setting {rec.label}")
        by_label[rec.label] = rec
    term_labels = {(t.u_label, t.d_label) for t in bell.terms}
    if set(by_label) != term_labels:
        missing = sorted(term_labels - set(by_label))
        extra = sorted(set(by_label) - term_labels)
        raise ValueError(f"record/term mismatch: missing {missing}, extra {extra}")
    beta = sum(t.sign * by_label[(t.u_label, t.d_label)].E for t in bell.terms)
    var = sum(by_label[(t.u_label, t.d_label)].std_err ** 2 for t in bell.terms)
    std = math.sqrt(var)
    return ViolationReport(
        beta_estimate=float(beta),
        beta_std_err=std,
        bound=float(bound),
        sigmas=significance(beta, std, bound),
    )


@dataclass(frozen=True)
class AssumptionCell:
    setting: JointSetting
    context_label: str
    record: CorrelationRecord
    analytic_E: float


@dataclass(frozen=True)
class AssumptionRow:
    dof: str  # which degree of freedom is being predicted
    row_label: str
    cells: tuple
    analytic_E: float

    @property
    def mean_E(self) -> float:
        return sum(c.record.E for c in self.cells) / len(self.cells)

    @property
    def spread(self) -> float:
        es = [c.record.E for c in self.cells]
        return max(es) - min(es)

    @property
    def analytic_spread(self) -> float:
        es = [c.analytic_E for c in self.cells]
        return max(es) - min(es)

    @property
    def predictability(self) -> float:
        """max(P(match), P(anti-match)) from the pooled estimate."""
        return (1.0 + abs(self.mean_E)) / 2.0


@dataclass(frozen=True)
class AssumptionReport:
    pol_rows: tuple
    path_rows: tuple
    n_events: int
    seed: int

    @property
    def rows(self) -> tuple:
        return self.pol_rows + self.path_rows


_ASSUMPTION_POL_ROWS = (("A", "A"), ("a", "a"), ("B", "b"), ("b", "B"))
_ASSUMPTION_PATH_ROWS = (("A", "A"), ("a", "a"), ("B", "B"), ("b", "b"))
_CONTEXTS = (("A", "B"), ("A", "b"), ("a", "B"), ("a", "b"))


def _marginal_operator(kind: str, u_name: str, d_name: str) -> np.ndarray:
    u_m = model.observable(ObservableId(u_name, kind))
    d_m = model.observable(ObservableId(d_name, kind))
    if kind == model.POLARIZATION:
        return qcore.tensor_all(u_m, d_m, _I2, _I2)
    return qcore.tensor_all(_I2, _I2, u_m, d_m)


def assumption_test(
    state: QuantumState, n_events: int, seed: int, stream_base: int = 0
) -> AssumptionReport:
    """Element-of-reality checks: same-DOF correlations across contexts.

    For each predictable polarization pair the polarization correlation is
    estimated under all four path contexts (and symmetrically for path
    under polarization contexts).  The analytic value per row comes from
    the context-free marginal operator, which is the exact Born marginal
    for every context, so its spread across a row is identically zero; the
    sampled spread is purely statistical.
    """
    pol_rows = []
    path_rows = []
    stream = stream_base
    for kind, row_pairs, sink in (
        (model.POLARIZATION, _ASSUMPTION_POL_ROWS, pol_rows),
        (model.PATH, _ASSUMPTION_PATH_ROWS, path_rows),
    ):
        ctx_kind = model.PATH if kind == model.POLARIZATION else model.POLARIZATION
        for u_name, d_name in row_pairs:
            analytic = float(
                np.real(
                    qcore.expectation_mixed(
                        _marginal_operator(kind, u_name, d_name), state.rho
                    )
                )
            )
            cells = []
            for cu, cd in _CONTEXTS:
                if kind == model.POLARIZATION:
                    setting = JointSetting(
                        u_pol=ObservableId(u_name, kind),
                        u_path=ObservableId(cu, ctx_kind),
                        d_pol=ObservableId(d_name, kind),
                        d_path=ObservableId(cd, ctx_kind),
                    )
                else:
                    setting = JointSetting(
                        u_pol=ObservableId(cu, ctx_kind),
                        u_path=ObservableId(u_name, kind),
                        d_pol=ObservableId(cd, ctx_kind),
                        d_path=ObservableId(d_name, kind),
                    )
                dist = born_distribution(state, setting)
                counts = sample(dist, n_events, rng.derive_seed(seed, stream))
                est = estimate(counts, setting)
                rec = est.pol if kind == model.POLARIZATION else est.path
                ctx_label = (
                    f"{ObservableId(cu, ctx_kind).label} {ObservableId(cd, ctx_kind).label}"
                )
                cells.append(
                    AssumptionCell(
                        setting=setting,
                        context_label=ctx_label,
                        record=rec,
                        analytic_E=analytic,
                    )
                )
                stream += 1
            row_label = (
                f"{ObservableId(u_name, kind).label} {ObservableId(d_name, kind).label}"
            )
            sink.append(
                AssumptionRow(
                    dof=kind, row_label=row_label, cells=tuple(cells), analytic_E=analytic
                )
            )
    return AssumptionReport(
        pol_rows=tuple(pol_rows),
        path_rows=tuple(path_rows),
        n_events=n_events,
        seed=seed,
    )


@dataclass(frozen=True)
class ReferenceSignificance:
    """A published measurement with its significance recomputed here."""

    label: str
    value: float
    uncertainty: float
    bound: float
    sigmas: float
    reported_sigmas: float

    @property
    def consistent(self) -> bool:
        return round(self.sigmas) == self.reported_sigmas


def reference_significance() -> tuple:
    """Published results of the polarization-path hyper-entanglement experiment.

    The significance is recomputed as (|value| - bound)/uncertainty.  The
    product row is flagged: the published number of standard deviations
    (196) does not follow from the published value and uncertainty, which
    give 201.3.
    """
    rows = (
        ("polarization CHSH", 2.5762, 0.0068, 2.0, 85),
        ("path CHSH", 2.5658, 0.0067, 2.0, 84),
        ("polarization-path product", 7.019, 0.015, 4.0, 196),
    )
    return tuple(
        ReferenceSignificance(
            label=label,
            value=value,
            uncertainty=unc,
            bound=bound,
            sigmas=significance(value, unc, bound),
            reported_sigmas=reported,
        )
        for label, value, unc, bound, reported in rows
    )


@dataclass(frozen=True)
class SimulationResult:
    joint_records: tuple
    beta: ViolationReport
    beta_pi: ViolationReport
    beta_k: ViolationReport
    assumptions: AssumptionReport
    n_events: int
    seed: int
    generator_id: str


# Sub-stream layout of one simulated experiment (offsets from the seed):
# 0..15 the sixteen joint settings, 16..19 the polarization CHSH run,
# 20..23 the path CHSH run, 24..55 the assumption-test cells.
_STREAM_JOINT = 0
_STREAM_CHSH_PI = 16
_STREAM_CHSH_K = 20
_STREAM_ASSUMPTIONS = 24


def run_simulated_experiment(state: QuantumState, n_events: int, seed: int) -> SimulationResult:
    """Full simulated run: assumption checks, per-DOF CHSH, 16 joint settings.

    Classical bounds are the element-of-reality ones: 2 per CHSH, 4 for the
    product.
    """
    assumptions = assumption_test(state, n_events, seed, stream_base=_STREAM_ASSUMPTIONS)

    joint_records = []
    for idx, setting in enumerate(bell_test_settings()):
        dist = born_distribution(state, setting)
        counts = sample(dist, n_events, rng.derive_seed(seed, _STREAM_JOINT + idx))
        joint_records.append(estimate(counts, setting).joint)
    beta = violation_report(joint_records, bell_mod.canonical_product(2), bound=4.0)

    chsh_pi_records = []
    for idx, (pu, pd) in enumerate(_PAIRS):
        setting = JointSetting(
            u_pol=ObservableId(pu, model.POLARIZATION),
            u_path=ObservableId("A", model.PATH),
            d_pol=ObservableId(pd, model.POLARIZATION),
            d_path=ObservableId("B", model.PATH),
        )
        dist = born_distribution(state, setting)
        counts = sample(dist, n_events, rng.derive_seed(seed, _STREAM_CHSH_PI + idx))
        chsh_pi_records.append(estimate(counts, setting).pol)
    beta_pi = violation_report(chsh_pi_records, bell_mod.build_beta_pi(), bound=2.0)

    chsh_k_records = []
    for idx, (ku, kd) in enumerate(_PAIRS):
        setting = JointSetting(
            u_pol=ObservableId("A", model.POLARIZATION),
            u_path=ObservableId(ku, model.PATH),
            d_pol=ObservableId("B", model.POLARIZATION),
            d_path=ObservableId(kd, model.PATH),
        )
        dist = born_distribution(state, setting)
        counts = sample(dist, n_events, rng.derive_seed(seed, _STREAM_CHSH_K + idx))
        chsh_k_records.append(estimate(counts, setting).path)
    beta_k = violation_report(chsh_k_records, bell_mod.build_beta_k(), bound=2.0)

    return SimulationResult(
        joint_records=tuple(joint_records),
        beta=beta,
        beta_pi=beta_pi,
        beta_k=beta_k,
        assumptions=assumptions,
        n_events=n_events,
        seed=seed,
        generator_id=GENERATOR_ID,
    )
