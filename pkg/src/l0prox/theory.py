"""Numerical checks of the suboptimality bounds for PGD and its randomized variants.

Certificates compare the distance between a PGD solution and the exhaustive
global optimum with the closed-form gap bounds.  Those bounds come from a
capped-l1 surrogate R(t; b) = lam * min(|t|, b) / b, for which both the PGD
limit and the global optimum are local solutions when b is small enough.
"""
from __future__ import annotations

import dataclasses
import itertools
import math
from typing import NamedTuple, Sequence

import numpy as np

from .core import (
    ConfigError, HypothesisError, ProblemInstance, RefuseEnumeration, full_column_rank,
    objective, sigma_max, sigma_min, singular_values, spectral_norm, support,
)
from .randomized import JlTransform, SketchedDictionary, sample_jl

__all__ = [
    "OracleSolution", "BoundCertificate", "Theta", "brute_force_global",
    "degree_of_nonconvexity", "degree_of_nonconvexity_grid", "b_feasible_interval",
    "b_feasible_interval_joint", "local_solution_residual", "theorem1_bound",
    "halko_error_constant", "rma_gap_bounds", "rdr_gap_bounds", "sparse_eigenvalues",
    "product_projection_check", "jl_failure_rate", "GAP_SLACK",
]

GAP_SLACK = 1e-9
TIE_TOL = 1e-12
LOCAL_RESIDUAL_TOL = 1e-6
MAX_ENUM_N = 20


@dataclasses.dataclass
class OracleSolution:
    code: np.ndarray
    support: tuple[int, ...]
    objective: float
    supports_enumerated: int
    ties: list[tuple[int, ...]]
    tie_codes: list[np.ndarray]


def brute_force_global(instance: ProblemInstance, max_support_size: int | None = None) -> OracleSolution:
    """Global minimizer of L by least squares on every support of size <= max_support_size.

    Supports whose optimum lies within 1e-12 of the best are all returned,
    ordered lexicographically by their actual support.
    """
    n = instance.n
    if n > MAX_ENUM_N:
        raise RefuseEnumeration(f"n = {n} exceeds the enumeration limit {MAX_ENUM_N}")
    kmax = n if max_support_size is None else int(max_support_size)
    if not 0 <= kmax <= n:
        raise ConfigError("max_support_size must lie in [0, n]")
    D, x, lam = instance.dictionary, instance.signal, instance.lam
    candidates: dict[tuple[int, ...], tuple[float, np.ndarray]] = {}
    best = float(x @ x)
    candidates[()] = (best, np.zeros(n))
    count = 1
    for size in range(1, kmax + 1):
        if lam * size > best + TIE_TOL:
            # every larger support already costs more than the incumbent
            count += sum(math.comb(n, r) for r in range(size, kmax + 1))
            break
        for S in itertools.combinations(range(n), size):
            count += 1
            coef = np.linalg.lstsq(D[:, S], x, rcond=None)[0]
            z = np.zeros(n)
            z[list(S)] = coef
            val = objective(instance, z)
            if val <= best + TIE_TOL:
                candidates[support(z)] = (val, z)
                best = min(best, val)
    ties = sorted(S for S, (v, _) in candidates.items() if v <= best + TIE_TOL)
    winner = min(ties, key=lambda S: (candidates[S][0], S))
    return OracleSolution(
        code=candidates[winner][1], support=winner, objective=candidates[winner][0],
        supports_enumerated=count, ties=ties, tie_codes=[candidates[S][1] for S in ties],
    )


# --- capped-l1 surrogate -----------------------------------------------------

class Theta(NamedTuple):
    value: float
    grid_evaluated: bool


def _capped_derivative(s: np.ndarray, lam: float, b: float) -> np.ndarray:
    """dR/dt away from the kinks at 0 and +-b."""
    return np.where(np.abs(s) < b, lam / b * np.sign(s), 0.0)


def degree_of_nonconvexity_grid(t: float, kappa: float, lam: float, b: float,
                                num: int = 100_001) -> float:
    """sup_s -sgn(s - t) (R'(s) - R'(t)) - kappa |s - t| on a dense grid.

    Where R'(t) is set-valued (t = 0 or |t| = b) the worst selection is used.
    Kinks are approached from both sides.
    """
    span = abs(t) + 3 * b
    kinks = np.array([-b, 0.0, b, t])
    offs = 1e-12 * max(1.0, span)
    s = np.concatenate([np.linspace(t - span, t + span, num), kinks - offs, kinks + offs])
    s = s[s != t]
    ds = _capped_derivative(s, lam, b)
    if t == 0:
        at_t = [-lam / b, lam / b]
    elif abs(t) == b:
        at_t = [0.0, lam / b * math.copysign(1.0, t)]
    else:
        at_t = [float(_capped_derivative(np.array([t]), lam, b)[0])]
    best = -math.inf
    for dt in at_t:
        vals = -np.sign(s - t) * (ds - dt) - kappa * np.abs(s - t)
        best = max(best, float(vals.max()))
    return best


def degree_of_nonconvexity(t: float, kappa: float, lam: float, b: float) -> Theta:
    """theta(t, kappa) for the capped-l1 penalty.

    Closed form max{0, lam/b - kappa * ||t| - b|} for |t| > b and
    max{0, lam/b - kappa * b} at t = 0; the grid supremum elsewhere.
    """
    if not b > 0 or kappa < 0:
        raise ConfigError("need b > 0 and kappa >= 0")
    if abs(t) > b:
        return Theta(max(0.0, lam / b - kappa * abs(abs(t) - b)), False)
    if t == 0:
        return Theta(max(0.0, lam / b - kappa * b), False)
    return Theta(degree_of_nonconvexity_grid(t, kappa, lam, b), True)


def _grad_q(D, x, z) -> np.ndarray:
    return 2.0 * (D.T @ (D @ z - x))


def _eq12_terms(D, x, lam, z) -> list[float]:
    """min_{j in S} |z_j| and lam / max_{j not in S} |dQ/dz_j| (lam/0 = inf)."""
    S = z != 0
    t1 = float(np.abs(z[S]).min()) if S.any() else math.inf
    g = np.abs(_grad_q(D, x, z)[~S])
    gmax = float(g.max()) if g.size else 0.0
    t2 = lam / gmax if gmax > 0 else math.inf
    return [t1, t2]


def _joint_terms(D, x, lam, z) -> list[float]:
    """min_{j in S} |z_j| and max_{k not in S} lam / (dQ/dz_k - lam)_+ (lam/0 = inf)."""
    S = z != 0
    t1 = float(np.abs(z[S]).min()) if S.any() else math.inf
    g = _grad_q(D, x, z)[~S]
    if g.size == 0:
        return [t1, math.inf]
    pos = np.maximum(g - lam, 0.0)
    t2 = math.inf if np.any(pos == 0) else float((lam / pos).max())
    return [t1, t2]


def b_feasible_interval(z_hat, z_star, instance: ProblemInstance) -> float | None:
    """Upper end b_max of the open interval (0, b_max) for b, or None if empty."""
    D, x, lam = instance.dictionary, instance.signal, instance.lam
    terms = _eq12_terms(D, x, lam, np.asarray(z_hat, float)) + _eq12_terms(D, x, lam, np.asarray(z_star, float))
    b_max = min(terms)
    return b_max if b_max > 0 else None


def b_feasible_interval_joint(pairs: Sequence[tuple[ProblemInstance, np.ndarray]]) -> float | None:
    """b-condition of the randomized-variant bounds over (problem, code) pairs."""
    terms: list[float] = []
    for inst, z in pairs:
        terms += _joint_terms(inst.dictionary, inst.signal, inst.lam, np.asarray(z, float))
    b_max = min(terms)
    return b_max if b_max > 0 else None


def local_solution_residual(z, instance: ProblemInstance, b: float) -> float:
    """min over admissible subgradients R'(z; b) of ||2 D^T(Dz - x) + R'(z; b)||."""
    if not b > 0:
        raise ConfigError("b must be positive")
    z = np.asarray(z, dtype=float)
    lam = instance.lam
    g = _grad_q(instance.dictionary, instance.signal, z)
    a = np.abs(z)
    h = lam / b
    lo = np.where(a > b, 0.0, np.where(a < b, h * np.sign(z), 0.0))
    hi = lo.copy()
    zero = z == 0
    lo[zero], hi[zero] = -h, h
    kink = a == b
    lo[kink] = np.minimum(0.0, h * np.sign(z[kink]))
    hi[kink] = np.maximum(0.0, h * np.sign(z[kink]))
    r = g + np.clip(-g, lo, hi)
    return float(np.linalg.norm(r))


# --- certificates ------------------------------------------------------------

@dataclasses.dataclass
class BoundCertificate:
    kind: str
    bound_value: float
    actual_gap: float
    kappa0: float
    kappa: float
    b: float
    symmetric_difference: tuple[int, ...]
    assumptions: dict[str, bool]
    auxiliary: dict[str, float] = dataclasses.field(default_factory=dict)
    probabilistic: bool = False
    event_holds: bool | None = None
    parts: dict[str, "BoundCertificate"] = dataclasses.field(default_factory=dict)

    @property
    def assumptions_ok(self) -> bool:
        return all(self.assumptions.values())

    @property
    def holds(self) -> bool:
        return bool(self.actual_gap <= self.bound_value + GAP_SLACK)

    @property
    def violated(self) -> bool:
        """A binding certificate whose inequality fails."""
        return self.assumptions_ok and not self.holds

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else float(v)

        return {
            "kind": self.kind,
            "bound_value": num(self.bound_value),
            "actual_gap": num(self.actual_gap),
            "kappa0": num(self.kappa0),
            "kappa": num(self.kappa),
            "b": num(self.b),
            "symmetric_difference": list(self.symmetric_difference),
            "assumptions": dict(self.assumptions),
            "assumptions_ok": self.assumptions_ok,
            "holds": self.holds,
            "probabilistic": self.probabilistic,
            "event_holds": self.event_holds,
            "auxiliary": {k: num(v) for k, v in sorted(self.auxiliary.items())},
            "parts": {k: v.to_dict() for k, v in self.parts.items()},
        }


def _theta_norm(z, idx, kappa, lam, b) -> float:
    """Euclidean norm of theta(z_j, kappa) over j in idx."""
    if not idx:
        return 0.0
    vals = [degree_of_nonconvexity(float(z[j]), kappa, lam, b).value for j in idx]
    return float(np.linalg.norm(vals))


def _union(*sets) -> list[int]:
    return sorted(set().union(*map(set, sets)))


def _symdiff(a, b) -> list[int]:
    return sorted(set(a) ^ set(b))


def _restricted_sigma(D, cols) -> tuple[float, bool]:
    if not cols:
        return math.nan, True
    sub = D[:, cols]
    return sigma_min(sub), full_column_rank(sub)


def _local_premise(pairs, b) -> bool:
    if not (b > 0 and math.isfinite(b)):
        return False
    return all(local_solution_residual(z, inst, b) <= LOCAL_RESIDUAL_TOL for inst, z in pairs)


def _theorem1_single(z_hat, z_star, instance, kappa, b) -> BoundCertificate:
    z_hat = np.asarray(z_hat, float)
    z_star = np.asarray(z_star, float)
    S_hat, S_star = support(z_hat), support(z_star)
    U = _union(S_hat, S_star)
    F = _symdiff(S_hat, S_star)
    gap = float(np.linalg.norm(z_hat - z_star))
    kappa0, nonsingular = _restricted_sigma(instance.dictionary, U)
    if not U:
        return BoundCertificate("Theorem1", 0.0, gap, math.nan, math.nan, math.nan, (),
                                {"nonsingular": True})
    if kappa is None:
        kappa = kappa0**2 / 2
    b_max = b_feasible_interval(z_hat, z_star, instance)
    if b is None:
        b = b_max / 2 if b_max is not None and math.isfinite(b_max) else math.nan
    b_ok = b_max is not None and 0 < b < b_max
    assumptions = {
        "nonsingular": nonsingular,
        "kappa_range": bool(0 < kappa < kappa0**2),
        "b_feasible": bool(b_ok),
        "local_solutions": _local_premise([(instance, z_hat), (instance, z_star)], b),
    }
    denom = 2 * kappa0**2 - kappa
    if b > 0 and denom > 0:
        num = _theta_norm(z_hat, F, kappa, instance.lam, b)
        bound = num / denom
    else:
        num, bound = math.nan, math.nan
    return BoundCertificate("Theorem1", bound, gap, kappa0, kappa, b, tuple(F), assumptions,
                            auxiliary={"b_max": b_max if b_max is not None else math.nan,
                                       "numerator": num})


def theorem1_bound(z_hat, z_star, instance: ProblemInstance, kappa: float | None = None,
                   b: float | None = None, ties: Sequence[np.ndarray] | None = None) -> BoundCertificate:
    """Gap certificate ||z_hat - z*|| <= ||theta(z_hat_F, kappa)|| / (2 kappa0^2 - kappa).

    kappa0 = sigma_min(D restricted to supp(z_hat) u supp(z*)); kappa defaults to
    kappa0^2/2 and b to half the upper end of the admissible interval.  When
    `ties` lists several global optima the worst certificate is returned.
    """
    optima = list(ties) if ties else [z_star]
    certs = [_theorem1_single(z_hat, zs, instance, kappa, b) for zs in optima]
    return max(certs, key=_severity)


def _severity(c: BoundCertificate) -> tuple:
    excess = c.actual_gap - c.bound_value if math.isfinite(c.bound_value) else -math.inf
    return (c.assumptions_ok, excess)


def halko_error_constant(D, k: int, k0: int) -> float:
    """(1 + 17 sqrt(1 + k0/p)) s_{k0+1} + 8 sqrt(k)/(p+1) * sqrt(sum_{j>k0} s_j^2), p = k - k0."""
    p = k - k0
    if k0 < 2 or p < 4:
        raise HypothesisError(f"need k0 >= 2 and p = k - k0 >= 4, got k0={k0}, p={p}")
    s = singular_values(D)
    tail = s[k0:]
    s_next = float(tail[0]) if tail.size else 0.0
    tail_norm = float(np.sqrt(np.sum(tail**2)))
    return (1 + 17 * math.sqrt(1 + k0 / p)) * s_next + 8 * math.sqrt(k) / (p + 1) * tail_norm


def _optimal_part(kind, z_red, z_star, D, lam, b, kappa, slack_cap_name, slack, extra_term,
                  S_red) -> tuple[BoundCertificate, float, float]:
    """Bound on ||z* - z_red|| shared by the sketched and reduced problems."""
    G = _union(S_red, support(z_star))
    s0, nonsing = _restricted_sigma(D, G)
    if slack is None:
        slack = s0**2 if G else math.nan
    gap = float(np.linalg.norm(z_star - z_red))
    denom = 2 * s0**2 - slack
    if G and b > 0 and denom > 0:
        inner = [j for j in G if j in S_red]
        outer = [j for j in G if j not in S_red]
        num = math.hypot(_theta_norm(z_red, inner, kappa, lam, b),
                         _theta_norm(z_red, outer, kappa, lam, b))
        bound = (num + extra_term(s0)) / denom
    elif not G:
        bound = 0.0
    else:
        bound = math.nan
    assumptions = {
        f"nonsingular_{slack_cap_name}": nonsing,
        f"{slack_cap_name}_slack_range": bool(G) and bool(0 < slack < 2 * s0**2) or not G,
    }
    cert = BoundCertificate(kind, bound, gap, s0, slack, b, tuple(G), assumptions, probabilistic=True)
    return cert, s0, slack


def rma_gap_bounds(z_hat_tilde, z_tilde, z_star, instance: ProblemInstance,
                   sketch: SketchedDictionary, k0: int, init, kappa: float | None = None,
                   tau_slack: float | None = None, b: float | None = None) -> BoundCertificate:
    """Certificate for ||z* - z_hat_tilde|| <= b1 + b2 (sketched problem).

    z_tilde must be the global optimum of the sketched problem and z_star of
    the original one; `init` is the PGD start used for M0.  The returned
    certificate carries parts 'reduced' (||z_hat_tilde - z_tilde|| <= b1, a
    deterministic statement about the sketched problem) and 'optimal'
    (||z* - z_tilde|| <= b2, which holds when ||D - D~||_2 <= C_{k,k0}).
    """
    z_hat_tilde, z_tilde, z_star = (np.asarray(v, float) for v in (z_hat_tilde, z_tilde, z_star))
    D, x, lam = instance.dictionary, instance.signal, instance.lam
    Dt = sketch.dense()
    sk_inst = instance.with_data(Dt)
    S_hat, S_t = support(z_hat_tilde), support(z_tilde)

    b_max = b_feasible_interval_joint([(sk_inst, z_tilde), (instance, z_star), (sk_inst, z_hat_tilde)])
    if b is None:
        b = b_max / 2 if b_max is not None and math.isfinite(b_max) else math.nan
    b_ok = bool(b_max is not None and 0 < b < b_max)

    hyp_ok = True
    try:
        C = halko_error_constant(D, sketch.k, k0)
    except HypothesisError:
        C, hyp_ok = math.nan, False
    resid = float(np.linalg.norm(D - Dt, 2))
    event = bool(resid <= C) if hyp_ok else False

    # part 1: deterministic gap bound on the sketched problem
    U = _union(S_hat, S_t)
    F = _symdiff(S_hat, S_t)
    k0_sig, nonsing_red = _restricted_sigma(Dt, U)
    if kappa is None:
        kappa = k0_sig**2 / 2 if U else 0.0
    denom1 = 2 * k0_sig**2 - kappa
    if not U:
        b1 = 0.0
    elif b > 0 and denom1 > 0:
        b1 = _theta_norm(z_hat_tilde, F, kappa, lam, b) / denom1
    else:
        b1 = math.nan
    red_assumptions = {
        "nonsingular_reduced": nonsing_red,
        "kappa_range": (not U) or bool(0 < kappa < k0_sig**2),
        "b_feasible": b_ok,
        "local_solutions_reduced": _local_premise([(sk_inst, z_hat_tilde), (sk_inst, z_tilde)], b),
    }
    part1 = BoundCertificate("RmaReducedGap", b1, float(np.linalg.norm(z_hat_tilde - z_tilde)),
                             k0_sig, kappa, b, tuple(F), red_assumptions)

    # part 2: optimum of the sketched problem vs the original optimum
    init = np.asarray(init, float)
    L_init = objective(sk_inst, init)
    x_norm = float(np.linalg.norm(x))
    smax = sigma_max(D)

    def extra(tau0):
        M0 = (x_norm + math.sqrt(L_init)) / tau0
        return 2 * C * M0 * (2 * smax + C) + 2 * C * x_norm

    part2, tau0, tau_slack = _optimal_part("TheoremRmaOptimal", z_tilde, z_star, D, lam, b, kappa,
                                           "tau0", tau_slack, extra, S_t)
    part2.assumptions.update(halko_hypothesis=hyp_ok, b_feasible=b_ok)
    part2.event_holds = event

    total_assumptions = dict(red_assumptions)
    total_assumptions.update(part2.assumptions)
    total_assumptions["init_residual"] = bool(
        np.linalg.norm(x - Dt @ init) <= 1 + 1e-9)
    M0 = (x_norm + math.sqrt(L_init)) / tau0 if tau0 and math.isfinite(tau0) else math.nan
    total = BoundCertificate(
        "TheoremRmaSuboptimal", b1 + part2.bound_value,
        float(np.linalg.norm(z_star - z_hat_tilde)), k0_sig, kappa, b, tuple(F),
        total_assumptions,
        auxiliary={"C_k_k0": C, "M0": M0, "tau0": tau0, "tau_slack": tau_slack, "b1": b1,
                   "b2": part2.bound_value, "sketch_residual": resid,
                   "b_max": b_max if b_max is not None else math.nan, "k": sketch.k, "k0": k0},
        probabilistic=True, event_holds=event,
        parts={"reduced": part1, "optimal": part2},
    )
    return total


def rdr_gap_bounds(z_hat_bar, z_bar, z_star, instance: ProblemInstance, transform: JlTransform,
                   init, c: float = 1.0, delta: float = 0.1, kappa: float | None = None,
                   eta_slack: float | None = None, b: float | None = None) -> BoundCertificate:
    """Certificate for ||z* - z_hat_bar|| <= b1 + b2 (dimension-reduced problem).

    z_bar is the global optimum of min ||Tx - TDz||^2 + lam||z||_0 and z_hat_bar
    the PGD solution of that problem, both in original code units.  The
    statistical term uses sqrt((c/m) log(4/delta)); c is not known in closed
    form, so certificates are parameterized by it.
    """
    z_hat_bar, z_bar, z_star = (np.asarray(v, float) for v in (z_hat_bar, z_bar, z_star))
    D, x, lam = instance.dictionary, instance.signal, instance.lam
    T = transform.t
    m = transform.m
    red_inst = instance.with_data(T @ D, T @ x)
    Db, xb = red_inst.dictionary, red_inst.signal
    S_hat, S_b = support(z_hat_bar), support(z_bar)

    b_max = b_feasible_interval_joint([(red_inst, z_bar), (instance, z_star), (red_inst, z_hat_bar)])
    if b is None:
        b = b_max / 2 if b_max is not None and math.isfinite(b_max) else math.nan
    b_ok = bool(b_max is not None and 0 < b < b_max)

    m_ok = bool(m >= 4 * c * math.log(4 / delta))
    eps_m = math.sqrt(c / m * math.log(4 / delta))
    fro = float(np.linalg.norm(D))
    smax = sigma_max(D)

    U = _union(S_hat, S_b)
    F = _symdiff(S_hat, S_b)
    k0_sig, nonsing_red = _restricted_sigma(Db, U)
    if kappa is None:
        kappa = k0_sig**2 / 2 if U else 0.0
    denom1 = 2 * k0_sig**2 - kappa
    if not U:
        b1 = 0.0
    elif b > 0 and denom1 > 0:
        b1 = _theta_norm(z_hat_bar, F, kappa, lam, b) / denom1
    else:
        b1 = math.nan
    red_assumptions = {
        "nonsingular_reduced": nonsing_red,
        "kappa_range": (not U) or bool(0 < kappa < k0_sig**2),
        "b_feasible": b_ok,
        "local_solutions_reduced": _local_premise([(red_inst, z_hat_bar), (red_inst, z_bar)], b),
    }
    part1 = BoundCertificate("RdrReducedGap", b1, float(np.linalg.norm(z_hat_bar - z_bar)),
                             k0_sig, kappa, b, tuple(F), red_assumptions)

    init = np.asarray(init, float)
    L_init = objective(red_inst, init)
    x_norm = float(np.linalg.norm(x))

    def extra(eta0):
        M1 = (x_norm + math.sqrt(L_init)) / eta0
        return 2 * fro * M1 * eps_m * (smax + 1)

    part2, eta0, eta_slack = _optimal_part("TheoremRdrOptimal", z_bar, z_star, D, lam, b, kappa,
                                           "eta0", eta_slack, extra, S_b)
    part2.assumptions.update(m_hypothesis=m_ok, b_feasible=b_ok)

    # realized event of the matrix-product lemma for the two products in the proof
    P = np.eye(D.shape[0]) - T.T @ T
    Dz = D @ z_bar
    e1 = np.linalg.norm(D.T @ (P @ Dz)) <= fro * np.linalg.norm(Dz) * eps_m
    e2 = np.linalg.norm(D.T @ (P @ x)) <= fro * x_norm * eps_m
    event = bool(e1 and e2)
    part2.event_holds = event

    total_assumptions = dict(red_assumptions)
    total_assumptions.update(part2.assumptions)
    total_assumptions["init_residual"] = bool(np.linalg.norm(xb - Db @ init) <= 1 + 1e-9)
    M1 = (x_norm + math.sqrt(L_init)) / eta0 if eta0 and math.isfinite(eta0) else math.nan
    return BoundCertificate(
        "TheoremRdrSuboptimal", b1 + part2.bound_value,
        float(np.linalg.norm(z_star - z_hat_bar)), k0_sig, kappa, b, tuple(F), total_assumptions,
        auxiliary={"M1": M1, "eta0": eta0, "eta_slack": eta_slack, "c": c, "delta": delta,
                   "m": m, "eps_m": eps_m, "b1": b1, "b2": part2.bound_value,
                   "b_max": b_max if b_max is not None else math.nan},
        probabilistic=True, event_holds=event,
        parts={"reduced": part1, "optimal": part2},
    )


def sparse_eigenvalues(D, m: int) -> tuple[float, float]:
    """(kappa_-(m), kappa_+(m)): extreme ||D u||^2 over unit u with ||u||_0 <= m.

    Eigenvalues of principal submatrices interlace, so supports of size
    exactly m attain both extremes.
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[1]
    if n > MAX_ENUM_N:
        raise RefuseEnumeration(f"n = {n} exceeds the enumeration limit {MAX_ENUM_N}")
    if not 1 <= m <= n:
        raise ConfigError("m must lie in [1, n]")
    G = D.T @ D
    lo, hi = math.inf, -math.inf
    for S in itertools.combinations(range(n), m):
        ev = np.linalg.eigvalsh(G[np.ix_(S, S)])
        lo = min(lo, float(ev[0]))
        hi = max(hi, float(ev[-1]))
    return max(lo, 0.0), hi


def product_projection_check(A, B, transform_family, m: int, c: float, delta: float,
                             trials: int, seed: int = 0) -> float:
    """Empirical rate of ||A T^T T B - A B||_2 > ||A||_F ||B||_F sqrt((c/m) log(4/delta))."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[1] != B.shape[0]:
        raise ConfigError("inner dimensions of A and B differ")
    if m < 4 * c * math.log(4 / delta):
        raise HypothesisError(f"need m >= 4 c log(4/delta) = {4 * c * math.log(4 / delta):.3f}")
    d = A.shape[1]
    AB = A @ B
    limit = np.linalg.norm(A) * np.linalg.norm(B) * math.sqrt(c / m * math.log(4 / delta))
    failures = 0
    for i in range(trials):
        T = sample_jl(m, d, transform_family, trial_seed(seed, i)).t
        err = spectral_norm((A @ T.T) @ (T @ B) - AB, n_iter=500, tol=1e-12, seed=i)
        failures += err > limit
    return failures / trials


def jl_failure_rate(v, m: int, eps: float, dist, trials: int, seed: int = 0) -> float:
    """Fraction of fresh transforms with ||T v|| outside [(1-eps)||v||, (1+eps)||v||]."""
    v = np.asarray(v, dtype=float)
    nv = float(np.linalg.norm(v))
    fails = 0
    for i in range(trials):
        r = float(np.linalg.norm(sample_jl(m, v.size, dist, trial_seed(seed, i)).t @ v))
        fails += not ((1 - eps) * nv <= r <= (1 + eps) * nv)
    return fails / trials


def trial_seed(seed: int, i: int) -> int:
    """Seed of trial i in a campaign keyed by `seed`."""
    return (int(seed) << 32) + int(i)
