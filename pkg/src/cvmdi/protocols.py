"""Entanglement-based CV-MDI circuits and asymptotic key rates.

Three reverse-reconciliation protocol variants share one relay circuit:

* ``squeezed``           - both parties homodyne their retained EPR modes.
* ``squeezed-modified``  - as above, with trusted Gaussian noise mixed into
                           Bob's mode before his homodyne detection.
* ``coherent``           - both parties heterodyne (coherent-state baseline).

Sign conventions (fixed so the reduced Alice-Bob state has the symmetric
two-mode form a,b,c with +c on x and -c on p):

    A1 = sqrt(T1) A2 + sqrt(1-T1) E1        channel with entangling cloner
    B1 = sqrt(T2) B2 + sqrt(1-T2) E2
    C  = (A1 - B1)/sqrt(2),  D = (A1 + B1)/sqrt(2)
    C2 = sqrt(eta) C + sqrt(1-eta) F0       practical detector model
    D2 = sqrt(eta) D + sqrt(1-eta) I0
    B4x = B3x + g C2x,  B4p = B3p + g D2p   displacement with gain g

All excess noises are referred to the channel output (the relay input):
a channel of transmittance T delivers variance T*V + (1-T) + eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import InvalidParameterError, NumericDomainError, StructuralError
from .gaussian import (
    GaussianState,
    TwoModeCov,
    apply_beamsplitter,
    epr_state,
    g_func,
    homodyne_condition,
    linear_feedforward,
    partial_trace,
    symplectic_eigenvalues,
    tensor,
    thermal_state,
    two_mode_symplectic,
    von_neumann_entropy,
)
from .search import golden_section_max

PROTOCOLS = ("squeezed", "squeezed-modified", "coherent")

# chi < -CHI_CLAMP_TOL signals a bug; above it the value is clamped to 0
# (pure-state limit roundoff) and flagged on the report.
CHI_CLAMP_TOL = 1e-9

GAIN_TOL = 1e-6


@dataclass(frozen=True)
class ProtocolParams:
    """Full experiment configuration in shot-noise units and km."""

    v_a: float
    v_b: float
    l_ac: float
    l_bc: float
    alpha: float = 0.2
    eps1: float = 0.002
    eps2: float = 0.002
    eta: float = 1.0
    v_el: float = 0.0
    beta: float = 1.0
    gain: float | None = None
    protocol: str = "squeezed"

    def __post_init__(self):
        checks = [
            (self.v_a >= 1.0, f"v_a must be >= 1, got {self.v_a}"),
            (self.v_b >= 1.0, f"v_b must be >= 1, got {self.v_b}"),
            (self.l_ac >= 0.0, f"l_ac must be >= 0, got {self.l_ac}"),
            (self.l_bc >= 0.0, f"l_bc must be >= 0, got {self.l_bc}"),
            (self.alpha >= 0.0, f"alpha must be >= 0, got {self.alpha}"),
            (self.eps1 >= 0.0, f"eps1 must be >= 0, got {self.eps1}"),
            (self.eps2 >= 0.0, f"eps2 must be >= 0, got {self.eps2}"),
            (0.0 < self.eta <= 1.0, f"eta must be in (0, 1], got {self.eta}"),
            (self.v_el >= 0.0, f"v_el must be >= 0, got {self.v_el}"),
            (0.0 <= self.beta <= 1.0, f"beta must be in [0, 1], got {self.beta}"),
            (self.gain is None or self.gain >= 0.0, f"gain must be >= 0, got {self.gain}"),
            (self.protocol in PROTOCOLS, f"unknown protocol {self.protocol!r}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidParameterError(msg)
        if self.eta == 1.0 and self.v_el != 0.0:
            raise InvalidParameterError(
                "eta = 1 requires v_el = 0: the detector ancilla variance "
                "1 + v_el/(1 - eta) diverges")

    @property
    def t_1(self) -> float:
        return channel_transmittance(self.l_ac, self.alpha)

    @property
    def t_2(self) -> float:
        return channel_transmittance(self.l_bc, self.alpha)


@dataclass(frozen=True)
class AddedNoiseParams:
    """Trusted-noise beamsplitter: EPR of variance n_r mixed in at t_r."""

    t_r: float
    n_r: float

    def __post_init__(self):
        if not 0.0 < self.t_r <= 1.0:
            raise InvalidParameterError(f"t_r must be in (0, 1], got {self.t_r}")
        if self.n_r < 1.0:
            raise InvalidParameterError(f"n_r must be >= 1, got {self.n_r}")

    @property
    def chi_n(self) -> float:
        return (1.0 - self.t_r) * self.n_r / self.t_r

    @classmethod
    def from_chi_n(cls, chi_n: float) -> "AddedNoiseParams":
        """Canonical realization of a target added noise.

        n_r = 1 + chi_n with t_r = (1 + chi_n)/(1 + 2 chi_n) keeps n_r >= 1
        for every chi_n >= 0 and degenerates to the identity at chi_n = 0.
        The key rate depends on (t_r, n_r) only through chi_n.
        """
        if chi_n < 0.0:
            raise InvalidParameterError(f"chi_n must be >= 0, got {chi_n}")
        return cls(t_r=(1.0 + chi_n) / (1.0 + 2.0 * chi_n), n_r=1.0 + chi_n)


@dataclass(frozen=True)
class KeyRateReport:
    """One evaluated parameter point: everything a results row needs."""

    mutual_info: float
    holevo: float
    key_rate: float
    lambdas: tuple[float, ...]
    gain_used: float
    reduced: TwoModeCov
    chi_n: float = 0.0
    flags: tuple[str, ...] = ()


def channel_transmittance(length_km: float, alpha_db_per_km: float = 0.2) -> float:
    """Fiber transmittance 10^(-alpha L / 10)."""
    if length_km < 0.0 or alpha_db_per_km < 0.0:
        raise InvalidParameterError("length and loss coefficient must be >= 0")
    return 10.0 ** (-alpha_db_per_km * length_km / 10.0)


def cloner_variance(transmittance: float, eps: float) -> float:
    """Variance of the entangling-cloner mode replacing a lossy channel.

    W = 1 + eps/(1 - T) makes the channel output variance exactly
    T*V + (1-T) + eps, i.e. eps is the output-referred excess noise.
    A lossless channel (T = 1) carries no cloner mode at all.
    """
    if transmittance <= 0.0:
        raise InvalidParameterError(f"transmittance must be positive, got {transmittance}")
    if transmittance >= 1.0:
        raise InvalidParameterError("lossless channel: no cloner mode is inserted")
    if eps < 0.0:
        raise InvalidParameterError(f"excess noise must be >= 0, got {eps}")
    return 1.0 + eps / (1.0 - transmittance)


def _lossy_channel(state: GaussianState, mode: int, transmittance: float,
                   eps: float) -> GaussianState:
    """Replace a mode by its image through an entangling-cloner channel."""
    if transmittance >= 1.0:
        return state
    w = cloner_variance(transmittance, eps)
    n = state.n_modes
    state = tensor(state, thermal_state(w))
    state = apply_beamsplitter(state, mode, n, transmittance)
    return partial_trace(state, list(range(n)))


@lru_cache(maxsize=128)
def _relay_state(params: ProtocolParams) -> GaussianState:
    """Gain-independent circuit prefix: modes (A3, C2, B3, D2).

    Cached because gain optimization re-evaluates the feedforward many
    times per parameter point; ProtocolParams is frozen and hashable.
    """
    state = tensor(epr_state(params.v_a), epr_state(params.v_b))  # (A3, A2, B3, B2)
    state = _lossy_channel(state, 1, params.t_1, params.eps1)     # A2 -> A1
    state = _lossy_channel(state, 3, params.t_2, params.eps2)     # B2 -> B1
    # Relay 50:50: slot 1 <- (A1 - B1)/sqrt(2) = C, slot 3 <- (A1 + B1)/sqrt(2) = D
    state = apply_beamsplitter(state, 3, 1, 0.5)
    if params.eta < 1.0:
        ancilla = 1.0 + params.v_el / (1.0 - params.eta)
        for slot in (1, 3):
            n = state.n_modes
            state = tensor(state, thermal_state(ancilla))
            state = apply_beamsplitter(state, slot, n, params.eta)
            state = partial_trace(state, list(range(n)))
    return state


def _displaced_pair(params: ProtocolParams, gain: float) -> GaussianState:
    """Two-mode state (A3, B4) after the feedforward displacement."""
    relay = _relay_state(params)
    m = np.zeros((4, 8))
    m[0, 0] = 1.0                      # A3x
    m[1, 1] = 1.0                      # A3p
    m[2, 4] = 1.0                      # B4x = B3x + g C2x
    m[2, 2] = gain
    m[3, 5] = 1.0                      # B4p = B3p + g D2p
    m[3, 7] = gain
    return linear_feedforward(relay, m)


def build_mdi_state(params: ProtocolParams, noise: AddedNoiseParams | None = None,
                    gain: float | None = None, validate: bool = True) -> GaussianState:
    """Assemble the kept-mode state of the full EB circuit.

    Returns (A3, B4) for the plain circuit, or (A3, B5, N1, N3) when the
    trusted-noise beamsplitter is present.  ``gain`` overrides
    ``params.gain``; one of the two must be set.
    """
    g = gain if gain is not None else params.gain
    if g is None:
        raise InvalidParameterError(
            "build_mdi_state needs a concrete gain; optimize it with optimal_gain first")
    if g < 0.0:
        raise InvalidParameterError(f"gain must be >= 0, got {g}")
    state = _displaced_pair(params, g)
    if validate:
        state.require_physical(context="feedforward")
    if noise is None:
        return state
    if noise.t_r >= 1.0:
        return state
    state = tensor(state, epr_state(noise.n_r))       # (A3, B4, N2, N1)
    state = apply_beamsplitter(state, 1, 2, noise.t_r)  # slot1 <- B5, slot2 <- N3
    state = partial_trace(state, [0, 1, 3, 2])          # (A3, B5, N1, N3)
    if validate:
        state.require_physical(context="added-noise")
    return state


def extract_two_mode(state: GaussianState, tol: float = 1e-8) -> TwoModeCov:
    """Read (a, b, c) off a two-mode covariance of the symmetric form.

    Any x/p asymmetry or x-p cross coupling beyond tol * max-entry signals
    a circuit-assembly bug and raises StructuralError.
    """
    if state.n_modes != 2:
        raise InvalidParameterError(f"expected a two-mode state, got {state.n_modes} modes")
    cov = state.cov
    scale = max(1.0, float(np.abs(cov).max()))
    a, b = cov[0, 0], cov[2, 2]
    c = cov[0, 2]
    expected = np.array([
        [a, 0.0, c, 0.0],
        [0.0, a, 0.0, -c],
        [c, 0.0, b, 0.0],
        [0.0, -c, 0.0, b],
    ])
    dev = float(np.abs(cov - expected).max())
    if dev > tol * scale:
        raise StructuralError(
            f"covariance deviates from the symmetric two-mode form by {dev} "
            f"(tolerance {tol * scale})")
    return TwoModeCov(a=float(a), b=float(b), c=float(c))


def mutual_information_homodyne(tm: TwoModeCov) -> float:
    """Gaussian mutual information for matched homodyne pairs, bits/use."""
    denom = tm.a * tm.b - tm.c * tm.c
    if denom <= 0.0:
        raise NumericDomainError(f"ab - c^2 = {denom} is not positive")
    return 0.5 * math.log2(tm.a * tm.b / denom)


def mutual_information_heterodyne(tm: TwoModeCov) -> float:
    """Gaussian mutual information for heterodyne on both sides, bits/use.

    Both quadratures are measured at a one-unit vacuum penalty each.
    """
    prod = (tm.a + 1.0) * (tm.b + 1.0)
    denom = prod - tm.c * tm.c
    if denom <= 0.0:
        raise NumericDomainError(f"(a+1)(b+1) - c^2 = {denom} is not positive")
    return math.log2(prod / denom)


def _clamp_chi(chi: float) -> tuple[float, bool]:
    if chi >= 0.0:
        return chi, False
    if chi < -CHI_CLAMP_TOL:
        raise NumericDomainError(f"Holevo bound came out {chi} < -{CHI_CLAMP_TOL}: likely a bug")
    return 0.0, True


def _holevo_squeezed_detail(tm: TwoModeCov) -> tuple[float, tuple[float, ...], bool]:
    lam1, lam2 = two_mode_symplectic(tm.a, tm.b, tm.c)
    lam3_sq = tm.a * (tm.a - tm.c * tm.c / tm.b)
    if lam3_sq <= 0.0:
        raise NumericDomainError(f"conditional eigenvalue squared {lam3_sq} is not positive")
    lam3 = math.sqrt(lam3_sq)
    chi = g_func(max(lam1 - 1.0, 0.0) / 2.0) + g_func(max(lam2 - 1.0, 0.0) / 2.0) \
        - g_func(max(lam3 - 1.0, 0.0) / 2.0)
    chi, clamped = _clamp_chi(chi)
    return chi, (lam1, lam2, lam3), clamped


def _holevo_coherent_detail(tm: TwoModeCov) -> tuple[float, tuple[float, ...], bool]:
    lam1, lam2 = two_mode_symplectic(tm.a, tm.b, tm.c)
    lam3 = tm.a - tm.c * tm.c / (tm.b + 1.0)
    if lam3 <= 0.0:
        raise NumericDomainError(f"conditional eigenvalue {lam3} is not positive")
    chi = g_func(max(lam1 - 1.0, 0.0) / 2.0) + g_func(max(lam2 - 1.0, 0.0) / 2.0) \
        - g_func(max(lam3 - 1.0, 0.0) / 2.0)
    chi, clamped = _clamp_chi(chi)
    return chi, (lam1, lam2, lam3), clamped


def _holevo_modified_detail(state: GaussianState,
                            pre_noise: TwoModeCov) -> tuple[float, tuple[float, ...], bool]:
    # Eve purifies the channel, not Bob's trusted noise: the unconditional
    # term keeps the eigenvalue pair of the pre-noise (A3, B4) state, and
    # the conditional term includes the retained noise modes N1, N3.
    lam1, lam2 = two_mode_symplectic(pre_noise.a, pre_noise.b, pre_noise.c)
    cond = homodyne_condition(state, mode=1, quadrature="x")
    cond_lams = symplectic_eigenvalues(cond)
    chi = g_func(max(lam1 - 1.0, 0.0) / 2.0) + g_func(max(lam2 - 1.0, 0.0) / 2.0)
    for lam in cond_lams:
        chi -= g_func(max(float(lam) - 1.0, 0.0) / 2.0)
    chi, clamped = _clamp_chi(chi)
    return chi, (lam1, lam2, *(float(v) for v in cond_lams)), clamped


def holevo_rr_squeezed(tm: TwoModeCov) -> float:
    """Eve's bound on Bob's homodyne data, from the closed eigenvalue forms."""
    return _holevo_squeezed_detail(tm)[0]


def holevo_rr_coherent(tm: TwoModeCov) -> float:
    """Eve's bound on Bob's heterodyne data (coherent-state baseline)."""
    return _holevo_coherent_detail(tm)[0]


def holevo_rr_modified(state: GaussianState, pre_noise: TwoModeCov) -> float:
    """Eve's bound for the trusted-noise protocol.

    ``state`` is the four-mode (A3, B5, N1, N3) output of build_mdi_state;
    ``pre_noise`` the (a, b, c) of the same circuit without the noise stage.
    """
    if state.n_modes != 4:
        raise InvalidParameterError(f"expected the 4-mode noisy state, got {state.n_modes} modes")
    return _holevo_modified_detail(state, pre_noise)[0]


def holevo_generic(state: GaussianState, measured_mode: int, conditioning: str) -> float:
    """Conditioning-based Holevo bound: S(state) - S(state | Bob's data).

    The generic engine: full von Neumann entropies on the kept-mode state,
    with homodyne ('x'-quadrature) or heterodyne conditioning on Bob's mode.
    Used as an independent cross-check of the closed-form routes.
    """
    if conditioning == "homodyne":
        cond = homodyne_condition(state, measured_mode, "x")
    elif conditioning == "heterodyne":
        from .gaussian import heterodyne_condition
        cond = heterodyne_condition(state, measured_mode)
    else:
        raise InvalidParameterError(f"unknown conditioning {conditioning!r}")
    return von_neumann_entropy(state) - von_neumann_entropy(cond)


def _resolve_noise(params: ProtocolParams,
                   noise: AddedNoiseParams | None) -> AddedNoiseParams | None:
    if params.protocol == "squeezed-modified":
        if noise is None:
            raise InvalidParameterError(
                "protocol 'squeezed-modified' needs AddedNoiseParams "
                "(use AddedNoiseParams.from_chi_n or optimize_added_noise)")
        return noise
    if noise is not None:
        raise InvalidParameterError(
            f"protocol {params.protocol!r} does not take added-noise parameters")
    return None


def _key_rate_at_gain(params: ProtocolParams, noise: AddedNoiseParams | None,
                      gain: float, validate: bool = False) -> float:
    """Key rate in bits/use at a fixed gain; fast path for the optimizer."""
    pair = build_mdi_state(params, noise=None, gain=gain, validate=validate)
    tm = extract_two_mode(pair)
    if params.protocol == "coherent":
        i_ab = mutual_information_heterodyne(tm)
        chi, _, _ = _holevo_coherent_detail(tm)
    elif params.protocol == "squeezed":
        i_ab = mutual_information_homodyne(tm)
        chi, _, _ = _holevo_squeezed_detail(tm)
    else:
        assert noise is not None
        noisy = TwoModeCov(tm.a, tm.b + noise.chi_n, tm.c)
        i_ab = mutual_information_homodyne(noisy)
        if noise.t_r >= 1.0:
            chi, _, _ = _holevo_squeezed_detail(tm)
        else:
            state4 = build_mdi_state(params, noise=noise, gain=gain, validate=validate)
            chi, _, _ = _holevo_modified_detail(state4, tm)
    return params.beta * i_ab - chi


def gain_bracket(params: ProtocolParams) -> float:
    """Upper edge of the displacement-gain search interval."""
    return 4.0 * math.sqrt(2.0 / (params.eta * params.t_2))


def optimal_gain(params: ProtocolParams, noise: AddedNoiseParams | None = None) -> float:
    """Key-rate-maximizing displacement gain, by golden-section search.

    Searches [0, 4 sqrt(2/(eta T2))] to tolerance 1e-6; if the optimum
    lands on the upper edge the bracket is doubled once, after which an
    edge optimum raises NumericDomainError.
    """
    noise = _resolve_noise(params, noise)

    def objective(g: float) -> float:
        return _key_rate_at_gain(params, noise, g)

    hi = gain_bracket(params)
    for attempt in range(2):
        g_star, _ = golden_section_max(objective, 0.0, hi, GAIN_TOL)
        if g_star < hi - 2.0 * GAIN_TOL:
            return g_star
        hi *= 2.0
    raise NumericDomainError(
        f"gain optimum stuck at the search edge {hi / 2.0} even after widening")


def key_rate(params: ProtocolParams, noise: AddedNoiseParams | None = None) -> KeyRateReport:
    """Secret key rate K = beta I(A:B) - chi(B:E) for one parameter point.

    Assembles the circuit, optimizes the displacement gain unless
    ``params.gain`` is set, and evaluates the protocol variant selected by
    ``params.protocol``.
    """
    noise = _resolve_noise(params, noise)
    g = params.gain if params.gain is not None else optimal_gain(params, noise)
    try:
        pair = build_mdi_state(params, noise=None, gain=g)
        tm = extract_two_mode(pair)
        if params.protocol == "coherent":
            i_ab = mutual_information_heterodyne(tm)
            chi, lams, clamped = _holevo_coherent_detail(tm)
            reduced = tm
            chi_n = 0.0
        elif params.protocol == "squeezed":
            i_ab = mutual_information_homodyne(tm)
            chi, lams, clamped = _holevo_squeezed_detail(tm)
            reduced = tm
            chi_n = 0.0
        else:
            assert noise is not None
            chi_n = noise.chi_n
            reduced = TwoModeCov(tm.a, tm.b + chi_n, tm.c)
            i_ab = mutual_information_homodyne(reduced)
            if noise.t_r >= 1.0:
                chi, lams, clamped = _holevo_squeezed_detail(tm)
            else:
                state4 = build_mdi_state(params, noise=noise, gain=g)
                chi, lams, clamped = _holevo_modified_detail(state4, tm)
    except (NumericDomainError, StructuralError) as exc:
        raise type(exc)(f"{exc} [at {params}]") from exc
    flags = ("holevo_clamped",) if clamped else ()
    return KeyRateReport(
        mutual_info=i_ab,
        holevo=chi,
        key_rate=params.beta * i_ab - chi,
        lambdas=lams,
        gain_used=g,
        reduced=reduced,
        chi_n=chi_n,
        flags=flags,
    )


def with_geometry(params: ProtocolParams, l_ac: float | None = None,
                  l_bc: float | None = None) -> ProtocolParams:
    """Copy of params with channel lengths replaced."""
    kw = {}
    if l_ac is not None:
        kw["l_ac"] = l_ac
    if l_bc is not None:
        kw["l_bc"] = l_bc
    return replace(params, **kw)
