"""Independent reference computations shared by the test modules.

Everything here deliberately recomputes results through different routes
than the library's production paths: hand-derived scalar formulas for the
reduced two-mode state, and a fully unitary circuit that keeps every
environment and announcement-purification mode so that Holevo bounds can
be evaluated from the eavesdropper's side directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cvmdi import (
    GaussianState,
    apply_beamsplitter,
    epr_state,
    homodyne_condition,
    heterodyne_condition,
    linear_feedforward,
    partial_trace,
    symplectic_form,
    tensor,
    von_neumann_entropy,
)
from cvmdi.protocols import ProtocolParams, AddedNoiseParams


def c_edge(a: float, b: float) -> float:
    """Largest c keeping the symmetric two-mode form physical (lambda2 >= 1)."""
    disc = (a * b - 1.0) ** 2 - (a * a - 1.0) * (b * b - 1.0)
    u = (a * b - 1.0) - math.sqrt(max(disc, 0.0))
    return math.sqrt(max(u, 0.0))


def reference_abc(params: ProtocolParams, gain: float) -> tuple[float, float, float]:
    """Hand-derived closed forms for the reduced (a, b, c) of the circuit."""
    t1, t2 = params.t_1, params.t_2
    eta, vel = params.eta, params.v_el
    sa = math.sqrt(params.v_a ** 2 - 1.0)
    sb = math.sqrt(params.v_b ** 2 - 1.0)
    arm_a = params.v_a if t1 >= 1.0 else t1 * params.v_a + (1.0 - t1) + params.eps1
    arm_b = params.v_b if t2 >= 1.0 else t2 * params.v_b + (1.0 - t2) + params.eps2
    v_relay = eta * (arm_a + arm_b) / 2.0
    if eta < 1.0:
        v_relay += (1.0 - eta) + vel
    a = params.v_a
    b = params.v_b + gain * gain * v_relay - gain * math.sqrt(2.0 * eta * t2) * sb
    c = gain * math.sqrt(eta * t1 / 2.0) * sa
    return a, b, c


@dataclass
class FullCircuit:
    """Unitary-circuit oracle state with mode bookkeeping."""

    state: GaussianState
    alice: int
    bob: int            # B4 (plain) or B5 (with added noise)
    eve: list[int]      # channel modes, detector modes, announcement modes
    bob_aux: list[int]  # trusted noise modes N1, N3 (empty without noise)


def unitary_circuit(params: ProtocolParams, gain: float,
                    noise: AddedNoiseParams | None = None) -> FullCircuit:
    """Build the whole protocol as a pure global state.

    Channels and detectors carry their EPR purifications, and the relay
    feedforward is completed to a symplectic transformation so that the
    publicly announced quadratures survive as explicit modes (they belong
    to the eavesdropper).  The reduced (alice, bob) state matches the
    production pipeline; entropies of the eve partition give the Holevo
    bounds without any purity shortcut.
    """
    state = tensor(epr_state(params.v_a), epr_state(params.v_b))
    idx = {"A3": 0, "A1": 1, "B3": 2, "B1": 3}
    eve: list[int] = []

    def add_epr(v):
        nonlocal state
        first = state.n_modes
        state = tensor(state, epr_state(v))
        return first, first + 1

    if params.t_1 < 1.0:
        w1 = 1.0 + params.eps1 / (1.0 - params.t_1)
        e_in, e_keep = add_epr(w1)
        state = apply_beamsplitter(state, idx["A1"], e_in, params.t_1)
        eve += [e_in, e_keep]
    if params.t_2 < 1.0:
        w2 = 1.0 + params.eps2 / (1.0 - params.t_2)
        e_in, e_keep = add_epr(w2)
        state = apply_beamsplitter(state, idx["B1"], e_in, params.t_2)
        eve += [e_in, e_keep]

    # relay: slot A1 <- (A1 - B1)/sqrt(2) = C, slot B1 <- (A1 + B1)/sqrt(2) = D
    state = apply_beamsplitter(state, idx["B1"], idx["A1"], 0.5)
    idx["C"], idx["D"] = idx.pop("A1"), idx.pop("B1")

    if params.eta < 1.0:
        anc = 1.0 + params.v_el / (1.0 - params.eta)
        for port in ("C", "D"):
            a_in, a_keep = add_epr(anc)
            state = apply_beamsplitter(state, idx[port], a_in, params.eta)
            eve += [a_in, a_keep]

    # symplectic completion of the feedforward as two QND sum gates, so the
    # announced quadratures survive as modes C', D' instead of being destroyed
    n = state.n_modes
    b3x, b3p = 2 * idx["B3"], 2 * idx["B3"] + 1
    cx, cp = 2 * idx["C"], 2 * idx["C"] + 1
    dx, dp = 2 * idx["D"], 2 * idx["D"] + 1
    s1 = np.eye(2 * n)
    s1[b3x, cx] = gain    # B4x = B3x + g Cx
    s1[cp, b3p] = -gain   # C'p = Cp - g B3p
    s2 = np.eye(2 * n)
    s2[b3p, dp] = gain    # B4p = B3p + g Dp
    s2[dx, b3x] = -gain   # D'x = Dx - g B4x
    s = s2 @ s1
    omega = symplectic_form(n)
    assert np.allclose(s @ omega @ s.T, omega), "feedforward completion not symplectic"
    state = linear_feedforward(state, s)
    idx["B4"] = idx.pop("B3")
    eve += [idx["C"], idx["D"]]

    bob_aux: list[int] = []
    bob = idx["B4"]
    if noise is not None and noise.t_r < 1.0:
        n2, n1 = add_epr(noise.n_r)
        state = apply_beamsplitter(state, idx["B4"], n2, noise.t_r)
        bob_aux = [n1, n2]  # n2 slot now holds N3
    return FullCircuit(state=state, alice=idx["A3"], bob=bob, eve=eve, bob_aux=bob_aux)


def oracle_two_mode(circ: FullCircuit) -> tuple[float, float, float]:
    red = partial_trace(circ.state, [circ.alice, circ.bob])
    cov = red.cov
    return float(cov[0, 0]), float(cov[2, 2]), float(cov[0, 2])


def oracle_holevo(circ: FullCircuit, conditioning: str) -> float:
    """S(rho_E) - S(rho_E | Bob's measurement), from the eve partition."""
    s_e = von_neumann_entropy(partial_trace(circ.state, circ.eve))
    if conditioning == "homodyne":
        cond = homodyne_condition(circ.state, circ.bob, "x")
    else:
        cond = heterodyne_condition(circ.state, circ.bob)
    shifted = [m if m < circ.bob else m - 1 for m in circ.eve]
    s_e_cond = von_neumann_entropy(partial_trace(cond, shifted))
    return s_e - s_e_cond


def oracle_mutual_info_homodyne(a: float, b: float, c: float) -> float:
    return 0.5 * math.log2(a * b / (a * b - c * c))
