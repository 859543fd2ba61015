"""Sign and index conventions shared by every curvature computation.

Each entry is pinned by an invariant checked in the test-suite; the digest
goes into every report so that results computed under different conventions
are never compared silently.
"""
import hashlib
import json

LEDGER = {
    "spray": "G^i = 1/4 g^il ([F^2]_{x^k y^l} y^k - [F^2]_{x^l}); geodesics solve x'' + 2 G(x, x') = 0",
    "nonlinear_connection": "N^i_j = dG^i/dy^j; delta_j = d/dx^j - N^m_j d/dy^m",
    "cartan_horizontal": "Gamma^i_jk = 1/2 g^is (delta_j g_sk + delta_k g_js - delta_s g_jk)",
    "nonlinear_curvature": "Omega^m_kl = delta_k N^m_l - delta_l N^m_k",
    "hh_curvature": ("R_j^i_kl = delta_k Gamma^i_jl - delta_l Gamma^i_jk + Gamma^i_mk Gamma^m_jl "
                     "- Gamma^i_ml Gamma^m_jk + C^i_jm Omega^m_kl, i.e. R(delta_k, delta_l) d_j = R_j^i_kl d_i"),
    "hh_lowering": "R_ijkl = g_im R_j^m_kl (output index first, acted-on index second)",
    "bridge_sign": "+1: g_im R^m_k = R_ijkl y^j y^l",
    "riemann_map": "R^i_k = 2 dG^i/dx^k - y^j d2G^i/dx^j dy^k + 2 G^j d2G^i/dy^j dy^k - dG^i/dy^j dG^j/dy^k",
    "h_curvature_3": "R^i_jk = 1/3 (dR^i_k/dy^j - dR^i_j/dy^k), R_ijk = g_im R^m_jk, R_i0k = R_ijk y^j",
    "ricci": "R_ij = g^rm R_imjr with R_imjr lowered as above",
    "landsberg": "L_ijk = -1/2 y_m B^m_ijk, J_i = g^jk L_ijk",
    "transport": "dV^i/dt + Gamma^i_jk(c, c') V^j c'^k = 0 (Cartan horizontal transport)",
}

BRIDGE_SIGN = 1.0


def digest() -> str:
    blob = json.dumps(LEDGER, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
