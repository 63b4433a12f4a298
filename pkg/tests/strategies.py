from __future__ import annotations

from hypothesis import strategies as st

from brwlab.model import ModelParams


@st.composite
def params(draw, min_beta=1e-3, max_beta=20.0):
    qp = draw(st.floats(0.05, 10.0))
    qm = qp + draw(st.floats(0.05, 20.0))
    beta = draw(st.floats(min_beta, max_beta))
    return ModelParams(qp, qm, beta)
