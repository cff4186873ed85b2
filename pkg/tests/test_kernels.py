import numpy as np
import pytest

from nlsechan import _kernels
from nlsechan._kernels import get_backend

try:
    get_backend("compiled")
    HAS_COMPILED = True
except ImportError:
    HAS_COMPILED = False

needs_compiled = pytest.mark.skipif(not HAS_COMPILED, reason="extension not built")


def test_backend_reported():
    assert _kernels.BACKEND in ("compiled", "python")


def test_get_backend_rejects_unknown():
    with pytest.raises(ValueError):
        get_backend("gpu")


@needs_compiled
@pytest.mark.parametrize("case", [
    dict(y=1.1 - 0.3j, gl=0.5, ql=1e-3, p=1.0, pv=9e-3),
    dict(y=0.02 + 0.01j, gl=0.0, ql=1e-2, p=1.0, pv=9e-2),
    dict(y=-2.0 + 1.5j, gl=2.0, ql=1e-4, p=4.0, pv=9e-4),
])
def test_mi_logpout_parity(case):
    py, comp = get_backend("python"), get_backend("compiled")
    rng = np.random.default_rng(17)
    z = rng.standard_normal((2, 2048))
    a = py.mi_logpout(case["y"], z[0], z[1], case["gl"], case["ql"], case["p"], case["pv"])
    b = comp.mi_logpout(case["y"], z[0], z[1], case["gl"], case["ql"], case["p"], case["pv"])
    assert a[0] == pytest.approx(b[0], rel=1e-12)
    assert a[1] == pytest.approx(b[1], rel=1e-12)


@needs_compiled
@pytest.mark.parametrize("scheme", [0, 1])
def test_sde_parity(scheme):
    py, comp = get_backend("python"), get_backend("compiled")
    rng = np.random.default_rng(23)
    # unit-circle inputs: keeps Euler-Maruyama inside its stability region
    x = np.exp(2j * np.pi * rng.random(128))
    z = rng.standard_normal((160, 2, 128))
    ya = py.sde_rotation(x, z, 0.3, 2e-3, scheme)
    yb = comp.sde_rotation(np.ascontiguousarray(x), z, 0.3, 2e-3, scheme)
    assert np.allclose(ya, yb, rtol=1e-11, atol=1e-14)


def test_sde_rejects_unknown_scheme():
    rng = np.random.default_rng(1)
    x = np.ones(4, dtype=complex)
    z = rng.standard_normal((100, 2, 4))
    with pytest.raises(ValueError):
        _kernels.sde_rotation(x, z, 0.1, 1e-3, 7)


def test_force_python_env(tmp_path):
    # a fresh interpreter with the override must pick the numpy backend
    import subprocess
    import sys
    out = subprocess.run(
        [sys.executable, "-c", "from nlsechan._kernels import BACKEND; print(BACKEND)"],
        env={"PATH": "/usr/bin:/bin", "NLSECHAN_PURE_PYTHON": "1"},
        capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
