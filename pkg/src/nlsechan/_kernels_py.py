"""Pure-numpy implementations of the hot kernels.

Same contracts as the compiled versions in ``_core.pyx``; the dispatcher in
``_kernels`` picks whichever is available.  Both consume identical
pre-drawn normal deviates, so results agree across backends to rounding.
"""

import numpy as np

_LOG_PI = np.log(np.pi)


def log_conditional(y, x, gamma_l, ql):
    """Log of the leading-order conditional density of y given x.

    Gaussian in the frame rotated by the input phase plus the nonlinear
    phase mu = gamma_l |x|^2, with covariance (ql/2) [[1, mu], [mu,
    1 + 4 mu^2/3]] in that frame.  Vectorized over broadcastable y, x.
    """
    ax = np.abs(x)
    mu = gamma_l * ax * ax
    w = y * np.exp(-1j * (np.angle(x) + mu)) - ax
    u = w.real
    v = w.imag
    c32 = 1.0 + mu * mu / 3.0
    quad = ((1.0 + 4.0 * mu * mu / 3.0) * u * u - 2.0 * mu * u * v + v * v) / (ql * c32)
    return -_LOG_PI - np.log(ql) - 0.5 * np.log(c32) - quad


def mi_logpout(y, zr, zi, gamma_l, ql, p, prop_var):
    """Importance-sampled log output density at one received point.

    The proposal is a circular Gaussian of total variance ``prop_var``
    centered on the analytic inverse image of ``y`` (same modulus, phase
    unwound by the nonlinear rotation); the supplied standard normals
    ``zr, zi`` are rotated into the frame of that center so the whole
    estimate is equivariant under a global phase rotation of (x, y).

    Returns ``(log_pout, ess)`` where ess is the effective sample size of
    the importance weights.
    """
    ay = abs(y)
    xstar = ay * np.exp(1j * (np.angle(y) - gamma_l * ay * ay))
    phase = xstar / ay if ay > 0.0 else 1.0 + 0.0j
    xp = xstar + np.sqrt(prop_var / 2.0) * (zr + 1j * zi) * phase
    log_q = -_LOG_PI - np.log(prop_var) - 0.5 * (zr * zr + zi * zi)
    log_prior = -_LOG_PI - np.log(p) - np.abs(xp) ** 2 / p
    li = log_conditional(y, xp, gamma_l, ql) + log_prior - log_q
    m = li.max()
    e = np.exp(li - m)
    se = e.sum()
    ess = se * se / np.dot(e, e)
    return m + np.log(se) - np.log(len(zr)), ess


def sde_rotation(x, z, gamma_l, ql, scheme=0):
    """Integrate the per-sample nonlinear SDE over unit span.

    ``x``: complex initial samples, shape (n,).  ``z``: standard normals,
    shape (n_steps, 2, n), consumed step-major (row 0 real, row 1 imag).
    scheme 0 is exact-rotation Strang splitting (modulus conserved between
    noise kicks, exact when ql = 0); scheme 1 is Euler-Maruyama.
    """
    n_steps = z.shape[0]
    psi = np.array(x, dtype=complex, copy=True)
    h = gamma_l / n_steps
    sig = np.sqrt(ql / n_steps / 2.0)
    if scheme == 0:
        psi *= np.exp(0.5j * h * np.abs(psi) ** 2)
        for k in range(n_steps):
            psi += sig * (z[k, 0] + 1j * z[k, 1])
            f = h if k < n_steps - 1 else 0.5 * h
            psi *= np.exp(1j * f * np.abs(psi) ** 2)
    elif scheme == 1:
        for k in range(n_steps):
            psi = psi + 1j * h * np.abs(psi) ** 2 * psi + sig * (z[k, 0] + 1j * z[k, 1])
    else:
        raise ValueError(f"unknown scheme {scheme}")
    return psi
