"""Compiled ensemble propagation kernel.

The step exponential ``exp(-i H dt)`` of the frozen Hamiltonian is applied to
each column of the running propagator as a degree-``TAYLOR_ORDER`` Taylor
polynomial in Horner form.  Callers split a step into ``nsub`` equal sub-steps
so that ``||H|| dt / nsub <= MAX_STEP_NORM``; with that bound the truncation
remainder is below 3e-17 per step, i.e. the step is exact to round-off.

H is never formed as a matrix.  In the ``{uu, ud, du, dd}`` basis it is

    [[P + beta/2,   c 1 ],
     [c* 1,   Q - beta/2]]

with the 2x2 drift blocks P, Q constant in time, the drive coupling ``c``
shared by all realizations of a step and ``beta`` the noise sample.
"""
import numba as nb
import numpy as np

TAYLOR_ORDER = 8
MAX_STEP_NORM = 0.06


@nb.njit(fastmath=True, cache=True, nogil=True)
def propagate_columns(drift, c_re, c_im, beta_t, dt, nsub, u_re, u_im):
    """Advance ``u`` in place.

    ``beta_t`` has shape ``(n_steps, n_real)``; ``u_re``/``u_im`` have shape
    ``(16, n_real)`` with entry ``4 * col + row`` holding ``U[row, col]``.
    """
    n_steps = c_re.shape[0]
    n_real = u_re.shape[1]
    p00 = drift[0, 0].real
    p11 = drift[1, 1].real
    p01r = drift[0, 1].real
    p01i = drift[0, 1].imag
    q00 = drift[2, 2].real
    q11 = drift[3, 3].real
    q01r = drift[2, 3].real
    q01i = drift[2, 3].imag
    h = dt / nsub
    for k in range(n_steps):
        cr = c_re[k]
        ci = c_im[k]
        for r in range(n_real):
            hb = 0.5 * beta_t[k, r]
            d0 = p00 + hb
            d1 = p11 + hb
            d2 = q00 - hb
            d3 = q11 - hb
            for col in range(4):
                b = 4 * col
                v0r = u_re[b, r]
                v0i = u_im[b, r]
                v1r = u_re[b + 1, r]
                v1i = u_im[b + 1, r]
                v2r = u_re[b + 2, r]
                v2i = u_im[b + 2, r]
                v3r = u_re[b + 3, r]
                v3i = u_im[b + 3, r]
                for _ in range(nsub):
                    w0r = v0r
                    w0i = v0i
                    w1r = v1r
                    w1i = v1i
                    w2r = v2r
                    w2i = v2i
                    w3r = v3r
                    w3i = v3i
                    for m in range(TAYLOR_ORDER, 0, -1):
                        f = h / m
                        # (H w)
                        h0r = d0 * w0r + p01r * w1r - p01i * w1i + cr * w2r - ci * w2i
                        h0i = d0 * w0i + p01r * w1i + p01i * w1r + cr * w2i + ci * w2r
                        h1r = p01r * w0r + p01i * w0i + d1 * w1r + cr * w3r - ci * w3i
                        h1i = p01r * w0i - p01i * w0r + d1 * w1i + cr * w3i + ci * w3r
                        h2r = cr * w0r + ci * w0i + d2 * w2r + q01r * w3r - q01i * w3i
                        h2i = cr * w0i - ci * w0r + d2 * w2i + q01r * w3i + q01i * w3r
                        h3r = cr * w1r + ci * w1i + q01r * w2r + q01i * w2i + d3 * w3r
                        h3i = cr * w1i - ci * w1r + q01r * w2i - q01i * w2r + d3 * w3i
                        # w <- v - i f (H w)
                        w0r = v0r + f * h0i
                        w0i = v0i - f * h0r
                        w1r = v1r + f * h1i
                        w1i = v1i - f * h1r
                        w2r = v2r + f * h2i
                        w2i = v2i - f * h2r
                        w3r = v3r + f * h3i
                        w3i = v3i - f * h3r
                    v0r = w0r
                    v0i = w0i
                    v1r = w1r
                    v1i = w1i
                    v2r = w2r
                    v2i = w2i
                    v3r = w3r
                    v3i = w3i
                u_re[b, r] = v0r
                u_im[b, r] = v0i
                u_re[b + 1, r] = v1r
                u_im[b + 1, r] = v1i
                u_re[b + 2, r] = v2r
                u_im[b + 2, r] = v2i
                u_re[b + 3, r] = v3r
                u_im[b + 3, r] = v3i


def identity_state(n_real):
    u_re = np.zeros((16, n_real))
    u_im = np.zeros((16, n_real))
    for col in range(4):
        u_re[5 * col] = 1.0
    return u_re, u_im


def unpack(u_re, u_im):
    """``(16, n)`` column-major planes -> ``(n, 4, 4)`` complex matrices."""
    n = u_re.shape[1]
    return (u_re + 1j * u_im).reshape(4, 4, n).transpose(2, 1, 0).copy()
